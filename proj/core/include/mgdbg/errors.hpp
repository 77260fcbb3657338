#ifndef MGDBG_ERRORS_HPP
#define MGDBG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mgdbg {

enum class ErrorKind {
  parse_error,
  missing_entry_point,
  unknown_unit,
  signature_rename,
  missing_slot,
  no_code_block,
  transport_error,
  replay_miss,
  timeout,
  script_exhausted,
  decomposition_failed,
  testgen_failed,
  no_assertions_found,
  simulation_format_error,
  interpreter_missing,
  schema_error,
  config_error,
};

const char *error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mgdbg

#endif  // MGDBG_ERRORS_HPP
