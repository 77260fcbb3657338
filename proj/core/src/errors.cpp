#include "mgdbg/errors.hpp"

namespace mgdbg {

const char *error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse_error: return "ParseError";
    case ErrorKind::missing_entry_point: return "MissingEntryPoint";
    case ErrorKind::unknown_unit: return "UnknownUnit";
    case ErrorKind::signature_rename: return "SignatureRename";
    case ErrorKind::missing_slot: return "MissingSlot";
    case ErrorKind::no_code_block: return "NoCodeBlock";
    case ErrorKind::transport_error: return "TransportError";
    case ErrorKind::replay_miss: return "ReplayMiss";
    case ErrorKind::timeout: return "Timeout";
    case ErrorKind::script_exhausted: return "ScriptExhausted";
    case ErrorKind::decomposition_failed: return "DecompositionFailed";
    case ErrorKind::testgen_failed: return "TestGenFailed";
    case ErrorKind::no_assertions_found: return "NoAssertionsFound";
    case ErrorKind::simulation_format_error: return "SimulationFormatError";
    case ErrorKind::interpreter_missing: return "InterpreterMissing";
    case ErrorKind::schema_error: return "SchemaError";
    case ErrorKind::config_error: return "ConfigError";
  }
  return "Error";
}

}  // namespace mgdbg
