#ifndef MGDBG_HASH_HPP
#define MGDBG_HASH_HPP

#include <string>
#include <string_view>

namespace mgdbg {

// Lowercase hex SHA-256 digest; stable across runs and platforms.
std::string sha256_hex(std::string_view data);

}  // namespace mgdbg

#endif  // MGDBG_HASH_HPP
