#ifndef MGDBG_SESSION_JSON_HPP
#define MGDBG_SESSION_JSON_HPP

#include <string>

#include "mgdbg/debugger.hpp"

namespace mgdbg {

std::string session_to_json(const DebugSession &session, int indent = 2);
DebugSession session_from_json(const std::string &text);

void save_session(const DebugSession &session, const std::string &path);
DebugSession load_session(const std::string &path);

}  // namespace mgdbg

#endif  // MGDBG_SESSION_JSON_HPP
