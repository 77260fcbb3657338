#include "mgdbg/session_json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mgdbg/errors.hpp"

namespace mgdbg {

using nlohmann::json;

namespace {

json report_to_json(const ExecutionReport &report) {
  json j;
  j["unit"] = report.unit;
  j["mode"] = report.mode == ExecutionReport::Mode::simulated ? "simulated" : "real";
  j["all_passed"] = report.all_passed();
  j["cached"] = report.cached;
  if (!report.narrative.empty()) j["narrative"] = report.narrative;
  json results = json::array();
  for (const TestOutcome &r : report.results) {
    json item;
    item["test_index"] = r.test_index;
    item["verdict"] = verdict_name(r.verdict);
    item["detail"] = r.detail;
    results.push_back(std::move(item));
  }
  j["results"] = std::move(results);
  return j;
}

ExecutionReport report_from_json(const json &j) {
  ExecutionReport report;
  report.unit = j.value("unit", "");
  report.mode = j.value("mode", "real") == "simulated" ? ExecutionReport::Mode::simulated
                                                       : ExecutionReport::Mode::real;
  report.cached = j.value("cached", false);
  report.narrative = j.value("narrative", "");
  for (const json &item : j.value("results", json::array())) {
    TestOutcome r;
    r.test_index = item.value("test_index", 0);
    r.verdict = verdict_from_name(item.value("verdict", "error"));
    r.detail = item.value("detail", "");
    report.results.push_back(std::move(r));
  }
  return report;
}

json prompt_record_to_json(const PromptRecord &rec) {
  json j;
  j["template_id"] = template_id_name(rec.template_id);
  j["purpose"] = prompt_purpose_name(rec.purpose);
  j["rendered_system"] = rec.rendered_system;
  j["rendered_user"] = rec.rendered_user;
  j["response"] = rec.response;
  j["content_hash"] = rec.content_hash;
  j["model_id"] = rec.model_id;
  j["temperature"] = rec.temperature;
  return j;
}

PromptRecord prompt_record_from_json(const json &j) {
  PromptRecord rec;
  rec.template_id = template_id_from_name(j.value("template_id", "debug"));
  rec.purpose = prompt_purpose_from_name(j.value("purpose", "repair"));
  rec.rendered_system = j.value("rendered_system", "");
  rec.rendered_user = j.value("rendered_user", "");
  rec.response = j.value("response", "");
  rec.content_hash = j.value("content_hash", "");
  rec.model_id = j.value("model_id", "");
  rec.temperature = j.value("temperature", 0.8);
  return rec;
}

}  // namespace

std::string session_to_json(const DebugSession &session, int indent) {
  json j;
  j["problem_id"] = session.problem_id;
  j["entry_point"] = session.entry_point;
  j["strategy"] = strategy_name(session.strategy);
  j["seed_code"] = session.seed_code;
  j["final_code"] = session.final_code;
  j["fixed"] = session.fixed;

  json attempts = json::array();
  for (const AttemptRecord &a : session.attempts) {
    json attempt;
    attempt["attempt_index"] = a.attempt_index;
    attempt["visible_pass"] = a.visible_pass;
    json traversal = json::array();
    for (const EvalRecord &e : a.traversal) {
      json eval;
      eval["unit"] = e.unit;
      eval["patch_applied"] = e.patch_applied;
      eval["tests"] = e.test_texts;
      eval["report"] = report_to_json(e.report);
      traversal.push_back(std::move(eval));
    }
    attempt["traversal"] = std::move(traversal);
    attempts.push_back(std::move(attempt));
  }
  j["attempts"] = std::move(attempts);
  j["tree_snapshots"] = session.tree_snapshots;

  json calls = json::array();
  for (const PromptRecord &rec : session.llm_calls)
    calls.push_back(prompt_record_to_json(rec));
  j["llm_calls"] = std::move(calls);
  j["warnings"] = session.warnings;
  return j.dump(indent);
}

DebugSession session_from_json(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw Error(ErrorKind::schema_error, std::string("malformed session JSON: ") + e.what());
  }
  DebugSession session;
  session.problem_id = j.value("problem_id", "");
  session.entry_point = j.value("entry_point", "");
  session.strategy = strategy_from_name(j.value("strategy", "hierarchical"));
  session.seed_code = j.value("seed_code", "");
  session.final_code = j.value("final_code", "");
  session.fixed = j.value("fixed", false);
  for (const json &attempt : j.value("attempts", json::array())) {
    AttemptRecord a;
    a.attempt_index = attempt.value("attempt_index", 0);
    a.visible_pass = attempt.value("visible_pass", false);
    for (const json &eval : attempt.value("traversal", json::array())) {
      EvalRecord e;
      e.unit = eval.value("unit", "");
      e.patch_applied = eval.value("patch_applied", false);
      e.test_texts = eval.value("tests", std::vector<std::string>{});
      if (eval.contains("report")) e.report = report_from_json(eval["report"]);
      a.traversal.push_back(std::move(e));
    }
    session.attempts.push_back(std::move(a));
  }
  session.tree_snapshots = j.value("tree_snapshots", std::vector<std::string>{});
  for (const json &call : j.value("llm_calls", json::array()))
    session.llm_calls.push_back(prompt_record_from_json(call));
  session.warnings = j.value("warnings", std::vector<std::string>{});
  return session;
}

void save_session(const DebugSession &session, const std::string &path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::config_error, "cannot write session to " + path);
  out << session_to_json(session) << "\n";
}

DebugSession load_session(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config_error, "cannot read session from " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return session_from_json(buf.str());
}

}  // namespace mgdbg
