#include "mgdbg/llm_gateway.hpp"

#include <cstdio>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mgdbg/errors.hpp"
#include "mgdbg/hash.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

using nlohmann::json;

const char *prompt_purpose_name(PromptPurpose p) {
  switch (p) {
    case PromptPurpose::decompose: return "decompose";
    case PromptPurpose::testgen: return "testgen";
    case PromptPurpose::simulate: return "simulate";
    case PromptPurpose::repair: return "repair";
    case PromptPurpose::simple_feedback: return "simple_feedback";
    case PromptPurpose::trace_predict: return "trace_predict";
  }
  return "unknown";
}

PromptPurpose prompt_purpose_from_name(const std::string &name) {
  if (name == "decompose") return PromptPurpose::decompose;
  if (name == "testgen") return PromptPurpose::testgen;
  if (name == "simulate") return PromptPurpose::simulate;
  if (name == "repair") return PromptPurpose::repair;
  if (name == "simple_feedback") return PromptPurpose::simple_feedback;
  if (name == "trace_predict") return PromptPurpose::trace_predict;
  throw Error(ErrorKind::schema_error, "unknown prompt purpose \"" + name + "\"");
}

std::string prompt_content_hash(TemplateId id, const std::string &system,
                                const std::string &user, const std::string &model_id,
                                double temperature) {
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.6f", temperature);
  std::string payload;
  payload += template_id_name(id);
  payload += '\x1f';
  payload += system;
  payload += '\x1f';
  payload += user;
  payload += '\x1f';
  payload += model_id;
  payload += '\x1f';
  payload += temp;
  return sha256_hex(payload);
}

// ---------------------------------------------------------------- HTTP

std::string HttpBackend::complete(const LLMConfig &cfg, const std::string &,
                                  const std::string &system, const std::string &user) {
  if (cfg.endpoint.empty())
    throw Error(ErrorKind::config_error, "no endpoint configured for live backend");

  // Split "scheme://host[:port]" from any path prefix, e.g. ".../v1".
  std::size_t scheme = cfg.endpoint.find("://");
  std::size_t path_start = scheme == std::string::npos
                               ? cfg.endpoint.find('/')
                               : cfg.endpoint.find('/', scheme + 3);
  std::string base = path_start == std::string::npos ? cfg.endpoint
                                                     : cfg.endpoint.substr(0, path_start);
  std::string prefix = path_start == std::string::npos
                           ? ""
                           : std::string(rtrim(cfg.endpoint.substr(path_start)));
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(base);
  double secs = std::chrono::duration<double>(cfg.request_timeout).count();
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);

  json body;
  body["model"] = cfg.model_id;
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_tokens;
  json messages = json::array();
  if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", user}});
  body["messages"] = messages;

  httplib::Headers headers;
  if (!cfg.api_key.empty())
    headers.emplace("Authorization", "Bearer " + cfg.api_key);

  auto res = client.Post(prefix + "/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write)
      throw Error(ErrorKind::timeout, "request to " + cfg.endpoint + " timed out");
    throw Error(ErrorKind::transport_error,
                "request to " + cfg.endpoint + " failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300)
    throw Error(ErrorKind::transport_error,
                "HTTP " + std::to_string(res->status) + " from " + cfg.endpoint + ": " +
                    res->body.substr(0, 300));
  try {
    json reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception &e) {
    throw Error(ErrorKind::transport_error,
                std::string("malformed chat-completions response: ") + e.what());
  }
}

// ------------------------------------------------------------- Scripted

ScriptedBackend::ScriptedBackend(std::vector<std::string> script)
    : script_(std::move(script)) {}

std::string ScriptedBackend::complete(const LLMConfig &, const std::string &,
                                      const std::string &, const std::string &) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (next_ >= script_.size())
    throw Error(ErrorKind::script_exhausted,
                "script of " + std::to_string(script_.size()) + " replies exhausted");
  return script_[next_++];
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return next_;
}

// --------------------------------------------------------------- Replay

ReplayBackend::ReplayBackend(const std::string &cache_path) {
  std::ifstream in(cache_path);
  if (!in)
    throw Error(ErrorKind::config_error, "cannot open replay cache " + cache_path);
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    PromptRecord rec = prompt_record_from_json_line(line);
    entries_[rec.content_hash].responses.push_back(rec.response);
  }
}

std::string ReplayBackend::complete(const LLMConfig &, const std::string &content_hash,
                                    const std::string &, const std::string &) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(content_hash);
  if (it == entries_.end())
    throw Error(ErrorKind::replay_miss, "no cached response for hash " + content_hash);
  Entry &e = it->second;
  std::size_t idx = e.next < e.responses.size() ? e.next : e.responses.size() - 1;
  if (e.next < e.responses.size()) ++e.next;
  return e.responses[idx];
}

// --------------------------------------------------------------- Record

RecordSink::RecordSink(std::string path) : path_(std::move(path)) {}

void RecordSink::append(const PromptRecord &record) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  if (!out)
    throw Error(ErrorKind::config_error, "cannot append to record cache " + path_);
  out << prompt_record_to_json_line(record) << "\n";
}

PromptRecord prompt_record_from_json_line(const std::string &line) {
  try {
    json j = json::parse(line);
    PromptRecord rec;
    rec.template_id = template_id_from_name(j.at("template_id").get<std::string>());
    if (j.contains("purpose"))
      rec.purpose = prompt_purpose_from_name(j["purpose"].get<std::string>());
    rec.rendered_system = j.value("rendered_system", "");
    rec.rendered_user = j.value("rendered_user", "");
    rec.response = j.at("response").get<std::string>();
    rec.content_hash = j.at("content_hash").get<std::string>();
    rec.model_id = j.value("model_id", "");
    rec.temperature = j.value("temperature", 0.8);
    return rec;
  } catch (const json::exception &e) {
    throw Error(ErrorKind::schema_error,
                std::string("malformed PromptRecord line: ") + e.what());
  }
}

std::string prompt_record_to_json_line(const PromptRecord &record) {
  json j;
  j["template_id"] = template_id_name(record.template_id);
  j["purpose"] = prompt_purpose_name(record.purpose);
  j["rendered_system"] = record.rendered_system;
  j["rendered_user"] = record.rendered_user;
  j["response"] = record.response;
  j["content_hash"] = record.content_hash;
  j["model_id"] = record.model_id;
  j["temperature"] = record.temperature;
  return j.dump();
}

// -------------------------------------------------------------- Gateway

Gateway::Gateway(LLMConfig cfg, std::shared_ptr<ChatBackend> backend,
                 std::shared_ptr<RecordSink> recorder)
    : cfg_(std::move(cfg)), backend_(std::move(backend)), recorder_(std::move(recorder)) {}

std::string Gateway::complete(TemplateId id, PromptPurpose purpose,
                              const RenderedPrompt &prompt) {
  std::string hash =
      prompt_content_hash(id, prompt.system, prompt.user, cfg_.model_id, cfg_.temperature);
  std::string response = backend_->complete(cfg_, hash, prompt.system, prompt.user);

  PromptRecord rec;
  rec.template_id = id;
  rec.purpose = purpose;
  rec.rendered_system = prompt.system;
  rec.rendered_user = prompt.user;
  rec.response = response;
  rec.content_hash = hash;
  rec.model_id = cfg_.model_id;
  rec.temperature = cfg_.temperature;
  if (recorder_) recorder_->append(rec);
  if (log_) log_->push_back(std::move(rec));
  return response;
}

// ------------------------------------------------------- Code extraction

std::string extract_code_block(const std::string &reply) {
  std::vector<std::string> lines = split_lines(reply);
  std::vector<std::string> blocks;
  std::string current;
  bool in_block = false;
  for (const std::string &line : lines) {
    std::string_view t = trim(line);
    if (t.substr(0, 3) == "```") {
      if (in_block) {
        blocks.push_back(current);
        current.clear();
        in_block = false;
      } else {
        in_block = true;
      }
      continue;
    }
    if (in_block) {
      if (!current.empty()) current += '\n';
      current += line;
    }
  }
  // An unclosed fence still carries the payload; take it as-is.
  if (in_block && !is_blank(current)) blocks.push_back(current);
  if (blocks.empty())
    throw Error(ErrorKind::no_code_block, "reply contains no fenced code block");
  return std::string(trim(blocks.back()));
}

}  // namespace mgdbg
