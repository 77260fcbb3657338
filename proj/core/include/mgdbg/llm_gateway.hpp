#ifndef MGDBG_LLM_GATEWAY_HPP
#define MGDBG_LLM_GATEWAY_HPP

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mgdbg/prompt_templates.hpp"

namespace mgdbg {

struct LLMConfig {
  std::string endpoint;        // base URL of an OpenAI-compatible server
  std::string model_id;
  std::string api_key;         // bearer token; empty sends no Authorization
  double temperature = 0.8;
  int max_tokens = 2048;
  std::chrono::milliseconds request_timeout{120000};
  int max_format_retries = 3;  // total tries for malformed replies
};

// Why a prompt was issued; finer-grained than the template (the debug
// template serves both execution simulation and repair).
enum class PromptPurpose {
  decompose,
  testgen,
  simulate,
  repair,
  simple_feedback,
  trace_predict,
};

const char *prompt_purpose_name(PromptPurpose p);
PromptPurpose prompt_purpose_from_name(const std::string &name);

struct PromptRecord {
  TemplateId template_id = TemplateId::debug;
  PromptPurpose purpose = PromptPurpose::repair;
  std::string rendered_system;
  std::string rendered_user;
  std::string response;
  std::string content_hash;
  std::string model_id;
  double temperature = 0.8;
};

// Replay key: digest of (template_id, system, user, model_id, temperature).
std::string prompt_content_hash(TemplateId id, const std::string &system,
                                const std::string &user, const std::string &model_id,
                                double temperature);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const LLMConfig &cfg, const std::string &content_hash,
                               const std::string &system, const std::string &user) = 0;
  virtual const char *kind() const = 0;
};

// POSTs to <endpoint>/chat/completions with an OpenAI-style messages array.
class HttpBackend : public ChatBackend {
 public:
  std::string complete(const LLMConfig &cfg, const std::string &content_hash,
                       const std::string &system, const std::string &user) override;
  const char *kind() const override { return "live_http"; }
};

// Answers from an ordered script; throws ScriptExhausted past the end.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> script);
  std::string complete(const LLMConfig &cfg, const std::string &content_hash,
                       const std::string &system, const std::string &user) override;
  const char *kind() const override { return "scripted_stub"; }
  std::size_t calls() const;

 private:
  std::vector<std::string> script_;
  std::size_t next_ = 0;
  mutable std::mutex mutex_;
};

// Answers only from a recorded cache, keyed by content hash. Repeated
// identical prompts replay the recorded responses in order; once a key's
// recordings are exhausted the last one keeps being returned.
class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(const std::string &cache_path);
  std::string complete(const LLMConfig &cfg, const std::string &content_hash,
                       const std::string &system, const std::string &user) override;
  const char *kind() const override { return "replay_cache"; }

 private:
  struct Entry {
    std::vector<std::string> responses;
    std::size_t next = 0;
  };
  std::map<std::string, Entry> entries_;
  std::mutex mutex_;
};

// Serialized append-only JSONL sink shared by concurrent sessions.
class RecordSink {
 public:
  explicit RecordSink(std::string path);
  void append(const PromptRecord &record);
  const std::string &path() const { return path_; }

 private:
  std::string path_;
  std::mutex mutex_;
};

PromptRecord prompt_record_from_json_line(const std::string &line);
std::string prompt_record_to_json_line(const PromptRecord &record);

// Per-session facade: renders nothing itself (see render_prompt) but owns
// completion, hashing, the audit log and optional recording.
class Gateway {
 public:
  Gateway(LLMConfig cfg, std::shared_ptr<ChatBackend> backend,
          std::shared_ptr<RecordSink> recorder = nullptr);

  const LLMConfig &config() const { return cfg_; }
  ChatBackend &backend() { return *backend_; }

  std::string complete(TemplateId id, PromptPurpose purpose, const RenderedPrompt &prompt);

  // Audit sink; when set, every call appends its PromptRecord.
  void set_log(std::vector<PromptRecord> *log) { log_ = log; }

 private:
  LLMConfig cfg_;
  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<RecordSink> recorder_;
  std::vector<PromptRecord> *log_ = nullptr;
};

// Retries `parse` over fresh completions of the same prompt up to
// cfg.max_format_retries total tries; rethrows the last parse error.
template <typename T>
T complete_with_retries(Gateway &gateway, TemplateId id, PromptPurpose purpose,
                        const RenderedPrompt &prompt,
                        const std::function<T(const std::string &)> &parse) {
  int tries = std::max(1, gateway.config().max_format_retries);
  for (int attempt = 0;; ++attempt) {
    std::string reply = gateway.complete(id, purpose, prompt);
    try {
      return parse(reply);
    } catch (const std::exception &) {
      if (attempt + 1 >= tries) throw;
    }
  }
}

// Contents of the LAST fenced code block (templates ask for analysis first,
// final code last). Throws NoCodeBlock.
std::string extract_code_block(const std::string &reply);

}  // namespace mgdbg

#endif  // MGDBG_LLM_GATEWAY_HPP
