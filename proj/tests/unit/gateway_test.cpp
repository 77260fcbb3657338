#include <doctest.h>
#include <httplib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mgdbg/errors.hpp"
#include "mgdbg/hash.hpp"
#include "mgdbg/llm_gateway.hpp"
#include "mgdbg/text_util.hpp"
#include "support/test_env.hpp"

using namespace mgdbg;

namespace {

LLMConfig test_config() {
  LLMConfig cfg;
  cfg.model_id = "test-model";
  cfg.temperature = 0.8;
  return cfg;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string &name) {
    path = (std::filesystem::temp_directory_path() / name).string();
    std::remove(path.c_str());
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("templates match their golden copies") {
  CHECK(prompt_template(TemplateId::decompose).user ==
        mgdbg::testing::read_file(
            mgdbg::testing::fixture_path("templates/decompose_user.golden.txt")));
  CHECK(prompt_template(TemplateId::testgen).user ==
        mgdbg::testing::read_file(
            mgdbg::testing::fixture_path("templates/testgen_user.golden.txt")));
  CHECK(prompt_template(TemplateId::debug).user ==
        mgdbg::testing::read_file(
            mgdbg::testing::fixture_path("templates/debug_user.golden.txt")));
  CHECK(prompt_template(TemplateId::simple_feedback).user ==
        mgdbg::testing::read_file(
            mgdbg::testing::fixture_path("templates/simple_feedback_user.golden.txt")));

  CHECK(prompt_template(TemplateId::decompose).system.empty());
  CHECK(prompt_template(TemplateId::testgen).system ==
        "You are an AI assistant specialized in analyzing Python functions and "
        "generating test cases.");
  CHECK(prompt_template(TemplateId::debug).system ==
        "You are an AI assistant helping to debug Python functions.");
}

TEST_CASE("render substitutes placeholders verbatim") {
  RenderedPrompt p = render_prompt(TemplateId::decompose, {{"code", "def a(): pass"}});
  CHECK(p.user.find("tree-style hierarchical structure") != std::string::npos);
  CHECK(p.user.find("def a(): pass") != std::string::npos);
  CHECK(p.user.find("{code}") == std::string::npos);

  RenderedPrompt d = render_prompt(
      TemplateId::debug, {{"function_code", "X"}, {"test_case_results", "Y"}});
  CHECK(d.user.find("work as a Python interpreter to execute the code step-by-step") !=
        std::string::npos);

  // Slot values keep their braces; only template placeholders substitute.
  RenderedPrompt braces =
      render_prompt(TemplateId::decompose, {{"code", "d = {'k': 1}"}});
  CHECK(braces.user.find("d = {'k': 1}") != std::string::npos);
}

TEST_CASE("missing slot") {
  CHECK_THROWS_AS(render_prompt(TemplateId::decompose, {}), Error);
  // Empty string is an accepted explicit value.
  RenderedPrompt p = render_prompt(
      TemplateId::testgen,
      {{"full_code", "c"}, {"public_test_cases", ""}, {"function_name", "f"}});
  CHECK(p.user.find("Public Test Cases for the Main Function:\n\n\n") != std::string::npos);
}

TEST_CASE("extract_code_block takes the last block") {
  CHECK(extract_code_block("analysis\n```\ndef a(): pass\n```\n") == "def a(): pass");
  // Two blocks: manual fence scan of this fixture reply says the second one
  // is the payload.
  std::string reply =
      "first\n```python\nold = 1\n```\nmiddle\n```python\nnew = 2\n```\n";
  CHECK(extract_code_block(reply) == "new = 2");
  CHECK_THROWS_AS(extract_code_block("no fences here"), Error);
  // Unterminated fence still yields its payload.
  CHECK(extract_code_block("text\n```python\npayload = 3\n") == "payload = 3");
}

TEST_CASE("wrap-then-extract is identity for fence-free payloads") {
  for (const std::string &payload :
       {std::string("def f():\n    return 1"), std::string("x = [1, 2, 3]"),
        std::string("assert f(1) == 2\nassert f(2) == 3")}) {
    CHECK(extract_code_block("```python\n" + payload + "\n```") == payload);
  }
}

TEST_CASE("content hash: stable, model- and temperature-sensitive") {
  std::string h1 = prompt_content_hash(TemplateId::debug, "s", "u", "m", 0.8);
  std::string h2 = prompt_content_hash(TemplateId::debug, "s", "u", "m", 0.8);
  CHECK(h1 == h2);
  CHECK(h1.size() == 64);
  CHECK(h1 != prompt_content_hash(TemplateId::debug, "s", "u", "m", 0.0));
  CHECK(h1 != prompt_content_hash(TemplateId::debug, "s", "u", "other", 0.8));
  CHECK(h1 != prompt_content_hash(TemplateId::testgen, "s", "u", "m", 0.8));
  // Frozen value: the hash is part of the cache file contract.
  CHECK(prompt_content_hash(TemplateId::debug, "", "hello", "m", 0.8) ==
        sha256_hex(std::string("debug\x1f\x1fhello\x1fm\x1f") + "0.800000"));
}

TEST_CASE("scripted stub answers in order and exhausts") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"fix1"});
  Gateway gw(test_config(), backend);
  RenderedPrompt p{"sys", "user"};
  CHECK(gw.complete(TemplateId::debug, PromptPurpose::repair, p) == "fix1");
  try {
    gw.complete(TemplateId::debug, PromptPurpose::repair, p);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::script_exhausted);
  }
}

TEST_CASE("record then replay round trip") {
  TempFile cache("mgdbg_gateway_cache.jsonl");
  RenderedPrompt p1{"", "prompt one"};
  RenderedPrompt p2{"", "prompt two"};

  {
    auto backend = std::make_shared<ScriptedBackend>(
        std::vector<std::string>{"reply one", "reply two"});
    Gateway gw(test_config(), backend, std::make_shared<RecordSink>(cache.path));
    CHECK(gw.complete(TemplateId::decompose, PromptPurpose::decompose, p1) == "reply one");
    CHECK(gw.complete(TemplateId::decompose, PromptPurpose::decompose, p2) == "reply two");
  }

  auto replay = std::make_shared<ReplayBackend>(cache.path);
  Gateway gw(test_config(), replay);
  CHECK(gw.complete(TemplateId::decompose, PromptPurpose::decompose, p2) == "reply two");
  CHECK(gw.complete(TemplateId::decompose, PromptPurpose::decompose, p1) == "reply one");

  // Unknown prompt: miss names the hash.
  RenderedPrompt p3{"", "prompt three"};
  try {
    gw.complete(TemplateId::decompose, PromptPurpose::decompose, p3);
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::replay_miss);
    CHECK(std::string(e.what()).find(prompt_content_hash(
              TemplateId::decompose, "", "prompt three", "test-model", 0.8)) !=
          std::string::npos);
  }
}

TEST_CASE("replay: duplicate keys play back in recorded order") {
  TempFile cache("mgdbg_gateway_dup.jsonl");
  RenderedPrompt p{"", "same prompt"};
  {
    auto backend = std::make_shared<ScriptedBackend>(
        std::vector<std::string>{"first", "second"});
    Gateway gw(test_config(), backend, std::make_shared<RecordSink>(cache.path));
    gw.complete(TemplateId::debug, PromptPurpose::repair, p);
    gw.complete(TemplateId::debug, PromptPurpose::repair, p);
  }
  auto replay = std::make_shared<ReplayBackend>(cache.path);
  Gateway gw(test_config(), replay);
  CHECK(gw.complete(TemplateId::debug, PromptPurpose::repair, p) == "first");
  CHECK(gw.complete(TemplateId::debug, PromptPurpose::repair, p) == "second");
  // Exhausted keys settle on the last recording.
  CHECK(gw.complete(TemplateId::debug, PromptPurpose::repair, p) == "second");
}

TEST_CASE("replay determinism across gateway instances") {
  TempFile cache("mgdbg_gateway_det.jsonl");
  RenderedPrompt p{"", "deterministic"};
  {
    auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"r1", "r2"});
    Gateway gw(test_config(), backend, std::make_shared<RecordSink>(cache.path));
    gw.complete(TemplateId::debug, PromptPurpose::repair, p);
    gw.complete(TemplateId::debug, PromptPurpose::repair, p);
  }
  for (int round = 0; round < 2; ++round) {
    Gateway gw(test_config(), std::make_shared<ReplayBackend>(cache.path));
    CHECK(gw.complete(TemplateId::debug, PromptPurpose::repair, p) == "r1");
    CHECK(gw.complete(TemplateId::debug, PromptPurpose::repair, p) == "r2");
  }
}

TEST_CASE("audit log captures every call") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"a", "b"});
  Gateway gw(test_config(), backend);
  std::vector<PromptRecord> log;
  gw.set_log(&log);
  gw.complete(TemplateId::decompose, PromptPurpose::decompose, {"", "u1"});
  gw.complete(TemplateId::debug, PromptPurpose::simulate, {"s", "u2"});
  REQUIRE(log.size() == 2);
  CHECK(log[0].purpose == PromptPurpose::decompose);
  CHECK(log[0].response == "a");
  CHECK(log[1].purpose == PromptPurpose::simulate);
  CHECK(log[1].rendered_user == "u2");
  CHECK(log[1].model_id == "test-model");
}

TEST_CASE("http backend speaks the chat-completions protocol") {
  httplib::Server server;
  std::string seen_auth;
  std::string seen_model;
  std::string seen_system;
  server.Post("/v1/chat/completions",
              [&](const httplib::Request &req, httplib::Response &res) {
                seen_auth = req.get_header_value("Authorization");
                auto body = nlohmann::json::parse(req.body);
                seen_model = body["model"];
                seen_system = body["messages"][0]["role"] == "system"
                                  ? body["messages"][0]["content"].get<std::string>()
                                  : "";
                nlohmann::json reply = {
                    {"choices",
                     {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}}}};
                res.set_content(reply.dump(), "application/json");
              });
  server.Post("/broken/chat/completions",
              [](const httplib::Request &, httplib::Response &res) {
                res.status = 500;
                res.set_content("boom", "text/plain");
              });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });

  LLMConfig cfg = test_config();
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.api_key = "sk-test";
  HttpBackend backend;
  CHECK(backend.complete(cfg, "hash", "be helpful", "ping") == "pong");
  CHECK(seen_auth == "Bearer sk-test");
  CHECK(seen_model == "test-model");
  CHECK(seen_system == "be helpful");

  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  try {
    backend.complete(cfg, "hash", "", "ping");
    CHECK(false);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::transport_error);
    CHECK(std::string(e.what()).find("500") != std::string::npos);
  }

  cfg.endpoint = "";
  CHECK_THROWS_AS(backend.complete(cfg, "hash", "", "ping"), Error);

  server.stop();
  thread.join();
}

TEST_CASE("format retries: total tries equals max_format_retries") {
  auto backend = std::make_shared<ScriptedBackend>(
      std::vector<std::string>{"bad", "bad", "bad", "never used"});
  LLMConfig cfg = test_config();
  cfg.max_format_retries = 3;
  Gateway gw(cfg, backend);
  int parses = 0;
  CHECK_THROWS_AS(
      (complete_with_retries<int>(gw, TemplateId::debug, PromptPurpose::repair,
                                  {"", "u"},
                                  [&](const std::string &) -> int {
                                    ++parses;
                                    throw Error(ErrorKind::no_code_block, "nope");
                                  })),
      Error);
  CHECK(parses == 3);
  CHECK(backend->calls() == 3);
}
