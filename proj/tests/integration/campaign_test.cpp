#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mgdbg/harness.hpp"
#include "mgdbg/session_json.hpp"
#include "support/synthetic_model.hpp"
#include "support/test_env.hpp"

using namespace mgdbg;
using mgdbg::testing::CampaignFixture;
using mgdbg::testing::SyntheticModel;

namespace {

CampaignConfig fixture_config(std::shared_ptr<ChatBackend> backend,
                              const std::string &out_dir) {
  CampaignConfig cfg;
  cfg.llm.model_id = "local-model";
  cfg.llm.temperature = 0.8;
  cfg.debug.strategy = Strategy::hierarchical;
  cfg.debug.max_attempts = 10;
  cfg.backend.custom = std::move(backend);
  cfg.sandbox.timeout_per_test = std::chrono::milliseconds(4000);
  cfg.out_dir = out_dir;
  cfg.jobs = 1;
  return cfg;
}

std::filesystem::path temp_out(const std::string &name) {
  std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("five-problem campaign: 2 correct, 2 fixable, 1 unfixable") {
  CampaignFixture fixture =
      mgdbg::testing::load_campaign_fixture(mgdbg::testing::fixture_dir());

  std::vector<BenchmarkProblem> problems;
  std::vector<SeedProgram> seeds;
  for (const std::string &id : {"fx/0", "fx/1", "fx/4", "fx/7", "fx/8"}) {
    for (const BenchmarkProblem &p : fixture.problems)
      if (p.task_id == id) problems.push_back(p);
    for (const SeedProgram &s : fixture.seeds)
      if (s.task_id == id) seeds.push_back(s);
  }
  REQUIRE(problems.size() == 5);

  SyntheticModel model(fixture.behaviors);
  auto out = temp_out("mgdbg_campaign_five");
  CampaignConfig cfg = fixture_config(model.backend(), out.string());
  CampaignReport report = run_campaign(problems, seeds, cfg);

  CHECK(report.metrics.total == 5);
  CHECK(report.metrics.seed_correct == 2);
  CHECK(report.metrics.buggy == 3);
  CHECK(report.metrics.fixed == 2);
  CHECK(report.metrics.accuracy == doctest::Approx(0.8));
  REQUIRE(report.metrics.rsr.has_value());
  CHECK(*report.metrics.rsr == doctest::Approx(2.0 / 3.0));

  // Sessions persisted for every buggy seed.
  CHECK(std::filesystem::exists(out / "sessions" / "fx_4" / "hierarchical.json"));
  CHECK(std::filesystem::exists(out / "sessions" / "fx_8" / "hierarchical.json"));
  CHECK(!std::filesystem::exists(out / "sessions" / "fx_0"));

  DebugSession session =
      load_session((out / "sessions" / "fx_4" / "hierarchical.json").string());
  CHECK(session.problem_id == "fx/4");
  CHECK(session.fixed);
  CHECK(!session.llm_calls.empty());

  std::filesystem::remove_all(out);
}

TEST_CASE("full fixture campaign: curve moves at attempts 1, 2 and 3") {
  CampaignFixture fixture =
      mgdbg::testing::load_campaign_fixture(mgdbg::testing::fixture_dir());
  SyntheticModel model(fixture.behaviors);
  auto out = temp_out("mgdbg_campaign_full");
  CampaignConfig cfg = fixture_config(model.backend(), out.string());
  CampaignReport report = run_campaign(fixture.problems, fixture.seeds, cfg);

  CHECK(report.metrics.total == 10);
  CHECK(report.metrics.seed_correct == 2);
  CHECK(report.metrics.fixed == 6);
  CHECK(report.metrics.accuracy == doctest::Approx(0.8));
  REQUIRE(report.metrics.rsr.has_value());
  CHECK(*report.metrics.rsr == doctest::Approx(0.75));

  const std::vector<double> &curve = report.metrics.per_attempt_cumulative_rsr;
  REQUIRE(curve.size() == 10);
  CHECK(curve[0] == doctest::Approx(4.0 / 8.0));   // immediate fixes
  CHECK(curve[1] == doctest::Approx(5.0 / 8.0));   // sum_squares at attempt 2
  CHECK(curve[2] == doctest::Approx(6.0 / 8.0));   // max_diff at attempt 3
  CHECK(curve[9] == doctest::Approx(0.75));
  for (std::size_t k = 1; k < curve.size(); ++k) CHECK(curve[k] >= curve[k - 1]);

  // Buckets partition all seeded problems.
  int bucket_buggy = 0;
  for (const auto &[name, stat] : report.metrics.per_bucket) bucket_buggy += stat.buggy;
  CHECK(bucket_buggy == report.metrics.buggy);

  // Output files are deterministic given identical inputs.
  write_campaign_outputs(report, cfg);
  std::string metrics1 = mgdbg::testing::read_file((out / "metrics.csv").string());
  std::string curves1 = mgdbg::testing::read_file((out / "curves.csv").string());

  SyntheticModel model2(fixture.behaviors);
  CampaignConfig cfg2 = fixture_config(model2.backend(), out.string());
  CampaignReport report2 = run_campaign(fixture.problems, fixture.seeds, cfg2);
  write_campaign_outputs(report2, cfg2);
  CHECK(mgdbg::testing::read_file((out / "metrics.csv").string()) == metrics1);
  CHECK(mgdbg::testing::read_file((out / "curves.csv").string()) == curves1);

  std::filesystem::remove_all(out);
}

TEST_CASE("problems without seeds are quarantined, not fatal") {
  CampaignFixture fixture =
      mgdbg::testing::load_campaign_fixture(mgdbg::testing::fixture_dir());
  std::vector<BenchmarkProblem> problems(fixture.problems.begin(),
                                         fixture.problems.begin() + 3);
  std::vector<SeedProgram> seeds(fixture.seeds.begin(), fixture.seeds.begin() + 2);

  SyntheticModel model(fixture.behaviors);
  auto out = temp_out("mgdbg_campaign_quarantine");
  CampaignConfig cfg = fixture_config(model.backend(), out.string());
  CampaignReport report = run_campaign(problems, seeds, cfg);

  CHECK(report.metrics.total == 3);
  bool quarantined = false;
  for (const ProblemOutcome &o : report.outcomes)
    if (o.task_id == "fx/2" && o.quarantined) quarantined = true;
  CHECK(quarantined);
  CHECK(!report.warnings.empty());
  std::filesystem::remove_all(out);
}

TEST_CASE("session json round trip") {
  DebugSession session;
  session.problem_id = "p/1";
  session.entry_point = "f";
  session.strategy = Strategy::no_testgen;
  session.seed_code = "def f():\n    return 1\n";
  session.final_code = "def f():\n    return 2\n";
  session.fixed = true;
  AttemptRecord attempt;
  attempt.attempt_index = 1;
  attempt.visible_pass = true;
  EvalRecord eval;
  eval.unit = "f";
  eval.patch_applied = true;
  eval.test_texts = {"assert f() == 2"};
  eval.report.unit = "f";
  eval.report.mode = ExecutionReport::Mode::simulated;
  eval.report.results.push_back({0, Verdict::fail, "wrong"});
  eval.report.narrative = "trace";
  attempt.traversal.push_back(eval);
  session.attempts.push_back(attempt);
  session.tree_snapshots.push_back(session.final_code);
  PromptRecord rec;
  rec.template_id = TemplateId::debug;
  rec.purpose = PromptPurpose::simulate;
  rec.rendered_user = "u";
  rec.response = "r";
  rec.content_hash = "h";
  session.llm_calls.push_back(rec);
  session.warnings.push_back("w");

  DebugSession back = session_from_json(session_to_json(session));
  CHECK(back.problem_id == session.problem_id);
  CHECK(back.strategy == session.strategy);
  CHECK(back.fixed == session.fixed);
  REQUIRE(back.attempts.size() == 1);
  CHECK(back.attempts[0].traversal[0].unit == "f");
  CHECK(back.attempts[0].traversal[0].report.results[0].verdict == Verdict::fail);
  CHECK(back.attempts[0].traversal[0].report.narrative == "trace");
  REQUIRE(back.llm_calls.size() == 1);
  CHECK(back.llm_calls[0].purpose == PromptPurpose::simulate);
  CHECK(back.tree_snapshots == session.tree_snapshots);
}
