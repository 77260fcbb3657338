#include <algorithm>
#include <cmath>
#include <sstream>

#include "mgdbg/harness.hpp"
#include "mgdbg/text_util.hpp"

namespace mgdbg {

MetricsSummary metrics_from_counts(int total, int seed_correct, int fixed) {
  MetricsSummary m;
  m.total = total;
  m.seed_correct = seed_correct;
  m.buggy = total - seed_correct;
  m.fixed = fixed;
  m.accuracy = total > 0 ? static_cast<double>(seed_correct + fixed) / total : 1.0;
  if (m.buggy > 0) m.rsr = static_cast<double>(fixed) / m.buggy;
  return m;
}

MetricsSummary compute_metrics(const std::vector<ProblemOutcome> &outcomes,
                               int max_attempts) {
  int total = static_cast<int>(outcomes.size());
  int seed_correct = 0;
  int fixed = 0;
  for (const ProblemOutcome &o : outcomes) {
    if (o.seed_correct) ++seed_correct;
    else if (o.hidden_fixed) ++fixed;
  }
  MetricsSummary m = metrics_from_counts(total, seed_correct, fixed);

  // Cumulative RSR: buggy problems whose snapshot first passed the hidden
  // tests within k attempts.
  m.per_attempt_cumulative_rsr.assign(static_cast<std::size_t>(std::max(0, max_attempts)),
                                      0.0);
  if (m.buggy > 0) {
    for (int k = 1; k <= max_attempts; ++k) {
      int count = 0;
      for (const ProblemOutcome &o : outcomes)
        if (!o.seed_correct && o.hidden_fixed && o.first_fixed_attempt > 0 &&
            o.first_fixed_attempt <= k)
          ++count;
      m.per_attempt_cumulative_rsr[static_cast<std::size_t>(k - 1)] =
          static_cast<double>(count) / m.buggy;
    }
  }

  auto accumulate = [](std::map<std::string, CategoryStat> &into, const std::string &key,
                       const ProblemOutcome &o) {
    if (key.empty() || o.seed_correct) return;
    CategoryStat &stat = into[key];
    ++stat.buggy;
    if (o.hidden_fixed) ++stat.fixed;
  };
  for (const ProblemOutcome &o : outcomes) {
    accumulate(m.per_category, o.category, o);
    accumulate(m.per_bucket, o.bucket, o);
  }
  for (auto *group : {&m.per_category, &m.per_bucket})
    for (auto &[key, stat] : *group)
      if (stat.buggy > 0) stat.rsr = static_cast<double>(stat.fixed) / stat.buggy;
  return m;
}

std::map<std::string, std::string> bucket_by_length(const std::vector<SeedProgram> &seeds) {
  std::map<std::string, std::string> buckets;
  if (seeds.empty()) return buckets;

  std::vector<std::size_t> counts;
  counts.reserve(seeds.size());
  for (const SeedProgram &s : seeds) counts.push_back(count_tokens(s.code));
  std::sort(counts.begin(), counts.end());

  // Thresholds at the 1/3 and 2/3 quantiles; <= comparison sends ties to
  // the lower bucket.
  std::size_t n = counts.size();
  std::size_t idx1 = (n + 2) / 3 - 1;        // ceil(n/3) - 1
  std::size_t idx2 = (2 * n + 2) / 3 - 1;    // ceil(2n/3) - 1
  std::size_t cut1 = counts[idx1];
  std::size_t cut2 = counts[idx2];

  for (const SeedProgram &s : seeds) {
    std::size_t tokens = count_tokens(s.code);
    buckets[s.task_id] = tokens <= cut1 ? "short" : tokens <= cut2 ? "medium" : "long";
  }
  return buckets;
}

std::string format_metrics_table(const MetricsSummary &m) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %8d\n", "total", m.total);
  out << line;
  std::snprintf(line, sizeof line, "%-14s %8d\n", "seed_correct", m.seed_correct);
  out << line;
  std::snprintf(line, sizeof line, "%-14s %8d\n", "buggy", m.buggy);
  out << line;
  std::snprintf(line, sizeof line, "%-14s %8d\n", "fixed", m.fixed);
  out << line;
  std::snprintf(line, sizeof line, "%-14s %7.1f%%\n", "accuracy", m.accuracy * 100.0);
  out << line;
  if (m.rsr) {
    std::snprintf(line, sizeof line, "%-14s %7.1f%%\n", "rsr", *m.rsr * 100.0);
    out << line;
  } else {
    std::snprintf(line, sizeof line, "%-14s %8s\n", "rsr", "n/a");
    out << line;
  }
  for (const auto &[name, stat] : m.per_bucket) {
    if (stat.rsr)
      std::snprintf(line, sizeof line, "rsr[%-9s] %7.1f%%  (%d/%d)\n", name.c_str(),
                    *stat.rsr * 100.0, stat.fixed, stat.buggy);
    else
      std::snprintf(line, sizeof line, "rsr[%-9s] %8s\n", name.c_str(), "n/a");
    out << line;
  }
  for (const auto &[name, stat] : m.per_category) {
    if (stat.rsr)
      std::snprintf(line, sizeof line, "rsr{%-13s} %7.1f%%  (%d/%d)\n", name.c_str(),
                    *stat.rsr * 100.0, stat.fixed, stat.buggy);
    else
      std::snprintf(line, sizeof line, "rsr{%-13s} %8s\n", name.c_str(), "n/a");
    out << line;
  }
  return out.str();
}

}  // namespace mgdbg
