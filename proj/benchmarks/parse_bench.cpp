#include <benchmark/benchmark.h>

#include <sstream>
#include <string>

#include "mgdbg/code_model.hpp"
#include "mgdbg/hash.hpp"
#include "mgdbg/testgen.hpp"

namespace {

// Chain of n units, each calling the next; roughly HumanEval-sized bodies.
std::string make_program(int units) {
  std::ostringstream out;
  for (int i = units - 1; i >= 0; --i) {
    out << "def step_" << i << "(x):\n";
    out << "    acc = x + " << i << "\n";
    out << "    acc = acc * 2 if acc % 2 == 0 else acc - 1\n";
    if (i + 1 < units) out << "    acc += step_" << (i + 1) << "(acc)\n";
    out << "    return acc\n\n";
  }
  return out.str();
}

void BM_ParseArtifact(benchmark::State &state) {
  std::string source = make_program(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mgdbg::parse_artifact(source, "step_0"));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(source.size()));
}
BENCHMARK(BM_ParseArtifact)->Arg(4)->Arg(16)->Arg(64);

void BM_BuildAndFlatten(benchmark::State &state) {
  std::string source = make_program(static_cast<int>(state.range(0)));
  mgdbg::CodeArtifact artifact = mgdbg::parse_artifact(source, "step_0");
  for (auto _ : state) {
    benchmark::DoNotOptimize(mgdbg::flatten(mgdbg::build_tree(artifact)));
  }
}
BENCHMARK(BM_BuildAndFlatten)->Arg(4)->Arg(16)->Arg(64);

void BM_ReplaceUnit(benchmark::State &state) {
  mgdbg::DecompositionTree tree =
      mgdbg::build_tree(mgdbg::parse_artifact(make_program(16), "step_0"));
  std::string patch = "def step_8(x):\n    return x\n";
  for (auto _ : state) {
    benchmark::DoNotOptimize(mgdbg::replace_unit(tree, "step_8", patch));
  }
}
BENCHMARK(BM_ReplaceUnit);

void BM_ParseAssertions(benchmark::State &state) {
  std::string reply = "```\n";
  for (int i = 0; i < 20; ++i)
    reply += "assert f([1, (2, 3), 'a,b'], k=" + std::to_string(i) +
             ") == {'r': [" + std::to_string(i) + ", 2]}\n";
  reply += "```";
  for (auto _ : state) {
    benchmark::DoNotOptimize(mgdbg::parse_assertions(reply));
  }
}
BENCHMARK(BM_ParseAssertions);

void BM_Sha256Hex(benchmark::State &state) {
  std::string payload(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) {
    benchmark::DoNotOptimize(mgdbg::sha256_hex(payload));
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sha256Hex)->Arg(1 << 10)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
