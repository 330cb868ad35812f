#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "entropic/bigstep.hpp"
#include "entropic/machine.hpp"
#include "entropic/measure.hpp"
#include "entropic/parse.hpp"
#include "entropic/realset.hpp"
#include "entropic/rewrite.hpp"
#include "entropic/shuffle.hpp"

namespace {

using namespace entropic;

std::string corpus(const std::string& name) {
  std::ifstream in(std::string(ENTROPIC_CORPUS_DIR) + "/" + name + ".plc");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void BM_SeedUniform(benchmark::State& st) {
  const Seed s = Seed::from_u64(1);
  std::uint64_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(seed_uniform(s.child(i++)));
}
BENCHMARK(BM_SeedUniform);

void BM_EntropyPath(benchmark::State& st) {
  const Entropy r = root(Seed::from_u64(2));
  for (auto _ : st) {
    Entropy e = r;
    for (int d = 0; d < 16; ++d) e = (d % 3 == 0) ? e.right() : e.left();
    benchmark::DoNotOptimize(e.uniform());
  }
}
BENCHMARK(BM_EntropyPath);

void BM_Parse(benchmark::State& st) {
  const std::string text = print(regression_pipeline().source);
  for (auto _ : st) benchmark::DoNotOptimize(parse_expr(text));
  st.SetBytesProcessed(static_cast<std::int64_t>(st.iterations() * text.size()));
}
BENCHMARK(BM_Parse);

void BM_MachineRun(benchmark::State& st) {
  const ExprPtr e = parse_expr(corpus("geometric"));
  const Seed s = Seed::from_u64(3);
  std::uint64_t i = 0;
  for (auto _ : st) {
    const Seed d = s.child(i++);
    benchmark::DoNotOptimize(run(root(d.child(1)), e, Cont::halt(), root(d.child(2)), 1000000));
  }
}
BENCHMARK(BM_MachineRun);

void BM_BigEval(benchmark::State& st) {
  const ExprPtr e = parse_expr(corpus("geometric"));
  const Seed s = Seed::from_u64(3);
  std::uint64_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(bigeval(root(s.child(i++).child(1)), e, 1000000));
}
BENCHMARK(BM_BigEval);

void BM_Estimate(benchmark::State& st) {
  const ExprPtr e = parse_expr(corpus("conjugate"));
  const auto bins = uniform_bins(-10, 10, 64, true);
  const EstimateOptions opt{.n = static_cast<std::uint64_t>(st.range(0)),
                            .threads = static_cast<unsigned>(st.range(1))};
  for (auto _ : st) benchmark::DoNotOptimize(estimate(e, Cont::halt(), bins, Seed::from_u64(4), opt));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Estimate)->Args({10000, 1})->Args({10000, 4})->Unit(benchmark::kMillisecond);

void BM_ShuffledEstimate(benchmark::State& st) {
  const ExprPtr e = parse_expr(corpus("difference"));
  const auto bins = uniform_bins(-2, 2, 32, true);
  const Fsf phi = phi_commut();
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        shuffled_estimate(e, Cont::halt(), phi, bins, Seed::from_u64(5), {.n = 10000}));
  }
}
BENCHMARK(BM_ShuffledEstimate)->Unit(benchmark::kMillisecond);

void BM_RegressionPipeline(benchmark::State& st) {
  const RegressionPipeline p = regression_pipeline();
  for (auto _ : st) benchmark::DoNotOptimize(run_script(p.source, p.script));
}
BENCHMARK(BM_RegressionPipeline);

}  // namespace

BENCHMARK_MAIN();
