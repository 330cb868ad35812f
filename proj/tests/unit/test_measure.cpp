#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "entropic/measure.hpp"
#include "support.hpp"

namespace entropic {
namespace {

using testing::L;

bool within(double got, double want, double se, double k = 3) {
  return std::fabs(got - want) <= k * se;
}

TEST(Estimate, UniformHalves) {
  const std::vector<RealSet> bins{RealSet::half_open(0, 0.5), RealSet::half_open(0.5, 1)};
  const auto m = estimate(sample(), {}, bins, Seed::from_u64(1), {.n = 100000});
  for (int i = 0; i < 2; ++i) {
    EXPECT_TRUE(within(m.masses[i], 0.5, m.std_errors[i])) << m.masses[i];
    EXPECT_NEAR(m.std_errors[i], 0.0016, 0.0002);
  }
  EXPECT_EQ(m.total_mass, 1.0);
}

TEST(Estimate, FactorScalesMass) {
  const auto m = estimate(L("(let (_ (factor 2)) (sample))"), {}, {RealSet::half_open(0, 1)},
                          Seed::from_u64(2), {.n = 100000});
  EXPECT_TRUE(within(m.total_mass, 2.0, std::max(m.total_se, 1e-12)));
  EXPECT_NEAR(m.masses[0], 2.0, 1e-12);
}

TEST(Estimate, DeterministicProgram) {
  const auto m = estimate(L("7"), {}, {RealSet::half_open(0, 10)}, Seed::from_u64(3), {.n = 500});
  EXPECT_EQ(m.masses[0], 1.0);
  EXPECT_EQ(m.std_errors[0], 0.0);
}

TEST(Estimate, TriangularDifference) {
  // P(0 <= x - y < 0.5) = 1/2 - 1/8 for independent uniforms
  const auto e = L("(let (x (sample)) (let (y (sample)) (- x y)))");
  const auto m = estimate(e, {}, {RealSet::half_open(0, 0.5)}, Seed::from_u64(4), {.n = 100000});
  EXPECT_TRUE(within(m.masses[0], 0.375, m.std_errors[0])) << m.masses[0];
}

TEST(Estimate, StuckAndDivergedCounted) {
  const auto e = L("(let (u (sample)) (let (c (< u 0.25)) (if c (factor -1) u)))");
  const auto m = estimate(e, {}, {RealSet::all()}, Seed::from_u64(5), {.n = 20000});
  EXPECT_GT(m.stuck, 4000u);
  EXPECT_LT(m.stuck, 6000u);
  const auto omega = L("(let (w (lam x (app x x))) (app w w))");
  const auto d = estimate(omega, {}, {RealSet::all()}, Seed::from_u64(5), {.n = 10, .fuel = 100});
  EXPECT_EQ(d.diverged, 10u);
  EXPECT_EQ(d.total_mass, 0.0);
}

TEST(Ess, ConstantWeightsGiveN) {
  const auto m = estimate(L("(let (_ (factor 3)) (sample))"), {}, {RealSet::all()},
                          Seed::from_u64(6), {.n = 5000});
  EXPECT_NEAR(m.ess, 5000.0, 1e-6);
}

TEST(Ess, ExponentialWeights) {
  // w = exp(c u): ess / n -> (E w)^2 / E w^2 = 2 (e^c - 1) / (c (e^c + 1))
  const double c = 10;
  const double ratio = 2 * std::expm1(c) / (c * (std::exp(c) + 1));
  const auto m = estimate(L("(let (u (sample)) (let (w (* 10 u)) (let (v (exp w)) (factor v))))"),
                          {}, {RealSet::all()}, Seed::from_u64(7), {.n = 100000});
  EXPECT_NEAR(m.ess / 100000, ratio, 0.01);
}

TEST(Ess, StuckDrawsCarryNoWeight) {
  const auto e = L("(let (u (sample)) (let (c (< u 0.5)) (if c (factor -1) u)))");
  const auto m = estimate(e, {}, {RealSet::all()}, Seed::from_u64(8), {.n = 10000});
  EXPECT_NEAR(m.ess, 10000.0 - m.stuck, 1e-6);
}

TEST(Estimate, ThreadCountIrrelevant) {
  const auto e = testing::L(testing::slurp(std::string(ENTROPIC_CORPUS_DIR) + "/conjugate.plc"));
  const auto bins = uniform_bins(-5, 5, 20, true);
  const auto a = estimate(e, {}, bins, Seed::from_u64(6), {.n = 5000, .threads = 1});
  const auto b = estimate(e, {}, bins, Seed::from_u64(6), {.n = 5000, .threads = 3});
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(ValueEstimate, ClosuresAreNonReal) {
  const auto e = L("(let (u (sample)) (let (c (< u 0.5)) (if c (lam x x) u)))");
  const auto m = value_estimate(e, {RealSet::all()}, Seed::from_u64(7), {.n = 40000});
  EXPECT_TRUE(within(m.non_real_mass, 0.5, m.non_real_se));
  EXPECT_TRUE(within(m.total_mass, 0.5, m.total_se));
}

TEST(Expectation, ConjugatePosteriorMean) {
  // prior N(0, 2), one observation 1 with unit noise: posterior mean 4/5
  const auto e = testing::L(testing::slurp(std::string(ENTROPIC_CORPUS_DIR) + "/conjugate.plc"));
  const auto r = expectation(e, [](double x) { return x; }, Seed::from_u64(8), {.n = 100000});
  ASSERT_TRUE(r);
  EXPECT_TRUE(within(r->value, 0.8, r->se)) << r->value << " +- " << r->se;
}

TEST(Expectation, NoWeight) {
  EXPECT_FALSE(expectation(L("(lam x x)"), [](double x) { return x; }, Seed::from_u64(9), {.n = 10}));
}

TEST(Compare, FloorsStandardErrors) {
  MeasureEstimate a, b;
  a.bins = b.bins = {RealSet::all()};
  a.masses = {0.0};
  b.masses = {0.001};
  a.std_errors = b.std_errors = {0.0};
  a.n = b.n = 1000;
  a.max_weight = b.max_weight = 1;
  // floor is 1/1000 per side, so the difference is 0.7 combined se
  EXPECT_TRUE(compare(a, b, 3).pass);
  b.masses = {0.01};
  const auto c = compare(a, b, 3);
  EXPECT_FALSE(c.pass);
  EXPECT_GT(c.worst_z, 3);
}

TEST(Json, Schema) {
  const auto m = estimate(sample(), {}, uniform_bins(0, 1, 4, false), Seed::from_u64(10), {.n = 100});
  const auto j = nlohmann::json::parse(to_json(m));
  EXPECT_EQ(j["schema"], "entropic/1");
  EXPECT_EQ(j["bins"].size(), 4u);
  EXPECT_EQ(j["n"], 100);
}

TEST(MeasureEquations, FactorPullsOut) {
  // mu(factor r, K) = r * mu(r, K): the same seeds give exactly r times the weight
  const Cont k = parse_cont("(letk (x (let (u (sample)) (+ u x))) (halt))");
  const auto bins = uniform_bins(0, 4, 8, true);
  const auto lhs = estimate(L("(factor 3)"), k, bins, Seed::from_u64(11), {.n = 2000});
  const auto rhs = estimate(L("3"), k, bins, Seed::from_u64(11), {.n = 2000});
  for (std::size_t i = 0; i < bins.size(); ++i) EXPECT_NEAR(lhs.masses[i], 3 * rhs.masses[i], 1e-12);
}

}  // namespace
}  // namespace entropic
