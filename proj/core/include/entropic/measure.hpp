#pragma once

// Monte-Carlo estimation of program measures.
//
// Draw i of an estimate with seed S uses S.child(i); a draw with seed D
// runs the machine from sigma = root(D.child(1)), tau = root(D.child(2)).
// Estimates are therefore independent of the thread count.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "entropic/entropy.hpp"
#include "entropic/machine.hpp"
#include "entropic/realset.hpp"
#include "entropic/syntax.hpp"

namespace entropic {

enum class Outcome : std::uint8_t { Real, NonReal, Stuck, Diverged };

struct WeightedSample {
  Outcome outcome = Outcome::Diverged;
  double value = 0;  // meaningful for Outcome::Real
  StuckReason reason = StuckReason::OpUndefined;  // for Outcome::Stuck
  double logw = 0;
  Seed seed;
  std::uint64_t steps = 0;
};

WeightedSample classify(const RunResult& r, const Seed& seed);

inline constexpr double kWeightClamp = 1e300;

struct MeasureEstimate {
  std::vector<RealSet> bins;
  std::vector<double> masses;
  std::vector<double> std_errors;
  double total_mass = 0;  // over real results, every bin or not
  double total_se = 0;
  double non_real_mass = 0;
  double non_real_se = 0;
  std::uint64_t n = 0;
  std::uint64_t stuck = 0;
  std::uint64_t diverged = 0;
  double max_weight = 0;
  // (diverged / n) * max observed weight.
  double unresolved_bound = 0;
  std::uint64_t clamped = 0;  // weights clamped at kWeightClamp
  // Kish effective sample size (sum w)^2 / sum w^2 over weighted draws.
  // Far below n when a few draws carry most of the weight, in which case
  // the standard errors above are themselves unreliable.
  double ess = 0;
};

struct EstimateOptions {
  std::uint64_t n = 10000;
  std::uint64_t fuel = 1000000;
  unsigned threads = 1;
};

// Evaluates draw(i, seed.child(i)) for i < n and folds in index order.
using DrawFn = std::function<WeightedSample(std::uint64_t index, const Seed& seed)>;
MeasureEstimate estimate_with(const DrawFn& draw, const std::vector<RealSet>& bins,
                              const Seed& seed, std::uint64_t n, unsigned threads = 1);

WeightedSample draw(const ExprPtr& e, const Cont& k, const Seed& seed, std::uint64_t fuel);

MeasureEstimate estimate(const ExprPtr& e, const Cont& k, const std::vector<RealSet>& bins,
                         const Seed& seed, const EstimateOptions& opt = {});

// Measure of e under halt; closure results go to non_real_mass.
MeasureEstimate value_estimate(const ExprPtr& e, const std::vector<RealSet>& bins,
                               const Seed& seed, const EstimateOptions& opt = {});

struct Expectation {
  double value;
  double se;
  std::uint64_t used;  // draws with real results and positive weight
};
// Self-normalized importance estimate of E[g(result)]; nullopt when the
// total weight is zero.
std::optional<Expectation> expectation(const ExprPtr& e, const std::function<double(double)>& g,
                                       const Seed& seed, const EstimateOptions& opt = {});
std::optional<Expectation> expectation_of(const std::vector<WeightedSample>& draws,
                                          const std::function<double(double)>& g);

// Collects raw draws (index order) without binning.
std::vector<WeightedSample> collect(const DrawFn& draw, const Seed& seed, std::uint64_t n,
                                    unsigned threads = 1);

// Two estimates over the same bins agree cell by cell within z combined
// standard errors (bins, total mass and non-real mass). Each side's
// standard error is floored at max_weight / n.
struct Comparison {
  bool pass = true;
  double worst_z = 0;
  std::string worst_cell;
};
Comparison compare(const MeasureEstimate& a, const MeasureEstimate& b, double z);

std::string to_json(const MeasureEstimate& m, int indent = -1);

// ENTROPIC_THREADS or 1.
unsigned default_threads();

}  // namespace entropic
