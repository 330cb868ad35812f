#pragma once

// Sequenced-entropy semantics: randomness as a finite list of reals
// consumed left to right. A run only counts when it uses up its trace
// exactly. Also the direct-style machine and the translation into L.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "entropic/entropy.hpp"
#include "entropic/machine.hpp"
#include "entropic/measure.hpp"
#include "entropic/realset.hpp"
#include "entropic/syntax.hpp"

namespace entropic {

using Trace = std::vector<double>;

struct SeqConfig {
  Trace trace;
  std::size_t consumed = 0;
  ExprPtr expr;
  Cont cont;
  double logw = 0;
};

bool is_final(const SeqConfig& c);
// Replay step: sample takes the next trace element (which must lie in
// [0,1]); a distribution form takes the next element as its result and
// adds its log density.
std::optional<StuckReason> seq_step(SeqConfig& c);

struct SeqFinal {
  Value value;
  double logw;
  std::uint64_t steps;
  std::size_t consumed;
};
using SeqRunResult = std::variant<SeqFinal, StuckAt, FuelExhausted>;

SeqRunResult seq_run(const Trace& trace, const ExprPtr& e, const Cont& k, std::uint64_t fuel);

// Weight if the run halts with a real in A and the trace is exhausted.
double seq_eval(const Trace& trace, const ExprPtr& e, const Cont& k, const RealSet& A,
                std::uint64_t fuel);

// Lazy mode: trace elements are drawn on demand from a seed-derived
// stream and recorded. Distribution forms draw from a Cauchy proposal
// and carry the density ratio in the weight.
struct LazyRun {
  SeqRunResult result;
  Trace trace;
};
LazyRun seq_run_lazy(const ExprPtr& e, const Cont& k, const Seed& seed, std::uint64_t fuel);

WeightedSample seq_sample(const ExprPtr& e, const Cont& k, const Seed& seed, std::uint64_t fuel);

MeasureEstimate seq_estimate(const ExprPtr& e, const Cont& k, const std::vector<RealSet>& bins,
                             const Seed& seed, const EstimateOptions& opt = {});

// ---------------------------------------------------------------------------
// Direct-style machine

struct DConfig {
  Trace trace;
  std::size_t consumed = 0;
  DExprPtr expr;
  double logw = 0;
};

// Decomposes expr into E[redex], contracts the redex and plugs it back.
std::optional<StuckReason> d_step(DConfig& c);

struct DFinal {
  DExprPtr value;
  double logw;
  std::uint64_t steps;
  std::size_t consumed;
};
using DRunResult = std::variant<DFinal, StuckAt, FuelExhausted>;

DRunResult d_run(const Trace& trace, const DExprPtr& e, std::uint64_t fuel);
double d_eval(const Trace& trace, const DExprPtr& e, const RealSet& A, std::uint64_t fuel);

// Let-normal translation; every non-value operand gets its own let.
ExprPtr translate(const DExprPtr& e);

struct SimulationReport {
  bool agree = true;
  bool conclusive = true;  // false when either side ran out of fuel
  double d_weight = 0;
  double seq_weight = 0;
  std::string detail;
};
// d_eval(trace, e) against seq_eval(trace, translate(e), halt), compared
// on the whole outcome: final value, log weight and trace consumption.
SimulationReport check_simulation(const DExprPtr& e, const Trace& trace, const RealSet& A,
                                  std::uint64_t fuel);

}  // namespace entropic
