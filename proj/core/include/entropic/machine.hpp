#pragma once

// Small-step machine over configurations <sigma, e, K, tau, w>.
// Weights are carried as natural logs.

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <variant>

#include "entropic/entropy.hpp"
#include "entropic/realset.hpp"
#include "entropic/syntax.hpp"

namespace entropic {

enum class StuckReason : std::uint8_t {
  AppliedNonLambda,
  OpUndefined,
  IfOnClosure,
  FactorNonPositive,
  FactorOnClosure,
  DistUndefined,  // bad parameters or density for a distribution form
  OpenTerm,       // a free variable reached an elimination position
  TraceExhausted,
  TraceElementOutOfRange,
};

std::string_view to_string(StuckReason r);

struct Config {
  Entropy sigma;
  ExprPtr expr;
  Cont cont;
  Entropy tau;
  double logw = 0;
};

bool is_final(const Config& c);

// Rewrites c by one rule. Returns the reason when no rule applies; c is
// left untouched in that case. Must not be called on a final config.
std::optional<StuckReason> step_in_place(Config& c);

struct StepOutcome {
  std::variant<Config, StuckReason> result;

  bool stuck() const { return std::holds_alternative<StuckReason>(result); }
  const Config& config() const { return std::get<Config>(result); }
  StuckReason reason() const { return std::get<StuckReason>(result); }
};
StepOutcome step(const Config& c);

struct Final {
  Value value;
  double logw;
  std::uint64_t steps;
};
struct StuckAt {
  StuckReason reason;
  std::uint64_t steps;
};
struct FuelExhausted {
  std::uint64_t steps;
};
using RunResult = std::variant<Final, StuckAt, FuelExhausted>;

// Called before each step with the step index and current config.
using StepObserver = std::function<void(std::uint64_t, const Config&)>;

RunResult run(const Entropy& sigma, const ExprPtr& e, const Cont& k, const Entropy& tau,
              std::uint64_t fuel, double logw = 0, const StepObserver& observe = {});

// Weight of the run if it halts within fuel with a real in A, else 0.
double eval(const Entropy& sigma, const ExprPtr& e, const Cont& k, const Entropy& tau,
            double logw, const RealSet& A, std::uint64_t fuel);

struct ReachedValue {
  std::uint64_t steps;
  Value value;
  double logw;
};
// Smallest n such that the n-th configuration holds a value under the
// original continuation and stack.
std::optional<ReachedValue> run_to_value(const Entropy& sigma, const ExprPtr& e,
                                         const Cont& k, const Entropy& tau,
                                         std::uint64_t fuel);

// Trace line "n: <expr-head> | cont-depth | logw".
std::string trace_line(std::uint64_t n, const Config& c);

}  // namespace entropic
