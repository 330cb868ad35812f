#pragma once

// Big-step evaluator sigma |- e => v, w and its agreement check against
// the small-step machine.

#include <cstdint>
#include <string>
#include <variant>

#include "entropic/entropy.hpp"
#include "entropic/machine.hpp"
#include "entropic/syntax.hpp"

namespace entropic {

struct BigOk {
  Value value;
  double logw;
};
struct BigStuck {
  StuckReason reason;
};
struct BigFuelExhausted {};
using BigResult = std::variant<BigOk, BigStuck, BigFuelExhausted>;

// Fuel counts rule applications. Nesting of let right-hand sides deeper
// than kBigStepMaxDepth is also reported as fuel exhaustion.
inline constexpr std::size_t kBigStepMaxDepth = 20000;

BigResult bigeval(const Entropy& sigma, const ExprPtr& e, std::uint64_t fuel);

// |a - b| <= tol * max(1, |a|, |b|)
bool logw_close(double a, double b, double tol = 1e-9);

struct AgreementReport {
  enum class Verdict { Agree, Disagree, Inconclusive };
  Verdict verdict = Verdict::Inconclusive;
  bool small_terminated = false;
  bool big_terminated = false;
  std::string detail;
};

// bigeval(root(seed)) vs run_to_value(root(seed), e, halt, root(seed')).
AgreementReport check_agreement(const Seed& seed, const ExprPtr& e, std::uint64_t fuel);

}  // namespace entropic
