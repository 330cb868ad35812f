#pragma once

// Statistical CIU testing: two expressions are compared by the measures
// of their closed instances under every (substitution, continuation)
// pair of a finite suite.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entropic/entropy.hpp"
#include "entropic/generator.hpp"
#include "entropic/measure.hpp"
#include "entropic/realset.hpp"
#include "entropic/rewrite.hpp"
#include "entropic/syntax.hpp"

namespace entropic {

enum class Semantics : std::uint8_t { Split, Sequenced };
std::string_view to_string(Semantics s);
std::optional<Semantics> semantics_from(std::string_view s);

using Substitution = std::vector<std::pair<Identifier, Value>>;
ExprPtr close_with(const ExprPtr& e, const Substitution& s);
std::string print(const Substitution& s);

struct CiuSuite {
  std::vector<Substitution> substitutions;
  std::vector<Cont> continuations;
  std::vector<RealSet> bins;
  std::uint64_t n = 100000;
  double z = 4;
  std::uint64_t fuel = 1000000;
  Semantics semantics = Semantics::Split;
  unsigned threads = 1;
  // A cell where either side carries weight with a smaller effective
  // sample size is marked inconclusive (heavy-tailed weights).
  double min_ess = 100;
};

// 0, 1, -2.5, 0.5, the identity and (lam x (let (u (sample)) (+ u x))).
std::vector<Value> default_value_pool();
// halt, x+1, a factor by exp(x), and a branch on x.
std::vector<Cont> default_continuations();
// Six substitutions over the sorted free variables; substitution i maps
// the j-th variable to pool[(i + j) mod 6], so every variable meets every
// pool value. 32 bins over [-10, 10] plus the two tails.
CiuSuite default_suite(const IdentSet& fv);

struct EquivCell {
  std::size_t substitution = 0;
  std::size_t continuation = 0;
  MeasureEstimate left;
  MeasureEstimate right;
  Comparison comparison;
  bool conclusive = true;
};

struct EquivReport {
  bool pass = true;  // every cell passes
  std::vector<EquivCell> cells;
  std::size_t worst = 0;  // index into cells
  std::size_t inconclusive = 0;
  bool conclusive_cells_pass = true;
  std::vector<std::string> warnings;
};

// Each side draws from seed.child(hash of the closed program).child(k),
// so alpha-equivalent programs see identical randomness and distinct
// programs see independent randomness.
EquivReport check_equiv(const ExprPtr& a, const ExprPtr& b, const CiuSuite& suite,
                        const Seed& seed);
std::string to_json(const EquivReport& r, const CiuSuite& suite, int indent = -1);

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view s);

struct RuleInstance {
  ExprPtr pre;
  RewriteStep step;
};
// A random program on which `rule` applies at step.focus, with at most
// the free variable `a`. Both directions are drawn for bidirectional
// rules. Throws std::invalid_argument for an unknown rule.
RuleInstance generate_instance(const std::string& rule, Generator& g);

struct FuzzConfig {
  std::uint64_t count = 50;
  std::uint64_t n = 10000;
  double z = 4;
  std::size_t bins = 32;
  std::uint64_t fuel = 10000;
  Semantics semantics = Semantics::Split;
  unsigned threads = 1;
  double min_ess = 100;
  // Instances drawn before giving up on reaching `count` conclusive ones;
  // 0 means 4 * count.
  std::uint64_t max_attempts = 0;
};

struct Counterexample {
  ExprPtr pre;
  ExprPtr post;
  RewriteStep step;
  Seed seed;
  std::string worst_cell;
  double worst_z = 0;
};

// An instance fails when a conclusive cell fails. An instance whose only
// failures, if any, are in inconclusive cells is set aside and replaced
// by a fresh one; those are counted, not tested.
struct FuzzSummary {
  std::string rule;
  std::uint64_t instances = 0;  // conclusive instances tested
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  std::uint64_t inconclusive = 0;
  std::vector<Counterexample> counterexamples;
};

FuzzSummary fuzz_rule(const std::string& rule, const FuzzConfig& cfg, const Seed& seed);
std::string to_json(const FuzzSummary& s, int indent = -1);

}  // namespace entropic
