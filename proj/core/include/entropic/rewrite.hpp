#pragma once

// The equivalence catalog as side-condition-checked rewrite rules over L,
// plus scripts (sequences of localized rule applications) and the
// built-in linear-regression pipeline.
//
// A rule application names a rule, a direction and a focus. Some rules
// need more than a focus when run in reverse: beta_v and let_v reverse
// abstract a given value under a binder, and let_S reverse needs the
// position of the hole. Rules that introduce binders take an optional
// name; otherwise a fresh one is chosen against every name in the
// program.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "entropic/syntax.hpp"

namespace entropic {

enum class Direction : std::uint8_t { Forward, Reverse };

std::string_view to_string(Direction d);  // "fwd" / "rev"
std::optional<Direction> direction_from(std::string_view s);

class NotApplicable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RewriteArgs {
  std::optional<Focus> hole;       // relative to the focus
  std::optional<Value> value;      // value to abstract
  std::optional<Identifier> name;  // binder to introduce
};

struct RewriteStep {
  std::string rule;
  Direction dir = Direction::Forward;
  Focus focus;
  RewriteArgs args;
};
using RewriteScript = std::vector<RewriteStep>;

struct RuleContext {
  Direction dir;
  const RewriteArgs& args;
  const std::vector<Binder>& scope;  // binders in scope at the focus
  IdentSet avoid;                    // names a new binder must not take
};

struct RewriteRule {
  std::string name;
  bool bidirectional;
  std::string summary;
  // Rewrites the subexpression at the focus; throws NotApplicable.
  std::function<ExprPtr(const ExprPtr&, RuleContext&)> rewrite;
};

const std::vector<RewriteRule>& rules();
const RewriteRule* find_rule(std::string_view name);

// Throws NotApplicable for unknown rules, invalid foci, failed side
// conditions and results that would widen the free-variable set.
ExprPtr apply_rule(const ExprPtr& e, const RewriteStep& step);

struct ApplicableSite {
  std::string rule;
  Direction dir;
  Focus focus;
};
// Every (rule, direction, focus) that applies with default arguments.
// Reverse beta_v, let_v and let_S need explicit arguments and are never
// listed.
std::vector<ApplicableSite> applicable(const ExprPtr& e);

class ScriptError : public std::runtime_error {
 public:
  ScriptError(std::size_t step, const std::string& reason);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

using StepObserverFn = std::function<void(std::size_t, const RewriteStep&, const ExprPtr&)>;
// Folds apply_rule over the script; throws ScriptError at the first
// failing step.
ExprPtr run_script(const ExprPtr& e, const RewriteScript& script,
                   const StepObserverFn& observe = nullptr);

// [{"rule":"commut","dir":"fwd","focus":[1,1]}, ...] with optional
// "hole", "value" (concrete syntax) and "name". Throws
// std::invalid_argument.
RewriteScript parse_script(std::string_view json);
std::string script_to_json(const RewriteScript& s, int indent = -1);

// Structural match up to renaming of bound variables. In the pattern the
// expression `_` matches any expression and the value `_` matches any
// value. Reals match within 1e-9 relative.
bool matches_shape(const ExprPtr& pattern, const ExprPtr& e);

struct RegressionPipeline {
  ExprPtr source;
  RewriteScript script;
  ExprPtr expected_shape;
};
// Three observations (2, 2.4), (3, 2.7), (4, 3.0) of y = A*x + B with
// normal(0, 10) priors; the program returns B. The script folds each
// observation into B's prior by conjugacy.
RegressionPipeline regression_pipeline();
// Same model returning A instead of B.
ExprPtr regression_program(bool return_slope = false);

}  // namespace entropic
