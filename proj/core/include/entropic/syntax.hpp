#pragma once

// Abstract syntax for the let-normal language (L) and the direct-style
// language (D), plus scoping, substitution and focus navigation.
//
// All nodes are immutable once built and shared through shared_ptr, so
// expressions can be handed to concurrent evaluators freely.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace entropic {

enum class OpName : std::uint8_t {
  Log,
  Exp,
  IsReal,
  Add,
  Sub,
  Mul,
  Div,
  Less,
  LessEq,
  NormalInvCdf,
  NormalPdf,
  NormalCdf,
};

inline constexpr std::array<OpName, 12> kAllOps = {
    OpName::Log,          OpName::Exp,       OpName::IsReal,
    OpName::Add,          OpName::Sub,       OpName::Mul,
    OpName::Div,          OpName::Less,      OpName::LessEq,
    OpName::NormalInvCdf, OpName::NormalPdf, OpName::NormalCdf,
};

int arity(OpName op);
std::string_view symbol(OpName op);
std::optional<OpName> op_from_symbol(std::string_view s);

// Density-based sampling forms D(v...). Only the normal family exists.
enum class DistName : std::uint8_t { Normal };

int arity(DistName d);
std::string_view symbol(DistName d);
std::optional<DistName> dist_from_symbol(std::string_view s);

using Identifier = std::string;
using IdentSet = std::set<Identifier>;

// ---------------------------------------------------------------------------
// L: values, expressions, continuations

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Var {
  Identifier name;
};
struct Lam {
  Identifier param;
  ExprPtr body;
};
struct Real {
  double r;
};
using Value = std::variant<Var, Lam, Real>;

namespace node {
struct Val {
  Value v;
};
struct App {
  Value fn;
  Value arg;
};
struct Let {
  Identifier x;
  ExprPtr rhs;
  ExprPtr body;
};
struct Op {
  OpName op;
  std::vector<Value> args;
};
struct If {
  Value cond;
  ExprPtr then_branch;
  ExprPtr else_branch;
};
struct Sample {};
struct Factor {
  Value arg;
};
struct Dist {
  DistName dist;
  std::vector<Value> args;
};
}  // namespace node

struct Expr {
  std::variant<node::Val, node::App, node::Let, node::Op, node::If,
               node::Sample, node::Factor, node::Dist>
      node;
};

// Builders.
Value var(Identifier name);
Value lam(Identifier param, ExprPtr body);
Value real(double r);
ExprPtr val(Value v);
ExprPtr app(Value fn, Value arg);
ExprPtr let(Identifier x, ExprPtr rhs, ExprPtr body);
ExprPtr op(OpName o, std::vector<Value> args);
ExprPtr if_(Value cond, ExprPtr then_branch, ExprPtr else_branch);
ExprPtr sample();
ExprPtr factor(Value v);
ExprPtr dist(DistName d, std::vector<Value> args);

// let u = sample in normalinvcdf(u; m, s)
ExprPtr normal_by_invcdf(Value m, Value s, Identifier u = "u");

template <class T>
const T* get_if(const Expr& e) {
  return std::get_if<T>(&e.node);
}
inline bool is_value(const Expr& e) { return get_if<node::Val>(e) != nullptr; }
inline const double* as_real(const Value& v) {
  const auto* r = std::get_if<Real>(&v);
  return r ? &r->r : nullptr;
}
inline const Var* as_var(const Value& v) { return std::get_if<Var>(&v); }
inline const Lam* as_lam(const Value& v) { return std::get_if<Lam>(&v); }

// Structural (name-sensitive) equality.
bool equal(const Value& a, const Value& b);
bool equal(const Expr& a, const Expr& b);
bool equal(const ExprPtr& a, const ExprPtr& b);

// Continuations: halt | let x = [] in body; rest. A default-constructed
// Cont is halt.
class Cont {
 public:
  Cont() = default;
  static Cont halt() { return {}; }
  static Cont let_k(Identifier x, ExprPtr body, Cont rest);

  bool is_halt() const { return frame_ == nullptr; }
  const Identifier& var() const;
  const ExprPtr& body() const;
  const Cont& rest() const;
  std::size_t depth() const;
  // Identity of the frame chain, not structural equality.
  bool same(const Cont& other) const { return frame_ == other.frame_; }

 private:
  struct Frame;
  explicit Cont(std::shared_ptr<const Frame> f) : frame_(std::move(f)) {}
  std::shared_ptr<const Frame> frame_;
};

bool equal(const Cont& a, const Cont& b);

// ---------------------------------------------------------------------------
// D: direct-style expressions

struct DExpr;
using DExprPtr = std::shared_ptr<const DExpr>;

namespace dnode {
struct Var {
  Identifier name;
};
struct Lam {
  Identifier param;
  DExprPtr body;
};
struct Real {
  double r;
};
struct Let {
  Identifier x;
  DExprPtr rhs;
  DExprPtr body;
};
struct App {
  DExprPtr fn;
  DExprPtr arg;
};
struct Op {
  OpName op;
  std::vector<DExprPtr> args;
};
struct If {
  DExprPtr cond;
  DExprPtr then_branch;
  DExprPtr else_branch;
};
struct Sample {};
struct Factor {
  DExprPtr arg;
};
}  // namespace dnode

struct DExpr {
  std::variant<dnode::Var, dnode::Lam, dnode::Real, dnode::Let, dnode::App,
               dnode::Op, dnode::If, dnode::Sample, dnode::Factor>
      node;
};

namespace direct {
DExprPtr var(Identifier name);
DExprPtr lam(Identifier param, DExprPtr body);
DExprPtr real(double r);
DExprPtr let(Identifier x, DExprPtr rhs, DExprPtr body);
DExprPtr app(DExprPtr fn, DExprPtr arg);
DExprPtr op(OpName o, std::vector<DExprPtr> args);
DExprPtr if_(DExprPtr c, DExprPtr t, DExprPtr e);
DExprPtr sample();
DExprPtr factor(DExprPtr arg);
}  // namespace direct

template <class T>
const T* get_if(const DExpr& e) {
  return std::get_if<T>(&e.node);
}
bool is_value(const DExpr& e);
bool equal(const DExpr& a, const DExpr& b);

// ---------------------------------------------------------------------------
// Scoping and substitution

IdentSet free_vars(const Value& v);
IdentSet free_vars(const Expr& e);
IdentSet free_vars(const ExprPtr& e);
IdentSet free_vars(const DExpr& e);
bool is_free_in(const Identifier& x, const Expr& e);
bool is_closed(const Expr& e);
bool is_closed(const Value& v);

// Every identifier that appears anywhere (bound or free).
IdentSet all_names(const Expr& e);

// Child-index path from the root of an expression to a subexpression.
// Slots: Val 0 (lambda body); App 0 fn, 1 arg; Let 0 rhs, 1 body;
// Op/Dist i = args[i]; If 0 cond, 1 then, 2 else; Factor 0 arg.
// A value slot is only navigable when it holds a lambda; the path then
// continues inside the lambda body.
using Focus = std::vector<int>;

struct ScopeResult {
  bool ok = true;
  Identifier variable;  // offending variable when !ok
  Focus position;       // focus of the expression containing it
};

ScopeResult scope_check(const IdentSet& env, const Expr& e);
ScopeResult scope_check(const IdentSet& env, const DExpr& e);
// Continuations must be closed; LetK bodies may only mention their binder.
ScopeResult scope_check(const Cont& k);

// Capture-avoiding e[v/x].
ExprPtr subst(const ExprPtr& e, const Identifier& x, const Value& v);
Value subst(const Value& w, const Identifier& x, const Value& v);
// Fast path when v is closed; shares unchanged subtrees.
ExprPtr subst_closed(const ExprPtr& e, const Identifier& x, const Value& v);
DExprPtr subst(const DExprPtr& e, const Identifier& x, const DExprPtr& v);

// Deterministic name not in `avoid`, derived from `hint`.
Identifier fresh(const IdentSet& avoid, std::string_view hint);

// Alpha-equivalence through de Bruijn conversion.
std::string de_bruijn(const Expr& e);
std::string de_bruijn(const Value& v);
bool alpha_equal(const Expr& a, const Expr& b);
bool alpha_equal(const Value& a, const Value& b);

// Focus navigation.
ExprPtr subexpr(const ExprPtr& root, const Focus& f);  // nullptr if invalid
ExprPtr replace_at(const ExprPtr& root, const Focus& f, ExprPtr replacement);
std::vector<Focus> all_foci(const ExprPtr& root);

struct Binder {
  Identifier name;
  ExprPtr rhs;  // nullptr for lambda parameters
};
// Binders in scope at the focus, outermost first.
std::vector<Binder> binders_along(const ExprPtr& root, const Focus& f);

std::size_t size(const Expr& e);

}  // namespace entropic
