#include "entropic/syntax.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <unordered_map>

#include "overloaded.hpp"

namespace entropic {

namespace {

struct OpInfo {
  OpName op;
  std::string_view sym;
  int arity;
};

constexpr std::array<OpInfo, 12> kOpTable = {{
    {OpName::Log, "log", 1},
    {OpName::Exp, "exp", 1},
    {OpName::IsReal, "real?", 1},
    {OpName::Add, "+", 2},
    {OpName::Sub, "-", 2},
    {OpName::Mul, "*", 2},
    {OpName::Div, "/", 2},
    {OpName::Less, "<", 2},
    {OpName::LessEq, "<=", 2},
    {OpName::NormalInvCdf, "normalinvcdf", 3},
    {OpName::NormalPdf, "normalpdf", 3},
    {OpName::NormalCdf, "normalcdf", 3},
}};

}  // namespace

int arity(OpName op) { return kOpTable[static_cast<std::size_t>(op)].arity; }
std::string_view symbol(OpName op) {
  return kOpTable[static_cast<std::size_t>(op)].sym;
}
std::optional<OpName> op_from_symbol(std::string_view s) {
  for (const auto& info : kOpTable) {
    if (info.sym == s) return info.op;
  }
  return std::nullopt;
}

int arity(DistName) { return 2; }
std::string_view symbol(DistName) { return "normal"; }
std::optional<DistName> dist_from_symbol(std::string_view s) {
  if (s == "normal") return DistName::Normal;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Builders

Value var(Identifier name) { return Var{std::move(name)}; }
Value lam(Identifier param, ExprPtr body) {
  return Lam{std::move(param), std::move(body)};
}
Value real(double r) { return Real{r}; }

namespace {
template <class N>
ExprPtr make(N n) {
  return std::make_shared<const Expr>(Expr{std::move(n)});
}
}  // namespace

ExprPtr val(Value v) { return make(node::Val{std::move(v)}); }
ExprPtr app(Value fn, Value arg) {
  return make(node::App{std::move(fn), std::move(arg)});
}
ExprPtr let(Identifier x, ExprPtr rhs, ExprPtr body) {
  return make(node::Let{std::move(x), std::move(rhs), std::move(body)});
}
ExprPtr op(OpName o, std::vector<Value> args) {
  if (static_cast<int>(args.size()) != arity(o)) {
    throw std::invalid_argument("arity mismatch for " + std::string(symbol(o)));
  }
  return make(node::Op{o, std::move(args)});
}
ExprPtr if_(Value cond, ExprPtr then_branch, ExprPtr else_branch) {
  return make(node::If{std::move(cond), std::move(then_branch),
                       std::move(else_branch)});
}
ExprPtr sample() {
  static const ExprPtr s = make(node::Sample{});
  return s;
}
ExprPtr factor(Value v) { return make(node::Factor{std::move(v)}); }
ExprPtr dist(DistName d, std::vector<Value> args) {
  if (static_cast<int>(args.size()) != arity(d)) {
    throw std::invalid_argument("arity mismatch for " + std::string(symbol(d)));
  }
  return make(node::Dist{d, std::move(args)});
}

ExprPtr normal_by_invcdf(Value m, Value s, Identifier u) {
  return let(u, sample(),
             op(OpName::NormalInvCdf, {var(u), std::move(m), std::move(s)}));
}

// ---------------------------------------------------------------------------
// Structural equality

bool equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      overloaded{
          [&](const Var& x) { return x.name == std::get<Var>(b).name; },
          [&](const Real& x) {
            // Bitwise so that -0.0 and 0.0 stay distinct for round-trips.
            const double y = std::get<Real>(b).r;
            return std::memcmp(&x.r, &y, sizeof(double)) == 0;
          },
          [&](const Lam& x) {
            const auto& y = std::get<Lam>(b);
            return x.param == y.param && equal(x.body, y.body);
          },
      },
      a);
}

namespace {
bool equal_args(const std::vector<Value>& a, const std::vector<Value>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!equal(a[i], b[i])) return false;
  }
  return true;
}
}  // namespace

bool equal(const Expr& a, const Expr& b) {
  if (&a == &b) return true;
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      overloaded{
          [&](const node::Val& x) {
            return equal(x.v, std::get<node::Val>(b.node).v);
          },
          [&](const node::App& x) {
            const auto& y = std::get<node::App>(b.node);
            return equal(x.fn, y.fn) && equal(x.arg, y.arg);
          },
          [&](const node::Let& x) {
            const auto& y = std::get<node::Let>(b.node);
            return x.x == y.x && equal(x.rhs, y.rhs) && equal(x.body, y.body);
          },
          [&](const node::Op& x) {
            const auto& y = std::get<node::Op>(b.node);
            return x.op == y.op && equal_args(x.args, y.args);
          },
          [&](const node::If& x) {
            const auto& y = std::get<node::If>(b.node);
            return equal(x.cond, y.cond) && equal(x.then_branch, y.then_branch) &&
                   equal(x.else_branch, y.else_branch);
          },
          [&](const node::Sample&) { return true; },
          [&](const node::Factor& x) {
            return equal(x.arg, std::get<node::Factor>(b.node).arg);
          },
          [&](const node::Dist& x) {
            const auto& y = std::get<node::Dist>(b.node);
            return x.dist == y.dist && equal_args(x.args, y.args);
          },
      },
      a.node);
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return equal(*a, *b);
}

// ---------------------------------------------------------------------------
// Continuations

struct Cont::Frame {
  Identifier x;
  ExprPtr body;
  Cont rest;
  std::size_t depth;
};

Cont Cont::let_k(Identifier x, ExprPtr body, Cont rest) {
  const std::size_t d = rest.depth() + 1;
  return Cont(std::make_shared<const Frame>(
      Frame{std::move(x), std::move(body), std::move(rest), d}));
}

const Identifier& Cont::var() const { return frame_->x; }
const ExprPtr& Cont::body() const { return frame_->body; }
const Cont& Cont::rest() const { return frame_->rest; }
std::size_t Cont::depth() const { return frame_ ? frame_->depth : 0; }

bool equal(const Cont& a, const Cont& b) {
  if (a.same(b)) return true;
  if (a.is_halt() || b.is_halt()) return false;
  return a.var() == b.var() && equal(a.body(), b.body()) &&
         equal(a.rest(), b.rest());
}

// ---------------------------------------------------------------------------
// D builders

namespace direct {
namespace {
template <class N>
DExprPtr make(N n) {
  return std::make_shared<const DExpr>(DExpr{std::move(n)});
}
}  // namespace
DExprPtr var(Identifier name) { return make(dnode::Var{std::move(name)}); }
DExprPtr lam(Identifier param, DExprPtr body) {
  return make(dnode::Lam{std::move(param), std::move(body)});
}
DExprPtr real(double r) { return make(dnode::Real{r}); }
DExprPtr let(Identifier x, DExprPtr rhs, DExprPtr body) {
  return make(dnode::Let{std::move(x), std::move(rhs), std::move(body)});
}
DExprPtr app(DExprPtr fn, DExprPtr arg) {
  return make(dnode::App{std::move(fn), std::move(arg)});
}
DExprPtr op(OpName o, std::vector<DExprPtr> args) {
  if (static_cast<int>(args.size()) != arity(o)) {
    throw std::invalid_argument("arity mismatch for " + std::string(symbol(o)));
  }
  return make(dnode::Op{o, std::move(args)});
}
DExprPtr if_(DExprPtr c, DExprPtr t, DExprPtr e) {
  return make(dnode::If{std::move(c), std::move(t), std::move(e)});
}
DExprPtr sample() {
  static const DExprPtr s = make(dnode::Sample{});
  return s;
}
DExprPtr factor(DExprPtr arg) { return make(dnode::Factor{std::move(arg)}); }
}  // namespace direct

bool is_value(const DExpr& e) {
  return std::holds_alternative<dnode::Var>(e.node) ||
         std::holds_alternative<dnode::Lam>(e.node) ||
         std::holds_alternative<dnode::Real>(e.node);
}

bool equal(const DExpr& a, const DExpr& b) {
  if (&a == &b) return true;
  if (a.node.index() != b.node.index()) return false;
  auto eq = [](const DExprPtr& x, const DExprPtr& y) { return equal(*x, *y); };
  return std::visit(
      overloaded{
          [&](const dnode::Var& x) {
            return x.name == std::get<dnode::Var>(b.node).name;
          },
          [&](const dnode::Lam& x) {
            const auto& y = std::get<dnode::Lam>(b.node);
            return x.param == y.param && eq(x.body, y.body);
          },
          [&](const dnode::Real& x) {
            const double y = std::get<dnode::Real>(b.node).r;
            return std::memcmp(&x.r, &y, sizeof(double)) == 0;
          },
          [&](const dnode::Let& x) {
            const auto& y = std::get<dnode::Let>(b.node);
            return x.x == y.x && eq(x.rhs, y.rhs) && eq(x.body, y.body);
          },
          [&](const dnode::App& x) {
            const auto& y = std::get<dnode::App>(b.node);
            return eq(x.fn, y.fn) && eq(x.arg, y.arg);
          },
          [&](const dnode::Op& x) {
            const auto& y = std::get<dnode::Op>(b.node);
            if (x.op != y.op || x.args.size() != y.args.size()) return false;
            for (std::size_t i = 0; i < x.args.size(); ++i) {
              if (!eq(x.args[i], y.args[i])) return false;
            }
            return true;
          },
          [&](const dnode::If& x) {
            const auto& y = std::get<dnode::If>(b.node);
            return eq(x.cond, y.cond) && eq(x.then_branch, y.then_branch) &&
                   eq(x.else_branch, y.else_branch);
          },
          [&](const dnode::Sample&) { return true; },
          [&](const dnode::Factor& x) {
            return eq(x.arg, std::get<dnode::Factor>(b.node).arg);
          },
      },
      a.node);
}

// ---------------------------------------------------------------------------
// Free variables

namespace {

void collect_fv(const Expr& e, std::vector<Identifier>& bound, IdentSet& out);

void collect_fv(const Value& v, std::vector<Identifier>& bound, IdentSet& out) {
  std::visit(overloaded{
                 [&](const Var& x) {
                   if (std::find(bound.begin(), bound.end(), x.name) ==
                       bound.end()) {
                     out.insert(x.name);
                   }
                 },
                 [&](const Real&) {},
                 [&](const Lam& l) {
                   bound.push_back(l.param);
                   collect_fv(*l.body, bound, out);
                   bound.pop_back();
                 },
             },
             v);
}

void collect_fv(const Expr& e, std::vector<Identifier>& bound, IdentSet& out) {
  std::visit(overloaded{
                 [&](const node::Val& n) { collect_fv(n.v, bound, out); },
                 [&](const node::App& n) {
                   collect_fv(n.fn, bound, out);
                   collect_fv(n.arg, bound, out);
                 },
                 [&](const node::Let& n) {
                   collect_fv(*n.rhs, bound, out);
                   bound.push_back(n.x);
                   collect_fv(*n.body, bound, out);
                   bound.pop_back();
                 },
                 [&](const node::Op& n) {
                   for (const auto& a : n.args) collect_fv(a, bound, out);
                 },
                 [&](const node::If& n) {
                   collect_fv(n.cond, bound, out);
                   collect_fv(*n.then_branch, bound, out);
                   collect_fv(*n.else_branch, bound, out);
                 },
                 [&](const node::Sample&) {},
                 [&](const node::Factor& n) { collect_fv(n.arg, bound, out); },
                 [&](const node::Dist& n) {
                   for (const auto& a : n.args) collect_fv(a, bound, out);
                 },
             },
             e.node);
}

void collect_dfv(const DExpr& e, std::vector<Identifier>& bound, IdentSet& out) {
  std::visit(overloaded{
                 [&](const dnode::Var& x) {
                   if (std::find(bound.begin(), bound.end(), x.name) ==
                       bound.end()) {
                     out.insert(x.name);
                   }
                 },
                 [&](const dnode::Real&) {},
                 [&](const dnode::Lam& l) {
                   bound.push_back(l.param);
                   collect_dfv(*l.body, bound, out);
                   bound.pop_back();
                 },
                 [&](const dnode::Let& n) {
                   collect_dfv(*n.rhs, bound, out);
                   bound.push_back(n.x);
                   collect_dfv(*n.body, bound, out);
                   bound.pop_back();
                 },
                 [&](const dnode::App& n) {
                   collect_dfv(*n.fn, bound, out);
                   collect_dfv(*n.arg, bound, out);
                 },
                 [&](const dnode::Op& n) {
                   for (const auto& a : n.args) collect_dfv(*a, bound, out);
                 },
                 [&](const dnode::If& n) {
                   collect_dfv(*n.cond, bound, out);
                   collect_dfv(*n.then_branch, bound, out);
                   collect_dfv(*n.else_branch, bound, out);
                 },
                 [&](const dnode::Sample&) {},
                 [&](const dnode::Factor& n) { collect_dfv(*n.arg, bound, out); },
             },
             e.node);
}

}  // namespace

IdentSet free_vars(const Value& v) {
  IdentSet out;
  std::vector<Identifier> bound;
  collect_fv(v, bound, out);
  return out;
}
IdentSet free_vars(const Expr& e) {
  IdentSet out;
  std::vector<Identifier> bound;
  collect_fv(e, bound, out);
  return out;
}
IdentSet free_vars(const ExprPtr& e) { return free_vars(*e); }
IdentSet free_vars(const DExpr& e) {
  IdentSet out;
  std::vector<Identifier> bound;
  collect_dfv(e, bound, out);
  return out;
}

namespace {
bool free_in_value(const Identifier& x, const Value& v);
bool free_in(const Identifier& x, const Expr& e) {
  return std::visit(
      overloaded{
          [&](const node::Val& n) { return free_in_value(x, n.v); },
          [&](const node::App& n) {
            return free_in_value(x, n.fn) || free_in_value(x, n.arg);
          },
          [&](const node::Let& n) {
            return free_in(x, *n.rhs) || (n.x != x && free_in(x, *n.body));
          },
          [&](const node::Op& n) {
            return std::any_of(n.args.begin(), n.args.end(),
                               [&](const Value& a) { return free_in_value(x, a); });
          },
          [&](const node::If& n) {
            return free_in_value(x, n.cond) || free_in(x, *n.then_branch) ||
                   free_in(x, *n.else_branch);
          },
          [&](const node::Sample&) { return false; },
          [&](const node::Factor& n) { return free_in_value(x, n.arg); },
          [&](const node::Dist& n) {
            return std::any_of(n.args.begin(), n.args.end(),
                               [&](const Value& a) { return free_in_value(x, a); });
          },
      },
      e.node);
}
bool free_in_value(const Identifier& x, const Value& v) {
  return std::visit(overloaded{
                        [&](const Var& y) { return y.name == x; },
                        [&](const Real&) { return false; },
                        [&](const Lam& l) {
                          return l.param != x && free_in(x, *l.body);
                        },
                    },
                    v);
}
}  // namespace

bool is_free_in(const Identifier& x, const Expr& e) { return free_in(x, e); }
bool is_closed(const Expr& e) { return free_vars(e).empty(); }
bool is_closed(const Value& v) { return free_vars(v).empty(); }

namespace {
void collect_names(const Expr& e, IdentSet& out);
void collect_names(const Value& v, IdentSet& out) {
  std::visit(overloaded{
                 [&](const Var& x) { out.insert(x.name); },
                 [&](const Real&) {},
                 [&](const Lam& l) {
                   out.insert(l.param);
                   collect_names(*l.body, out);
                 },
             },
             v);
}
void collect_names(const Expr& e, IdentSet& out) {
  std::visit(overloaded{
                 [&](const node::Val& n) { collect_names(n.v, out); },
                 [&](const node::App& n) {
                   collect_names(n.fn, out);
                   collect_names(n.arg, out);
                 },
                 [&](const node::Let& n) {
                   out.insert(n.x);
                   collect_names(*n.rhs, out);
                   collect_names(*n.body, out);
                 },
                 [&](const node::Op& n) {
                   for (const auto& a : n.args) collect_names(a, out);
                 },
                 [&](const node::If& n) {
                   collect_names(n.cond, out);
                   collect_names(*n.then_branch, out);
                   collect_names(*n.else_branch, out);
                 },
                 [&](const node::Sample&) {},
                 [&](const node::Factor& n) { collect_names(n.arg, out); },
                 [&](const node::Dist& n) {
                   for (const auto& a : n.args) collect_names(a, out);
                 },
             },
             e.node);
}
}  // namespace

IdentSet all_names(const Expr& e) {
  IdentSet out;
  collect_names(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Scope checking

namespace {

struct ScopeWalker {
  std::vector<Identifier> env;
  Focus pos;
  ScopeResult result;

  bool has(const Identifier& x) const {
    return std::find(env.begin(), env.end(), x) != env.end();
  }

  bool value(const Value& v, int slot) {
    return std::visit(overloaded{
                          [&](const Var& x) {
                            if (has(x.name)) return true;
                            result = {false, x.name, pos};
                            return false;
                          },
                          [&](const Real&) { return true; },
                          [&](const Lam& l) {
                            env.push_back(l.param);
                            pos.push_back(slot);
                            const bool ok = expr(*l.body);
                            pos.pop_back();
                            env.pop_back();
                            return ok;
                          },
                      },
                      v);
  }

  bool child(const Expr& e, int slot) {
    pos.push_back(slot);
    const bool ok = expr(e);
    pos.pop_back();
    return ok;
  }

  bool expr(const Expr& e) {
    return std::visit(
        overloaded{
            [&](const node::Val& n) { return value(n.v, 0); },
            [&](const node::App& n) { return value(n.fn, 0) && value(n.arg, 1); },
            [&](const node::Let& n) {
              if (!child(*n.rhs, 0)) return false;
              env.push_back(n.x);
              const bool ok = child(*n.body, 1);
              env.pop_back();
              return ok;
            },
            [&](const node::Op& n) {
              for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (!value(n.args[i], static_cast<int>(i))) return false;
              }
              return true;
            },
            [&](const node::If& n) {
              return value(n.cond, 0) && child(*n.then_branch, 1) &&
                     child(*n.else_branch, 2);
            },
            [&](const node::Sample&) { return true; },
            [&](const node::Factor& n) { return value(n.arg, 0); },
            [&](const node::Dist& n) {
              for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (!value(n.args[i], static_cast<int>(i))) return false;
              }
              return true;
            },
        },
        e.node);
  }
};

struct DScopeWalker {
  std::vector<Identifier> env;
  Focus pos;
  ScopeResult result;

  bool has(const Identifier& x) const {
    return std::find(env.begin(), env.end(), x) != env.end();
  }
  bool child(const DExpr& e, int slot) {
    pos.push_back(slot);
    const bool ok = expr(e);
    pos.pop_back();
    return ok;
  }
  bool expr(const DExpr& e) {
    return std::visit(
        overloaded{
            [&](const dnode::Var& x) {
              if (has(x.name)) return true;
              result = {false, x.name, pos};
              return false;
            },
            [&](const dnode::Real&) { return true; },
            [&](const dnode::Lam& l) {
              env.push_back(l.param);
              const bool ok = child(*l.body, 0);
              env.pop_back();
              return ok;
            },
            [&](const dnode::Let& n) {
              if (!child(*n.rhs, 0)) return false;
              env.push_back(n.x);
              const bool ok = child(*n.body, 1);
              env.pop_back();
              return ok;
            },
            [&](const dnode::App& n) { return child(*n.fn, 0) && child(*n.arg, 1); },
            [&](const dnode::Op& n) {
              for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (!child(*n.args[i], static_cast<int>(i))) return false;
              }
              return true;
            },
            [&](const dnode::If& n) {
              return child(*n.cond, 0) && child(*n.then_branch, 1) &&
                     child(*n.else_branch, 2);
            },
            [&](const dnode::Sample&) { return true; },
            [&](const dnode::Factor& n) { return child(*n.arg, 0); },
        },
        e.node);
  }
};

}  // namespace

ScopeResult scope_check(const IdentSet& env, const Expr& e) {
  ScopeWalker w;
  w.env.assign(env.begin(), env.end());
  w.expr(e);
  return w.result;
}

ScopeResult scope_check(const IdentSet& env, const DExpr& e) {
  DScopeWalker w;
  w.env.assign(env.begin(), env.end());
  w.expr(e);
  return w.result;
}

ScopeResult scope_check(const Cont& k) {
  for (const Cont* c = &k; !c->is_halt(); c = &c->rest()) {
    auto r = scope_check(IdentSet{c->var()}, *c->body());
    if (!r.ok) return r;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Substitution

Identifier fresh(const IdentSet& avoid, std::string_view hint) {
  std::string base(hint.empty() ? std::string_view("x") : hint);
  if (!avoid.count(base)) return base;
  for (std::size_t k = 1;; ++k) {
    std::string candidate = base + "_" + std::to_string(k);
    if (!avoid.count(candidate)) return candidate;
  }
}

namespace {

// Renames binder y when it would capture a free variable of v.
template <class Body, class RenameFn>
std::pair<Identifier, Body> avoid_capture(const Identifier& y, const Body& body,
                                          const Identifier& x,
                                          const IdentSet& fv_v,
                                          const IdentSet& names, RenameFn rename) {
  if (!fv_v.count(y)) return {y, body};
  IdentSet avoid = fv_v;
  avoid.insert(names.begin(), names.end());
  avoid.insert(x);
  Identifier y2 = fresh(avoid, y);
  return {y2, rename(body, y, y2)};
}

}  // namespace

Value subst(const Value& w, const Identifier& x, const Value& v) {
  return std::visit(
      overloaded{
          [&](const Var& y) -> Value { return y.name == x ? v : w; },
          [&](const Real&) -> Value { return w; },
          [&](const Lam& l) -> Value {
            if (l.param == x || !is_free_in(x, *l.body)) return w;
            auto [p, body] = avoid_capture(
                l.param, l.body, x, free_vars(v), all_names(*l.body),
                [](const ExprPtr& b, const Identifier& from, const Identifier& to) {
                  return subst(b, from, var(to));
                });
            return Lam{p, subst(body, x, v)};
          },
      },
      w);
}

ExprPtr subst(const ExprPtr& e, const Identifier& x, const Value& v) {
  if (!is_free_in(x, *e)) return e;
  auto sv = [&](const Value& w) { return subst(w, x, v); };
  return std::visit(
      overloaded{
          [&](const node::Val& n) { return val(sv(n.v)); },
          [&](const node::App& n) { return app(sv(n.fn), sv(n.arg)); },
          [&](const node::Let& n) {
            ExprPtr rhs = subst(n.rhs, x, v);
            if (n.x == x || !is_free_in(x, *n.body)) return let(n.x, rhs, n.body);
            auto [y, body] = avoid_capture(
                n.x, n.body, x, free_vars(v), all_names(*n.body),
                [](const ExprPtr& b, const Identifier& from, const Identifier& to) {
                  return subst(b, from, var(to));
                });
            return let(y, rhs, subst(body, x, v));
          },
          [&](const node::Op& n) {
            std::vector<Value> args;
            args.reserve(n.args.size());
            for (const auto& a : n.args) args.push_back(sv(a));
            return op(n.op, std::move(args));
          },
          [&](const node::If& n) {
            return if_(sv(n.cond), subst(n.then_branch, x, v),
                       subst(n.else_branch, x, v));
          },
          [&](const node::Sample&) { return e; },
          [&](const node::Factor& n) { return factor(sv(n.arg)); },
          [&](const node::Dist& n) {
            std::vector<Value> args;
            args.reserve(n.args.size());
            for (const auto& a : n.args) args.push_back(sv(a));
            return dist(n.dist, std::move(args));
          },
      },
      e->node);
}

namespace {

struct ClosedSubst {
  const Identifier& x;
  const Value& v;

  // nullopt when unchanged.
  std::optional<Value> value(const Value& w) const {
    if (const auto* y = std::get_if<Var>(&w)) {
      if (y->name == x) return v;
      return std::nullopt;
    }
    if (const auto* l = std::get_if<Lam>(&w)) {
      if (l->param == x) return std::nullopt;
      ExprPtr b = expr(l->body);
      if (b == l->body) return std::nullopt;
      return Lam{l->param, std::move(b)};
    }
    return std::nullopt;
  }

  bool values(const std::vector<Value>& in, std::vector<Value>& out) const {
    bool changed = false;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (auto nv = value(in[i])) {
        if (!changed) out = in;
        out[i] = std::move(*nv);
        changed = true;
      }
    }
    return changed;
  }

  ExprPtr expr(const ExprPtr& e) const {
    return std::visit(
        overloaded{
            [&](const node::Val& n) -> ExprPtr {
              if (auto nv = value(n.v)) return val(std::move(*nv));
              return e;
            },
            [&](const node::App& n) -> ExprPtr {
              auto f = value(n.fn);
              auto a = value(n.arg);
              if (!f && !a) return e;
              return app(f ? std::move(*f) : n.fn, a ? std::move(*a) : n.arg);
            },
            [&](const node::Let& n) -> ExprPtr {
              ExprPtr rhs = expr(n.rhs);
              ExprPtr body = n.x == x ? n.body : expr(n.body);
              if (rhs == n.rhs && body == n.body) return e;
              return let(n.x, std::move(rhs), std::move(body));
            },
            [&](const node::Op& n) -> ExprPtr {
              std::vector<Value> args;
              if (!values(n.args, args)) return e;
              return std::make_shared<const Expr>(
                  Expr{node::Op{n.op, std::move(args)}});
            },
            [&](const node::If& n) -> ExprPtr {
              auto c = value(n.cond);
              ExprPtr t = expr(n.then_branch);
              ExprPtr f = expr(n.else_branch);
              if (!c && t == n.then_branch && f == n.else_branch) return e;
              return if_(c ? std::move(*c) : n.cond, std::move(t), std::move(f));
            },
            [&](const node::Sample&) -> ExprPtr { return e; },
            [&](const node::Factor& n) -> ExprPtr {
              if (auto nv = value(n.arg)) return factor(std::move(*nv));
              return e;
            },
            [&](const node::Dist& n) -> ExprPtr {
              std::vector<Value> args;
              if (!values(n.args, args)) return e;
              return std::make_shared<const Expr>(
                  Expr{node::Dist{n.dist, std::move(args)}});
            },
        },
        e->node);
  }
};

IdentSet all_dnames(const DExpr& e) {
  IdentSet out;
  std::function<void(const DExpr&)> walk = [&](const DExpr& d) {
    std::visit(overloaded{
                   [&](const dnode::Var& x) { out.insert(x.name); },
                   [&](const dnode::Real&) {},
                   [&](const dnode::Lam& l) {
                     out.insert(l.param);
                     walk(*l.body);
                   },
                   [&](const dnode::Let& n) {
                     out.insert(n.x);
                     walk(*n.rhs);
                     walk(*n.body);
                   },
                   [&](const dnode::App& n) {
                     walk(*n.fn);
                     walk(*n.arg);
                   },
                   [&](const dnode::Op& n) {
                     for (const auto& a : n.args) walk(*a);
                   },
                   [&](const dnode::If& n) {
                     walk(*n.cond);
                     walk(*n.then_branch);
                     walk(*n.else_branch);
                   },
                   [&](const dnode::Sample&) {},
                   [&](const dnode::Factor& n) { walk(*n.arg); },
               },
               d.node);
  };
  walk(e);
  return out;
}

}  // namespace

ExprPtr subst_closed(const ExprPtr& e, const Identifier& x, const Value& v) {
  return ClosedSubst{x, v}.expr(e);
}

DExprPtr subst(const DExprPtr& e, const Identifier& x, const DExprPtr& v) {
  if (!free_vars(*e).count(x)) return e;
  const IdentSet fv_v = free_vars(*v);
  auto rename = [](const DExprPtr& b, const Identifier& from, const Identifier& to) {
    return subst(b, from, direct::var(to));
  };
  auto under_binder = [&](const Identifier& y, const DExprPtr& body)
      -> std::pair<Identifier, DExprPtr> {
    if (y == x) return {y, body};
    auto [y2, b2] = avoid_capture(y, body, x, fv_v, all_dnames(*body), rename);
    return {y2, subst(b2, x, v)};
  };
  return std::visit(
      overloaded{
          [&](const dnode::Var& n) -> DExprPtr { return n.name == x ? v : e; },
          [&](const dnode::Real&) -> DExprPtr { return e; },
          [&](const dnode::Lam& l) -> DExprPtr {
            auto [p, b] = under_binder(l.param, l.body);
            return direct::lam(p, b);
          },
          [&](const dnode::Let& n) -> DExprPtr {
            auto [y, b] = under_binder(n.x, n.body);
            return direct::let(y, subst(n.rhs, x, v), b);
          },
          [&](const dnode::App& n) -> DExprPtr {
            return direct::app(subst(n.fn, x, v), subst(n.arg, x, v));
          },
          [&](const dnode::Op& n) -> DExprPtr {
            std::vector<DExprPtr> args;
            for (const auto& a : n.args) args.push_back(subst(a, x, v));
            return direct::op(n.op, std::move(args));
          },
          [&](const dnode::If& n) -> DExprPtr {
            return direct::if_(subst(n.cond, x, v), subst(n.then_branch, x, v),
                               subst(n.else_branch, x, v));
          },
          [&](const dnode::Sample&) -> DExprPtr { return e; },
          [&](const dnode::Factor& n) -> DExprPtr {
            return direct::factor(subst(n.arg, x, v));
          },
      },
      e->node);
}

// ---------------------------------------------------------------------------
// de Bruijn form

namespace {

struct DeBruijn {
  std::vector<Identifier> env;
  std::string out;

  void real(double r) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", r);
    out += buf;
  }
  void name(const Identifier& x) {
    for (std::size_t i = env.size(); i-- > 0;) {
      if (env[i] == x) {
        out += '#';
        out += std::to_string(env.size() - 1 - i);
        return;
      }
    }
    out += x;
  }
  void value(const Value& v) {
    std::visit(overloaded{
                   [&](const Var& x) { name(x.name); },
                   [&](const Real& r) { real(r.r); },
                   [&](const Lam& l) {
                     out += "(lam ";
                     env.push_back(l.param);
                     expr(*l.body);
                     env.pop_back();
                     out += ')';
                   },
               },
               v);
  }
  void args(const std::vector<Value>& as) {
    for (const auto& a : as) {
      out += ' ';
      value(a);
    }
  }
  void expr(const Expr& e) {
    std::visit(overloaded{
                   [&](const node::Val& n) { value(n.v); },
                   [&](const node::App& n) {
                     out += "(app ";
                     value(n.fn);
                     out += ' ';
                     value(n.arg);
                     out += ')';
                   },
                   [&](const node::Let& n) {
                     out += "(let ";
                     expr(*n.rhs);
                     out += ' ';
                     env.push_back(n.x);
                     expr(*n.body);
                     env.pop_back();
                     out += ')';
                   },
                   [&](const node::Op& n) {
                     out += '(';
                     out += symbol(n.op);
                     args(n.args);
                     out += ')';
                   },
                   [&](const node::If& n) {
                     out += "(if ";
                     value(n.cond);
                     out += ' ';
                     expr(*n.then_branch);
                     out += ' ';
                     expr(*n.else_branch);
                     out += ')';
                   },
                   [&](const node::Sample&) { out += "(sample)"; },
                   [&](const node::Factor& n) {
                     out += "(factor ";
                     value(n.arg);
                     out += ')';
                   },
                   [&](const node::Dist& n) {
                     out += '(';
                     out += symbol(n.dist);
                     args(n.args);
                     out += ')';
                   },
               },
               e.node);
  }
};

}  // namespace

std::string de_bruijn(const Expr& e) {
  DeBruijn d;
  d.expr(e);
  return std::move(d.out);
}
std::string de_bruijn(const Value& v) {
  DeBruijn d;
  d.value(v);
  return std::move(d.out);
}
bool alpha_equal(const Expr& a, const Expr& b) { return de_bruijn(a) == de_bruijn(b); }
bool alpha_equal(const Value& a, const Value& b) {
  return de_bruijn(a) == de_bruijn(b);
}

// ---------------------------------------------------------------------------
// Focus navigation

namespace {

const Value* value_slot(const Expr& e, int slot) {
  return std::visit(
      overloaded{
          [&](const node::Val& n) -> const Value* { return slot == 0 ? &n.v : nullptr; },
          [&](const node::App& n) -> const Value* {
            return slot == 0 ? &n.fn : slot == 1 ? &n.arg : nullptr;
          },
          [&](const node::Let&) -> const Value* { return nullptr; },
          [&](const node::Op& n) -> const Value* {
            return slot >= 0 && slot < static_cast<int>(n.args.size())
                       ? &n.args[static_cast<std::size_t>(slot)]
                       : nullptr;
          },
          [&](const node::If& n) -> const Value* { return slot == 0 ? &n.cond : nullptr; },
          [&](const node::Sample&) -> const Value* { return nullptr; },
          [&](const node::Factor& n) -> const Value* {
            return slot == 0 ? &n.arg : nullptr;
          },
          [&](const node::Dist& n) -> const Value* {
            return slot >= 0 && slot < static_cast<int>(n.args.size())
                       ? &n.args[static_cast<std::size_t>(slot)]
                       : nullptr;
          },
      },
      e.node);
}

ExprPtr child(const Expr& e, int slot) {
  if (const auto* v = value_slot(e, slot)) {
    if (const auto* l = as_lam(*v)) return l->body;
    return nullptr;
  }
  if (const auto* n = get_if<node::Let>(e)) {
    return slot == 0 ? n->rhs : slot == 1 ? n->body : nullptr;
  }
  if (const auto* n = get_if<node::If>(e)) {
    return slot == 1 ? n->then_branch : slot == 2 ? n->else_branch : nullptr;
  }
  return nullptr;
}

std::optional<Binder> binder_for(const Expr& e, int slot) {
  if (const auto* v = value_slot(e, slot)) {
    if (const auto* l = as_lam(*v)) return Binder{l->param, nullptr};
    return std::nullopt;
  }
  if (const auto* n = get_if<node::Let>(e); n && slot == 1) {
    return Binder{n->x, n->rhs};
  }
  return std::nullopt;
}

ExprPtr with_child(const Expr& e, int slot, ExprPtr c) {
  auto with_lam = [&](const Value& v) -> Value {
    return Lam{std::get<Lam>(v).param, c};
  };
  return std::visit(
      overloaded{
          [&](const node::Val& n) { return val(with_lam(n.v)); },
          [&](const node::App& n) {
            return slot == 0 ? app(with_lam(n.fn), n.arg) : app(n.fn, with_lam(n.arg));
          },
          [&](const node::Let& n) {
            return slot == 0 ? let(n.x, c, n.body) : let(n.x, n.rhs, c);
          },
          [&](const node::Op& n) {
            auto args = n.args;
            args[static_cast<std::size_t>(slot)] = with_lam(args[static_cast<std::size_t>(slot)]);
            return op(n.op, std::move(args));
          },
          [&](const node::If& n) {
            if (slot == 0) return if_(with_lam(n.cond), n.then_branch, n.else_branch);
            if (slot == 1) return if_(n.cond, c, n.else_branch);
            return if_(n.cond, n.then_branch, c);
          },
          [&](const node::Sample&) -> ExprPtr { throw std::logic_error("no child"); },
          [&](const node::Factor& n) { return factor(with_lam(n.arg)); },
          [&](const node::Dist& n) {
            auto args = n.args;
            args[static_cast<std::size_t>(slot)] = with_lam(args[static_cast<std::size_t>(slot)]);
            return dist(n.dist, std::move(args));
          },
      },
      e.node);
}

int slot_limit(const Expr& e) {
  return std::visit(overloaded{
                        [](const node::Val&) { return 1; },
                        [](const node::App&) { return 2; },
                        [](const node::Let&) { return 2; },
                        [](const node::Op& n) { return static_cast<int>(n.args.size()); },
                        [](const node::If&) { return 3; },
                        [](const node::Sample&) { return 0; },
                        [](const node::Factor&) { return 1; },
                        [](const node::Dist& n) { return static_cast<int>(n.args.size()); },
                    },
                    e.node);
}

}  // namespace

ExprPtr subexpr(const ExprPtr& root, const Focus& f) {
  ExprPtr cur = root;
  for (int slot : f) {
    if (!cur) return nullptr;
    cur = child(*cur, slot);
  }
  return cur;
}

ExprPtr replace_at(const ExprPtr& root, const Focus& f, ExprPtr replacement) {
  std::function<ExprPtr(const ExprPtr&, std::size_t)> go =
      [&](const ExprPtr& cur, std::size_t i) -> ExprPtr {
    if (i == f.size()) return replacement;
    ExprPtr c = child(*cur, f[i]);
    if (!c) throw std::out_of_range("invalid focus");
    return with_child(*cur, f[i], go(c, i + 1));
  };
  return go(root, 0);
}

std::vector<Focus> all_foci(const ExprPtr& root) {
  std::vector<Focus> out;
  Focus cur;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    out.push_back(cur);
    const int n = slot_limit(e);
    for (int s = 0; s < n; ++s) {
      if (ExprPtr c = child(e, s)) {
        cur.push_back(s);
        walk(*c);
        cur.pop_back();
      }
    }
  };
  walk(*root);
  return out;
}

std::vector<Binder> binders_along(const ExprPtr& root, const Focus& f) {
  std::vector<Binder> out;
  ExprPtr cur = root;
  for (int slot : f) {
    if (!cur) break;
    if (auto b = binder_for(*cur, slot)) out.push_back(std::move(*b));
    cur = child(*cur, slot);
  }
  return out;
}

std::size_t size(const Expr& e) {
  std::size_t n = 1;
  const int slots = slot_limit(e);
  for (int s = 0; s < slots; ++s) {
    if (ExprPtr c = child(e, s)) n += size(*c);
  }
  return n;
}

}  // namespace entropic
