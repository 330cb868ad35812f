#include "entropic/rewrite.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "entropic/ops.hpp"
#include "entropic/parse.hpp"
#include "overloaded.hpp"

namespace entropic {

std::string_view to_string(Direction d) { return d == Direction::Forward ? "fwd" : "rev"; }

std::optional<Direction> direction_from(std::string_view s) {
  if (s == "fwd" || s == "forward") return Direction::Forward;
  if (s == "rev" || s == "reverse") return Direction::Reverse;
  return std::nullopt;
}

namespace {

[[noreturn]] void na(const std::string& why) { throw NotApplicable(why); }

std::string focus_text(const Focus& f) {
  std::string s = "[";
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(f[i]);
  }
  return s + "]";
}

Focus extend(Focus f, std::initializer_list<int> more) {
  f.insert(f.end(), more);
  return f;
}

const node::Let* as_let(const ExprPtr& e) { return get_if<node::Let>(*e); }

const node::Op* as_op(const ExprPtr& e, OpName o) {
  const auto* n = get_if<node::Op>(*e);
  return n && n->op == o ? n : nullptr;
}

const Var* val_var(const ExprPtr& e) {
  const auto* v = get_if<node::Val>(*e);
  return v ? as_var(v->v) : nullptr;
}

bool is_var(const Value& v, const Identifier& x) {
  const auto* p = as_var(v);
  return p && p->name == x;
}

bool mentions(const Value& v, const Identifier& x) { return free_vars(v).count(x) > 0; }
bool mentions(const ExprPtr& e, const Identifier& x) { return is_free_in(x, *e); }

std::optional<double> positive_literal(const Value& v) {
  const double* r = as_real(v);
  if (r && std::isfinite(*r) && *r > 0) return *r;
  return std::nullopt;
}

Identifier new_name(RuleContext& ctx, std::string_view hint) {
  Identifier n = fresh(ctx.avoid, hint);
  ctx.avoid.insert(n);
  return n;
}

// The caller's name if given (it must not already occur), else a fresh one.
Identifier chosen_name(RuleContext& ctx, std::string_view hint) {
  if (!ctx.args.name) return new_name(ctx, hint);
  const Identifier& n = *ctx.args.name;
  if (!is_identifier(n)) na("'" + n + "' is not an identifier");
  if (ctx.avoid.count(n)) na("name '" + n + "' already occurs in the program");
  ctx.avoid.insert(n);
  return n;
}

// Literal > 0, or a variable whose nearest binder is a normalpdf or exp
// application. Both can underflow to 0, but then both sides of the rules
// using this get stuck at the same factor.
bool known_positive(const Value& v, const RuleContext& ctx) {
  if (positive_literal(v)) return true;
  const auto* x = as_var(v);
  if (!x) return false;
  for (auto it = ctx.scope.rbegin(); it != ctx.scope.rend(); ++it) {
    if (it->name != x->name) continue;
    if (!it->rhs) return false;
    const auto* o = get_if<node::Op>(*it->rhs);
    return o && (o->op == OpName::NormalPdf || o->op == OpName::Exp);
  }
  return false;
}

std::size_t count_free(const Expr& e, const Identifier& x);

std::size_t count_free(const Value& v, const Identifier& x) {
  return std::visit(overloaded{
                        [&](const Var& w) -> std::size_t { return w.name == x ? 1 : 0; },
                        [&](const Lam& l) -> std::size_t {
                          return l.param == x ? 0 : count_free(*l.body, x);
                        },
                        [](const Real&) -> std::size_t { return 0; },
                    },
                    v);
}

std::size_t count_free(const Expr& e, const Identifier& x) {
  auto sum = [&](const std::vector<Value>& vs) {
    std::size_t n = 0;
    for (const auto& v : vs) n += count_free(v, x);
    return n;
  };
  return std::visit(
      overloaded{
          [&](const node::Val& n) { return count_free(n.v, x); },
          [&](const node::App& n) { return count_free(n.fn, x) + count_free(n.arg, x); },
          [&](const node::Let& n) {
            return count_free(*n.rhs, x) + (n.x == x ? 0 : count_free(*n.body, x));
          },
          [&](const node::Op& n) { return sum(n.args); },
          [&](const node::If& n) {
            return count_free(n.cond, x) + count_free(*n.then_branch, x) +
                   count_free(*n.else_branch, x);
          },
          [](const node::Sample&) -> std::size_t { return 0; },
          [&](const node::Factor& n) { return count_free(n.arg, x); },
          [&](const node::Dist& n) { return sum(n.args); },
      },
      e.node);
}

// Replaces occurrences of v by x wherever v's free variables mean the
// same thing as at the top. x must not occur in e.
class Abstractor {
 public:
  Abstractor(const Value& v, Identifier x)
      : key_(de_bruijn(v)), index_(v.index()), fv_(free_vars(v)), x_(std::move(x)) {}

  ExprPtr expr(const ExprPtr& e) {
    return std::visit(
        overloaded{
            [&](const node::Val& n) { return val(value(n.v)); },
            [&](const node::App& n) { return app(value(n.fn), value(n.arg)); },
            [&](const node::Let& n) {
              ExprPtr rhs = expr(n.rhs);
              bind(n.x);
              ExprPtr body = expr(n.body);
              unbind(n.x);
              return let(n.x, rhs, body);
            },
            [&](const node::Op& n) { return op(n.op, values(n.args)); },
            [&](const node::If& n) {
              return if_(value(n.cond), expr(n.then_branch), expr(n.else_branch));
            },
            [&](const node::Sample&) { return e; },
            [&](const node::Factor& n) { return factor(value(n.arg)); },
            [&](const node::Dist& n) { return dist(n.dist, values(n.args)); },
        },
        e->node);
  }

 private:
  Value value(const Value& w) {
    if (w.index() == index_ && !shadowed() && de_bruijn(w) == key_) return var(x_);
    if (const auto* l = as_lam(w)) {
      bind(l->param);
      ExprPtr b = expr(l->body);
      unbind(l->param);
      return lam(l->param, b);
    }
    return w;
  }
  std::vector<Value> values(const std::vector<Value>& ws) {
    std::vector<Value> out;
    out.reserve(ws.size());
    for (const auto& w : ws) out.push_back(value(w));
    return out;
  }
  bool shadowed() const {
    for (const auto& b : bound_) {
      if (fv_.count(b)) return true;
    }
    return false;
  }
  void bind(const Identifier& x) { bound_.push_back(x); }
  void unbind(const Identifier&) { bound_.pop_back(); }

  std::string key_;
  std::size_t index_;
  IdentSet fv_;
  Identifier x_;
  std::vector<Identifier> bound_;
};

ExprPtr abstract(const ExprPtr& e, const Value& v, const Identifier& x) {
  return Abstractor(v, x).expr(e);
}

// ---------------------------------------------------------------------------
// Rules. Each receives the subexpression at the focus.

ExprPtr rule_beta_v(const ExprPtr& e, RuleContext& ctx) {
  if (ctx.dir == Direction::Forward) {
    const auto* a = get_if<node::App>(*e);
    if (!a) na("beta_v: focus is not an application");
    const auto* l = as_lam(a->fn);
    if (!l) na("beta_v: operator is not a lambda");
    return subst(l->body, l->param, a->arg);
  }
  if (!ctx.args.value) na("beta_v reverse: needs the value to abstract");
  const Identifier x = chosen_name(ctx, "x");
  return app(lam(x, abstract(e, *ctx.args.value, x)), *ctx.args.value);
}

ExprPtr rule_let_v(const ExprPtr& e, RuleContext& ctx) {
  if (ctx.dir == Direction::Forward) {
    const auto* l = as_let(e);
    if (!l) na("let_v: focus is not a let");
    const auto* v = get_if<node::Val>(*l->rhs);
    if (!v) na("let_v: right-hand side of '" + l->x + "' is not a value");
    return subst(l->body, l->x, v->v);
  }
  if (!ctx.args.value) na("let_v reverse: needs the value to abstract");
  const Identifier x = chosen_name(ctx, "x");
  return let(x, val(*ctx.args.value), abstract(e, *ctx.args.value, x));
}

ExprPtr rule_let_id(const ExprPtr& e, RuleContext& ctx) {
  if (ctx.dir == Direction::Forward) {
    const auto* l = as_let(e);
    if (!l) na("let_id: focus is not a let");
    const auto* b = val_var(l->body);
    if (!b || b->name != l->x) na("let_id: body is not the bound variable");
    return l->rhs;
  }
  const Identifier x = chosen_name(ctx, "x");
  return let(x, e, val(var(x)));
}

ExprPtr rule_delta_fold(const ExprPtr& e, RuleContext&) {
  const auto* o = get_if<node::Op>(*e);
  if (!o) na("delta_fold: focus is not an operation");
  for (const auto& a : o->args) {
    if (!is_closed(a)) na("delta_fold: operand " + print(a) + " is not closed");
  }
  const auto r = delta(o->op, o->args);
  if (!r) na("delta_fold: " + std::string(symbol(o->op)) + " is undefined on these operands");
  return val(real(*r));
}

ExprPtr rule_assoc(const ExprPtr& e, RuleContext& ctx) {
  const auto* outer = as_let(e);
  if (!outer) na("assoc: focus is not a let");
  if (ctx.dir == Direction::Forward) {
    const auto* inner = as_let(outer->rhs);
    if (!inner) na("assoc: right-hand side of '" + outer->x + "' is not a let");
    if (mentions(outer->body, inner->x)) {
      na("assoc: '" + inner->x + "' is free in the outer body");
    }
    return let(inner->x, inner->rhs, let(outer->x, inner->body, outer->body));
  }
  const auto* inner = as_let(outer->body);
  if (!inner) na("assoc: body of '" + outer->x + "' is not a let");
  if (mentions(inner->body, outer->x)) {
    na("assoc: '" + outer->x + "' is free in the innermost body");
  }
  return let(inner->x, let(outer->x, outer->rhs, inner->rhs), inner->body);
}

ExprPtr rule_commut(const ExprPtr& e, RuleContext&) {
  const auto* l1 = as_let(e);
  if (!l1) na("commut: focus is not a let");
  const auto* l2 = as_let(l1->body);
  if (!l2) na("commut: body of '" + l1->x + "' is not a let");
  if (l1->x == l2->x) na("commut: both binders are named '" + l1->x + "'");
  if (mentions(l2->rhs, l1->x)) na("commut: '" + l1->x + "' is free in the second right-hand side");
  if (mentions(l1->rhs, l2->x)) na("commut: '" + l2->x + "' is free in the first right-hand side");
  return let(l2->x, l2->rhs, let(l1->x, l1->rhs, l2->body));
}

// Single-evaluation contexts in L are let spines: the hole sits under a
// sequence of let right-hand sides and let bodies.
ExprPtr rule_let_s(const ExprPtr& e, RuleContext& ctx) {
  if (ctx.dir == Direction::Forward) {
    const auto* l = as_let(e);
    if (!l) na("let_S: focus is not a let");
    if (mentions(l->rhs, l->x)) na("let_S: '" + l->x + "' is free in its own right-hand side");
    if (count_free(*l->body, l->x) != 1) {
      na("let_S: '" + l->x + "' must occur exactly once in the body");
    }
    Focus hole;
    IdentSet bound;
    ExprPtr cur = l->body;
    for (;;) {
      if (const auto* v = val_var(cur); v && v->name == l->x) break;
      const auto* s = as_let(cur);
      if (!s) na("let_S: the occurrence of '" + l->x + "' is not in a single-evaluation position");
      if (count_free(*s->rhs, l->x) > 0) {
        hole.push_back(0);
        cur = s->rhs;
      } else {
        bound.insert(s->x);
        hole.push_back(1);
        cur = s->body;
      }
    }
    for (const auto& x : free_vars(l->rhs)) {
      if (bound.count(x)) na("let_S: the context would capture '" + x + "'");
    }
    return replace_at(l->body, hole, l->rhs);
  }
  if (!ctx.args.hole) na("let_S reverse: needs the hole position");
  const Focus& hole = *ctx.args.hole;
  IdentSet bound;
  ExprPtr cur = e;
  for (int slot : hole) {
    const auto* s = as_let(cur);
    if (!s || (slot != 0 && slot != 1)) {
      na("let_S reverse: hole " + focus_text(hole) + " is not in a single-evaluation position");
    }
    if (slot == 1) bound.insert(s->x);
    cur = slot == 0 ? s->rhs : s->body;
  }
  for (const auto& x : free_vars(cur)) {
    if (bound.count(x)) na("let_S reverse: '" + x + "' is bound by the context");
  }
  const Identifier x = chosen_name(ctx, "x");
  return let(x, cur, replace_at(e, hole, val(var(x))));
}

ExprPtr rule_factor_merge(const ExprPtr& e, RuleContext& ctx) {
  auto need_positive = [&](const Value& v) {
    if (!known_positive(v, ctx)) na("factor_merge: " + print(v) + " is not known to be positive");
  };
  const auto* l = as_let(e);
  if (!l) na("factor_merge: focus is not a let");
  if (ctx.dir == Direction::Forward) {
    const auto* fx = get_if<node::Factor>(*l->rhs);
    const auto* fy = get_if<node::Factor>(*l->body);
    if (!fx || !fy) na("factor_merge: expected (let (a (factor x)) (factor y))");
    if (mentions(fy->arg, l->x)) na("factor_merge: second factor mentions '" + l->x + "'");
    need_positive(fx->arg);
    need_positive(fy->arg);
    const Identifier c = chosen_name(ctx, "c");
    return let(c, op(OpName::Mul, {fx->arg, fy->arg}), let(l->x, factor(var(c)), val(fy->arg)));
  }
  const auto* mul = as_op(l->rhs, OpName::Mul);
  const auto* inner = as_let(l->body);
  if (!mul || !inner) na("factor_merge reverse: expected (let (c (* x y)) (let (a (factor c)) y))");
  const auto* fc = get_if<node::Factor>(*inner->rhs);
  const auto* yv = get_if<node::Val>(*inner->body);
  if (!fc || !is_var(fc->arg, l->x) || !yv) {
    na("factor_merge reverse: expected (let (c (* x y)) (let (a (factor c)) y))");
  }
  const Value& x = mul->args[0];
  const Value& y = mul->args[1];
  if (!equal(y, yv->v)) na("factor_merge reverse: result is not the second factor");
  if (mentions(y, l->x) || mentions(y, inner->x)) {
    na("factor_merge reverse: " + print(y) + " would be captured");
  }
  need_positive(x);
  need_positive(y);
  return let(inner->x, factor(x), factor(y));
}

ExprPtr rule_normalpdf_shift(const ExprPtr& e, RuleContext& ctx) {
  const auto* l = as_let(e);
  if (!l) na("normalpdf_shift: focus is not a let");
  if (ctx.dir == Direction::Forward) {
    const auto* sub = as_op(l->rhs, OpName::Sub);
    const auto* inner = as_let(l->body);
    const auto* pdf = inner ? as_op(inner->rhs, OpName::NormalPdf) : nullptr;
    if (!sub || !pdf) {
      na("normalpdf_shift: expected (let (r (- x y)) (let (p (normalpdf r 0 s)) body))");
    }
    const double* zero = as_real(pdf->args[1]);
    if (!is_var(pdf->args[0], l->x) || !zero || *zero != 0.0) {
      na("normalpdf_shift: density is not normalpdf(r; 0, s)");
    }
    if (mentions(pdf->args[2], l->x)) na("normalpdf_shift: scale mentions '" + l->x + "'");
    if (l->x == inner->x || mentions(inner->body, l->x)) {
      na("normalpdf_shift: '" + l->x + "' is used after the density");
    }
    return let(inner->x, op(OpName::NormalPdf, {sub->args[1], sub->args[0], pdf->args[2]}),
               inner->body);
  }
  const auto* pdf = as_op(l->rhs, OpName::NormalPdf);
  if (!pdf) na("normalpdf_shift reverse: right-hand side is not normalpdf");
  const Identifier r = chosen_name(ctx, "r");
  return let(r, op(OpName::Sub, {pdf->args[1], pdf->args[0]}),
             let(l->x, op(OpName::NormalPdf, {var(r), real(0), pdf->args[2]}), l->body));
}

ExprPtr rule_add_commut(const ExprPtr& e, RuleContext&) {
  const auto* a = as_op(e, OpName::Add);
  if (!a) na("add_commut: focus is not an addition");
  return op(OpName::Add, {a->args[1], a->args[0]});
}

// (a + b) - c  =  b - (c - a)
ExprPtr rule_sub_reassoc(const ExprPtr& e, RuleContext& ctx) {
  const auto* l = as_let(e);
  if (!l) na("sub_reassoc: focus is not a let");
  const auto* inner = as_let(l->body);
  if (!inner) na("sub_reassoc: body of '" + l->x + "' is not a let");
  const Identifier& s = l->x;
  const Identifier& r = inner->x;
  if (s == r) na("sub_reassoc: both binders are named '" + s + "'");
  if (mentions(inner->body, s)) na("sub_reassoc: '" + s + "' is used after the subtraction");

  auto pick = [&](const Value& must_avoid, const ExprPtr& body) {
    Identifier n = ctx.args.name ? chosen_name(ctx, s)
                   : mentions(must_avoid, s) ? new_name(ctx, s)
                                             : s;
    if (mentions(must_avoid, n) || mentions(body, n) || n == r) {
      na("sub_reassoc: name '" + n + "' would capture");
    }
    return n;
  };

  if (ctx.dir == Direction::Forward) {
    const auto* add = as_op(l->rhs, OpName::Add);
    const auto* sub = as_op(inner->rhs, OpName::Sub);
    if (!add || !sub || !is_var(sub->args[0], s)) {
      na("sub_reassoc: expected (let (s (+ a b)) (let (r (- s c)) body))");
    }
    const Value& a = add->args[0];
    const Value& b = add->args[1];
    const Value& c = sub->args[1];
    if (mentions(c, s)) na("sub_reassoc: subtrahend mentions '" + s + "'");
    const Identifier n = pick(b, inner->body);
    return let(n, op(OpName::Sub, {c, a}), let(r, op(OpName::Sub, {b, var(n)}), inner->body));
  }
  const auto* first = as_op(l->rhs, OpName::Sub);
  const auto* second = as_op(inner->rhs, OpName::Sub);
  if (!first || !second || !is_var(second->args[1], s)) {
    na("sub_reassoc reverse: expected (let (s (- c a)) (let (r (- b s)) body))");
  }
  const Value& c = first->args[0];
  const Value& a = first->args[1];
  const Value& b = second->args[0];
  if (mentions(b, s)) na("sub_reassoc reverse: minuend mentions '" + s + "'");
  const Identifier n = pick(c, inner->body);
  return let(n, op(OpName::Add, {a, b}), let(r, op(OpName::Sub, {var(n), c}), inner->body));
}

// let m = normal(m0, s0) in let p = normalpdf(d; m, s) in let z = factor p in m
//   => let m = normal(M, S) in let p = normalpdf(d; m0, sqrt(s0^2 + s^2)) in
//      let z = factor p in m
// with M = a*m0 + b*d computed by residual lets ahead of the prior.
ExprPtr rule_conjugacy(const ExprPtr& e, RuleContext& ctx) {
  const char* shape =
      "conjugacy_normal: expected (let (m normal(m0, s0)) (let (p (normalpdf d m s)) "
      "(let (z (factor p)) m)))";
  const auto* lm = as_let(e);
  if (!lm) na(shape);
  const auto* prior = as_let(lm->rhs);
  if (!prior || !get_if<node::Sample>(*prior->rhs)) na(shape);
  const auto* inv = as_op(prior->body, OpName::NormalInvCdf);
  if (!inv || !is_var(inv->args[0], prior->x)) na(shape);
  const Identifier& u = prior->x;
  const Value& m0 = inv->args[1];
  const Value& s0v = inv->args[2];
  if (mentions(m0, u) || mentions(s0v, u)) na("conjugacy_normal: prior parameters mention '" + u + "'");

  const Identifier& m = lm->x;
  const auto* lp = as_let(lm->body);
  const auto* pdf = lp ? as_op(lp->rhs, OpName::NormalPdf) : nullptr;
  if (!pdf || !is_var(pdf->args[1], m)) na(shape);
  const Identifier& p = lp->x;
  const Value& d = pdf->args[0];
  const Value& sv = pdf->args[2];
  const auto* lz = as_let(lp->body);
  const auto* fz = lz ? get_if<node::Factor>(*lz->rhs) : nullptr;
  const auto* result = lz ? val_var(lz->body) : nullptr;
  if (!fz || !is_var(fz->arg, p) || !result || result->name != m) na(shape);
  if (p == m || lz->x == m) na("conjugacy_normal: binders shadow '" + m + "'");
  if (mentions(d, m)) na("conjugacy_normal: observation mentions '" + m + "'");
  if (mentions(m0, m)) na("conjugacy_normal: prior mean would be captured by '" + m + "'");

  const auto s0 = positive_literal(s0v);
  const auto s = positive_literal(sv);
  if (!s0 || !s) na("conjugacy_normal: scales must be positive literals");

  const double prec0 = 1.0 / (*s0 * *s0);
  const double prec = 1.0 / (*s * *s);
  const double a = prec0 / (prec0 + prec);
  const double b = prec / (prec0 + prec);
  const double post_scale = 1.0 / std::sqrt(prec0 + prec);
  const double marginal_scale = std::sqrt(*s0 * *s0 + *s * *s);

  std::vector<std::pair<Identifier, ExprPtr>> lets;
  auto term = [&](double k, const Value& v, std::string_view hint) -> Value {
    if (const double* r = as_real(v)) return real(k * *r);
    Identifier t = new_name(ctx, hint);
    lets.emplace_back(t, op(OpName::Mul, {real(k), v}));
    return var(t);
  };
  auto is_zero = [](const Value& v) {
    const double* r = as_real(v);
    return r && *r == 0.0;
  };

  Value mean;
  if (is_zero(m0) && is_zero(d)) {
    mean = real(0);
  } else if (is_zero(m0)) {
    mean = term(b, d, "mpost");
  } else if (is_zero(d)) {
    mean = term(a, m0, "mpost");
  } else {
    const Value ta = term(a, m0, "t");
    const Value tb = term(b, d, "t");
    if (as_real(ta) && as_real(tb)) {
      mean = real(*as_real(ta) + *as_real(tb));
    } else {
      const Identifier n = new_name(ctx, "mpost");
      lets.emplace_back(n, op(OpName::Add, {ta, tb}));
      mean = var(n);
    }
  }

  ExprPtr out =
      let(m, normal_by_invcdf(mean, real(post_scale), u),
          let(p, op(OpName::NormalPdf, {d, m0, real(marginal_scale)}),
              let(lz->x, factor(var(p)), val(var(m)))));
  for (auto it = lets.rbegin(); it != lets.rend(); ++it) out = let(it->first, it->second, out);
  return out;
}

ExprPtr rule_dist_invcdf(const ExprPtr& e, RuleContext& ctx) {
  if (ctx.dir == Direction::Forward) {
    const auto* d = get_if<node::Dist>(*e);
    if (!d || d->dist != DistName::Normal) na("dist_invcdf: focus is not a normal form");
    const Identifier u = chosen_name(ctx, "u");
    return let(u, sample(), op(OpName::NormalInvCdf, {var(u), d->args[0], d->args[1]}));
  }
  const auto* l = as_let(e);
  const auto* inv = l ? as_op(l->body, OpName::NormalInvCdf) : nullptr;
  if (!l || !get_if<node::Sample>(*l->rhs) || !inv || !is_var(inv->args[0], l->x)) {
    na("dist_invcdf reverse: expected (let (u (sample)) (normalinvcdf u m s))");
  }
  if (mentions(inv->args[1], l->x) || mentions(inv->args[2], l->x)) {
    na("dist_invcdf reverse: parameters mention '" + l->x + "'");
  }
  return dist(DistName::Normal, {inv->args[1], inv->args[2]});
}

std::vector<RewriteRule> make_rules() {
  return {
      {"beta_v", true, "(app (lam x e) v) = e[v/x]", rule_beta_v},
      {"let_v", true, "(let (x v) e) = e[v/x]", rule_let_v},
      {"let_id", true, "(let (x e) x) = e", rule_let_id},
      {"delta_fold", false, "(op v ...) = v' when the operation is defined", rule_delta_fold},
      {"assoc", true, "(let (x2 (let (x1 e1) e2)) e3) = (let (x1 e1) (let (x2 e2) e3))",
       rule_assoc},
      {"commut", true, "(let (x1 e1) (let (x2 e2) e3)) = (let (x2 e2) (let (x1 e1) e3))",
       rule_commut},
      {"let_S", true, "(let (x e) S[x]) = S[e] for let-spine contexts S", rule_let_s},
      {"factor_merge", true,
       "(let (a (factor x)) (factor y)) = (let (c (* x y)) (let (a (factor c)) y))",
       rule_factor_merge},
      {"normalpdf_shift", true, "normalpdf(x - y; 0, s) = normalpdf(y; x, s)",
       rule_normalpdf_shift},
      {"add_commut", true, "x + y = y + x", rule_add_commut},
      {"sub_reassoc", true, "(y + x) - z = x - (z - y)", rule_sub_reassoc},
      {"conjugacy_normal", false, "normal prior and normal observation to posterior and normalizer",
       rule_conjugacy},
      {"dist_invcdf", true, "(normal m s) = (let (u (sample)) (normalinvcdf u m s))",
       rule_dist_invcdf},
  };
}

}  // namespace

const std::vector<RewriteRule>& rules() {
  static const std::vector<RewriteRule> all = make_rules();
  return all;
}

const RewriteRule* find_rule(std::string_view name) {
  for (const auto& r : rules()) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

ExprPtr apply_rule(const ExprPtr& e, const RewriteStep& step) {
  const RewriteRule* rule = find_rule(step.rule);
  if (!rule) na("unknown rule '" + step.rule + "'");
  if (step.dir == Direction::Reverse && !rule->bidirectional) {
    na(step.rule + " only applies forward");
  }
  ExprPtr target = subexpr(e, step.focus);
  if (!target) na("focus " + focus_text(step.focus) + " is not a position in the program");
  const auto scope = binders_along(e, step.focus);
  RuleContext ctx{step.dir, step.args, scope, all_names(*e)};
  if (step.args.value) {
    for (const auto& x : free_vars(*step.args.value)) ctx.avoid.insert(x);
  }
  ExprPtr out = replace_at(e, step.focus, rule->rewrite(target, ctx));
  const auto sc = scope_check(free_vars(e), *out);
  if (!sc.ok) na(step.rule + ": result leaves '" + sc.variable + "' unbound");
  return out;
}

std::vector<ApplicableSite> applicable(const ExprPtr& e) {
  std::vector<ApplicableSite> out;
  for (const auto& f : all_foci(e)) {
    for (const auto& r : rules()) {
      for (Direction d : {Direction::Forward, Direction::Reverse}) {
        if (d == Direction::Reverse) {
          if (!r.bidirectional) continue;
          if (r.name == "beta_v" || r.name == "let_v" || r.name == "let_S") continue;
        }
        try {
          apply_rule(e, RewriteStep{r.name, d, f, {}});
          out.push_back({r.name, d, f});
        } catch (const NotApplicable&) {
        }
      }
    }
  }
  return out;
}

ScriptError::ScriptError(std::size_t step, const std::string& reason)
    : std::runtime_error("step " + std::to_string(step) + ": " + reason), step_(step) {}

ExprPtr run_script(const ExprPtr& e, const RewriteScript& script, const StepObserverFn& observe) {
  ExprPtr cur = e;
  for (std::size_t i = 0; i < script.size(); ++i) {
    try {
      cur = apply_rule(cur, script[i]);
    } catch (const NotApplicable& ex) {
      throw ScriptError(i, ex.what());
    }
    if (observe) observe(i, script[i], cur);
  }
  return cur;
}

RewriteScript parse_script(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw std::invalid_argument(std::string("script is not valid JSON: ") + ex.what());
  }
  if (!j.is_array()) throw std::invalid_argument("script must be a JSON array of steps");
  auto focus_of = [](const json& v, const std::string& what) {
    if (!v.is_array()) throw std::invalid_argument(what + " must be an array of integers");
    Focus f;
    for (const auto& x : v) {
      if (!x.is_number_integer() || x.get<int>() < 0) {
        throw std::invalid_argument(what + " must be an array of non-negative integers");
      }
      f.push_back(x.get<int>());
    }
    return f;
  };
  RewriteScript out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& s = j[i];
    const std::string where = "step " + std::to_string(i) + ": ";
    if (!s.is_object() || !s.contains("rule") || !s["rule"].is_string()) {
      throw std::invalid_argument(where + "needs a \"rule\" string");
    }
    RewriteStep step;
    step.rule = s["rule"].get<std::string>();
    if (s.contains("dir")) {
      const auto d = s["dir"].is_string() ? direction_from(s["dir"].get<std::string>())
                                          : std::nullopt;
      if (!d) throw std::invalid_argument(where + "\"dir\" must be \"fwd\" or \"rev\"");
      step.dir = *d;
    }
    step.focus = s.contains("focus") ? focus_of(s["focus"], where + "\"focus\"") : Focus{};
    if (s.contains("hole")) step.args.hole = focus_of(s["hole"], where + "\"hole\"");
    if (s.contains("value")) {
      if (!s["value"].is_string()) throw std::invalid_argument(where + "\"value\" must be a string");
      try {
        step.args.value = parse_value(s["value"].get<std::string>());
      } catch (const ParseError& ex) {
        throw std::invalid_argument(where + "bad value: " + ex.what());
      }
    }
    if (s.contains("name")) {
      if (!s["name"].is_string()) throw std::invalid_argument(where + "\"name\" must be a string");
      step.args.name = s["name"].get<std::string>();
    }
    out.push_back(std::move(step));
  }
  return out;
}

std::string script_to_json(const RewriteScript& script, int indent) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : script) {
    nlohmann::json o;
    o["rule"] = s.rule;
    o["dir"] = std::string(to_string(s.dir));
    o["focus"] = s.focus;
    if (s.args.hole) o["hole"] = *s.args.hole;
    if (s.args.value) o["value"] = print(*s.args.value);
    if (s.args.name) o["name"] = *s.args.name;
    j.push_back(o);
  }
  return j.dump(indent);
}

// ---------------------------------------------------------------------------
// Shape matching

namespace {

class ShapeMatcher {
 public:
  bool expr(const Expr& p, const Expr& e) {
    if (const auto* w = get_if<node::Val>(p); w && is_var(w->v, "_")) return true;
    if (p.node.index() != e.node.index()) return false;
    return std::visit(
        overloaded{
            [&](const node::Val& n) { return value(n.v, std::get<node::Val>(e.node).v); },
            [&](const node::App& n) {
              const auto& o = std::get<node::App>(e.node);
              return value(n.fn, o.fn) && value(n.arg, o.arg);
            },
            [&](const node::Let& n) {
              const auto& o = std::get<node::Let>(e.node);
              if (!expr(*n.rhs, *o.rhs)) return false;
              push(n.x, o.x);
              const bool ok = expr(*n.body, *o.body);
              pop();
              return ok;
            },
            [&](const node::Op& n) {
              const auto& o = std::get<node::Op>(e.node);
              return n.op == o.op && values(n.args, o.args);
            },
            [&](const node::If& n) {
              const auto& o = std::get<node::If>(e.node);
              return value(n.cond, o.cond) && expr(*n.then_branch, *o.then_branch) &&
                     expr(*n.else_branch, *o.else_branch);
            },
            [](const node::Sample&) { return true; },
            [&](const node::Factor& n) {
              return value(n.arg, std::get<node::Factor>(e.node).arg);
            },
            [&](const node::Dist& n) {
              const auto& o = std::get<node::Dist>(e.node);
              return n.dist == o.dist && values(n.args, o.args);
            },
        },
        p.node);
  }

 private:
  bool value(const Value& p, const Value& v) {
    if (is_var(p, "_")) return true;
    if (p.index() != v.index()) return false;
    if (const double* a = as_real(p)) {
      const double b = *as_real(v);
      return std::fabs(*a - b) <= 1e-9 * std::max({1.0, std::fabs(*a), std::fabs(b)});
    }
    if (const auto* x = as_var(p)) {
      const auto i = lookup(pat_, x->name);
      const auto j = lookup(sub_, as_var(v)->name);
      if (i != j) return false;
      return i != kFree || x->name == as_var(v)->name;
    }
    const auto& lp = std::get<Lam>(p);
    const auto& lv = std::get<Lam>(v);
    push(lp.param, lv.param);
    const bool ok = expr(*lp.body, *lv.body);
    pop();
    return ok;
  }
  bool values(const std::vector<Value>& a, const std::vector<Value>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!value(a[i], b[i])) return false;
    }
    return true;
  }
  static constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  static std::size_t lookup(const std::vector<Identifier>& env, const Identifier& x) {
    for (std::size_t i = env.size(); i-- > 0;) {
      if (env[i] == x) return i;
    }
    return kFree;
  }
  void push(const Identifier& a, const Identifier& b) {
    pat_.push_back(a);
    sub_.push_back(b);
  }
  void pop() {
    pat_.pop_back();
    sub_.pop_back();
  }

  std::vector<Identifier> pat_;
  std::vector<Identifier> sub_;
};

}  // namespace

bool matches_shape(const ExprPtr& pattern, const ExprPtr& e) {
  return ShapeMatcher{}.expr(*pattern, *e);
}

// ---------------------------------------------------------------------------
// Linear-regression pipeline

namespace {

struct Observation {
  double x;
  double y;
};
constexpr Observation kObservations[] = {{2, 2.4}, {3, 2.7}, {4, 3.0}};

std::optional<Focus> find_binder(const ExprPtr& e, const Identifier& x, Focus& at) {
  const auto* l = as_let(e);
  if (!l) return std::nullopt;
  if (l->x == x) return at;
  for (int slot : {0, 1}) {
    at.push_back(slot);
    if (auto f = find_binder(slot == 0 ? l->rhs : l->body, x, at)) return f;
    at.pop_back();
  }
  return std::nullopt;
}

class ScriptBuilder {
 public:
  explicit ScriptBuilder(ExprPtr e) : cur_(std::move(e)) {}

  void apply(std::string rule, Direction dir, Focus f, RewriteArgs args = {}) {
    RewriteStep s{std::move(rule), dir, std::move(f), std::move(args)};
    try {
      cur_ = apply_rule(cur_, s);
    } catch (const NotApplicable& ex) {
      throw std::logic_error("regression pipeline step " + std::to_string(script_.size()) +
                             " (" + s.rule + "): " + ex.what());
    }
    script_.push_back(std::move(s));
  }

  Focus at(const Identifier& x) const {
    Focus f;
    auto r = find_binder(cur_, x, f);
    if (!r) throw std::logic_error("regression pipeline: no binder '" + x + "'");
    return *r;
  }

  const node::Let& let_at(const Focus& f) const {
    const auto* l = as_let(subexpr(cur_, f));
    if (!l) throw std::logic_error("regression pipeline: no let at " + focus_text(f));
    return *l;
  }

  // Commutes the let at f upward until its parent binds `stop`.
  Focus raise(Focus f, const Identifier& stop) {
    while (!f.empty() && f.back() == 1) {
      Focus parent(f.begin(), f.end() - 1);
      if (let_at(parent).x == stop) break;
      apply("commut", Direction::Forward, parent);
      f = parent;
    }
    return f;
  }

  const ExprPtr& expr() const { return cur_; }
  RewriteScript take() { return std::move(script_); }

 private:
  ExprPtr cur_;
  RewriteScript script_;
};

ExprPtr regression_with_result(const Identifier& result) {
  ExprPtr body = val(var(result));
  for (int k = 3; k >= 1; --k) {
    const auto& obs = kObservations[k - 1];
    const std::string n = std::to_string(k);
    body = let("y" + n, app(var("f"), real(obs.x)),
               let("r" + n, op(OpName::Sub, {var("y" + n), real(obs.y)}),
                   let("p" + n, op(OpName::NormalPdf, {var("r" + n), real(0), real(1)}),
                       let("o" + n, factor(var("p" + n)), body))));
  }
  const ExprPtr f =
      val(lam("x", let("t", op(OpName::Mul, {var("A"), var("x")}),
                       op(OpName::Add, {var("t"), var("B")}))));
  return let("A", normal_by_invcdf(real(0), real(10)),
             let("B", normal_by_invcdf(real(0), real(10)), let("f", f, body)));
}

}  // namespace

ExprPtr regression_program(bool return_slope) {
  return regression_with_result(return_slope ? "A" : "B");
}

RegressionPipeline regression_pipeline() {
  using D = Direction;
  const ExprPtr source = regression_program(false);
  ScriptBuilder b(source);

  // Inline f, then bring each observation to normalpdf(c - A*x; B, 1).
  b.apply("let_v", D::Forward, b.at("f"));
  for (int k = 1; k <= 3; ++k) {
    const Focus fy = b.at("y" + std::to_string(k));
    b.apply("beta_v", D::Forward, extend(fy, {0}));
    b.apply("assoc", D::Forward, fy);
    b.apply("sub_reassoc", D::Forward, extend(fy, {1}));
    b.apply("normalpdf_shift", D::Forward, extend(fy, {1, 1}));
    b.apply("assoc", D::Reverse, fy);
  }

  // Fold one observation at a time into B's prior.
  for (int k = 1; k <= 3; ++k) {
    const std::string n = std::to_string(k);
    const Focus fb = b.at("B");

    RewriteArgs pull;
    pull.hole = Focus{1, 0};
    pull.name = "err" + n;
    b.apply("let_S", D::Reverse, fb, pull);
    b.apply("let_v", D::Forward, extend(fb, {1, 1}));

    RewriteArgs rename;
    rename.value = var("B");
    rename.name = "B" + n;
    b.apply("let_v", D::Reverse, extend(fb, {1, 1, 1, 1}), rename);
    b.apply("assoc", D::Reverse, extend(fb, {1, 1, 1}));
    b.apply("assoc", D::Reverse, extend(fb, {1, 1}));
    b.apply("assoc", D::Reverse, extend(fb, {1}));

    Focus group = extend(fb, {1});
    b.apply("conjugacy_normal", D::Forward, extend(group, {0}));
    while (as_let(b.let_at(group).rhs)) {
      b.apply("assoc", D::Forward, group);
      group.push_back(1);
    }
    b.apply("let_v", D::Forward, group);

    // Move the normalizer and its factor above the posterior's lets.
    const Identifier err = "err" + n;
    const Identifier pk = "p" + n;
    b.raise(b.at(pk), err);
    b.raise(b.at("o" + n), pk);
  }

  const ExprPtr shape = parse_expr(R"(
    (let (A (let (u (sample)) (normalinvcdf u 0 10)))
    (let (err1 (let (t (* A 2)) (- 2.4 t)))
    (let (p1 (normalpdf err1 0 _))
    (let (o1 (factor p1))
    (let (m1 (* _ err1))
    (let (err2 (let (t (* A 3)) (- 2.7 t)))
    (let (p2 (normalpdf err2 m1 _))
    (let (o2 (factor p2))
    (let (a2 (* _ m1))
    (let (b2 (* _ err2))
    (let (m2 (+ a2 b2))
    (let (err3 (let (t (* A 4)) (- 3 t)))
    (let (p3 (normalpdf err3 m2 _))
    (let (o3 (factor p3))
    (let (a3 (* _ m2))
    (let (b3 (* _ err3))
    (let (m3 (+ a3 b3))
    (let (B (let (u (sample)) (normalinvcdf u m3 _)))
    B))))))))))))))))))
  )");
  return {source, b.take(), shape};
}

}  // namespace entropic
