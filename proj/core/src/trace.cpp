#include "entropic/trace.hpp"

#include <cmath>

#include "entropic/bigstep.hpp"
#include "entropic/ops.hpp"
#include "entropic/parse.hpp"
#include "overloaded.hpp"

namespace entropic {

namespace {

using Draw = std::variant<double, StuckReason>;

struct ReplaySource {
  const Trace& trace;
  std::size_t& pos;

  Draw sample() {
    if (pos >= trace.size()) return StuckReason::TraceExhausted;
    const double r = trace[pos];
    if (!(r >= 0 && r <= 1)) return StuckReason::TraceElementOutOfRange;
    ++pos;
    return r;
  }

  Draw dist(DistName d, std::span<const double> params, double& logw) {
    if (pos >= trace.size()) return StuckReason::TraceExhausted;
    const double r = trace[pos];
    auto ld = dist_log_density(d, r, params);
    if (!ld || !std::isfinite(*ld)) return StuckReason::DistUndefined;
    ++pos;
    logw += *ld;
    return r;
  }
};

struct LazySource {
  Seed seed;
  Trace& recorded;

  double next_uniform() {
    return seed_uniform(seed.child(recorded.size()));
  }

  Draw sample() {
    const double u = next_uniform();
    recorded.push_back(u);
    return u;
  }

  Draw dist(DistName, std::span<const double> params, double& logw) {
    auto p = propose_normal(next_uniform(), params[0], params[1]);
    if (!p) return StuckReason::DistUndefined;
    recorded.push_back(p->value);
    logw += p->log_weight;
    return p->value;
  }
};

struct SeqState {
  ExprPtr expr;
  Cont cont;
  double logw;
};

template <class Source>
std::optional<StuckReason> seq_step_impl(SeqState& c, Source& src) {
  const Expr& e = *c.expr;
  using R = std::optional<StuckReason>;
  return std::visit(
      overloaded{
          [&](const node::Val& n) -> R {
            if (c.cont.is_halt()) throw std::logic_error("step on a final configuration");
            Cont k = c.cont;
            c.expr = subst_closed(k.body(), k.var(), n.v);
            c.cont = k.rest();
            return std::nullopt;
          },
          [&](const node::App& n) -> R {
            if (const Lam* l = as_lam(n.fn)) {
              c.expr = subst_closed(l->body, l->param, n.arg);
              return std::nullopt;
            }
            return as_var(n.fn) ? StuckReason::OpenTerm : StuckReason::AppliedNonLambda;
          },
          [&](const node::Let& n) -> R {
            c.cont = Cont::let_k(n.x, n.body, std::move(c.cont));
            c.expr = n.rhs;
            return std::nullopt;
          },
          [&](const node::Op& n) -> R {
            for (const auto& a : n.args) {
              if (as_var(a)) return StuckReason::OpenTerm;
            }
            auto r = delta(n.op, n.args);
            if (!r) return StuckReason::OpUndefined;
            c.expr = val(Real{*r});
            return std::nullopt;
          },
          [&](const node::If& n) -> R {
            const double* r = as_real(n.cond);
            if (!r) return as_var(n.cond) ? StuckReason::OpenTerm : StuckReason::IfOnClosure;
            c.expr = *r > 0 ? n.then_branch : n.else_branch;
            return std::nullopt;
          },
          [&](const node::Sample&) -> R {
            Draw d = src.sample();
            if (const auto* s = std::get_if<StuckReason>(&d)) return *s;
            c.expr = val(Real{std::get<double>(d)});
            return std::nullopt;
          },
          [&](const node::Factor& n) -> R {
            const double* r = as_real(n.arg);
            if (!r) return as_var(n.arg) ? StuckReason::OpenTerm : StuckReason::FactorOnClosure;
            if (!(*r > 0)) return StuckReason::FactorNonPositive;
            c.logw += std::log(*r);
            c.expr = val(Real{*r});
            return std::nullopt;
          },
          [&](const node::Dist& n) -> R {
            std::array<double, 2> params{};
            for (std::size_t i = 0; i < n.args.size(); ++i) {
              const double* r = as_real(n.args[i]);
              if (!r) return as_var(n.args[i]) ? StuckReason::OpenTerm : StuckReason::DistUndefined;
              params[i] = *r;
            }
            Draw d = src.dist(n.dist, params, c.logw);
            if (const auto* s = std::get_if<StuckReason>(&d)) return *s;
            c.expr = val(Real{std::get<double>(d)});
            return std::nullopt;
          },
      },
      e.node);
}

template <class Source>
SeqRunResult seq_run_impl(const ExprPtr& e, const Cont& k, std::uint64_t fuel, Source& src,
                          const std::size_t& consumed) {
  SeqState c{e, k, 0.0};
  std::uint64_t n = 0;
  for (;;) {
    if (c.cont.is_halt() && is_value(*c.expr)) {
      return SeqFinal{std::get<node::Val>(c.expr->node).v, c.logw, n, consumed};
    }
    if (n >= fuel) return FuelExhausted{n};
    if (auto r = seq_step_impl(c, src)) return StuckAt{*r, n};
    ++n;
  }
}

}  // namespace

bool is_final(const SeqConfig& c) { return c.cont.is_halt() && is_value(*c.expr); }

std::optional<StuckReason> seq_step(SeqConfig& c) {
  ReplaySource src{c.trace, c.consumed};
  SeqState s{c.expr, c.cont, c.logw};
  auto r = seq_step_impl(s, src);
  if (!r) {
    c.expr = std::move(s.expr);
    c.cont = std::move(s.cont);
    c.logw = s.logw;
  }
  return r;
}

SeqRunResult seq_run(const Trace& trace, const ExprPtr& e, const Cont& k, std::uint64_t fuel) {
  std::size_t pos = 0;
  ReplaySource src{trace, pos};
  return seq_run_impl(e, k, fuel, src, pos);
}

double seq_eval(const Trace& trace, const ExprPtr& e, const Cont& k, const RealSet& A,
                std::uint64_t fuel) {
  SeqRunResult r = seq_run(trace, e, k, fuel);
  const auto* f = std::get_if<SeqFinal>(&r);
  if (!f || f->consumed != trace.size()) return 0.0;
  const double* x = as_real(f->value);
  if (!x || !A.contains(*x)) return 0.0;
  return std::exp(f->logw);
}

LazyRun seq_run_lazy(const ExprPtr& e, const Cont& k, const Seed& seed, std::uint64_t fuel) {
  LazyRun out;
  LazySource src{seed, out.trace};
  std::size_t unused = 0;
  out.result = seq_run_impl(e, k, fuel, src, unused);
  if (auto* f = std::get_if<SeqFinal>(&out.result)) f->consumed = out.trace.size();
  return out;
}

WeightedSample seq_sample(const ExprPtr& e, const Cont& k, const Seed& seed, std::uint64_t fuel) {
  LazyRun lr = seq_run_lazy(e, k, seed.child(1), fuel);
  WeightedSample s;
  s.seed = seed;
  if (const auto* f = std::get_if<SeqFinal>(&lr.result)) {
    s.logw = f->logw;
    s.steps = f->steps;
    if (const double* x = as_real(f->value)) {
      s.outcome = Outcome::Real;
      s.value = *x;
    } else {
      s.outcome = Outcome::NonReal;
    }
  } else if (const auto* st = std::get_if<StuckAt>(&lr.result)) {
    s.outcome = Outcome::Stuck;
    s.reason = st->reason;
    s.steps = st->steps;
  } else {
    s.outcome = Outcome::Diverged;
    s.steps = std::get<FuelExhausted>(lr.result).steps;
  }
  return s;
}

MeasureEstimate seq_estimate(const ExprPtr& e, const Cont& k, const std::vector<RealSet>& bins,
                             const Seed& seed, const EstimateOptions& opt) {
  return estimate_with(
      [&](std::uint64_t, const Seed& s) { return seq_sample(e, k, s, opt.fuel); }, bins, seed,
      opt.n, opt.threads);
}

// ---------------------------------------------------------------------------
// Direct-style machine

namespace {

using DStep = std::variant<DExprPtr, StuckReason>;

struct DReducer {
  ReplaySource src;
  double& logw;

  static std::optional<Value> operand(const DExpr& v) {
    if (const auto* r = get_if<dnode::Real>(v)) return Real{r->r};
    // delta only distinguishes reals from closures.
    if (get_if<dnode::Lam>(v)) return Lam{"_", nullptr};
    return std::nullopt;
  }

  // Leftmost-innermost: find the hole of E, contract, rebuild.
  DStep reduce(const DExprPtr& e) {
    return std::visit(
        overloaded{
            [&](const dnode::Var&) -> DStep { return StuckReason::OpenTerm; },
            [&](const dnode::Real&) -> DStep { throw std::logic_error("value has no redex"); },
            [&](const dnode::Lam&) -> DStep { throw std::logic_error("value has no redex"); },
            [&](const dnode::Let& n) -> DStep {
              if (is_value(*n.rhs)) {
                if (get_if<dnode::Var>(*n.rhs)) return StuckReason::OpenTerm;
                return subst(n.body, n.x, n.rhs);
              }
              DStep r = reduce(n.rhs);
              if (auto* s = std::get_if<StuckReason>(&r)) return *s;
              return direct::let(n.x, std::get<DExprPtr>(r), n.body);
            },
            [&](const dnode::App& n) -> DStep {
              if (!is_value(*n.fn)) {
                DStep r = reduce(n.fn);
                if (auto* s = std::get_if<StuckReason>(&r)) return *s;
                return direct::app(std::get<DExprPtr>(r), n.arg);
              }
              if (!is_value(*n.arg)) {
                DStep r = reduce(n.arg);
                if (auto* s = std::get_if<StuckReason>(&r)) return *s;
                return direct::app(n.fn, std::get<DExprPtr>(r));
              }
              if (get_if<dnode::Var>(*n.fn) || get_if<dnode::Var>(*n.arg)) {
                return StuckReason::OpenTerm;
              }
              const auto* l = get_if<dnode::Lam>(*n.fn);
              if (!l) return StuckReason::AppliedNonLambda;
              return subst(l->body, l->param, n.arg);
            },
            [&](const dnode::Op& n) -> DStep {
              for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (is_value(*n.args[i])) continue;
                DStep r = reduce(n.args[i]);
                if (auto* s = std::get_if<StuckReason>(&r)) return *s;
                auto args = n.args;
                args[i] = std::get<DExprPtr>(r);
                return direct::op(n.op, std::move(args));
              }
              std::vector<Value> vals;
              for (const auto& a : n.args) {
                auto v = operand(*a);
                if (!v) return StuckReason::OpenTerm;
                vals.push_back(std::move(*v));
              }
              auto r = delta(n.op, vals);
              if (!r) return StuckReason::OpUndefined;
              return direct::real(*r);
            },
            [&](const dnode::If& n) -> DStep {
              if (!is_value(*n.cond)) {
                DStep r = reduce(n.cond);
                if (auto* s = std::get_if<StuckReason>(&r)) return *s;
                return direct::if_(std::get<DExprPtr>(r), n.then_branch, n.else_branch);
              }
              if (get_if<dnode::Var>(*n.cond)) return StuckReason::OpenTerm;
              const auto* r = get_if<dnode::Real>(*n.cond);
              if (!r) return StuckReason::IfOnClosure;
              return r->r > 0 ? n.then_branch : n.else_branch;
            },
            [&](const dnode::Sample&) -> DStep {
              Draw d = src.sample();
              if (const auto* s = std::get_if<StuckReason>(&d)) return *s;
              return direct::real(std::get<double>(d));
            },
            [&](const dnode::Factor& n) -> DStep {
              if (!is_value(*n.arg)) {
                DStep r = reduce(n.arg);
                if (auto* s = std::get_if<StuckReason>(&r)) return *s;
                return direct::factor(std::get<DExprPtr>(r));
              }
              if (get_if<dnode::Var>(*n.arg)) return StuckReason::OpenTerm;
              const auto* r = get_if<dnode::Real>(*n.arg);
              if (!r) return StuckReason::FactorOnClosure;
              if (!(r->r > 0)) return StuckReason::FactorNonPositive;
              logw += std::log(r->r);
              return direct::real(r->r);
            },
        },
        e->node);
  }
};

}  // namespace

std::optional<StuckReason> d_step(DConfig& c) {
  std::size_t pos = c.consumed;
  double logw = c.logw;
  DReducer red{ReplaySource{c.trace, pos}, logw};
  DStep r = red.reduce(c.expr);
  if (auto* s = std::get_if<StuckReason>(&r)) return *s;
  c.expr = std::get<DExprPtr>(r);
  c.consumed = pos;
  c.logw = logw;
  return std::nullopt;
}

DRunResult d_run(const Trace& trace, const DExprPtr& e, std::uint64_t fuel) {
  std::size_t pos = 0;
  double logw = 0;
  DExprPtr cur = e;
  std::uint64_t n = 0;
  for (;;) {
    if (is_value(*cur)) return DFinal{cur, logw, n, pos};
    if (n >= fuel) return FuelExhausted{n};
    DReducer red{ReplaySource{trace, pos}, logw};
    DStep r = red.reduce(cur);
    if (auto* s = std::get_if<StuckReason>(&r)) return StuckAt{*s, n};
    cur = std::get<DExprPtr>(r);
    ++n;
  }
}

double d_eval(const Trace& trace, const DExprPtr& e, const RealSet& A, std::uint64_t fuel) {
  DRunResult r = d_run(trace, e, fuel);
  const auto* f = std::get_if<DFinal>(&r);
  if (!f || f->consumed != trace.size()) return 0.0;
  const auto* x = get_if<dnode::Real>(*f->value);
  if (!x || !A.contains(x->r)) return 0.0;
  return std::exp(f->logw);
}

// ---------------------------------------------------------------------------
// Translation

namespace {

void collect_dnames(const DExpr& e, IdentSet& out) {
  std::visit(overloaded{
                 [&](const dnode::Var& x) { out.insert(x.name); },
                 [&](const dnode::Real&) {},
                 [&](const dnode::Lam& l) {
                   out.insert(l.param);
                   collect_dnames(*l.body, out);
                 },
                 [&](const dnode::Let& n) {
                   out.insert(n.x);
                   collect_dnames(*n.rhs, out);
                   collect_dnames(*n.body, out);
                 },
                 [&](const dnode::App& n) {
                   collect_dnames(*n.fn, out);
                   collect_dnames(*n.arg, out);
                 },
                 [&](const dnode::Op& n) {
                   for (const auto& a : n.args) collect_dnames(*a, out);
                 },
                 [&](const dnode::If& n) {
                   collect_dnames(*n.cond, out);
                   collect_dnames(*n.then_branch, out);
                   collect_dnames(*n.else_branch, out);
                 },
                 [&](const dnode::Sample&) {},
                 [&](const dnode::Factor& n) { collect_dnames(*n.arg, out); },
             },
             e.node);
}

struct Translator {
  IdentSet avoid;
  int counter = 0;

  Identifier fresh_name() {
    Identifier x = fresh(avoid, "t" + std::to_string(++counter));
    avoid.insert(x);
    return x;
  }

  ExprPtr tr(const DExpr& e) {
    return std::visit(
        overloaded{
            [&](const dnode::Var& x) { return val(var(x.name)); },
            [&](const dnode::Real& r) { return val(real(r.r)); },
            [&](const dnode::Lam& l) { return val(lam(l.param, tr(*l.body))); },
            [&](const dnode::Let& n) { return let(n.x, tr(*n.rhs), tr(*n.body)); },
            [&](const dnode::App& n) {
              const Identifier x1 = fresh_name();
              const Identifier x2 = fresh_name();
              return let(x1, tr(*n.fn), let(x2, tr(*n.arg), app(var(x1), var(x2))));
            },
            [&](const dnode::Op& n) {
              std::vector<Identifier> xs;
              for (std::size_t i = 0; i < n.args.size(); ++i) xs.push_back(fresh_name());
              std::vector<Value> vs;
              for (const auto& x : xs) vs.push_back(var(x));
              ExprPtr out = op(n.op, std::move(vs));
              for (std::size_t i = n.args.size(); i-- > 0;) {
                out = let(xs[i], tr(*n.args[i]), out);
              }
              return out;
            },
            [&](const dnode::If& n) {
              const Identifier x = fresh_name();
              return let(x, tr(*n.cond), if_(var(x), tr(*n.then_branch), tr(*n.else_branch)));
            },
            [&](const dnode::Sample&) { return sample(); },
            [&](const dnode::Factor& n) {
              const Identifier x = fresh_name();
              return let(x, tr(*n.arg), factor(var(x)));
            },
        },
        e.node);
  }
};

}  // namespace

ExprPtr translate(const DExprPtr& e) {
  Translator t;
  collect_dnames(*e, t.avoid);
  return t.tr(*e);
}

SimulationReport check_simulation(const DExprPtr& e, const Trace& trace, const RealSet& A,
                                  std::uint64_t fuel) {
  SimulationReport rep;
  const ExprPtr l = translate(e);
  rep.d_weight = d_eval(trace, e, A, fuel);
  rep.seq_weight = seq_eval(trace, l, Cont::halt(), A, fuel);

  DRunResult dr = d_run(trace, e, fuel);
  SeqRunResult sr = seq_run(trace, l, Cont::halt(), fuel);
  const bool d_fuel = std::holds_alternative<FuelExhausted>(dr);
  const bool s_fuel = std::holds_alternative<FuelExhausted>(sr);
  if (d_fuel || s_fuel) {
    rep.conclusive = false;
    rep.detail = "fuel exhausted";
    return rep;
  }

  const double ld = rep.d_weight > 0 ? std::log(rep.d_weight) : 0;
  const double ls = rep.seq_weight > 0 ? std::log(rep.seq_weight) : 0;
  if ((rep.d_weight > 0) != (rep.seq_weight > 0) || !logw_close(ld, ls)) {
    rep.agree = false;
    rep.detail = "weights differ: direct " + format_real(rep.d_weight) + " vs translated " +
                 format_real(rep.seq_weight);
    return rep;
  }

  const auto* df = std::get_if<DFinal>(&dr);
  const auto* sf = std::get_if<SeqFinal>(&sr);
  if ((df == nullptr) != (sf == nullptr)) {
    rep.agree = false;
    rep.detail = df ? "direct halted, translated did not" : "translated halted, direct did not";
    return rep;
  }
  if (df) {
    const Value dv = std::get<node::Val>(translate(df->value)->node).v;
    if (!alpha_equal(dv, sf->value) || df->consumed != sf->consumed ||
        !logw_close(df->logw, sf->logw)) {
      rep.agree = false;
      rep.detail = "final states differ: direct " + print(*df->value) + " vs translated " +
                   print(sf->value);
    }
    return rep;
  }
  const auto& ds = std::get<StuckAt>(dr);
  const auto& ss = std::get<StuckAt>(sr);
  if (ds.reason != ss.reason) {
    rep.agree = false;
    rep.detail = "stuck differently: direct " + std::string(to_string(ds.reason)) +
                 " vs translated " + std::string(to_string(ss.reason));
  }
  return rep;
}

}  // namespace entropic
