#include "entropic/machine.hpp"

#include <cmath>
#include <stdexcept>

#include "entropic/ops.hpp"
#include "entropic/parse.hpp"
#include "overloaded.hpp"

namespace entropic {

std::string_view to_string(StuckReason r) {
  switch (r) {
    case StuckReason::AppliedNonLambda: return "AppliedNonLambda";
    case StuckReason::OpUndefined: return "OpUndefined";
    case StuckReason::IfOnClosure: return "IfOnClosure";
    case StuckReason::FactorNonPositive: return "FactorNonPositive";
    case StuckReason::FactorOnClosure: return "FactorOnClosure";
    case StuckReason::DistUndefined: return "DistUndefined";
    case StuckReason::OpenTerm: return "OpenTerm";
    case StuckReason::TraceExhausted: return "TraceExhausted";
    case StuckReason::TraceElementOutOfRange: return "TraceElementOutOfRange";
  }
  return "?";
}

bool is_final(const Config& c) { return c.cont.is_halt() && is_value(*c.expr); }

std::optional<StuckReason> step_in_place(Config& c) {
  const Expr& e = *c.expr;
  return std::visit(
      overloaded{
          [&](const node::Val& n) -> std::optional<StuckReason> {
            // return
            if (c.cont.is_halt()) throw std::logic_error("step on a final configuration");
            Cont k = c.cont;
            ExprPtr body = subst_closed(k.body(), k.var(), n.v);
            Popped p = pop(c.tau);
            c.sigma = std::move(p.top);
            c.tau = std::move(p.rest);
            c.expr = std::move(body);
            c.cont = k.rest();
            return std::nullopt;
          },
          [&](const node::App& n) -> std::optional<StuckReason> {
            if (const Lam* l = as_lam(n.fn)) {
              c.expr = subst_closed(l->body, l->param, n.arg);
              return std::nullopt;
            }
            if (as_var(n.fn)) return StuckReason::OpenTerm;
            return StuckReason::AppliedNonLambda;
          },
          [&](const node::Let& n) -> std::optional<StuckReason> {
            Entropy sl = c.sigma.left();
            c.tau = push(c.sigma.right(), std::move(c.tau));
            c.sigma = std::move(sl);
            c.cont = Cont::let_k(n.x, n.body, std::move(c.cont));
            c.expr = n.rhs;
            return std::nullopt;
          },
          [&](const node::Op& n) -> std::optional<StuckReason> {
            for (const auto& a : n.args) {
              if (as_var(a)) return StuckReason::OpenTerm;
            }
            auto r = delta(n.op, n.args);
            if (!r) return StuckReason::OpUndefined;
            c.expr = val(Real{*r});
            return std::nullopt;
          },
          [&](const node::If& n) -> std::optional<StuckReason> {
            const double* r = as_real(n.cond);
            if (!r) return as_var(n.cond) ? StuckReason::OpenTerm : StuckReason::IfOnClosure;
            c.expr = *r > 0 ? n.then_branch : n.else_branch;
            return std::nullopt;
          },
          [&](const node::Sample&) -> std::optional<StuckReason> {
            const double u = c.sigma.left().uniform();
            c.sigma = c.sigma.right();
            c.expr = val(Real{u});
            return std::nullopt;
          },
          [&](const node::Factor& n) -> std::optional<StuckReason> {
            const double* r = as_real(n.arg);
            if (!r) {
              return as_var(n.arg) ? StuckReason::OpenTerm : StuckReason::FactorOnClosure;
            }
            if (!(*r > 0)) return StuckReason::FactorNonPositive;
            c.logw += std::log(*r);
            c.expr = val(Real{*r});
            return std::nullopt;
          },
          [&](const node::Dist& n) -> std::optional<StuckReason> {
            std::array<double, 2> params{};
            for (std::size_t i = 0; i < n.args.size(); ++i) {
              const double* r = as_real(n.args[i]);
              if (!r) return as_var(n.args[i]) ? StuckReason::OpenTerm : StuckReason::DistUndefined;
              params[i] = *r;
            }
            auto p = propose_normal(c.sigma.left().uniform(), params[0], params[1]);
            if (!p) return StuckReason::DistUndefined;
            c.sigma = c.sigma.right();
            c.logw += p->log_weight;
            c.expr = val(Real{p->value});
            return std::nullopt;
          },
      },
      e.node);
}

StepOutcome step(const Config& c) {
  Config next = c;
  if (auto r = step_in_place(next)) return {*r};
  return {std::move(next)};
}

RunResult run(const Entropy& sigma, const ExprPtr& e, const Cont& k, const Entropy& tau,
              std::uint64_t fuel, double logw, const StepObserver& observe) {
  Config c{sigma, e, k, tau, logw};
  std::uint64_t n = 0;
  for (;;) {
    if (is_final(c)) return Final{std::get<node::Val>(c.expr->node).v, c.logw, n};
    if (n >= fuel) return FuelExhausted{n};
    if (observe) observe(n, c);
    if (auto r = step_in_place(c)) return StuckAt{*r, n};
    ++n;
  }
}

double eval(const Entropy& sigma, const ExprPtr& e, const Cont& k, const Entropy& tau,
            double logw, const RealSet& A, std::uint64_t fuel) {
  RunResult r = run(sigma, e, k, tau, fuel, logw);
  const auto* f = std::get_if<Final>(&r);
  if (!f) return 0.0;
  const double* x = as_real(f->value);
  if (!x || !A.contains(*x)) return 0.0;
  return std::exp(f->logw);
}

std::optional<ReachedValue> run_to_value(const Entropy& sigma, const ExprPtr& e,
                                         const Cont& k, const Entropy& tau,
                                         std::uint64_t fuel) {
  Config c{sigma, e, k, tau, 0.0};
  for (std::uint64_t n = 0;; ++n) {
    if (is_value(*c.expr) && c.cont.same(k)) {
      return ReachedValue{n, std::get<node::Val>(c.expr->node).v, c.logw};
    }
    if (n >= fuel || is_final(c)) return std::nullopt;
    if (step_in_place(c)) return std::nullopt;
  }
}

std::string trace_line(std::uint64_t n, const Config& c) {
  return std::to_string(n) + ": " + std::string(head_name(*c.expr)) + " | " +
         std::to_string(c.cont.depth()) + " | " + format_real(c.logw);
}

}  // namespace entropic
