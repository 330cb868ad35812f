#include "entropic/bigstep.hpp"

#include <algorithm>
#include <cmath>

#include "entropic/ops.hpp"
#include "entropic/parse.hpp"
#include "overloaded.hpp"

namespace entropic {

namespace {

struct BigEval {
  std::uint64_t fuel;
  std::size_t depth = 0;

  // Tail positions loop; only let right-hand sides recurse. logw is
  // accumulated in evaluation order so sums match the machine bit for bit.
  BigResult eval(Entropy sigma, ExprPtr e, double& logw) {
    for (;;) {
      if (fuel == 0) return BigFuelExhausted{};
      --fuel;
      const Expr& ex = *e;
      if (const auto* n = get_if<node::Val>(ex)) {
        if (as_var(n->v)) return BigStuck{StuckReason::OpenTerm};
        return BigOk{n->v, logw};
      }
      if (const auto* n = get_if<node::App>(ex)) {
        const Lam* l = as_lam(n->fn);
        if (!l) {
          return BigStuck{as_var(n->fn) ? StuckReason::OpenTerm
                                        : StuckReason::AppliedNonLambda};
        }
        e = subst_closed(l->body, l->param, n->arg);
        continue;
      }
      if (const auto* n = get_if<node::Let>(ex)) {
        if (depth >= kBigStepMaxDepth) return BigFuelExhausted{};
        ++depth;
        BigResult r1 = eval(sigma.left(), n->rhs, logw);
        --depth;
        const auto* ok = std::get_if<BigOk>(&r1);
        if (!ok) return r1;
        ExprPtr body = subst_closed(n->body, n->x, ok->value);
        sigma = sigma.right();
        e = std::move(body);
        continue;
      }
      if (const auto* n = get_if<node::Op>(ex)) {
        for (const auto& a : n->args) {
          if (as_var(a)) return BigStuck{StuckReason::OpenTerm};
        }
        auto r = delta(n->op, n->args);
        if (!r) return BigStuck{StuckReason::OpUndefined};
        return BigOk{Real{*r}, logw};
      }
      if (const auto* n = get_if<node::If>(ex)) {
        const double* r = as_real(n->cond);
        if (!r) {
          return BigStuck{as_var(n->cond) ? StuckReason::OpenTerm
                                          : StuckReason::IfOnClosure};
        }
        e = *r > 0 ? n->then_branch : n->else_branch;
        continue;
      }
      if (get_if<node::Sample>(ex)) return BigOk{Real{sigma.left().uniform()}, logw};
      if (const auto* n = get_if<node::Factor>(ex)) {
        const double* r = as_real(n->arg);
        if (!r) {
          return BigStuck{as_var(n->arg) ? StuckReason::OpenTerm
                                         : StuckReason::FactorOnClosure};
        }
        if (!(*r > 0)) return BigStuck{StuckReason::FactorNonPositive};
        logw += std::log(*r);
        return BigOk{Real{*r}, logw};
      }
      const auto& n = std::get<node::Dist>(ex.node);
      std::array<double, 2> params{};
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        const double* r = as_real(n.args[i]);
        if (!r) {
          return BigStuck{as_var(n.args[i]) ? StuckReason::OpenTerm
                                            : StuckReason::DistUndefined};
        }
        params[i] = *r;
      }
      auto p = propose_normal(sigma.left().uniform(), params[0], params[1]);
      if (!p) return BigStuck{StuckReason::DistUndefined};
      logw += p->log_weight;
      return BigOk{Real{p->value}, logw};
    }
  }
};

}  // namespace

BigResult bigeval(const Entropy& sigma, const ExprPtr& e, std::uint64_t fuel) {
  BigEval b{fuel};
  double logw = 0;
  return b.eval(sigma, e, logw);
}

bool logw_close(double a, double b, double tol) {
  if (a == b) return true;
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= tol * scale;
}

AgreementReport check_agreement(const Seed& seed, const ExprPtr& e, std::uint64_t fuel) {
  using V = AgreementReport::Verdict;
  AgreementReport rep;
  const Entropy sigma = root(seed);
  const Entropy tau = root(seed.child(0));

  BigResult big = bigeval(sigma, e, fuel);
  RunResult small = run(sigma, e, Cont::halt(), tau, fuel);

  rep.big_terminated = !std::holds_alternative<BigFuelExhausted>(big);
  rep.small_terminated = !std::holds_alternative<FuelExhausted>(small);

  if (!rep.big_terminated || !rep.small_terminated) {
    // A machine run that halts within fuel needs fewer big-step rule
    // applications, so only this direction is a genuine disagreement.
    if (rep.small_terminated && !rep.big_terminated &&
        std::holds_alternative<Final>(small)) {
      rep.verdict = V::Disagree;
      rep.detail = "machine halted but big-step exhausted its budget";
    } else {
      rep.verdict = V::Inconclusive;
      rep.detail = "fuel exhausted";
    }
    return rep;
  }

  if (const auto* s = std::get_if<StuckAt>(&small)) {
    const auto* b = std::get_if<BigStuck>(&big);
    if (b && b->reason == s->reason) {
      rep.verdict = V::Agree;
      rep.detail = "both stuck: " + std::string(to_string(s->reason));
    } else {
      rep.verdict = V::Disagree;
      rep.detail = "machine stuck (" + std::string(to_string(s->reason)) +
                   ") but big-step did not agree";
    }
    return rep;
  }

  const auto& f = std::get<Final>(small);
  const auto* b = std::get_if<BigOk>(&big);
  if (!b) {
    rep.verdict = V::Disagree;
    rep.detail = "machine halted, big-step stuck: " +
                 std::string(to_string(std::get<BigStuck>(big).reason));
    return rep;
  }
  const bool same_value = alpha_equal(f.value, b->value);
  const bool same_weight = logw_close(f.logw, b->logw);
  if (same_value && same_weight) {
    rep.verdict = V::Agree;
    rep.detail = "value " + print(f.value);
  } else {
    rep.verdict = V::Disagree;
    rep.detail = "machine " + print(f.value) + " logw " + format_real(f.logw) +
                 " vs big-step " + print(b->value) + " logw " + format_real(b->logw);
  }
  return rep;
}

}  // namespace entropic
