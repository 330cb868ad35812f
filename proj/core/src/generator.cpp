#include "entropic/generator.hpp"

namespace entropic {

namespace {

constexpr double kLiterals[] = {0, 1, -1, 0.5, 2, -2.5, 3, 0.25};
constexpr double kPositive[] = {0.5, 1, 2, 3, 0.25};

}  // namespace

Generator::Generator(std::uint64_t seed, GenConfig cfg) : rng_(seed), cfg_(cfg) {}

double Generator::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

std::size_t Generator::below(std::size_t n) { return n == 0 ? 0 : rng_() % n; }

double Generator::literal() { return kLiterals[below(std::size(kLiterals))]; }

double Generator::positive_literal() { return kPositive[below(std::size(kPositive))]; }

Identifier Generator::name(std::string_view prefix) {
  return std::string(prefix) + std::to_string(counter_++);
}

Identifier Generator::binder(const std::vector<Identifier>& env) {
  if (!env.empty() && chance(cfg_.shadow_rate)) return env[below(env.size())];
  return name();
}

Value Generator::value(const std::vector<Identifier>& env, int depth) {
  const double r = uniform();
  if (cfg_.allow_lambda && depth > 0 && r < 0.15) {
    const Identifier x = binder(env);
    auto inner = env;
    inner.push_back(x);
    return lam(x, expr(inner, depth - 1));
  }
  if (!env.empty() && r < 0.55) return var(env[below(env.size())]);
  return real(literal());
}

ExprPtr Generator::expr(const std::vector<Identifier>& env, int depth) {
  enum Form { kVal, kSample, kOp, kLet, kIf, kApp, kFactor, kDist };
  // Leaves dominate at depth 0; lets dominate above.
  static constexpr int kWeights[2][8] = {
      {3, 3, 3, 0, 0, 1, 1, 1},
      {2, 2, 3, 5, 1, 2, 1, 1},
  };
  const int* w = kWeights[depth > 0 ? 1 : 0];
  int total = 0;
  int allowed[8];
  for (int f = 0; f < 8; ++f) {
    bool ok = true;
    if (f == kIf && !cfg_.allow_if) ok = false;
    if (f == kFactor && !cfg_.allow_factor) ok = false;
    if (f == kDist && !cfg_.allow_dist) ok = false;
    allowed[f] = ok ? w[f] : 0;
    total += allowed[f];
  }
  int pick = static_cast<int>(below(static_cast<std::size_t>(total)));
  int form = 0;
  while (pick >= allowed[form]) pick -= allowed[form++];

  const int sub = depth > 0 ? depth - 1 : 0;
  switch (form) {
    case kVal:
      return val(value(env, sub));
    case kSample:
      return sample();
    case kOp: {
      const OpName o = kAllOps[below(kAllOps.size())];
      std::vector<Value> args;
      for (int i = 0; i < arity(o); ++i) args.push_back(value(env, 0));
      // Keep the normal-family operations mostly in their domain.
      if (o == OpName::NormalInvCdf || o == OpName::NormalPdf || o == OpName::NormalCdf) {
        if (chance(0.8)) args[2] = real(positive_literal());
      }
      return op(o, std::move(args));
    }
    case kLet: {
      ExprPtr rhs = expr(env, sub);
      const Identifier x = binder(env);
      auto inner = env;
      inner.push_back(x);
      return let(x, std::move(rhs), expr(inner, sub));
    }
    case kIf:
      return if_(value(env, 0), expr(env, sub), expr(env, sub));
    case kApp: {
      Value fn = value(env, sub);
      if (depth > 0 && cfg_.allow_lambda && chance(0.6)) {
        const Identifier x = binder(env);
        auto inner = env;
        inner.push_back(x);
        fn = lam(x, expr(inner, sub));
      }
      return app(std::move(fn), value(env, sub));
    }
    case kFactor:
      return factor(chance(0.7) ? real(positive_literal()) : value(env, 0));
    default:
      return dist(DistName::Normal,
                  {value(env, 0), chance(0.8) ? real(positive_literal()) : value(env, 0)});
  }
}

DExprPtr Generator::direct(const std::vector<Identifier>& env, int depth) {
  const double r = uniform();
  auto leaf = [&]() -> DExprPtr {
    const double q = uniform();
    if (q < 0.3) return direct::sample();
    if (!env.empty() && q < 0.65) return direct::var(env[below(env.size())]);
    return direct::real(literal());
  };
  if (depth <= 0) return leaf();
  const int sub = depth - 1;
  auto with = [&](const Identifier& x) {
    auto inner = env;
    inner.push_back(x);
    return inner;
  };
  if (r < 0.15) return leaf();
  if (r < 0.35) {
    const Identifier x = binder(env);
    DExprPtr rhs = direct(env, sub);
    return direct::let(x, std::move(rhs), direct(with(x), sub));
  }
  if (r < 0.55) {
    const OpName o = kAllOps[below(kAllOps.size())];
    std::vector<DExprPtr> args;
    for (int i = 0; i < arity(o); ++i) args.push_back(direct(env, sub));
    if ((o == OpName::NormalInvCdf || o == OpName::NormalPdf || o == OpName::NormalCdf) &&
        chance(0.8)) {
      args[2] = direct::real(positive_literal());
    }
    return direct::op(o, std::move(args));
  }
  if (r < 0.7) {
    DExprPtr fn;
    if (cfg_.allow_lambda && chance(0.7)) {
      const Identifier x = binder(env);
      fn = direct::lam(x, direct(with(x), sub));
    } else {
      fn = direct(env, sub);
    }
    return direct::app(std::move(fn), direct(env, sub));
  }
  if (r < 0.8 && cfg_.allow_if) {
    return direct::if_(direct(env, sub), direct(env, sub), direct(env, sub));
  }
  if (r < 0.9 && cfg_.allow_factor) {
    return direct::factor(chance(0.6) ? direct::real(positive_literal()) : direct(env, sub));
  }
  if (cfg_.allow_lambda) {
    const Identifier x = binder(env);
    return direct::lam(x, direct(with(x), sub));
  }
  return leaf();
}

Cont Generator::cont(int frames) {
  const int n = static_cast<int>(below(static_cast<std::size_t>(frames) + 1));
  Cont k = Cont::halt();
  for (int i = 0; i < n; ++i) {
    const Identifier x = name("k");
    k = Cont::let_k(x, expr({x}, 1), k);
  }
  return k;
}

Trace Generator::trace(std::size_t max_len) {
  const std::size_t len = below(max_len + 1);
  Trace t;
  t.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    t.push_back(chance(0.03) ? (chance(0.5) ? -0.5 : 1.5) : uniform());
  }
  return t;
}

}  // namespace entropic
