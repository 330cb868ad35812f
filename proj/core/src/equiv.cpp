#include "entropic/equiv.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "entropic/ops.hpp"
#include "entropic/parse.hpp"
#include "entropic/trace.hpp"

namespace entropic {

std::string_view to_string(Semantics s) { return s == Semantics::Split ? "split" : "sequenced"; }

std::optional<Semantics> semantics_from(std::string_view s) {
  if (s == "split") return Semantics::Split;
  if (s == "sequenced" || s == "seq") return Semantics::Sequenced;
  return std::nullopt;
}

ExprPtr close_with(const ExprPtr& e, const Substitution& s) {
  ExprPtr out = e;
  for (const auto& [x, v] : s) out = subst(out, x, v);
  return out;
}

std::string print(const Substitution& s) {
  if (s.empty()) return "{}";
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += s[i].first + " := " + print(s[i].second);
  }
  return out + "}";
}

std::vector<Value> default_value_pool() {
  return {
      real(0),
      real(1),
      real(-2.5),
      real(0.5),
      lam("x", val(var("x"))),
      lam("x", let("u", sample(), op(OpName::Add, {var("u"), var("x")}))),
  };
}

std::vector<Cont> default_continuations() {
  const Cont halt = Cont::halt();
  return {
      halt,
      Cont::let_k("x", op(OpName::Add, {var("x"), real(1)}), halt),
      Cont::let_k("x",
                  let("e", op(OpName::Exp, {var("x")}),
                      let("w", factor(var("e")), val(var("x")))),
                  halt),
      Cont::let_k("x", if_(var("x"), sample(), val(var("x"))), halt),
  };
}

CiuSuite default_suite(const IdentSet& fv) {
  CiuSuite s;
  const auto pool = default_value_pool();
  const std::vector<Identifier> vars(fv.begin(), fv.end());
  if (vars.empty()) {
    s.substitutions.push_back({});
  } else {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      Substitution sub;
      for (std::size_t j = 0; j < vars.size(); ++j) {
        sub.emplace_back(vars[j], pool[(i + j) % pool.size()]);
      }
      s.substitutions.push_back(std::move(sub));
    }
  }
  s.continuations = default_continuations();
  s.bins = uniform_bins(-10, 10, 32, true);
  return s;
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

bool heavy_tailed(const MeasureEstimate& m, double min_ess) {
  return m.max_weight > 0 && m.ess < min_ess;
}

MeasureEstimate measure_side(const ExprPtr& closed, const Cont& k, std::size_t cont_index,
                             const CiuSuite& suite, const Seed& seed) {
  const Seed s = seed.child(stable_hash(de_bruijn(*closed))).child(cont_index);
  EstimateOptions opt;
  opt.n = suite.n;
  opt.fuel = suite.fuel;
  opt.threads = suite.threads;
  if (suite.semantics == Semantics::Sequenced) return seq_estimate(closed, k, suite.bins, s, opt);
  return estimate(closed, k, suite.bins, s, opt);
}

}  // namespace

EquivReport check_equiv(const ExprPtr& a, const ExprPtr& b, const CiuSuite& suite,
                        const Seed& seed) {
  EquivReport r;
  std::uint64_t clamped = 0;
  std::uint64_t diverged = 0;
  for (std::size_t i = 0; i < suite.substitutions.size(); ++i) {
    const ExprPtr ca = close_with(a, suite.substitutions[i]);
    const ExprPtr cb = close_with(b, suite.substitutions[i]);
    for (std::size_t j = 0; j < suite.continuations.size(); ++j) {
      const Cont& k = suite.continuations[j];
      EquivCell cell;
      cell.substitution = i;
      cell.continuation = j;
      cell.left = measure_side(ca, k, j, suite, seed);
      cell.right = measure_side(cb, k, j, suite, seed);
      cell.comparison = compare(cell.left, cell.right, suite.z);
      cell.conclusive = !heavy_tailed(cell.left, suite.min_ess) &&
                        !heavy_tailed(cell.right, suite.min_ess);
      clamped += cell.left.clamped + cell.right.clamped;
      diverged += cell.left.diverged + cell.right.diverged;
      if (!cell.comparison.pass) r.pass = false;
      if (!cell.conclusive) ++r.inconclusive;
      if (cell.conclusive && !cell.comparison.pass) r.conclusive_cells_pass = false;
      if (r.cells.empty() || cell.comparison.worst_z > r.cells[r.worst].comparison.worst_z) {
        r.worst = r.cells.size();
      }
      r.cells.push_back(std::move(cell));
    }
  }
  if (clamped > 0) {
    r.warnings.push_back(std::to_string(clamped) +
                         " draws had weights clamped at 1e300; the measure may be unbounded");
  }
  if (diverged > 0) {
    r.warnings.push_back(std::to_string(diverged) +
                         " draws ran out of fuel; their mass is unaccounted for");
  }
  if (r.inconclusive > 0) {
    r.warnings.push_back(std::to_string(r.inconclusive) +
                         " cells have heavy-tailed weights (effective sample size below " +
                         format_real(suite.min_ess) + "); their standard errors are unreliable");
  }
  return r;
}

std::string to_json(const EquivReport& r, const CiuSuite& suite, int indent) {
  nlohmann::json j;
  j["schema"] = "entropic/1";
  j["pass"] = r.pass;
  j["inconclusive_cells"] = r.inconclusive;
  j["conclusive_cells_pass"] = r.conclusive_cells_pass;
  j["n"] = suite.n;
  j["z"] = suite.z;
  j["semantics"] = std::string(to_string(suite.semantics));
  auto cell_json = [&](const EquivCell& c) {
    nlohmann::json o;
    o["substitution"] = print(suite.substitutions[c.substitution]);
    o["continuation"] = print(suite.continuations[c.continuation]);
    o["pass"] = c.comparison.pass;
    o["conclusive"] = c.conclusive;
    o["left_ess"] = c.left.ess;
    o["right_ess"] = c.right.ess;
    o["worst_z"] = c.comparison.worst_z;
    o["worst_cell"] = c.comparison.worst_cell;
    o["left_total_mass"] = c.left.total_mass;
    o["right_total_mass"] = c.right.total_mass;
    o["left_masses"] = c.left.masses;
    o["right_masses"] = c.right.masses;
    o["left_se"] = c.left.std_errors;
    o["right_se"] = c.right.std_errors;
    return o;
  };
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) cells.push_back(cell_json(c));
  j["cells"] = cells;
  if (!r.cells.empty()) j["worst"] = cell_json(r.cells[r.worst]);
  j["warnings"] = r.warnings;
  return j.dump(indent);
}

// ---------------------------------------------------------------------------
// Rule instances

namespace {

constexpr int kInstanceDepth = 2;

struct InstanceBuilder {
  Generator& g;
  std::vector<Identifier> env;

  ExprPtr expr(const std::vector<Identifier>& extra = {}) {
    auto e = env;
    e.insert(e.end(), extra.begin(), extra.end());
    return g.expr(e, kInstanceDepth);
  }
  // A first-order operand: variable in scope or literal.
  Value operand() {
    if (!env.empty() && g.chance(0.5)) return var(env[g.below(env.size())]);
    return real(g.literal());
  }
  Value scale() { return g.chance(0.8) ? real(g.positive_literal()) : operand(); }
  Direction dir(bool bidirectional) {
    return bidirectional && g.chance(0.5) ? Direction::Reverse : Direction::Forward;
  }

  // Let spine with a placeholder hole; returns the context and the hole.
  std::pair<ExprPtr, Focus> spine(const std::vector<Identifier>& scope, int depth) {
    if (depth == 0) return {val(var("HOLE")), {}};
    const Identifier y = g.name("s");
    auto inner_scope = scope;
    inner_scope.push_back(y);
    if (g.chance(0.5)) {
      auto [inner, hole] = spine(scope, depth - 1);
      hole.insert(hole.begin(), 0);
      return {let(y, inner, g.expr(inner_scope, 1)), hole};
    }
    ExprPtr rhs = g.expr(scope, 1);
    auto [inner, hole] = spine(inner_scope, depth - 1);
    hole.insert(hole.begin(), 1);
    return {let(y, rhs, inner), hole};
  }
};

RuleInstance raw_instance(const std::string& rule, InstanceBuilder& b) {
  Generator& g = b.g;
  const RewriteRule* r = find_rule(rule);
  if (!r) throw std::invalid_argument("unknown rule '" + rule + "'");
  RuleInstance out;
  out.step.rule = rule;
  out.step.dir = b.dir(r->bidirectional);
  const bool fwd = out.step.dir == Direction::Forward;
  auto nm = [&](std::string_view p = "x") { return g.name(p); };

  if (rule == "beta_v" || rule == "let_v") {
    if (fwd) {
      const Identifier x = nm();
      ExprPtr body = b.expr({x});
      const Value v = g.chance(0.2) ? g.value(b.env, 1) : b.operand();
      out.pre = rule == "beta_v" ? app(lam(x, body), v) : let(x, val(v), body);
    } else {
      out.pre = b.expr();
      out.step.args.value = b.operand();
    }
  } else if (rule == "let_id") {
    if (fwd) {
      const Identifier x = nm();
      out.pre = let(x, b.expr(), val(var(x)));
    } else {
      out.pre = b.expr();
    }
  } else if (rule == "delta_fold") {
    for (;;) {
      const OpName o = kAllOps[g.below(kAllOps.size())];
      std::vector<Value> args;
      for (int i = 0; i < arity(o); ++i) args.push_back(real(g.literal()));
      if (o == OpName::NormalInvCdf) args[0] = real(g.chance(0.5) ? 0.25 : 0.75);
      if (delta(o, args)) {
        const Identifier y = nm();
        out.pre = let(y, op(o, std::move(args)), b.expr({y}));
        out.step.focus = {0};
        break;
      }
    }
  } else if (rule == "assoc") {
    const Identifier x1 = nm();
    const Identifier x2 = nm();
    if (fwd) {
      out.pre = let(x2, let(x1, b.expr(), b.expr({x1})), b.expr({x2}));
    } else {
      out.pre = let(x1, b.expr(), let(x2, b.expr({x1}), b.expr({x2})));
    }
  } else if (rule == "commut") {
    const Identifier x1 = nm();
    const Identifier x2 = nm();
    out.pre = let(x1, b.expr(), let(x2, b.expr(), b.expr({x1, x2})));
  } else if (rule == "let_S") {
    auto [ctx, hole] = b.spine(b.env, 1 + static_cast<int>(g.below(3)));
    ExprPtr e = b.expr();
    if (fwd) {
      const Identifier x = nm();
      out.pre = let(x, e, replace_at(ctx, hole, val(var(x))));
    } else {
      out.pre = replace_at(ctx, hole, e);
      out.step.args.hole = hole;
    }
  } else if (rule == "factor_merge") {
    const Identifier px = nm("p");
    const Identifier qy = nm("q");
    auto positive = [&]() -> Value {
      const double c = g.uniform();
      if (c < 0.4) return var(px);
      if (c < 0.8) return var(qy);
      return real(g.positive_literal());
    };
    const Value x = positive();
    const Value y = positive();
    const Identifier a = nm("a");
    ExprPtr core;
    if (fwd) {
      core = let(a, factor(x), factor(y));
    } else {
      const Identifier c = nm("c");
      core = let(c, op(OpName::Mul, {x, y}), let(a, factor(var(c)), val(y)));
    }
    out.pre = let(px, op(OpName::NormalPdf, {b.operand(), real(0), real(1)}),
                  let(qy, op(OpName::Exp, {b.operand()}), core));
    out.step.focus = {1, 1};
  } else if (rule == "normalpdf_shift") {
    const Identifier p = nm("p");
    const Value x = b.operand();
    const Value y = b.operand();
    const Value s = b.scale();
    ExprPtr body = b.expr({p});
    if (fwd) {
      const Identifier rr = nm("r");
      out.pre = let(rr, op(OpName::Sub, {x, y}),
                    let(p, op(OpName::NormalPdf, {var(rr), real(0), s}), body));
    } else {
      out.pre = let(p, op(OpName::NormalPdf, {y, x, s}), body);
    }
  } else if (rule == "add_commut") {
    const Identifier z = nm();
    out.pre = let(z, op(OpName::Add, {b.operand(), b.operand()}), b.expr({z}));
    out.step.focus = {0};
  } else if (rule == "sub_reassoc") {
    const Identifier s = nm("s");
    const Identifier rr = nm("r");
    const Value x = b.operand();
    const Value y = b.operand();
    const Value z = b.operand();
    ExprPtr body = b.expr({rr});
    if (fwd) {
      out.pre = let(s, op(OpName::Add, {x, y}), let(rr, op(OpName::Sub, {var(s), z}), body));
    } else {
      out.pre = let(s, op(OpName::Sub, {z, x}), let(rr, op(OpName::Sub, {y, var(s)}), body));
    }
  } else if (rule == "conjugacy_normal") {
    const Identifier m = nm("m");
    const Identifier p = nm("p");
    const Identifier z = nm("z");
    out.pre = let(m, normal_by_invcdf(b.operand(), real(g.positive_literal())),
                  let(p, op(OpName::NormalPdf, {b.operand(), var(m), real(g.positive_literal())}),
                      let(z, factor(var(p)), val(var(m)))));
  } else if (rule == "dist_invcdf") {
    const Value m = b.operand();
    const Value s = b.scale();
    const Identifier w = nm("w");
    ExprPtr inner = fwd ? dist(DistName::Normal, {m, s}) : normal_by_invcdf(m, s, nm("u"));
    out.pre = let(w, inner, b.expr({w}));
    out.step.focus = {0};
  } else {
    throw std::invalid_argument("no instance generator for rule '" + rule + "'");
  }

  // Sometimes bury the redex under an outer let.
  if (g.chance(0.3)) {
    const Identifier w = nm("w");
    if (g.chance(0.5)) {
      out.pre = let(w, b.expr(), out.pre);
      out.step.focus.insert(out.step.focus.begin(), 1);
    } else {
      out.pre = let(w, out.pre, b.expr({w}));
      out.step.focus.insert(out.step.focus.begin(), 0);
    }
  }
  return out;
}

}  // namespace

RuleInstance generate_instance(const std::string& rule, Generator& g) {
  if (!find_rule(rule)) throw std::invalid_argument("unknown rule '" + rule + "'");
  for (;;) {
    InstanceBuilder b{g, g.chance(0.5) ? std::vector<Identifier>{"a"} : std::vector<Identifier>{}};
    RuleInstance inst = raw_instance(rule, b);
    try {
      apply_rule(inst.pre, inst.step);
      return inst;
    } catch (const NotApplicable&) {
      // Random parts occasionally break a side condition; draw again.
    }
  }
}

FuzzSummary fuzz_rule(const std::string& rule, const FuzzConfig& cfg, const Seed& seed) {
  FuzzSummary s;
  s.rule = rule;
  const Seed gen_seed = seed.child(0);
  Generator g(gen_seed.hi ^ gen_seed.lo);
  const std::uint64_t max_attempts = cfg.max_attempts > 0 ? cfg.max_attempts : 4 * cfg.count;
  for (std::uint64_t i = 0; i < max_attempts && s.instances < cfg.count; ++i) {
    const RuleInstance inst = generate_instance(rule, g);
    const ExprPtr post = apply_rule(inst.pre, inst.step);
    IdentSet fv = free_vars(inst.pre);
    for (const auto& x : free_vars(post)) fv.insert(x);
    CiuSuite suite = default_suite(fv);
    suite.n = cfg.n;
    suite.z = cfg.z;
    suite.fuel = cfg.fuel;
    suite.semantics = cfg.semantics;
    suite.threads = cfg.threads;
    suite.min_ess = cfg.min_ess;
    suite.bins = uniform_bins(-10, 10, static_cast<int>(cfg.bins), true);
    const Seed cell_seed = seed.child(1).child(i);
    const EquivReport r = check_equiv(inst.pre, post, suite, cell_seed);
    if (r.conclusive_cells_pass && r.inconclusive > 0) {
      ++s.inconclusive;
      continue;
    }
    ++s.instances;
    if (r.conclusive_cells_pass) {
      ++s.passed;
      continue;
    }
    ++s.failed;
    // worst among the conclusive cells
    std::size_t w = 0;
    double wz = -1;
    for (std::size_t c = 0; c < r.cells.size(); ++c) {
      if (r.cells[c].conclusive && r.cells[c].comparison.worst_z > wz) {
        wz = r.cells[c].comparison.worst_z;
        w = c;
      }
    }
    const auto& worst = r.cells[w];
    s.counterexamples.push_back({inst.pre, post, inst.step, cell_seed,
                                 print(suite.substitutions[worst.substitution]) + " / " +
                                     print(suite.continuations[worst.continuation]) + " / " +
                                     worst.comparison.worst_cell,
                                 worst.comparison.worst_z});
  }
  return s;
}

std::string to_json(const FuzzSummary& s, int indent) {
  nlohmann::json j;
  j["schema"] = "entropic/1";
  j["rule"] = s.rule;
  j["instances"] = s.instances;
  j["passed"] = s.passed;
  j["failed"] = s.failed;
  j["inconclusive"] = s.inconclusive;
  nlohmann::json ces = nlohmann::json::array();
  for (const auto& c : s.counterexamples) {
    nlohmann::json o;
    o["pre"] = print(c.pre);
    o["post"] = print(c.post);
    o["step"] = nlohmann::json::parse(script_to_json({c.step}))[0];
    o["seed"] = c.seed.hex();
    o["worst_cell"] = c.worst_cell;
    o["worst_z"] = c.worst_z;
    ces.push_back(o);
  }
  j["counterexamples"] = ces;
  return j.dump(indent);
}

}  // namespace entropic
