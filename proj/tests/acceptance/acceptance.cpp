// Acceptance gate: one line per criterion, exit status 0 only when every
// criterion passes within its runtime limit.
//
// Usage: entropic_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "entropic/bigstep.hpp"
#include "entropic/equiv.hpp"
#include "entropic/generator.hpp"
#include "entropic/machine.hpp"
#include "entropic/measure.hpp"
#include "entropic/ops.hpp"
#include "entropic/parse.hpp"
#include "entropic/rewrite.hpp"
#include "entropic/shuffle.hpp"
#include "entropic/trace.hpp"

namespace {

using namespace entropic;

// Pinned tolerances and sizes.
constexpr double kLogwRelTol = 1e-9;
constexpr double kSeWidth = 3;      // "within 3 (combined) standard errors"
constexpr double kFsfZ = 4;         // CIU pass threshold used for shuffled corpora
constexpr double kRuleZ = 4;
constexpr double kDupMargin = 10;   // negative control must exceed by 10 se
constexpr double kKsLimit = 0.01;
constexpr double kCorrLimit = 0.02;
constexpr double kBandHalfWidth = 0.3;
constexpr std::uint64_t kBigN = 100000;
constexpr std::uint64_t kFuel = 100000;

Seed seed_for(int criterion) { return Seed::from_u64(1000 + criterion); }

struct Verdict {
  bool pass;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::pair<std::string, ExprPtr>> corpus() {
  std::vector<std::filesystem::path> files;
  for (const auto& f : std::filesystem::directory_iterator(ENTROPIC_CORPUS_DIR)) {
    if (f.path().extension() == ".plc") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, ExprPtr>> out;
  for (const auto& p : files) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    out.emplace_back(p.stem().string(), parse_expr(s.str()));
  }
  return out;
}

EstimateOptions big() { return {.n = kBigN, .fuel = kFuel, .threads = default_threads()}; }

std::vector<RealSet> cli_bins() { return uniform_bins(-10, 10, 64, true); }

// ---------------------------------------------------------------------------

Verdict c1_agreement() {
  Generator g(seed_for(1).lo);
  int disagree = 0, agree = 0, inconclusive = 0;
  std::string first;
  for (int i = 0; i < 1000; ++i) {
    const ExprPtr e = g.closed();
    for (int j = 0; j < 4; ++j) {
      const auto r = check_agreement(seed_for(1).child(4 * i + j), e, kFuel);
      switch (r.verdict) {
        case AgreementReport::Verdict::Agree:
          ++agree;
          break;
        case AgreementReport::Verdict::Disagree:
          if (disagree++ == 0) first = print(e) + ": " + r.detail;
          break;
        default:
          ++inconclusive;
      }
    }
  }
  return {disagree == 0 && agree > 0,
          fmt("%d agree, %d disagree, %d non-terminating of 4000", agree, disagree, inconclusive) +
              (first.empty() ? "" : "; first: " + first)};
}

Verdict c2_genericity() {
  Generator g(seed_for(2).lo);
  int mismatches = 0, reached = 0;
  for (int i = 0; i < 500; ++i) {
    const ExprPtr e = g.closed();
    const Entropy sigma = root(seed_for(2).child(i));
    std::optional<ReachedValue> first;
    for (int j = 0; j < 3; ++j) {
      const Cont k = j == 0 ? Cont::halt() : g.cont(3);
      const Entropy tau = root(seed_for(2).child(i).child(j + 1));
      const auto r = run_to_value(sigma, e, k, tau, kFuel);
      if (j == 0) {
        first = r;
        reached += r.has_value();
        continue;
      }
      const bool same = r.has_value() == first.has_value() &&
                        (!r || (r->steps == first->steps && equal(r->value, first->value) &&
                                r->logw == first->logw));
      mismatches += !same;
    }
  }
  return {mismatches == 0, fmt("%d programs reached a value; %d mismatches over 1000 pairs", reached,
                               mismatches)};
}

Verdict c3_uniform() {
  const auto m = estimate(sample(), {}, {RealSet::half_open(0, 0.5)}, seed_for(3), big());
  const double err = std::fabs(m.masses[0] - 0.5);
  return {err <= kSeWidth * m.std_errors[0],
          fmt("mass %.5f, se %.5f, |err| = %.2f se", m.masses[0], m.std_errors[0],
              err / m.std_errors[0])};
}

Verdict c4_factor() {
  const auto m = estimate(parse_expr("(let (_ (factor 2)) (sample))"), {}, {RealSet::half_open(0, 1)},
                          seed_for(4), big());
  // Every draw has weight exactly 2, so the sample se is 0; the comparison
  // se is floored at max_weight / n as everywhere else.
  const double se = std::max(m.total_se, m.max_weight / static_cast<double>(m.n));
  const double err = std::fabs(m.total_mass - 2.0);
  return {err <= kSeWidth * se, fmt("total mass %.6f, se %.2g", m.total_mass, se)};
}

// Measure equations. Both sides of an equation use the same seed; one-step
// equations therefore agree draw for draw, and let/return/sample compare
// independent entropy.
Verdict c5_measure_equations() {
  const auto bins = uniform_bins(-6, 6, 24, true);
  const Seed seed = seed_for(5);
  const auto opt = big();
  const auto est = [&](const ExprPtr& e, const Cont& k, std::uint64_t salt) {
    return estimate(e, k, bins, seed.child(salt), opt);
  };
  const auto K = [](std::string_view s) { return parse_cont(s); };
  const Cont k_noise = K("(letk (x (let (u (sample)) (+ u x))) (halt))");
  const Cont k_weight = K("(letk (x (let (e (exp x)) (let (w (factor e)) x))) (halt))");
  const Cont k_branch = K("(letk (x (let (c (< x 0.5)) (if c (sample) (normal x 1)))) (halt))");
  const std::vector<Cont> ks{k_noise, k_weight, k_branch};

  struct Eq {
    std::string schema;
    MeasureEstimate lhs, rhs;
  };
  std::vector<Eq> eqs;
  std::uint64_t salt = 0;
  const auto pair = [&](std::string schema, const ExprPtr& l, const Cont& kl, const ExprPtr& r,
                        const Cont& kr) {
    ++salt;
    eqs.push_back({std::move(schema), est(l, kl, salt), est(r, kr, salt)});
  };

  // let: mu(let x = e1 in e2, K) = mu(e1, (x.e2)::K)
  const std::vector<std::tuple<std::string, std::string, std::string>> lets{
      {"x", "(sample)", "(+ x x)"},
      {"y", "(normal 0 1)", "(let (z (sample)) (* y z))"},
      {"f", "(lam a (+ a 1))", "(let (u (sample)) (app f u))"}};
  for (std::size_t i = 0; i < lets.size(); ++i) {
    const auto& [x, e1, e2] = lets[i];
    const ExprPtr body = parse_expr(e2);
    pair("let", let(x, parse_expr(e1), body), ks[i], parse_expr(e1), Cont::let_k(x, body, ks[i]));
  }
  // return: mu(v, (x.e)::K) = mu(e[v/x], K)
  const std::vector<std::pair<Value, std::string>> rets{
      {real(0.25), "(let (u (sample)) (- x u))"},
      {real(-1), "(normal x 2)"},
      {parse_value("(lam a (* a 3))"), "(let (u (sample)) (app x u))"}};
  for (std::size_t i = 0; i < rets.size(); ++i) {
    const ExprPtr body = parse_expr(rets[i].second);
    pair("return", val(rets[i].first), Cont::let_k("x", body, ks[i]), subst(body, "x", rets[i].first),
         ks[i]);
  }
  // app: mu((lam x e) v, K) = mu(e[v/x], K)
  const std::vector<std::pair<std::string, Value>> apps{
      {"(let (u (sample)) (* u x))", real(3)},
      {"(normal x 1)", real(0.5)},
      {"(let (u (sample)) (let (c (< u 0.5)) (if c x 2)))", real(-2)}};
  for (std::size_t i = 0; i < apps.size(); ++i) {
    const ExprPtr body = parse_expr(apps[i].first);
    pair("app", app(lam("x", body), apps[i].second), ks[i], subst(body, "x", apps[i].second), ks[i]);
  }
  // op: mu(op(v...), K) = mu(delta(op, v...), K), delta computed independently
  const std::vector<std::pair<std::string, double>> ops{
      {"(+ 1 2.5)", 3.5}, {"(normalinvcdf 0.975 0 1)", 1.959963984540054}, {"(exp 0.5)", std::exp(0.5)}};
  for (std::size_t i = 0; i < ops.size(); ++i) {
    pair("op", parse_expr(ops[i].first), ks[i], val(real(ops[i].second)), ks[i]);
  }
  // if-true / if-false
  const std::vector<std::tuple<double, std::string, std::string>> ifs{
      {1, "(sample)", "(normal 0 1)"}, {0.5, "(normal 1 1)", "3"}, {7, "(let (u (sample)) (* 2 u))", "(sample)"}};
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    const auto& [c, t, f] = ifs[i];
    pair("if-true", if_(real(c), parse_expr(t), parse_expr(f)), ks[i], parse_expr(t), ks[i]);
    pair("if-false", if_(real(-c), parse_expr(t), parse_expr(f)), ks[i], parse_expr(f), ks[i]);
  }
  // sample: mu(sample, K) = integral over r in [0,1) of mu(r, K)
  for (std::size_t i = 0; i < ks.size(); ++i) {
    ++salt;
    const Seed s = seed.child(salt);
    const Cont k = ks[i];
    const auto rhs = estimate_with(
        [&](std::uint64_t, const Seed& d) {
          const double r = seed_uniform(d.child(3));
          return draw(val(real(r)), k, d, opt.fuel);
        },
        bins, s, opt.n, opt.threads);
    eqs.push_back({"sample", estimate(sample(), k, bins, s, opt), rhs});
  }
  // factor: mu(factor r, K) = r * mu(r, K)
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double r = std::vector<double>{2, 0.5, 3.25}[i];
    ++salt;
    MeasureEstimate rhs = est(val(real(r)), ks[i], salt);
    for (auto& x : rhs.masses) x *= r;
    for (auto& x : rhs.std_errors) x *= r;
    rhs.total_mass *= r;
    rhs.total_se *= r;
    rhs.non_real_mass *= r;
    rhs.non_real_se *= r;
    rhs.max_weight *= r;
    eqs.push_back({"factor", est(factor(real(r)), ks[i], salt), rhs});
  }

  int failed = 0;
  double worst = 0;
  std::string worst_at;
  std::set<std::string> schemas;
  for (const auto& q : eqs) {
    schemas.insert(q.schema);
    const auto c = compare(q.lhs, q.rhs, kSeWidth);
    failed += !c.pass;
    if (c.worst_z > worst) {
      worst = c.worst_z;
      worst_at = q.schema + " " + c.worst_cell;
    }
  }
  return {failed == 0 && schemas.size() == 8 && eqs.size() == 24,
          fmt("%zu schemas, %zu instances, %d failed; worst z = %.2f", schemas.size(), eqs.size(),
              failed, worst) +
              " at " + worst_at};
}

Verdict c6_fsf() {
  const auto programs = corpus();
  const auto bins = cli_bins();
  const auto opt = big();
  int failed = 0, cases = 0;
  double worst = 0;
  std::string worst_at;
  const std::vector<std::pair<std::string, Fsf>> shuffles{
      {"commut", phi_commut()}, {"assoc", phi_assoc()}, {"id", phi_id()}};
  for (std::size_t p = 0; p < programs.size(); ++p) {
    const auto& [name, e] = programs[p];
    const auto plain = estimate(e, {}, bins, seed_for(6).child(p), opt);
    for (std::size_t f = 0; f < shuffles.size(); ++f) {
      const auto sh = shuffled_estimate(e, {}, shuffles[f].second, bins,
                                        seed_for(6).child(100 + 10 * p + f), opt);
      const auto c = compare(plain, sh, kFsfZ);
      ++cases;
      failed += !c.pass;
      if (c.worst_z > worst) {
        worst = c.worst_z;
        worst_at = name + "/" + shuffles[f].first;
      }
    }
  }

  // Duplicating negative control on the two-sample difference.
  const auto diff = std::find_if(programs.begin(), programs.end(),
                                 [](const auto& p) { return p.first == "difference"; });
  const Fsf dup = parse_fsf("(cons [L] (cons [L] [R]))");
  const auto plain = estimate(diff->second, {}, bins, seed_for(6).child(900), opt);
  const auto shuffled = shuffled_estimate(diff->second, {}, dup, bins, seed_for(6).child(901), opt);
  std::size_t zero_bin = 0;
  while (!bins[zero_bin].contains(0.0)) ++zero_bin;
  const double excess = shuffled.masses[zero_bin] - plain.masses[zero_bin];
  const double se = plain.std_errors[zero_bin];
  const bool control = !is_non_duplicating(dup) && excess > kDupMargin * se;

  return {failed == 0 && control,
          fmt("%d/%d shuffled corpora pass (worst z = %.2f, ", cases - failed, cases, worst) +
              worst_at + fmt("); duplicating control excess %.1f se", excess / se)};
}

Verdict c7_rules() {
  FuzzConfig cfg;
  cfg.count = 50;
  cfg.n = 10000;
  cfg.z = kRuleZ;
  cfg.threads = default_threads();
  std::uint64_t instances = 0, failed = 0, inconclusive = 0;
  std::string failures;
  for (std::size_t i = 0; i < rules().size(); ++i) {
    const auto& name = rules()[i].name;
    const auto s = fuzz_rule(name, cfg, seed_for(7).child(i));
    instances += s.instances;
    failed += s.failed;
    inconclusive += s.inconclusive;
    for (const auto& c : s.counterexamples) {
      failures += "; " + name + " " + print(c.pre) + " (" + c.worst_cell +
                  fmt(", z = %.2f)", c.worst_z);
    }
  }
  return {failed == 0 && instances >= 50 * rules().size(),
          fmt("%zu rules, %llu instances, %llu failed, %llu heavy-tailed set aside", rules().size(),
              static_cast<unsigned long long>(instances), static_cast<unsigned long long>(failed),
              static_cast<unsigned long long>(inconclusive)) +
              failures};
}

Verdict c8_commut_seed_level() {
  Generator g(seed_for(8).lo, {.max_depth = 3});
  int compared = 0, mismatches = 0, finals = 0;
  const Fsf phi = phi_commut();
  for (int p = 0; p < 20; ++p) {
    const ExprPtr e1 = g.expr({}, 2);
    const ExprPtr e2 = g.expr({}, 2);
    const ExprPtr e3 = g.expr({"x1", "x2"}, 2);
    const ExprPtr pre = let("x1", e1, let("x2", e2, e3));
    const ExprPtr post = apply_rule(pre, {"commut", Direction::Forward, {}, {}});
    for (int s = 0; s < 200; ++s) {
      const Entropy sigma = root(seed_for(8).child(p).child(s));
      const Entropy tau = root(seed_for(8).child(p).child(1000 + s));
      const auto a = run(sigma, pre, {}, tau, kFuel);
      const auto b = run(apply_fsf(phi, sigma), post, {}, tau, kFuel);
      ++compared;
      const auto* fa = std::get_if<Final>(&a);
      const auto* fb = std::get_if<Final>(&b);
      if (fa && fb) {
        ++finals;
        mismatches += !(equal(fa->value, fb->value) && logw_close(fa->logw, fb->logw, kLogwRelTol));
      } else {
        mismatches += a.index() != b.index();
      }
    }
  }
  return {mismatches == 0 && finals > 0,
          fmt("%d runs (%d halted with a value), %d mismatches", compared, finals, mismatches)};
}

Verdict c9_regression() {
  const auto p = regression_pipeline();
  ExprPtr post;
  try {
    post = run_script(p.source, p.script);
  } catch (const ScriptError& e) {
    return {false, std::string("script failed: ") + e.what()};
  }
  const bool shape = matches_shape(p.expected_shape, post);
  const auto id = [](double x) { return x; };
  const auto opt = big();
  const auto pre_b = expectation(p.source, id, seed_for(9).child(1), opt);
  const auto post_b = expectation(post, id, seed_for(9).child(2), opt);
  const auto slope = expectation(regression_program(true), id, seed_for(9).child(3), opt);
  if (!pre_b || !post_b || !slope) return {false, "no weighted draws"};
  const double z = std::fabs(pre_b->value - post_b->value) /
                   std::hypot(pre_b->se, post_b->se);
  const bool band = std::fabs(post_b->value - 1.8) <= kBandHalfWidth &&
                    std::fabs(slope->value - 0.3) <= kBandHalfWidth;
  return {shape && z <= kSeWidth && band,
          fmt("%zu steps, shape %s; E[B] pre %.3f +- %.3f, post %.3f +- %.3f (%.2f se); E[A] %.3f",
              p.script.size(), shape ? "ok" : "MISMATCH", pre_b->value, pre_b->se, post_b->value,
              post_b->se, z, slope->value)};
}

Verdict c10_sequenced() {
  const auto programs = corpus();
  const auto bins = cli_bins();
  const auto opt = big();
  int failed = 0;
  double worst = 0;
  std::string worst_at;
  for (std::size_t p = 0; p < programs.size(); ++p) {
    const auto& [name, e] = programs[p];
    const auto split = estimate(e, {}, bins, seed_for(10).child(2 * p), opt);
    const auto seq = seq_estimate(e, {}, bins, seed_for(10).child(2 * p + 1), opt);
    const auto c = compare(split, seq, kSeWidth);
    failed += !c.pass;
    if (c.worst_z > worst) {
      worst = c.worst_z;
      worst_at = name + " " + c.worst_cell;
    }
  }
  return {failed == 0, fmt("%zu/%zu programs agree; worst z = %.2f at ", programs.size() - failed,
                           programs.size(), worst) +
                           worst_at};
}

Verdict c11_invcdf() {
  CiuSuite suite = default_suite({});
  suite.n = kBigN;
  suite.threads = default_threads();
  const auto r = check_equiv(parse_expr("(normal 0 1)"),
                             parse_expr("(let (u (sample)) (normalinvcdf u 0 1))"), suite,
                             seed_for(11));
  const auto& w = r.cells[r.worst].comparison;
  return {r.pass, fmt("%zu cells, worst z = %.2f at ", r.cells.size(), w.worst_z) + w.worst_cell};
}

Verdict c12_simulation() {
  Generator g(seed_for(12).lo);
  int disagree = 0, conclusive = 0, halted = 0;
  std::string first;
  for (int i = 0; i < 500; ++i) {
    const DExprPtr e = g.closed_direct();
    const Trace t = g.trace(8);
    const auto r = check_simulation(e, t, RealSet::all(), kFuel);
    conclusive += r.conclusive;
    halted += r.d_weight > 0;
    if (!r.agree && disagree++ == 0) first = print(*e) + ": " + r.detail;
  }
  return {disagree == 0 && conclusive > 0,
          fmt("500 programs, %d conclusive, %d with positive weight, %d disagreements", conclusive,
              halted, disagree) +
              (first.empty() ? "" : "; first: " + first)};
}

Verdict c13_entropy() {
  constexpr int n = 100000;
  std::vector<double> u(n), l(n), r(n);
  for (int i = 0; i < n; ++i) {
    const Entropy s = root(seed_for(13).child(i));
    u[i] = uniform(s);
    l[i] = uniform(left(s));
    r[i] = uniform(right(s));
  }
  std::vector<double> sorted = u;
  std::sort(sorted.begin(), sorted.end());
  double ks = 0;
  for (int i = 0; i < n; ++i) {
    ks = std::max({ks, (i + 1.0) / n - sorted[i], sorted[i] - static_cast<double>(i) / n});
  }
  double ml = 0, mr = 0;
  for (int i = 0; i < n; ++i) {
    ml += l[i];
    mr += r[i];
  }
  ml /= n;
  mr /= n;
  double slr = 0, sll = 0, srr = 0;
  for (int i = 0; i < n; ++i) {
    slr += (l[i] - ml) * (r[i] - mr);
    sll += (l[i] - ml) * (l[i] - ml);
    srr += (r[i] - mr) * (r[i] - mr);
  }
  const double rho = slr / std::sqrt(sll * srr);
  return {ks < kKsLimit && std::fabs(rho) < kCorrLimit, fmt("KS = %.5f, rho(L, R) = %+.5f", ks, rho)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "big-step/small-step agreement", 60, c1_agreement},
      {2, "genericity of run_to_value", 30, c2_genericity},
      {3, "uniform measure", 5, c3_uniform},
      {4, "factor linearity", 5, c4_factor},
      {5, "measure equations", 120, c5_measure_equations},
      {6, "shuffle preservation and duplicating control", 120, c6_fsf},
      {7, "rule preservation", 600, c7_rules},
      {8, "commutativity at seed level", 10, c8_commut_seed_level},
      {9, "regression pipeline", 180, c9_regression},
      {10, "split vs sequenced entropy", 120, c10_sequenced},
      {11, "inverse-CDF equivalence", 60, c11_invcdf},
      {12, "direct-style simulation", 30, c12_simulation},
      {13, "entropy statistics", 5, c13_entropy},
  };

  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  %2d  %-46s %s  [%.2f s / %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
