#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "entropic/generator.hpp"
#include "entropic/measure.hpp"
#include "entropic/rewrite.hpp"
#include "support.hpp"

namespace entropic {
namespace {

using testing::L;
using testing::as_r;

ExprPtr rw(std::string_view src, std::string rule, Direction dir = Direction::Forward,
           Focus focus = {}, RewriteArgs args = {}) {
  return apply_rule(L(src), RewriteStep{std::move(rule), dir, std::move(focus), std::move(args)});
}

void expect_rw(std::string_view src, std::string rule, std::string_view want,
               Direction dir = Direction::Forward, Focus focus = {}, RewriteArgs args = {}) {
  const auto got = rw(src, rule, dir, std::move(focus), std::move(args));
  EXPECT_TRUE(alpha_equal(*got, *L(want))) << rule << ": " << print(got);
}

constexpr auto Rev = Direction::Reverse;

TEST(Catalog, Names) {
  EXPECT_EQ(rules().size(), 13u);
  for (const char* n : {"beta_v", "let_v", "let_id", "delta_fold", "assoc", "commut", "let_S",
                        "factor_merge", "normalpdf_shift", "add_commut", "sub_reassoc",
                        "conjugacy_normal", "dist_invcdf"}) {
    EXPECT_NE(find_rule(n), nullptr) << n;
  }
  EXPECT_EQ(find_rule("nope"), nullptr);
}

TEST(Rules, SpecExamples) {
  expect_rw("(app (lam x x) 5)", "beta_v", "5");
  expect_rw("(let (x1 (sample)) (let (x2 (sample)) (- x1 x2)))", "commut",
            "(let (x2 (sample)) (let (x1 (sample)) (- x1 x2)))");
}

TEST(Rules, BothDirections) {
  expect_rw("(let (x 2) (+ x x))", "let_v", "(+ 2 2)");
  expect_rw("(+ 3 3)", "let_v", "(let (x 3) (+ x x))", Rev, {}, {.value = real(3), .name = "x"});
  expect_rw("(+ 3 3)", "beta_v", "(app (lam x (+ x x)) 3)", Rev, {}, {.value = real(3), .name = "x"});
  expect_rw("(let (x (sample)) x)", "let_id", "(sample)");
  expect_rw("(sample)", "let_id", "(let (x (sample)) x)", Rev);
  expect_rw("(+ 1 2)", "delta_fold", "3");
  expect_rw("(let (b (let (a (sample)) (+ a 1))) (* b 2))", "assoc",
            "(let (a (sample)) (let (b (+ a 1)) (* b 2)))");
  expect_rw("(let (a (sample)) (let (b (+ a 1)) (* b 2)))", "assoc",
            "(let (b (let (a (sample)) (+ a 1))) (* b 2))", Rev);
  expect_rw("(let (a (factor 2)) (factor 3))", "factor_merge",
            "(let (c (* 2 3)) (let (a (factor c)) 3))");
  expect_rw("(let (c (* 2 3)) (let (a (factor c)) 3))", "factor_merge",
            "(let (a (factor 2)) (factor 3))", Rev);
  expect_rw("(let (r (- 1 2)) (let (p (normalpdf r 0 1)) p))", "normalpdf_shift",
            "(let (p (normalpdf 2 1 1)) p)");
  expect_rw("(let (p (normalpdf 2 1 1)) p)", "normalpdf_shift",
            "(let (r (- 1 2)) (let (p (normalpdf r 0 1)) p))", Rev);
  expect_rw("(+ 1 2)", "add_commut", "(+ 2 1)");
  expect_rw("(let (s (+ 1 2)) (let (r (- s 3)) r))", "sub_reassoc",
            "(let (s (- 3 1)) (let (r (- 2 s)) r))");
  expect_rw("(normal 1 2)", "dist_invcdf", "(let (u (sample)) (normalinvcdf u 1 2))");
  expect_rw("(let (u (sample)) (normalinvcdf u 1 2))", "dist_invcdf", "(normal 1 2)", Rev);
  expect_rw("(let (x (sample)) (let (y x) (+ y 1)))", "let_S", "(let (y (sample)) (+ y 1))");
  expect_rw("(let (y (sample)) (+ y 1))", "let_S", "(let (x (sample)) (let (y x) (+ y 1)))", Rev,
            {}, {.hole = Focus{0}, .name = "x"});
}

TEST(SideConditions, Refusals) {
  // x1 free in e2
  EXPECT_THROW(rw("(let (x (sample)) (let (y (+ x 1)) y))", "commut"), NotApplicable);
  // same binder twice
  EXPECT_THROW(rw("(let (x (sample)) (let (x (sample)) x))", "commut"), NotApplicable);
  // x1 escapes into e3
  EXPECT_THROW(rw("(let (b (let (a (sample)) a)) (+ a b))", "assoc"), NotApplicable);
  EXPECT_THROW(rw("(log 0)", "delta_fold"), NotApplicable);
  EXPECT_THROW(rw("(let (x (sample)) (+ x x))", "let_v"), NotApplicable);
  EXPECT_THROW(rw("(sample)", "beta_v"), NotApplicable);
  // x used twice, or x not at a spine position
  EXPECT_THROW(rw("(let (x (sample)) (let (y x) (+ y x)))", "let_S"), NotApplicable);
  EXPECT_THROW(rw("(let (x (sample)) (+ x 1))", "let_S"), NotApplicable);
  // reverse of a one-way rule
  EXPECT_THROW(rw("(+ 1 2)", "delta_fold", Rev), NotApplicable);
  EXPECT_THROW(rw("(sample)", "no_such_rule"), NotApplicable);
  // invalid focus
  EXPECT_THROW(rw("(sample)", "let_id", Rev, {3}), NotApplicable);
  // prior scale is not a literal
  EXPECT_THROW(rw("(let (k (sample)) (let (m (let (u (sample)) (normalinvcdf u 0 k))) "
                  "(let (p (normalpdf 1 m 1)) (let (z (factor p)) m))))",
                  "conjugacy_normal", Direction::Forward, {1}),
               NotApplicable);
  // factor_merge needs a known-positive argument
  EXPECT_THROW(rw("(let (x (sample)) (let (a (factor x)) (factor 2)))", "factor_merge",
                  Direction::Forward, {1}),
               NotApplicable);
  // a requested name that already occurs
  EXPECT_THROW(rw("(let (y 1) (+ 3 3))", "let_v", Rev, {1}, {.value = real(3), .name = "y"}),
               NotApplicable);
}

TEST(SideConditions, ReverseBetaDoesNotCapture) {
  const auto out = rw("(lam z (+ z 3))", "beta_v", Rev, {0}, {.value = var("z")});
  // abstracting the bound z would change meaning; only free occurrences move
  EXPECT_TRUE(scope_check({}, *out).ok) << print(out);
}

TEST(Conjugacy, SpecExample) {
  const auto out = rw("(let (m (let (u (sample)) (normalinvcdf u 0 10))) "
                      "(let (p (normalpdf 2.4 m 1)) (let (z (factor p)) m)))",
                      "conjugacy_normal");
  const auto& lm = std::get<node::Let>(out->node);
  const auto& prior = std::get<node::Let>(lm.rhs->node);
  const auto& inv = std::get<node::Op>(prior.body->node);
  EXPECT_NEAR(as_r(inv.args[1]), 2.4 / 1.01, 1e-12);
  EXPECT_NEAR(as_r(inv.args[2]), 0.995037190209989, 1e-12);
  const auto& lp = std::get<node::Let>(lm.body->node);
  const auto& pdf = std::get<node::Op>(lp.rhs->node);
  EXPECT_EQ(as_r(pdf.args[1]), 0.0);
  EXPECT_NEAR(as_r(pdf.args[2]), std::sqrt(101.0), 1e-12);
}

// Trapezoid over [lo, hi].
double integrate(const std::function<double(double)>& f, double lo, double hi, int n = 200000) {
  const double h = (hi - lo) / n;
  double s = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) s += f(lo + i * h);
  return s * h;
}

double npdf(double x, double m, double s) {
  return std::exp(-0.5 * (x - m) * (x - m) / (s * s)) / (s * std::sqrt(2 * std::numbers::pi));
}

TEST(Conjugacy, MatchesQuadrature) {
  struct Case {
    double m0, s0, d, s;
  };
  for (const Case c : {Case{0, 10, 2.4, 1}, Case{1, 2, -0.5, 0.5}, Case{-3, 0.7, 1, 3}}) {
    const std::string src = "(let (m (let (u (sample)) (normalinvcdf u " + format_real(c.m0) +
                            " " + format_real(c.s0) + "))) (let (p (normalpdf " +
                            format_real(c.d) + " m " + format_real(c.s) +
                            ")) (let (z (factor p)) m)))";
    const auto out = rw(src, "conjugacy_normal");
    const auto& lm = std::get<node::Let>(out->node);
    const auto& inv = std::get<node::Op>(std::get<node::Let>(lm.rhs->node).body->node);
    const auto& pdf = std::get<node::Op>(std::get<node::Let>(lm.body->node).rhs->node);
    const double M = as_r(inv.args[1]), S = as_r(inv.args[2]);
    const double Z = npdf(c.d, as_r(pdf.args[1]), as_r(pdf.args[2]));

    // unnormalized posterior of the source program by quadrature
    const double lo = c.m0 - 12 * c.s0, hi = c.m0 + 12 * c.s0;
    const auto joint = [&](double m) { return npdf(m, c.m0, c.s0) * npdf(c.d, m, c.s); };
    const double mass = integrate(joint, lo, hi);
    const double mean = integrate([&](double m) { return m * joint(m); }, lo, hi) / mass;
    const double var =
        integrate([&](double m) { return (m - mean) * (m - mean) * joint(m); }, lo, hi) / mass;
    EXPECT_NEAR(Z, mass, 1e-9 * mass + 1e-12);
    EXPECT_NEAR(M, mean, 1e-7);
    EXPECT_NEAR(S, std::sqrt(var), 1e-7);
  }
}

TEST(Conjugacy, SymbolicObservationKeepsResidualLets) {
  const auto out = rw("(let (d (sample)) (let (m (let (u (sample)) (normalinvcdf u 1 2))) "
                      "(let (p (normalpdf d m 1)) (let (z (factor p)) m))))",
                      "conjugacy_normal", Direction::Forward, {1});
  EXPECT_TRUE(alpha_equal(*out, *L("(let (d (sample)) (let (t (* 0.8 d)) (let (mp (+ 0.2 t)) "
                                   "(let (m (let (u (sample)) (normalinvcdf u mp "
                                   "0.8944271909999159))) (let (p (normalpdf d 1 "
                                   "2.23606797749979)) (let (z (factor p)) m))))))")))
      << print(out);
}

TEST(Script, JsonRoundTrip) {
  const RewriteScript s{{"commut", Direction::Forward, {1, 1}, {}},
                        {"let_S", Rev, {0}, {.hole = Focus{1, 0}, .name = "e"}},
                        {"beta_v", Rev, {}, {.value = parse_value("(lam x x)")}}};
  const auto back = parse_script(script_to_json(s));
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].args.hole, (Focus{1, 0}));
  EXPECT_EQ(back[1].args.name, "e");
  EXPECT_TRUE(equal(*back[2].args.value, parse_value("(lam x x)")));
  EXPECT_EQ(script_to_json(back), script_to_json(s));
}

TEST(Script, Errors) {
  EXPECT_THROW(parse_script("{}"), std::invalid_argument);
  EXPECT_THROW(parse_script("[{\"rule\":\"commut\",\"dir\":\"sideways\",\"focus\":[]}]"),
               std::invalid_argument);
  EXPECT_THROW(parse_script("[{\"rule\":\"commut\",\"dir\":\"fwd\",\"focus\":[-1]}]"),
               std::invalid_argument);
  EXPECT_THROW(parse_script("not json"), std::invalid_argument);
  try {
    run_script(L("(sample)"), parse_script(R"([{"rule":"let_id","dir":"rev","focus":[]},
                                               {"rule":"commut","dir":"fwd","focus":[]}])"));
    FAIL();
  } catch (const ScriptError& e) {
    EXPECT_EQ(e.step(), 1u);
  }
}

TEST(Script, ObserverSeesEachStep) {
  std::vector<std::string> seen;
  run_script(L("(sample)"),
             parse_script(R"([{"rule":"let_id","dir":"rev","focus":[]},
                              {"rule":"let_id","dir":"fwd","focus":[]}])"),
             [&](std::size_t, const RewriteStep&, const ExprPtr& e) { seen.push_back(print(e)); });
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[1], "(sample)");
}

TEST(Shape, Wildcards) {
  EXPECT_TRUE(matches_shape(L("(let (x _) (+ x _))"), L("(let (y (sample)) (+ y 3))")));
  EXPECT_FALSE(matches_shape(L("(let (x _) (+ x _))"), L("(let (y (sample)) (* y 3))")));
  EXPECT_TRUE(matches_shape(L("(+ 1 2)"), L("(+ 1.0000000000001 2)")));
}

TEST(Applicable, EverySiteApplies) {
  const auto e = L("(let (a (let (b (sample)) (+ b 1))) (let (c (sample)) (* a c)))");
  const auto sites = applicable(e);
  EXPECT_GT(sites.size(), 5u);
  for (const auto& s : sites) EXPECT_NO_THROW(apply_rule(e, {s.rule, s.dir, s.focus, {}}));
}

TEST(RewriteProperty, ScopePreserved) {
  Generator g(91);
  int applied = 0;
  for (int i = 0; i < 150; ++i) {
    const auto e = g.expr({"a"}, 3);
    const auto fv = free_vars(e);
    for (const auto& s : applicable(e)) {
      const auto out = apply_rule(e, {s.rule, s.dir, s.focus, {}});
      for (const auto& x : free_vars(out)) EXPECT_TRUE(fv.count(x)) << s.rule << ": " << print(e);
      ++applied;
    }
  }
  EXPECT_GT(applied, 500);
}

TEST(RewriteProperty, InvolutiveRules) {
  // forward then reverse returns an alpha-equal program
  Generator g(92);
  int checked = 0;
  for (int i = 0; i < 150; ++i) {
    const auto e = g.expr({"a"}, 3);
    for (const auto& s : applicable(e)) {
      if (s.rule != "commut" && s.rule != "assoc" && s.rule != "add_commut") continue;
      const auto once = apply_rule(e, {s.rule, s.dir, s.focus, {}});
      const auto back = apply_rule(
          once, {s.rule, s.dir == Direction::Forward ? Rev : Direction::Forward, s.focus, {}});
      EXPECT_TRUE(alpha_equal(*back, *e)) << s.rule << ": " << print(e);
      ++checked;
    }
  }
  EXPECT_GT(checked, 30);
}

TEST(Regression, PipelineShape) {
  const auto p = regression_pipeline();
  const auto post = run_script(p.source, p.script);
  EXPECT_TRUE(matches_shape(p.expected_shape, post)) << print(post);
  EXPECT_TRUE(scope_check({}, *post).ok);
  // B's final conditional scale: precision 0.01 + 3 observations
  const std::string text = print(post);
  EXPECT_NE(text.find(format_real(1 / std::sqrt(3.01)).substr(0, 7)), std::string::npos) << text;
}

// Exact Gaussian posterior for y = A x + B + N(0, 1), A, B ~ N(0, 10).
std::pair<double, double> exact_posterior_means() {
  const double xs[] = {2, 3, 4}, ys[] = {2.4, 2.7, 3.0};
  double p11 = 0.01, p12 = 0, p22 = 0.01, r1 = 0, r2 = 0;
  for (int i = 0; i < 3; ++i) {
    p11 += xs[i] * xs[i];
    p12 += xs[i];
    p22 += 1;
    r1 += xs[i] * ys[i];
    r2 += ys[i];
  }
  const double det = p11 * p22 - p12 * p12;
  return {(p22 * r1 - p12 * r2) / det, (p11 * r2 - p12 * r1) / det};
}

TEST(Regression, ExactPosterior) {
  const auto [a, b] = exact_posterior_means();
  EXPECT_NEAR(a, 0.3242, 1e-4);
  EXPECT_NEAR(b, 1.7216, 1e-4);
}

TEST(Regression, PostProgramMatchesExactPosterior) {
  const auto p = regression_pipeline();
  const auto post = run_script(p.source, p.script);
  const auto r = expectation(post, [](double x) { return x; }, Seed::from_u64(93), {.n = 40000});
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->value, exact_posterior_means().second, 4 * r->se);
  const auto slope = expectation(regression_program(true), [](double x) { return x; },
                                 Seed::from_u64(94), {.n = 40000});
  ASSERT_TRUE(slope);
  EXPECT_NEAR(slope->value, exact_posterior_means().first, 4 * slope->se);
}

}  // namespace
}  // namespace entropic
