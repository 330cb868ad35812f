#include <gtest/gtest.h>

#include "entropic/generator.hpp"
#include "entropic/parse.hpp"
#include "support.hpp"

namespace entropic {
namespace {

using testing::L;

TEST(Parse, Examples) {
  EXPECT_TRUE(equal(L("(let (x (sample)) x)"), let("x", sample(), val(var("x")))));
  EXPECT_TRUE(equal(L("(app (lam x x) 5.0)"), app(lam("x", val(var("x"))), real(5))));
}

TEST(Parse, LetNormalViolation) {
  try {
    L("(+ (sample) 1.0)");
    FAIL() << "accepted a non-value operand";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::LetNormal);
  }
  // the same text is fine in direct style
  EXPECT_NO_THROW(testing::D("(+ (sample) 1.0)"));
}

TEST(Parse, ArityAndPosition) {
  try {
    L("(let (x 1)\n  (normalpdf x 0))");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::Arity);
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(L("(let (x 1) x"), ParseError);
  EXPECT_THROW(L("(let (lam 1) lam)"), ParseError);
  EXPECT_THROW(L(""), ParseError);
}

TEST(Parse, CommentsAndNumbers) {
  const auto e = L("; leading comment\n(+ -2.5 1e-3) ; trailing");
  EXPECT_TRUE(equal(e, op(OpName::Add, {real(-2.5), real(1e-3)})));
}

TEST(Parse, Distribution) {
  EXPECT_TRUE(equal(L("(normal 0 1)"), dist(DistName::Normal, {real(0), real(1)})));
}

TEST(Print, ReprintsExactly) {
  const std::string text = "(let (x (sample)) (if x (factor 2) (app (lam y y) 0.1)))";
  EXPECT_EQ(print(L(text)), text);
  EXPECT_EQ(print(Cont::halt()), "(halt)");
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(3), "3");
}

TEST(ParseProperty, RoundTripL) {
  Generator g(21);
  for (int i = 0; i < 500; ++i) {
    const auto e = g.closed();
    const auto again = parse_expr(print(e));
    ASSERT_TRUE(equal(e, again)) << print(e);
  }
}

TEST(ParseProperty, RoundTripD) {
  Generator g(22);
  for (int i = 0; i < 500; ++i) {
    const auto e = g.closed_direct();
    ASSERT_TRUE(equal(*e, *parse_direct(print(*e)))) << print(*e);
  }
}

TEST(ParseProperty, RoundTripCont) {
  Generator g(23);
  for (int i = 0; i < 100; ++i) {
    const auto k = g.cont(3);
    EXPECT_TRUE(equal(k, parse_cont(print(k)))) << print(k);
  }
}

}  // namespace
}  // namespace entropic
