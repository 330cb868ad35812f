#include <gtest/gtest.h>

#include "entropic/generator.hpp"
#include "entropic/machine.hpp"
#include "entropic/shuffle.hpp"
#include "support.hpp"

namespace entropic {
namespace {

using testing::L;

const Entropy a = root(Seed::from_u64(1));
const Entropy b = root(Seed::from_u64(2));
const Entropy c = root(Seed::from_u64(3));

TEST(Path, Apply) {
  EXPECT_EQ(apply_path({}, a), a);
  EXPECT_EQ(apply_path({Dir::L}, cons(a, b)), a);
  EXPECT_EQ(apply_path({Dir::R, Dir::L}, cons(cons(a, c), b)), c);
  // the last direction is applied first
  EXPECT_EQ(apply_path({Dir::L, Dir::R}, cons(b, cons(c, a))), c);
}

TEST(Fsf, NamedShuffles) {
  EXPECT_EQ(apply_fsf(phi_commut(), cons(a, cons(b, c))), cons(b, cons(a, c)));
  EXPECT_EQ(apply_fsf(phi_assoc(), cons(cons(a, b), c)), cons(a, cons(b, c)));
  EXPECT_EQ(apply_fsf(phi_id(), cons(a, b)), a);
}

TEST(Fsf, ParseAndPrint) {
  const Fsf f = parse_fsf("(cons [LR] (cons [L] [RR]))");
  EXPECT_EQ(print(f), "(cons [LR] (cons [L] [RR]))");
  EXPECT_EQ(print(parse_fsf("[L,R]")), "[LR]");
  EXPECT_EQ(print(parse_fsf("[]")), "[]");
  EXPECT_THROW(parse_fsf("(cons [L])"), std::invalid_argument);
  EXPECT_THROW(parse_fsf("[LX]"), std::invalid_argument);
  EXPECT_THROW(parse_fsf("[L] extra"), std::invalid_argument);
  const auto ps = paths_of(phi_commut());
  ASSERT_EQ(ps.size(), 3u);
  EXPECT_EQ(ps[0], (Path{Dir::L, Dir::R}));
}

TEST(Fsf, Duplication) {
  EXPECT_TRUE(is_non_duplicating(parse_fsf("(cons [L] [R])")));
  EXPECT_FALSE(is_non_duplicating(parse_fsf("(cons [L] [RL])")));
  EXPECT_TRUE(is_non_duplicating(phi_commut()));
  EXPECT_TRUE(is_non_duplicating(phi_assoc()));
  EXPECT_TRUE(is_non_duplicating(phi_id()));
  EXPECT_FALSE(is_non_duplicating(parse_fsf("(cons [L] (cons [L] [R]))")));
  EXPECT_TRUE(is_suffix({}, {Dir::L}));
  EXPECT_TRUE(is_suffix({Dir::L}, {Dir::R, Dir::L}));
  EXPECT_FALSE(is_suffix({Dir::R, Dir::L}, {Dir::L}));
}

// eval(sigma, pre) == eval(phi(sigma), post) in value and weight
void expect_seed_level(const ExprPtr& pre, const ExprPtr& post, const Fsf& phi, int seeds) {
  for (int i = 0; i < seeds; ++i) {
    const Entropy s = root(Seed::from_u64(7000 + i));
    const Entropy t = root(Seed::from_u64(9000 + i));
    const auto r1 = run(s, pre, {}, t, 20000);
    const auto r2 = run(apply_fsf(phi, s), post, {}, t, 20000);
    ASSERT_EQ(r1.index(), r2.index()) << print(pre);
    if (const auto* f = std::get_if<Final>(&r1)) {
      const auto& g = std::get<Final>(r2);
      EXPECT_TRUE(equal(f->value, g.value)) << print(pre);
      EXPECT_NEAR(f->logw, g.logw, 1e-9 * std::max(1.0, std::fabs(f->logw)));
    }
  }
}

TEST(SeedLevel, Commutativity) {
  Generator g(71, {.max_depth = 3});
  for (int i = 0; i < 40; ++i) {
    const auto e1 = g.expr({}, 2);
    const auto e2 = g.expr({}, 2);
    const auto e3 = g.expr({"x1", "x2"}, 2);
    expect_seed_level(let("x1", e1, let("x2", e2, e3)), let("x2", e2, let("x1", e1, e3)),
                      phi_commut(), 10);
  }
}

TEST(SeedLevel, Associativity) {
  Generator g(72, {.max_depth = 3});
  for (int i = 0; i < 40; ++i) {
    const auto e1 = g.expr({}, 2);
    const auto e2 = g.expr({"x1"}, 2);
    const auto e3 = g.expr({"x2"}, 2);
    expect_seed_level(let("x2", let("x1", e1, e2), e3), let("x1", e1, let("x2", e2, e3)),
                      phi_assoc(), 10);
  }
}

TEST(SeedLevel, LetIdentity) {
  Generator g(73, {.max_depth = 3});
  for (int i = 0; i < 40; ++i) {
    const auto e = g.closed();
    expect_seed_level(let("x", e, val(var("x"))), e, phi_id(), 10);
  }
}

TEST(Measure, ShuffledEstimateMatches) {
  const auto e = L(testing::slurp(std::string(ENTROPIC_CORPUS_DIR) + "/difference.plc"));
  const auto bins = uniform_bins(-1, 1, 8, true);
  const auto plain = estimate(e, {}, bins, Seed::from_u64(81), {.n = 20000});
  const auto shuffled = shuffled_estimate(e, {}, phi_commut(), bins, Seed::from_u64(82), {.n = 20000});
  EXPECT_TRUE(compare(plain, shuffled, 4).pass);
}

TEST(Measure, DuplicatingShuffleChangesTheMeasure) {
  // both samples read the same material, so x - y collapses to 0
  const auto e = L(testing::slurp(std::string(ENTROPIC_CORPUS_DIR) + "/difference.plc"));
  const std::vector<RealSet> bins{RealSet::half_open(-0.01, 0.01)};
  const Fsf dup = parse_fsf("(cons [L] (cons [L] [R]))");
  const auto plain = estimate(e, {}, bins, Seed::from_u64(83), {.n = 20000});
  const auto shuffled = shuffled_estimate(e, {}, dup, bins, Seed::from_u64(84), {.n = 20000});
  EXPECT_GT(shuffled.masses[0] - plain.masses[0], 10 * plain.std_errors[0]);
  EXPECT_NEAR(shuffled.masses[0], 1.0, 1e-12);
}

}  // namespace
}  // namespace entropic
