#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "entropic/entropy.hpp"

namespace entropic {
namespace {

// One-sample KS distance against U[0,1).
double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max({d, (i + 1) / n - xs[i], xs[i] - i / n});
  }
  return d;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(Seed, ParseAndHex) {
  const Seed s = Seed::from_u64(42);
  EXPECT_EQ(Seed::parse(s.hex()), s);
  EXPECT_EQ(Seed::parse("42"), s);
  EXPECT_EQ(s.hex().size(), 32u);
  EXPECT_FALSE(Seed::parse("").has_value());
  EXPECT_FALSE(Seed::parse("12x").has_value());
  EXPECT_FALSE(Seed::from_hex("abc").has_value());
  EXPECT_NE(Seed::from_u64(1), Seed::from_u64(2));
}

TEST(Seed, ChildrenDistinct) {
  const Seed s = Seed::from_u64(5);
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(s.child(i).hex());
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(s.child(3), s.child(3));
}

TEST(Entropy, PairingLaws) {
  const Entropy a = root(Seed::from_u64(1));
  const Entropy b = root(Seed::from_u64(2));
  const Entropy p = cons(a, b);
  EXPECT_EQ(left(p), a);
  EXPECT_EQ(right(p), b);
  EXPECT_EQ(uniform(p), uniform(a));
  EXPECT_TRUE(p.is_pair());
  EXPECT_TRUE(a.is_leaf());
}

TEST(Entropy, Determinism) {
  EXPECT_EQ(uniform(root(Seed::from_u64(9))), uniform(root(Seed::from_u64(9))));
  const Entropy s = root(Seed::from_u64(9));
  EXPECT_EQ(left(s), left(s));
  EXPECT_FALSE(left(s) == right(s));
  EXPECT_NE(uniform(left(s)), uniform(right(s)));
}

TEST(Entropy, StackPushPop) {
  const Entropy s = root(Seed::from_u64(3));
  const Entropy t = root(Seed::from_u64(4));
  const auto [top, rest] = pop(push(s, t));
  EXPECT_EQ(top, s);
  EXPECT_EQ(rest, t);
}

TEST(Entropy, UniformRange) {
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform(root(Seed::from_u64(i)));
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Entropy, KolmogorovSmirnov) {
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(uniform(root(Seed::from_u64(i))));
  // 0.001 critical value: 1.949 / sqrt(n)
  EXPECT_LT(ks_uniform(xs), 1.949 / std::sqrt(1e5));
}

TEST(Entropy, KolmogorovSmirnovDeepPaths) {
  std::vector<double> xs;
  Entropy s = root(Seed::from_u64(77));
  for (int i = 0; i < 20000; ++i) {
    xs.push_back(uniform(left(s)));
    s = right(s);
  }
  EXPECT_LT(ks_uniform(xs), 1.949 / std::sqrt(2e4));
}

TEST(Entropy, LeftRightIndependent) {
  std::vector<double> l, r, ll, lr;
  for (int i = 0; i < 100000; ++i) {
    const Entropy s = root(Seed::from_u64(1000000 + i));
    l.push_back(uniform(left(s)));
    r.push_back(uniform(right(s)));
    ll.push_back(uniform(left(left(s))));
    lr.push_back(uniform(s));
  }
  EXPECT_LT(std::fabs(correlation(l, r)), 0.02);
  EXPECT_LT(std::fabs(correlation(l, ll)), 0.02);
  EXPECT_LT(std::fabs(correlation(lr, l)), 0.02);
}

TEST(Entropy, AdjacentSeedsIndependent) {
  std::vector<double> a, b;
  for (int i = 0; i < 50000; ++i) {
    a.push_back(uniform(root(Seed::from_u64(2 * i))));
    b.push_back(uniform(root(Seed::from_u64(2 * i + 1))));
  }
  EXPECT_LT(std::fabs(correlation(a, b)), 0.02);
}

}  // namespace
}  // namespace entropic
