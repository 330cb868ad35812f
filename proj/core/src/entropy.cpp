#include "entropic/entropy.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace entropic {

namespace {

// All mixing constants live here; changing any of them changes every
// seeded result.
struct Constants {
  std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t m1 = 0xbf58476d1ce4e5b9ULL;
  std::uint64_t m2 = 0x94d049bb133111ebULL;
  // Per-tag round constants for L, R, U.
  std::array<std::uint64_t, 3> tag_lo = {0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL,
                                         0xa4093822299f31d0ULL};
  std::array<std::uint64_t, 3> tag_hi = {0x082efa98ec4e6c89ULL, 0x452821e638d01377ULL,
                                         0xbe5466cf34e90c6cULL};
  std::uint64_t child_lo = 0xc0ac29b7c97c50ddULL;
  std::uint64_t child_hi = 0x3f84d5b5b5470917ULL;
  std::uint64_t expand_lo = 0x9216d5d98979fb1bULL;
  std::uint64_t expand_hi = 0xd1310ba698dfb5acULL;
};
constexpr Constants K{};

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * K.m1;
  z = (z ^ (z >> 27)) * K.m2;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

Seed mix128(const Seed& s, std::uint64_t c_lo, std::uint64_t c_hi) {
  const std::uint64_t a = s.lo + c_lo;
  const std::uint64_t b = s.hi ^ c_hi;
  Seed out;
  out.lo = mix64(a ^ mix64(b));
  out.hi = mix64(b + rotl(mix64(a + K.golden), 17));
  return out;
}

}  // namespace

Seed Seed::from_u64(std::uint64_t k) {
  Seed s;
  s.lo = mix64(k + K.expand_lo);
  s.hi = mix64(k ^ K.expand_hi);
  return s;
}

std::optional<Seed> Seed::from_hex(std::string_view s) {
  if (s.size() != 32) return std::nullopt;
  Seed out;
  auto read = [](std::string_view part, std::uint64_t& v) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v, 16);
    return ec == std::errc() && p == part.data() + part.size();
  };
  if (!read(s.substr(0, 16), out.hi) || !read(s.substr(16), out.lo)) {
    return std::nullopt;
  }
  return out;
}

std::optional<Seed> Seed::parse(std::string_view s) {
  if (s.size() == 32) return from_hex(s);
  std::uint64_t k = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), k, 10);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return from_u64(k);
}

std::string Seed::hex() const {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

Seed Seed::child(std::uint64_t i) const {
  return mix128(*this, K.child_lo + i * K.golden, K.child_hi ^ mix64(i));
}

Seed derive(const Seed& s, Tag tag) {
  const auto t = static_cast<std::size_t>(tag);
  return mix128(s, K.tag_lo[t], K.tag_hi[t]);
}

double seed_uniform(const Seed& s) {
  const Seed u = derive(s, Tag::U);
  return static_cast<double>(u.lo >> 11) * 0x1.0p-53;
}

Entropy Entropy::cons(Entropy a, Entropy b) {
  Entropy e;
  e.pair_ = std::make_shared<const PairNode>(PairNode{std::move(a), std::move(b)});
  return e;
}

Entropy Entropy::left() const {
  if (pair_) return pair_->a;
  return Entropy(derive(seed_, Tag::L));
}

Entropy Entropy::right() const {
  if (pair_) return pair_->b;
  return Entropy(derive(seed_, Tag::R));
}

double Entropy::uniform() const {
  const Entropy* e = this;
  while (e->pair_) e = &e->pair_->a;
  return seed_uniform(e->seed_);
}

bool operator==(const Entropy& a, const Entropy& b) {
  if (a.pair_ == b.pair_ && !a.pair_) return a.seed_ == b.seed_;
  if (a.pair_ == b.pair_) return true;
  if (!a.pair_ || !b.pair_) return false;
  return a.pair_->a == b.pair_->a && a.pair_->b == b.pair_->b;
}

}  // namespace entropic
