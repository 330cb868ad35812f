#pragma once

// Splittable entropy: a persistent tree of Leaf(seed) and Pair(a, b).
//
// left/right of a Leaf derive a child seed; of a Pair they project.
// uniform(Pair(a, b)) = uniform(a), so the pairing laws hold exactly
// for every observer. Leaves are stored inline; only cons allocates.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace entropic {

struct Seed {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  // Fixed expansion of a 64-bit integer to 128 bits.
  static Seed from_u64(std::uint64_t k);
  // Exactly 32 hex digits.
  static std::optional<Seed> from_hex(std::string_view s);
  // Accepts either a decimal u64 or 32 hex digits.
  static std::optional<Seed> parse(std::string_view s);
  std::string hex() const;

  // Independent child seeds indexed by an integer (draw schedules etc.).
  Seed child(std::uint64_t i) const;

  friend bool operator==(const Seed&, const Seed&) = default;
};

enum class Tag : std::uint8_t { L = 0, R = 1, U = 2 };

// The mixing function used by left/right/uniform.
Seed derive(const Seed& s, Tag tag);
// [0,1) with 53 significant bits.
double seed_uniform(const Seed& s);

class Entropy {
 public:
  Entropy() = default;
  static Entropy root(const Seed& s) { return Entropy(s); }
  static Entropy cons(Entropy a, Entropy b);

  bool is_leaf() const { return pair_ == nullptr; }
  bool is_pair() const { return pair_ != nullptr; }
  // Only meaningful for leaves.
  const Seed& seed() const { return seed_; }

  Entropy left() const;
  Entropy right() const;
  double uniform() const;

  // Structural equality: same Leaf seeds at the same tree positions.
  friend bool operator==(const Entropy& a, const Entropy& b);

 private:
  struct PairNode;
  explicit Entropy(const Seed& s) : seed_(s) {}

  Seed seed_{};
  std::shared_ptr<const PairNode> pair_;
};

struct Entropy::PairNode {
  Entropy a;
  Entropy b;
};

inline Entropy root(const Seed& s) { return Entropy::root(s); }
inline Entropy left(const Entropy& s) { return s.left(); }
inline Entropy right(const Entropy& s) { return s.right(); }
inline Entropy cons(Entropy a, Entropy b) {
  return Entropy::cons(std::move(a), std::move(b));
}
inline double uniform(const Entropy& s) { return s.uniform(); }

// Entropy stacks are encoded as nested pairs.
inline Entropy push(Entropy s, Entropy stack) {
  return cons(std::move(s), std::move(stack));
}
struct Popped {
  Entropy top;
  Entropy rest;
};
inline Popped pop(const Entropy& stack) { return {stack.left(), stack.right()}; }

}  // namespace entropic
