#pragma once

#include <string>
#include <vector>

namespace entropic {

// [lo, hi); lo may be -inf and hi may be +inf.
struct Interval {
  double lo;
  double hi;
};

// Finite union of disjoint half-open intervals, kept sorted.
class RealSet {
 public:
  RealSet() = default;
  explicit RealSet(std::vector<Interval> parts);

  static RealSet empty() { return {}; }
  static RealSet all();
  static RealSet half_open(double lo, double hi);  // [lo, hi)
  static RealSet closed(double lo, double hi);     // [lo, hi]
  static RealSet below(double hi);                 // (-inf, hi)
  static RealSet at_least(double lo);              // [lo, inf)

  bool contains(double r) const;
  bool is_empty() const { return parts_.empty(); }
  const std::vector<Interval>& parts() const { return parts_; }

  RealSet unite(const RealSet& other) const;

  std::string to_string() const;

 private:
  std::vector<Interval> parts_;
};

// `count` equal-width bins over [lo, hi), optionally with the two tails.
std::vector<RealSet> uniform_bins(double lo, double hi, int count, bool tails);

}  // namespace entropic
