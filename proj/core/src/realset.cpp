#include "entropic/realset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "entropic/parse.hpp"

namespace entropic {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

RealSet::RealSet(std::vector<Interval> parts) {
  std::erase_if(parts, [](const Interval& i) { return !(i.lo < i.hi); });
  std::sort(parts.begin(), parts.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& i : parts) {
    if (!parts_.empty() && i.lo <= parts_.back().hi) {
      parts_.back().hi = std::max(parts_.back().hi, i.hi);
    } else {
      parts_.push_back(i);
    }
  }
}

RealSet RealSet::all() { return RealSet({{-kInf, kInf}}); }
RealSet RealSet::half_open(double lo, double hi) { return RealSet({{lo, hi}}); }
RealSet RealSet::closed(double lo, double hi) {
  return RealSet({{lo, std::nextafter(hi, kInf)}});
}
RealSet RealSet::below(double hi) { return RealSet({{-kInf, hi}}); }
RealSet RealSet::at_least(double lo) { return RealSet({{lo, kInf}}); }

bool RealSet::contains(double r) const {
  auto it = std::upper_bound(parts_.begin(), parts_.end(), r,
                             [](double x, const Interval& i) { return x < i.lo; });
  if (it == parts_.begin()) return false;
  --it;
  return r >= it->lo && r < it->hi;
}

RealSet RealSet::unite(const RealSet& other) const {
  std::vector<Interval> all = parts_;
  all.insert(all.end(), other.parts_.begin(), other.parts_.end());
  return RealSet(std::move(all));
}

std::string RealSet::to_string() const {
  if (parts_.empty()) return "{}";
  std::string out;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) out += " U ";
    auto bound = [](double x) {
      if (std::isinf(x)) return std::string(x < 0 ? "-inf" : "inf");
      return format_real(x);
    };
    out += (std::isinf(parts_[i].lo) ? "(" : "[") + bound(parts_[i].lo) + ", " +
           bound(parts_[i].hi) + ")";
  }
  return out;
}

std::vector<RealSet> uniform_bins(double lo, double hi, int count, bool tails) {
  if (count < 1 || !(lo < hi)) throw std::invalid_argument("bad bin specification");
  std::vector<RealSet> bins;
  if (tails) bins.push_back(RealSet::below(lo));
  const double width = (hi - lo) / count;
  for (int i = 0; i < count; ++i) {
    const double a = lo + width * i;
    const double b = i + 1 == count ? hi : lo + width * (i + 1);
    bins.push_back(RealSet::half_open(a, b));
  }
  if (tails) bins.push_back(RealSet::at_least(hi));
  return bins;
}

}  // namespace entropic
