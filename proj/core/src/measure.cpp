#include "entropic/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <nlohmann/json.hpp>
#include <thread>

namespace entropic {

WeightedSample classify(const RunResult& r, const Seed& seed) {
  WeightedSample s;
  s.seed = seed;
  if (const auto* f = std::get_if<Final>(&r)) {
    s.logw = f->logw;
    s.steps = f->steps;
    if (const double* x = as_real(f->value)) {
      s.outcome = Outcome::Real;
      s.value = *x;
    } else {
      s.outcome = Outcome::NonReal;
    }
  } else if (const auto* st = std::get_if<StuckAt>(&r)) {
    s.outcome = Outcome::Stuck;
    s.reason = st->reason;
    s.steps = st->steps;
  } else {
    s.outcome = Outcome::Diverged;
    s.steps = std::get<FuelExhausted>(r).steps;
  }
  return s;
}

WeightedSample draw(const ExprPtr& e, const Cont& k, const Seed& seed, std::uint64_t fuel) {
  const Entropy sigma = root(seed.child(1));
  const Entropy tau = root(seed.child(2));
  return classify(run(sigma, e, k, tau, fuel), seed);
}

std::vector<WeightedSample> collect(const DrawFn& fn, const Seed& seed, std::uint64_t n,
                                    unsigned threads) {
  std::vector<WeightedSample> out(n);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::uint64_t>(n, 1))));
  if (threads == 1) {
    for (std::uint64_t i = 0; i < n; ++i) out[i] = fn(i, seed.child(i));
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::uint64_t i = t; i < n; i += threads) out[i] = fn(i, seed.child(i));
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

namespace {

// Mean and standard error of per-draw contributions, in index order.
std::pair<double, double> mean_se(const std::vector<double>& xs, std::uint64_t n) {
  if (n == 0) return {0, 0};
  double sum = 0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(n);
  if (n < 2) return {mean, 0};
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  // Entries not stored are zeros.
  ss += static_cast<double>(n - xs.size()) * mean * mean;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, sd / std::sqrt(static_cast<double>(n))};
}

}  // namespace

MeasureEstimate estimate_with(const DrawFn& fn, const std::vector<RealSet>& bins,
                              const Seed& seed, std::uint64_t n, unsigned threads) {
  const auto draws = collect(fn, seed, n, threads);

  MeasureEstimate m;
  m.bins = bins;
  m.n = n;
  std::vector<std::vector<double>> per_bin(bins.size());
  std::vector<double> total;
  std::vector<double> non_real;
  double sw = 0;
  double sw2 = 0;

  for (const auto& d : draws) {
    if (d.outcome == Outcome::Stuck) {
      ++m.stuck;
      continue;
    }
    if (d.outcome == Outcome::Diverged) {
      ++m.diverged;
      continue;
    }
    double w = std::exp(d.logw);
    if (!(w <= kWeightClamp)) {
      w = kWeightClamp;
      ++m.clamped;
    }
    m.max_weight = std::max(m.max_weight, w);
    sw += w;
    sw2 += w * w;
    if (d.outcome == Outcome::NonReal) {
      non_real.push_back(w);
      continue;
    }
    total.push_back(w);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (bins[b].contains(d.value)) {
        per_bin[b].push_back(w);
        break;
      }
    }
  }

  for (const auto& col : per_bin) {
    auto [mean, se] = mean_se(col, n);
    m.masses.push_back(mean);
    m.std_errors.push_back(se);
  }
  std::tie(m.total_mass, m.total_se) = mean_se(total, n);
  std::tie(m.non_real_mass, m.non_real_se) = mean_se(non_real, n);
  m.ess = sw2 > 0 ? sw * sw / sw2 : 0.0;
  if (n > 0) {
    m.unresolved_bound =
        static_cast<double>(m.diverged) / static_cast<double>(n) * m.max_weight;
  }
  return m;
}

MeasureEstimate estimate(const ExprPtr& e, const Cont& k, const std::vector<RealSet>& bins,
                         const Seed& seed, const EstimateOptions& opt) {
  return estimate_with(
      [&](std::uint64_t, const Seed& s) { return draw(e, k, s, opt.fuel); }, bins, seed,
      opt.n, opt.threads);
}

MeasureEstimate value_estimate(const ExprPtr& e, const std::vector<RealSet>& bins,
                               const Seed& seed, const EstimateOptions& opt) {
  return estimate(e, Cont::halt(), bins, seed, opt);
}

std::optional<Expectation> expectation_of(const std::vector<WeightedSample>& draws,
                                          const std::function<double(double)>& g) {
  double sw = 0;
  double swg = 0;
  std::uint64_t used = 0;
  std::vector<std::pair<double, double>> wg;
  for (const auto& d : draws) {
    if (d.outcome != Outcome::Real) continue;
    const double w = std::min(std::exp(d.logw), kWeightClamp);
    if (!(w > 0)) continue;
    const double gv = g(d.value);
    sw += w;
    swg += w * gv;
    wg.emplace_back(w, gv);
    ++used;
  }
  if (!(sw > 0)) return std::nullopt;
  const double mu = swg / sw;
  // Delta method: Var(sum w(g - mu)) / (sum w)^2.
  double num = 0;
  for (const auto& [w, gv] : wg) num += w * w * (gv - mu) * (gv - mu);
  return Expectation{mu, std::sqrt(num) / sw, used};
}

std::optional<Expectation> expectation(const ExprPtr& e, const std::function<double(double)>& g,
                                       const Seed& seed, const EstimateOptions& opt) {
  auto draws = collect(
      [&](std::uint64_t, const Seed& s) { return draw(e, Cont::halt(), s, opt.fuel); }, seed,
      opt.n, opt.threads);
  return expectation_of(draws, g);
}

Comparison compare(const MeasureEstimate& a, const MeasureEstimate& b, double z) {
  Comparison c;
  // A bin nobody landed in has a plug-in standard error of 0, which would
  // make any tiny mass on the other side significant. No estimate resolves
  // mass below one draw's weight, so that is the floor on each side.
  const double floor_a = a.n > 0 ? a.max_weight / static_cast<double>(a.n) : 0.0;
  const double floor_b = b.n > 0 ? b.max_weight / static_cast<double>(b.n) : 0.0;
  auto cell = [&](double ma, double sa, double mb, double sb, const std::string& name) {
    const double diff = std::fabs(ma - mb);
    sa = std::max(sa, floor_a);
    sb = std::max(sb, floor_b);
    const double se = std::sqrt(sa * sa + sb * sb);
    double score;
    if (se > 0) {
      score = diff / se;
    } else {
      score = diff > 1e-12 * std::max({1.0, std::fabs(ma), std::fabs(mb)})
                  ? std::numeric_limits<double>::infinity()
                  : 0.0;
    }
    if (score > c.worst_z || c.worst_cell.empty()) {
      c.worst_z = score;
      c.worst_cell = name;
    }
    if (score > z) c.pass = false;
  };
  const std::size_t nb = std::min(a.masses.size(), b.masses.size());
  for (std::size_t i = 0; i < nb; ++i) {
    cell(a.masses[i], a.std_errors[i], b.masses[i], b.std_errors[i],
         "bin " + a.bins[i].to_string());
  }
  cell(a.total_mass, a.total_se, b.total_mass, b.total_se, "total_mass");
  cell(a.non_real_mass, a.non_real_se, b.non_real_mass, b.non_real_se, "non_real_mass");
  return c;
}

std::string to_json(const MeasureEstimate& m, int indent) {
  nlohmann::json j;
  j["schema"] = "entropic/1";
  j["n"] = m.n;
  auto bound = [](double x) -> nlohmann::json {
    if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
    return x;
  };
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t i = 0; i < m.bins.size(); ++i) {
    const auto& parts = m.bins[i].parts();
    nlohmann::json b;
    b["lo"] = parts.empty() ? nlohmann::json(nullptr) : bound(parts.front().lo);
    b["hi"] = parts.empty() ? nlohmann::json(nullptr) : bound(parts.back().hi);
    b["mass"] = m.masses[i];
    b["se"] = m.std_errors[i];
    bins.push_back(b);
  }
  j["bins"] = bins;
  j["total_mass"] = m.total_mass;
  j["total_se"] = m.total_se;
  j["non_real_mass"] = m.non_real_mass;
  j["stuck"] = m.stuck;
  j["diverged"] = m.diverged;
  j["unresolved_bound"] = m.unresolved_bound;
  j["max_weight"] = m.max_weight;
  j["clamped"] = m.clamped;
  j["ess"] = m.ess;
  return j.dump(indent);
}

unsigned default_threads() {
  if (const char* s = std::getenv("ENTROPIC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

}  // namespace entropic
