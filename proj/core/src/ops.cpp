#include "entropic/ops.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace entropic {

namespace {

// Acklam's coefficients for the lower region and central region.
constexpr std::array<double, 6> kA = {-3.969683028665376e+01, 2.209460984245205e+02,
                                      -2.759285104469687e+02, 1.383577518672690e+02,
                                      -3.066479806614716e+01, 2.506628277459239e+00};
constexpr std::array<double, 5> kB = {-5.447609879822406e+01, 1.615858368580409e+02,
                                      -1.556989798598866e+02, 6.680131188771972e+01,
                                      -1.328068155288572e+01};
constexpr std::array<double, 6> kC = {-7.784894002430293e-03, -3.223964580411365e-01,
                                      -2.400758277161838e+00, -2.549732539343734e+00,
                                      4.374664141464968e+00,  2.938163982698783e+00};
constexpr std::array<double, 4> kD = {7.784695709041462e-03, 3.224671290700398e-01,
                                      2.445134137142996e+00, 3.754408661907416e+00};

constexpr double kLow = 0.02425;

// Lower-half quantile, p <= 0.5.
double lower_quantile(double p) {
  double x;
  if (p < kLow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
        ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
        (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1);
  }
  // Halley step. Phi(x) is taken through erfc so the lower tail keeps
  // relative precision.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

const double* real_arg(const Value& v) { return as_real(v); }

}  // namespace

double std_normal_quantile(double p) {
  if (!(p > 0 && p < 1)) return std::nan("");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return lower_quantile(p);
  // 1 - p is exact for p >= 0.5.
  return -lower_quantile(1 - p);
}

double normal_log_pdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return -0.5 * z * z - std::log(s) - 0.5 * std::log(2 * std::numbers::pi);
}

double normal_pdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2 * std::numbers::pi));
}

double normal_cdf(double x, double m, double s) {
  return 0.5 * std::erfc(-(x - m) / (s * std::numbers::sqrt2));
}

std::optional<double> delta(OpName op, std::span<const Value> args) {
  if (static_cast<int>(args.size()) != arity(op)) return std::nullopt;
  if (op == OpName::IsReal) return real_arg(args[0]) ? 1.0 : 0.0;

  std::array<double, 3> a{};
  for (std::size_t i = 0; i < args.size(); ++i) {
    const double* r = real_arg(args[i]);
    if (!r) return std::nullopt;
    a[i] = *r;
  }

  double out = 0;
  switch (op) {
    case OpName::Log:
      if (!(a[0] > 0)) return std::nullopt;
      out = std::log(a[0]);
      break;
    case OpName::Exp:
      out = std::exp(a[0]);
      break;
    case OpName::IsReal:
      break;
    case OpName::Add:
      out = a[0] + a[1];
      break;
    case OpName::Sub:
      out = a[0] - a[1];
      break;
    case OpName::Mul:
      out = a[0] * a[1];
      break;
    case OpName::Div:
      if (a[1] == 0) return std::nullopt;
      out = a[0] / a[1];
      break;
    case OpName::Less:
      out = a[0] < a[1] ? 1.0 : 0.0;
      break;
    case OpName::LessEq:
      out = a[0] <= a[1] ? 1.0 : 0.0;
      break;
    case OpName::NormalInvCdf:
      if (!(a[0] > 0 && a[0] < 1) || !(a[2] > 0)) return std::nullopt;
      out = a[1] + a[2] * std_normal_quantile(a[0]);
      break;
    case OpName::NormalPdf:
      if (!(a[2] > 0)) return std::nullopt;
      out = normal_pdf(a[0], a[1], a[2]);
      break;
    case OpName::NormalCdf:
      if (!(a[2] > 0)) return std::nullopt;
      out = normal_cdf(a[0], a[1], a[2]);
      break;
  }
  if (!std::isfinite(out)) return std::nullopt;
  return out;
}

std::optional<double> dist_log_density(DistName d, double r,
                                       std::span<const double> params) {
  switch (d) {
    case DistName::Normal: {
      if (params.size() != 2 || !(params[1] > 0) || !std::isfinite(params[0]) ||
          !std::isfinite(r)) {
        return std::nullopt;
      }
      return normal_log_pdf(r, params[0], params[1]);
    }
  }
  return std::nullopt;
}

std::optional<Proposal> propose_normal(double u, double m, double s) {
  if (!(s > 0) || !std::isfinite(m)) return std::nullopt;
  const double t = std::tan(std::numbers::pi * (u - 0.5));
  const double r = m + s * t;
  if (!std::isfinite(r)) return std::nullopt;
  const double log_q = -std::log(std::numbers::pi * s * (1 + t * t));
  const double lw = normal_log_pdf(r, m, s) - log_q;
  if (!std::isfinite(lw)) return std::nullopt;
  return Proposal{r, lw};
}

}  // namespace entropic
