#pragma once

// The primitive-operation table and normal-distribution numerics.

#include <optional>
#include <span>

#include "entropic/syntax.hpp"

namespace entropic {

// Partial: nullopt for closures (except real?), domain errors, and
// non-finite results.
std::optional<double> delta(OpName op, std::span<const Value> args);

// Standard normal quantile for p in (0,1). Rational approximation with a
// Halley refinement step against erfc.
double std_normal_quantile(double p);
double normal_pdf(double x, double m, double s);
double normal_log_pdf(double x, double m, double s);
double normal_cdf(double x, double m, double s);

// Cauchy(m, s) proposal used to realize density-based sampling forms
// from a single uniform draw.
struct Proposal {
  double value;
  double log_weight;  // log density(value) - log proposal(value)
};
std::optional<Proposal> propose_normal(double u, double m, double s);

// Log density of a distribution form at r; nullopt when parameters are
// outside the family's domain.
std::optional<double> dist_log_density(DistName d, double r, std::span<const double> params);

}  // namespace entropic
