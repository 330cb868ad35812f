#pragma once

// Random well-scoped programs for property tests.
//
// Only raw mt19937_64 output is used; the standard distributions are
// implementation-defined and would make generated corpora differ between
// standard libraries.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "entropic/syntax.hpp"
#include "entropic/trace.hpp"

namespace entropic {

struct GenConfig {
  int max_depth = 4;
  bool allow_factor = true;
  bool allow_dist = true;
  bool allow_if = true;
  bool allow_lambda = true;
  // Chance that a let reuses a name already in scope (shadowing).
  double shadow_rate = 0.1;
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed, GenConfig cfg = {});

  ExprPtr expr(const std::vector<Identifier>& env, int depth);
  Value value(const std::vector<Identifier>& env, int depth);
  ExprPtr closed() { return expr({}, cfg_.max_depth); }

  DExprPtr direct(const std::vector<Identifier>& env, int depth);
  DExprPtr closed_direct() { return direct({}, cfg_.max_depth); }

  // Closed continuation of at most `frames` frames.
  Cont cont(int frames);
  // Mostly values in [0,1]; occasionally out of range to exercise stuck
  // states.
  Trace trace(std::size_t max_len);

  double uniform();  // [0,1)
  std::size_t below(std::size_t n);
  bool chance(double p) { return uniform() < p; }
  double literal();
  double positive_literal();
  Identifier name(std::string_view prefix = "x");

  const GenConfig& config() const { return cfg_; }

 private:
  Identifier binder(const std::vector<Identifier>& env);

  std::mt19937_64 rng_;
  GenConfig cfg_;
  std::uint64_t counter_ = 0;
};

}  // namespace entropic
