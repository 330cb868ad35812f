#pragma once

// Paths and finite shuffling functions over entropy.
//
// A path [d1, ..., dn] denotes pi_d1 . ... . pi_dn, so dn is applied
// first. An FSF is a path or a cons of two FSFs.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "entropic/entropy.hpp"
#include "entropic/measure.hpp"

namespace entropic {

enum class Dir : std::uint8_t { L, R };
using Path = std::vector<Dir>;

class Fsf {
 public:
  static Fsf path(Path p);
  static Fsf cons(Fsf a, Fsf b);

  bool is_path() const { return node_->is_path; }
  const Path& get_path() const { return node_->p; }
  const Fsf& first() const { return *node_->a; }
  const Fsf& second() const { return *node_->b; }

 private:
  struct Node {
    bool is_path;
    Path p;
    std::shared_ptr<const Fsf> a;
    std::shared_ptr<const Fsf> b;
  };
  explicit Fsf(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

Entropy apply_path(const Path& p, const Entropy& s);
Entropy apply_fsf(const Fsf& f, const Entropy& s);

std::vector<Path> paths_of(const Fsf& f);
// q is a suffix of p iff p = p' ++ q (the empty path is a suffix of all).
bool is_suffix(const Path& q, const Path& p);
bool is_non_duplicating(const Fsf& f);

// "(cons [LR] (cons [L] [RR]))"; throws std::invalid_argument.
Fsf parse_fsf(std::string_view text);
std::string print(const Fsf& f);
std::string print(const Path& p);

// sigma1::(sigma2::sigma3) -> sigma2::(sigma1::sigma3)
Fsf phi_commut();
// (sigma1::sigma2)::sigma3 -> sigma1::(sigma2::sigma3)
Fsf phi_assoc();
// sigma1::sigma2 -> sigma1
Fsf phi_id();

// Draws as in measure::draw but with sigma := f(root(...)).
WeightedSample shuffled_draw(const ExprPtr& e, const Cont& k, const Fsf& f, const Seed& seed,
                             std::uint64_t fuel);
MeasureEstimate shuffled_estimate(const ExprPtr& e, const Cont& k, const Fsf& f,
                                  const std::vector<RealSet>& bins, const Seed& seed,
                                  const EstimateOptions& opt = {});

}  // namespace entropic
