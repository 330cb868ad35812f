#include "entropic/shuffle.hpp"

#include <cctype>
#include <stdexcept>

namespace entropic {

Fsf Fsf::path(Path p) {
  return Fsf(std::make_shared<const Node>(Node{true, std::move(p), nullptr, nullptr}));
}

Fsf Fsf::cons(Fsf a, Fsf b) {
  return Fsf(std::make_shared<const Node>(Node{false, {},
                                              std::make_shared<const Fsf>(std::move(a)),
                                              std::make_shared<const Fsf>(std::move(b))}));
}

Entropy apply_path(const Path& p, const Entropy& s) {
  Entropy cur = s;
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    cur = *it == Dir::L ? cur.left() : cur.right();
  }
  return cur;
}

Entropy apply_fsf(const Fsf& f, const Entropy& s) {
  if (f.is_path()) return apply_path(f.get_path(), s);
  return cons(apply_fsf(f.first(), s), apply_fsf(f.second(), s));
}

namespace {
void collect_paths(const Fsf& f, std::vector<Path>& out) {
  if (f.is_path()) {
    out.push_back(f.get_path());
    return;
  }
  collect_paths(f.first(), out);
  collect_paths(f.second(), out);
}
}  // namespace

std::vector<Path> paths_of(const Fsf& f) {
  std::vector<Path> out;
  collect_paths(f, out);
  return out;
}

bool is_suffix(const Path& q, const Path& p) {
  if (q.size() > p.size()) return false;
  return std::equal(q.begin(), q.end(), p.end() - static_cast<std::ptrdiff_t>(q.size()));
}

bool is_non_duplicating(const Fsf& f) {
  const auto ps = paths_of(f);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (i != j && is_suffix(ps[i], ps[j])) return false;
    }
  }
  return true;
}

namespace {

struct FsfReader {
  std::string_view s;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("shuffle at offset " + std::to_string(pos) + ": " + msg);
  }
  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  Fsf read() {
    skip();
    if (eat('[')) {
      Path p;
      for (;;) {
        skip();  // "[L,R]" and "[LR]" both parse
        if (pos >= s.size()) fail("unclosed '['");
        const char c = s[pos++];
        if (c == ']') break;
        if (c == ',') continue;
        if (c == 'L') {
          p.push_back(Dir::L);
        } else if (c == 'R') {
          p.push_back(Dir::R);
        } else {
          --pos;
          fail(std::string("unexpected '") + c + "' in path");
        }
      }
      return Fsf::path(std::move(p));
    }
    if (eat('(')) {
      skip();
      if (s.substr(pos, 4) != "cons") fail("expected cons");
      pos += 4;
      Fsf a = read();
      Fsf b = read();
      if (!eat(')')) fail("expected ')'");
      return Fsf::cons(std::move(a), std::move(b));
    }
    fail("expected a path or (cons ...)");
  }
};

}  // namespace

Fsf parse_fsf(std::string_view text) {
  FsfReader r{text};
  Fsf f = r.read();
  r.skip();
  if (r.pos != text.size()) r.fail("trailing input");
  return f;
}

std::string print(const Path& p) {
  std::string out = "[";
  for (Dir d : p) out += d == Dir::L ? 'L' : 'R';
  return out + "]";
}

std::string print(const Fsf& f) {
  if (f.is_path()) return print(f.get_path());
  return "(cons " + print(f.first()) + " " + print(f.second()) + ")";
}

Fsf phi_commut() { return parse_fsf("(cons [LR] (cons [L] [RR]))"); }
Fsf phi_assoc() { return parse_fsf("(cons [LL] (cons [RL] [R]))"); }
Fsf phi_id() { return parse_fsf("[L]"); }

WeightedSample shuffled_draw(const ExprPtr& e, const Cont& k, const Fsf& f, const Seed& seed,
                             std::uint64_t fuel) {
  const Entropy sigma = apply_fsf(f, root(seed.child(1)));
  const Entropy tau = root(seed.child(2));
  return classify(run(sigma, e, k, tau, fuel), seed);
}

MeasureEstimate shuffled_estimate(const ExprPtr& e, const Cont& k, const Fsf& f,
                                  const std::vector<RealSet>& bins, const Seed& seed,
                                  const EstimateOptions& opt) {
  return estimate_with(
      [&](std::uint64_t, const Seed& s) { return shuffled_draw(e, k, f, s, opt.fuel); }, bins,
      seed, opt.n, opt.threads);
}

}  // namespace entropic
