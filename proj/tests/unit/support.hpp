#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "entropic/parse.hpp"

namespace entropic::testing {

inline ExprPtr L(std::string_view text) { return parse_expr(text); }
inline DExprPtr D(std::string_view text) { return parse_direct(text); }

inline double as_r(const Value& v) {
  const double* r = as_real(v);
  return r ? *r : std::nan("");
}

inline std::vector<std::filesystem::path> corpus_files() {
  std::vector<std::filesystem::path> out;
  for (const auto& f : std::filesystem::directory_iterator(ENTROPIC_CORPUS_DIR)) {
    if (f.path().extension() == ".plc") out.push_back(f.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace entropic::testing
