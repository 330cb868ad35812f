#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "entropic/equiv.hpp"
#include "entropic/machine.hpp"
#include "entropic/measure.hpp"
#include "entropic/parse.hpp"
#include "entropic/rewrite.hpp"
#include "entropic/shuffle.hpp"
#include "entropic/trace.hpp"

namespace entropic::cli {

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kPropertyFailure = 2;

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string seed;
  double fuel = 1e6;
  double n = 1e4;
  int bins = 64;
  std::vector<double> range{-10, 10};
  std::string shuffle;
  std::string semantics = "split";
  std::string suite = "default";
  std::string output;
  bool json = false;
  bool text = false;
  bool trace = false;
  bool direct = false;
  bool list = false;
  unsigned threads = 0;
  double z = 4;
  double min_ess = 100;
  std::uint64_t count = 50;
  std::string script;
  std::vector<std::string> files;
  std::vector<std::string> rules;
};

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool is_direct_file(const std::string& path) {
  return path.size() > 4 && path.compare(path.size() - 4, 4, ".pdc") == 0;
}

std::string parse_error_text(const std::string& path, const ParseError& e) {
  return path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
         e.what();
}

ExprPtr load_program(const std::string& path) {
  const std::string text = read_file(path);
  ExprPtr e;
  try {
    e = parse_expr(text);
  } catch (const ParseError& ex) {
    throw UserError(parse_error_text(path, ex));
  }
  const auto sc = scope_check({}, *e);
  if (!sc.ok) {
    std::string where;
    for (int i : sc.position) where += (where.empty() ? "" : ",") + std::to_string(i);
    throw UserError(path + ": unbound variable '" + sc.variable + "' at focus [" + where + "]");
  }
  return e;
}

DExprPtr load_direct(const std::string& path) {
  const std::string text = read_file(path);
  DExprPtr e;
  try {
    e = parse_direct(text);
  } catch (const ParseError& ex) {
    throw UserError(parse_error_text(path, ex));
  }
  const auto sc = scope_check({}, *e);
  if (!sc.ok) throw UserError(path + ": unbound variable '" + sc.variable + "'");
  return e;
}

Seed require_seed(const Options& o) {
  if (o.seed.empty()) throw UserError("--seed is required for this command");
  const auto s = Seed::parse(o.seed);
  if (!s) throw UserError("--seed must be a decimal u64 or 32 hex digits");
  return *s;
}

std::uint64_t count_of(double v, const char* what) {
  if (!(v >= 0) || v > 1e15 || v != std::floor(v)) {
    throw UserError(std::string(what) + " must be a non-negative integer");
  }
  return static_cast<std::uint64_t>(v);
}

Semantics semantics_of(const Options& o) {
  const auto s = semantics_from(o.semantics);
  if (!s) throw UserError("--semantics must be 'split' or 'sequenced'");
  return *s;
}

std::optional<Fsf> shuffle_of(const Options& o) {
  if (o.shuffle.empty()) return std::nullopt;
  try {
    return parse_fsf(o.shuffle);
  } catch (const std::invalid_argument& e) {
    throw UserError(std::string("--shuffle: ") + e.what());
  }
}

std::vector<RealSet> bins_of(const Options& o) {
  if (o.range.size() != 2 || !(o.range[0] < o.range[1])) {
    throw UserError("--range needs two numbers lo < hi");
  }
  if (o.bins < 1) throw UserError("--bins must be positive");
  return uniform_bins(o.range[0], o.range[1], o.bins, true);
}

unsigned threads_of(const Options& o) { return o.threads > 0 ? o.threads : default_threads(); }

WeightedSample one_draw(const ExprPtr& e, const Options& o, const Seed& s, std::uint64_t fuel) {
  if (semantics_of(o) == Semantics::Sequenced) {
    if (!o.shuffle.empty()) throw UserError("--shuffle only applies to split semantics");
    return seq_sample(e, Cont::halt(), s, fuel);
  }
  if (auto f = shuffle_of(o)) return shuffled_draw(e, Cont::halt(), *f, s, fuel);
  return draw(e, Cont::halt(), s, fuel);
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Real:
      return "real";
    case Outcome::NonReal:
      return "non-real";
    case Outcome::Stuck:
      return "stuck";
    default:
      return "diverged";
  }
}

// ---------------------------------------------------------------------------

int cmd_parse(const Options& o, std::ostream& out) {
  const std::string& path = o.files.at(0);
  const bool direct = o.direct || is_direct_file(path);
  const std::string printed = direct ? print(*load_direct(path)) : print(load_program(path));
  if (o.json) {
    out << json{{"schema", "entropic/1"}, {"language", direct ? "direct" : "let"},
                {"program", printed}}
               .dump()
        << "\n";
  } else {
    out << printed << "\n";
  }
  return kOk;
}

int cmd_run(const Options& o, std::ostream& out) {
  const ExprPtr e = load_program(o.files.at(0));
  const Seed seed = require_seed(o);
  const std::uint64_t fuel = count_of(o.fuel, "--fuel");
  json j{{"schema", "entropic/1"}};
  std::vector<std::string> lines;

  if (semantics_of(o) == Semantics::Sequenced) {
    const LazyRun r = seq_run_lazy(e, Cont::halt(), seed, fuel);
    j["trace"] = r.trace;
    std::visit(
        [&](const auto& res) {
          using T = std::decay_t<decltype(res)>;
          if constexpr (std::is_same_v<T, SeqFinal>) {
            j["outcome"] = "value";
            j["value"] = print(res.value);
            j["logw"] = res.logw;
            j["steps"] = res.steps;
          } else if constexpr (std::is_same_v<T, StuckAt>) {
            j["outcome"] = "stuck";
            j["reason"] = std::string(to_string(res.reason));
            j["steps"] = res.steps;
          } else {
            j["outcome"] = "diverged";
            j["steps"] = res.steps;
          }
        },
        r.result);
  } else {
    Entropy sigma = root(seed.child(1));
    if (auto f = shuffle_of(o)) sigma = apply_fsf(*f, sigma);
    const Entropy tau = root(seed.child(2));
    StepObserver observe;
    if (o.trace) {
      observe = [&](std::uint64_t n, const Config& c) { lines.push_back(trace_line(n, c)); };
    }
    const RunResult r = run(sigma, e, Cont::halt(), tau, fuel, 0, observe);
    if (const auto* f = std::get_if<Final>(&r)) {
      j["outcome"] = "value";
      j["value"] = print(f->value);
      j["logw"] = f->logw;
      j["steps"] = f->steps;
    } else if (const auto* s = std::get_if<StuckAt>(&r)) {
      j["outcome"] = "stuck";
      j["reason"] = std::string(to_string(s->reason));
      j["steps"] = s->steps;
    } else {
      j["outcome"] = "diverged";
      j["steps"] = std::get<FuelExhausted>(r).steps;
    }
  }

  if (o.json) {
    if (o.trace) j["trace_lines"] = lines;
    out << j.dump() << "\n";
    return kOk;
  }
  for (const auto& l : lines) out << l << "\n";
  const std::string outcome = j["outcome"];
  if (outcome == "value") {
    out << "value: " << j["value"].get<std::string>() << "\n"
        << "logw: " << format_real(j["logw"].get<double>()) << "\n";
  } else if (outcome == "stuck") {
    out << "stuck: " << j["reason"].get<std::string>() << "\n";
  } else {
    out << "diverged: fuel exhausted\n";
  }
  out << "steps: " << j["steps"].get<std::uint64_t>() << "\n";
  if (j.contains("trace")) {
    out << "trace:";
    for (double r : j["trace"]) out << " " << format_real(r);
    out << "\n";
  }
  return kOk;
}

int cmd_sample(const Options& o, std::ostream& out) {
  const ExprPtr e = load_program(o.files.at(0));
  const Seed seed = require_seed(o);
  const std::uint64_t n = count_of(o.n, "-n");
  const std::uint64_t fuel = count_of(o.fuel, "--fuel");
  const auto draws = collect(
      [&](std::uint64_t, const Seed& s) { return one_draw(e, o, s, fuel); }, seed, n,
      threads_of(o));
  if (o.json) {
    json arr = json::array();
    for (const auto& d : draws) {
      json x{{"outcome", outcome_name(d.outcome)}, {"logw", d.logw}};
      if (d.outcome == Outcome::Real) x["value"] = d.value;
      if (d.outcome == Outcome::Stuck) x["reason"] = std::string(to_string(d.reason));
      arr.push_back(x);
    }
    out << json{{"schema", "entropic/1"}, {"samples", arr}}.dump() << "\n";
    return kOk;
  }
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& d = draws[i];
    out << i << " ";
    if (d.outcome == Outcome::Real) {
      out << format_real(d.value) << " " << format_real(d.logw) << "\n";
    } else if (d.outcome == Outcome::Stuck) {
      out << "stuck:" << to_string(d.reason) << "\n";
    } else {
      out << outcome_name(d.outcome) << " " << format_real(d.logw) << "\n";
    }
  }
  return kOk;
}

int cmd_estimate(const Options& o, std::ostream& out) {
  const ExprPtr e = load_program(o.files.at(0));
  const Seed seed = require_seed(o);
  const auto bins = bins_of(o);
  EstimateOptions opt;
  opt.n = count_of(o.n, "-n");
  opt.fuel = count_of(o.fuel, "--fuel");
  opt.threads = threads_of(o);
  MeasureEstimate m;
  if (semantics_of(o) == Semantics::Sequenced) {
    if (!o.shuffle.empty()) throw UserError("--shuffle only applies to split semantics");
    m = seq_estimate(e, Cont::halt(), bins, seed, opt);
  } else if (auto f = shuffle_of(o)) {
    m = shuffled_estimate(e, Cont::halt(), *f, bins, seed, opt);
  } else {
    m = estimate(e, Cont::halt(), bins, seed, opt);
  }
  if (!o.text) {
    out << to_json(m) << "\n";
    return kOk;
  }
  out << "n: " << m.n << "  stuck: " << m.stuck << "  diverged: " << m.diverged << "\n";
  out << "total mass: " << format_real(m.total_mass) << " +- " << format_real(m.total_se) << "\n";
  out << "non-real mass: " << format_real(m.non_real_mass) << " +- "
      << format_real(m.non_real_se) << "\n";
  for (std::size_t i = 0; i < m.bins.size(); ++i) {
    if (m.masses[i] == 0) continue;
    out << m.bins[i].to_string() << "  " << format_real(m.masses[i]) << " +- "
        << format_real(m.std_errors[i]) << "\n";
  }
  return kOk;
}

int cmd_rewrite(const Options& o, std::ostream& out) {
  const ExprPtr e = load_program(o.files.at(0));
  if (o.list) {
    const auto sites = applicable(e);
    json arr = json::array();
    for (const auto& s : sites) {
      RewriteStep step{s.rule, s.dir, s.focus, {}};
      arr.push_back(json::parse(script_to_json({step}))[0]);
    }
    if (o.json) {
      out << json{{"schema", "entropic/1"}, {"applicable", arr}}.dump() << "\n";
    } else {
      for (const auto& a : arr) out << a.dump() << "\n";
    }
    return kOk;
  }
  if (o.script.empty()) throw UserError("rewrite needs --script or --list");
  RewriteScript script;
  try {
    script = parse_script(read_file(o.script));
  } catch (const std::invalid_argument& ex) {
    throw UserError(o.script + ": " + ex.what());
  }
  std::vector<std::string> steps;
  StepObserverFn observe;
  if (o.trace) {
    observe = [&](std::size_t i, const RewriteStep& s, const ExprPtr& cur) {
      steps.push_back(std::to_string(i) + " " + s.rule + " " + std::string(to_string(s.dir)) +
                      ": " + print(cur));
    };
  }
  ExprPtr result;
  try {
    result = run_script(e, script, observe);
  } catch (const ScriptError& ex) {
    throw UserError(std::string("rewrite failed at ") + ex.what());
  }
  if (o.json) {
    json j{{"schema", "entropic/1"}, {"program", print(result)}, {"steps", script.size()}};
    if (o.trace) j["trace"] = steps;
    out << j.dump() << "\n";
  } else {
    for (const auto& s : steps) out << s << "\n";
    out << print(result) << "\n";
  }
  return kOk;
}

int cmd_translate(const Options& o, std::ostream& out) {
  const ExprPtr e = translate(load_direct(o.files.at(0)));
  if (o.json) {
    out << json{{"schema", "entropic/1"}, {"program", print(e)}}.dump() << "\n";
  } else {
    out << print(e) << "\n";
  }
  return kOk;
}

CiuSuite suite_of(const Options& o, const IdentSet& fv, const CLI::App& sub) {
  CiuSuite s = default_suite(fv);
  if (o.suite != "default") {
    json j;
    try {
      j = json::parse(read_file(o.suite));
    } catch (const json::exception& ex) {
      throw UserError(o.suite + ": " + ex.what());
    }
    try {
      if (j.contains("substitutions")) {
        s.substitutions.clear();
        for (const auto& sj : j["substitutions"]) {
          Substitution sub_;
          for (const auto& [k, v] : sj.items()) sub_.emplace_back(k, parse_value(v.get<std::string>()));
          s.substitutions.push_back(std::move(sub_));
        }
      }
      if (j.contains("continuations")) {
        s.continuations.clear();
        for (const auto& k : j["continuations"]) {
          s.continuations.push_back(parse_cont(k.get<std::string>()));
        }
      }
      if (j.contains("z")) s.z = j["z"].get<double>();
    } catch (const ParseError& ex) {
      throw UserError(o.suite + ": " + ex.what());
    } catch (const json::exception& ex) {
      throw UserError(o.suite + ": " + ex.what());
    }
    for (const auto& sub_ : s.substitutions) {
      for (const auto& [x, v] : sub_) {
        if (!is_closed(v)) throw UserError(o.suite + ": substitution for '" + x + "' is not closed");
      }
    }
    for (const auto& k : s.continuations) {
      if (!scope_check(k).ok) throw UserError(o.suite + ": a continuation is not closed");
    }
  }
  if (sub.count("--bins") || sub.count("--range")) s.bins = bins_of(o);
  s.n = count_of(o.n, "-n");
  if (sub.count("--z")) s.z = o.z;
  s.fuel = count_of(o.fuel, "--fuel");
  s.semantics = semantics_of(o);
  s.threads = threads_of(o);
  s.min_ess = o.min_ess;
  return s;
}

int cmd_check_equiv(const Options& o, const CLI::App& sub, std::ostream& out) {
  const auto load_open = [](const std::string& path) {
    try {
      return parse_expr(read_file(path));
    } catch (const ParseError& ex) {
      throw UserError(parse_error_text(path, ex));
    }
  };
  const ExprPtr a = load_open(o.files.at(0));
  const ExprPtr b = load_open(o.files.at(1));
  const Seed seed = require_seed(o);
  IdentSet fv = free_vars(a);
  for (const auto& x : free_vars(b)) fv.insert(x);
  const CiuSuite suite = suite_of(o, fv, sub);
  for (const auto& s : suite.substitutions) {
    IdentSet covered;
    for (const auto& [x, v] : s) covered.insert(x);
    for (const auto& x : fv) {
      if (!covered.count(x)) throw UserError("substitution does not close '" + x + "'");
    }
  }
  const EquivReport r = check_equiv(a, b, suite, seed);
  if (o.json) {
    out << to_json(r, suite) << "\n";
  } else {
    out << (r.pass ? "PASS" : "FAIL") << ": " << r.cells.size() << " cells, n = " << suite.n
        << ", z = " << format_real(suite.z);
    if (r.inconclusive) out << ", " << r.inconclusive << " inconclusive";
    out << "\n";
    if (!r.cells.empty()) {
      const auto& w = r.cells[r.worst];
      out << "worst: " << print(suite.substitutions[w.substitution]) << " / "
          << print(suite.continuations[w.continuation]) << " / " << w.comparison.worst_cell
          << " at z = " << format_real(w.comparison.worst_z) << "\n";
    }
    for (const auto& wmsg : r.warnings) out << "warning: " << wmsg << "\n";
  }
  return r.pass ? kOk : kPropertyFailure;
}

int cmd_fuzz(const Options& o, const CLI::App& sub, std::ostream& out) {
  const Seed seed = require_seed(o);
  FuzzConfig cfg;
  cfg.count = o.count;
  cfg.n = count_of(o.n, "-n");
  cfg.z = o.z;
  if (sub.count("--bins")) cfg.bins = static_cast<std::size_t>(o.bins);
  if (sub.count("--fuel")) cfg.fuel = count_of(o.fuel, "--fuel");
  cfg.semantics = semantics_of(o);
  cfg.threads = threads_of(o);
  cfg.min_ess = o.min_ess;
  std::vector<std::string> names = o.rules;
  if (names.empty()) {
    for (const auto& r : rules()) names.push_back(r.name);
  }
  for (const auto& n : names) {
    if (!find_rule(n)) throw UserError("unknown rule '" + n + "'");
  }
  bool all_pass = true;
  json arr = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const FuzzSummary s = fuzz_rule(names[i], cfg, seed.child(i));
    all_pass = all_pass && s.failed == 0;
    if (o.json) {
      arr.push_back(json::parse(to_json(s)));
    } else {
      out << names[i] << ": " << s.passed << "/" << s.instances << " passed";
      if (s.failed) out << ", " << s.failed << " failed";
      if (s.inconclusive) out << " (" << s.inconclusive << " inconclusive set aside)";
      out << "\n";
      for (const auto& c : s.counterexamples) {
        out << "  counterexample: " << print(c.pre) << "\n    worst " << c.worst_cell
            << " at z = " << format_real(c.worst_z) << ", seed " << c.seed.hex() << "\n";
      }
    }
  }
  if (o.json) out << json{{"schema", "entropic/1"}, {"rules", arr}}.dump() << "\n";
  return all_pass ? kOk : kPropertyFailure;
}

int cmd_regression(const Options& o, std::ostream& out) {
  const Seed seed = require_seed(o);
  const RegressionPipeline p = regression_pipeline();
  ExprPtr post;
  try {
    post = run_script(p.source, p.script);
  } catch (const ScriptError& ex) {
    out << "FAIL: script stopped at " << ex.what() << "\n";
    return kPropertyFailure;
  }
  const bool shape = matches_shape(p.expected_shape, post);
  EstimateOptions opt;
  opt.n = count_of(o.n, "-n");
  opt.fuel = count_of(o.fuel, "--fuel");
  opt.threads = threads_of(o);
  const auto id = [](double x) { return x; };
  const auto pre_b = expectation(p.source, id, seed.child(1), opt);
  const auto post_b = expectation(post, id, seed.child(2), opt);
  if (!pre_b || !post_b) {
    out << "FAIL: no weighted draws\n";
    return kPropertyFailure;
  }
  const double z = std::fabs(pre_b->value - post_b->value) /
                   std::sqrt(pre_b->se * pre_b->se + post_b->se * post_b->se);
  const bool agree = z <= 3;
  const bool band = std::fabs(post_b->value - 1.8) <= 0.3;
  const bool pass = shape && agree && band;
  if (o.json) {
    out << json{{"schema", "entropic/1"},
                {"steps", p.script.size()},
                {"shape_ok", shape},
                {"pre", {{"mean_B", pre_b->value}, {"se", pre_b->se}, {"used", pre_b->used}}},
                {"post", {{"mean_B", post_b->value}, {"se", post_b->se}, {"used", post_b->used}}},
                {"z", z},
                {"band_ok", band},
                {"pass", pass}}
               .dump()
        << "\n";
  } else {
    out << "script: " << p.script.size() << " steps, shape " << (shape ? "ok" : "MISMATCH")
        << "\n";
    out << "pre  E[B] = " << format_real(pre_b->value) << " +- " << format_real(pre_b->se) << "\n";
    out << "post E[B] = " << format_real(post_b->value) << " +- " << format_real(post_b->se)
        << "\n";
    out << "difference: " << format_real(z) << " combined se (limit 3)\n";
    out << "post E[B] within 1.8 +- 0.3: " << (band ? "yes" : "no") << "\n";
    out << (pass ? "PASS" : "FAIL") << "\n";
  }
  return pass ? kOk : kPropertyFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy-splitting probabilistic lambda calculus: evaluators, measures, rewrites"};
  app.require_subcommand(1);
  Options o;

  auto seed_opt = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "u64 or 32 hex digits");
  };
  auto fuel_opt = [&](CLI::App* s) {
    s->add_option("--fuel", o.fuel, "step limit per run")->capture_default_str();
  };
  auto n_opt = [&](CLI::App* s) {
    s->add_option("-n,--n", o.n, "number of draws")->capture_default_str();
  };
  auto threads_opt = [&](CLI::App* s) {
    s->add_option("--threads", o.threads, "worker threads (default ENTROPIC_THREADS or 1)");
  };
  auto io_opts = [&](CLI::App* s) {
    s->add_flag("--json", o.json, "machine-readable output");
    s->add_option("-o,--output", o.output, "write output to a file");
  };
  auto bin_opts = [&](CLI::App* s) {
    s->add_option("--bins", o.bins, "number of bins")->capture_default_str();
    s->add_option("--range", o.range, "bin range lo hi")->expected(2);
  };
  auto sem_opt = [&](CLI::App* s) {
    s->add_option("--semantics", o.semantics, "split or sequenced")->capture_default_str();
  };

  auto* parse = app.add_subcommand("parse", "parse and scope-check a program");
  parse->add_option("file", o.files, "program (.plc, or .pdc for direct style)")->required()->expected(1);
  parse->add_flag("--direct", o.direct, "parse as direct style");
  io_opts(parse);

  auto* run_cmd = app.add_subcommand("run", "run the abstract machine once");
  run_cmd->add_option("file", o.files, "program")->required()->expected(1);
  seed_opt(run_cmd);
  fuel_opt(run_cmd);
  sem_opt(run_cmd);
  run_cmd->add_option("--shuffle", o.shuffle, "apply a shuffle to the entropy first");
  run_cmd->add_flag("--trace", o.trace, "print every machine step");
  io_opts(run_cmd);

  auto* sample_cmd = app.add_subcommand("sample", "print weighted draws");
  sample_cmd->add_option("file", o.files, "program")->required()->expected(1);
  seed_opt(sample_cmd);
  fuel_opt(sample_cmd);
  n_opt(sample_cmd);
  sem_opt(sample_cmd);
  threads_opt(sample_cmd);
  sample_cmd->add_option("--shuffle", o.shuffle, "apply a shuffle to the entropy first");
  io_opts(sample_cmd);

  auto* est = app.add_subcommand("estimate", "Monte-Carlo estimate of the program measure (JSON)");
  est->add_option("file", o.files, "program")->required()->expected(1);
  seed_opt(est);
  fuel_opt(est);
  n_opt(est);
  bin_opts(est);
  sem_opt(est);
  threads_opt(est);
  est->add_option("--shuffle", o.shuffle, "apply a shuffle to the entropy first");
  est->add_flag("--text", o.text, "human-readable table instead of JSON");
  io_opts(est);

  auto* rw = app.add_subcommand("rewrite", "apply a rewrite script");
  rw->add_option("file", o.files, "program")->required()->expected(1);
  rw->add_option("--script", o.script, "JSON script");
  rw->add_flag("--list", o.list, "list applicable (rule, direction, focus) sites");
  rw->add_flag("--trace", o.trace, "print the program after every step");
  io_opts(rw);

  auto* tr = app.add_subcommand("translate", "translate a direct-style program to let-normal form");
  tr->add_option("file", o.files, "direct-style program")->required()->expected(1);
  io_opts(tr);

  auto* ce = app.add_subcommand("check-equiv", "statistical CIU comparison of two programs");
  ce->add_option("files", o.files, "two programs")->required()->expected(2);
  seed_opt(ce);
  fuel_opt(ce);
  n_opt(ce);
  bin_opts(ce);
  sem_opt(ce);
  threads_opt(ce);
  ce->add_option("--suite", o.suite, "'default' or a JSON suite file")->capture_default_str();
  ce->add_option("--z", o.z, "threshold in combined standard errors")->capture_default_str();
  ce->add_option("--min-ess", o.min_ess, "effective sample size below which a cell is inconclusive")
      ->capture_default_str();
  io_opts(ce);

  auto* fz = app.add_subcommand("fuzz-rules", "check rewrite rules on random instances");
  fz->add_option("--rule", o.rules, "rule name (repeatable; default all)");
  fz->add_option("--count", o.count, "instances per rule")->capture_default_str();
  seed_opt(fz);
  fuel_opt(fz);
  n_opt(fz);
  bin_opts(fz);
  sem_opt(fz);
  threads_opt(fz);
  fz->add_option("--z", o.z, "threshold in combined standard errors")->capture_default_str();
  fz->add_option("--min-ess", o.min_ess, "effective sample size below which a cell is inconclusive")
      ->capture_default_str();
  io_opts(fz);

  auto* rd = app.add_subcommand("regression-demo", "run the linear-regression rewrite pipeline");
  seed_opt(rd);
  fuel_opt(rd);
  n_opt(rd);
  threads_opt(rd);
  io_opts(rd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUserError;
  }

  std::ostringstream buf;
  int code = kOk;
  try {
    if (*parse) code = cmd_parse(o, buf);
    else if (*run_cmd) code = cmd_run(o, buf);
    else if (*sample_cmd) code = cmd_sample(o, buf);
    else if (*est) code = cmd_estimate(o, buf);
    else if (*rw) code = cmd_rewrite(o, buf);
    else if (*tr) code = cmd_translate(o, buf);
    else if (*ce) code = cmd_check_equiv(o, *ce, buf);
    else if (*fz) code = cmd_fuzz(o, *fz, buf);
    else if (*rd) code = cmd_regression(o, buf);
  } catch (const UserError& e) {
    err << "error: " << e.what() << "\n";
    return kUserError;
  }

  if (o.output.empty()) {
    out << buf.str();
  } else {
    std::ofstream f(o.output, std::ios::binary);
    if (!f) {
      err << "error: cannot write '" << o.output << "'\n";
      return kUserError;
    }
    f << buf.str();
  }
  return code;
}

}  // namespace entropic::cli
