#include "entropic/parse.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <system_error>
#include <vector>

#include "overloaded.hpp"

namespace entropic {

ParseError::ParseError(Kind kind, int line, int column, const std::string& msg)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                         ": " + msg),
      kind_(kind),
      line_(line),
      column_(column) {}

namespace {

constexpr std::string_view kKeywords[] = {"lam",    "app",    "let",  "if",
                                          "sample", "factor", "halt", "letk",
                                          "normal"};

struct Sexp {
  bool is_list = false;
  std::string atom;
  std::vector<Sexp> items;
  int line = 1;
  int column = 1;
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  Sexp read_one() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    Sexp s = read();
    skip();
    if (pos_ < text_.size()) fail("trailing input after expression");
    return s;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(ParseError::Kind::Syntax, line_, col_, msg);
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Sexp read() {
    Sexp s;
    s.line = line_;
    s.column = col_;
    const char c = text_[pos_];
    if (c == ')') fail("unexpected ')'");
    if (c == '(') {
      s.is_list = true;
      advance();
      for (;;) {
        skip();
        if (pos_ >= text_.size()) {
          throw ParseError(ParseError::Kind::Syntax, s.line, s.column,
                           "unclosed '('");
        }
        if (text_[pos_] == ')') {
          advance();
          return s;
        }
        s.items.push_back(read());
      }
    }
    while (pos_ < text_.size()) {
      const char d = text_[pos_];
      if (d == '(' || d == ')' || d == ';' ||
          std::isspace(static_cast<unsigned char>(d))) {
        break;
      }
      s.atom += d;
      advance();
    }
    return s;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool looks_numeric(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    ++i;
    ++digits;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      ++digits;
    }
  }
  if (digits == 0) return false;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      ++exp_digits;
    }
    if (exp_digits == 0) return false;
  }
  return i == s.size();
}

[[noreturn]] void fail_at(const Sexp& s, ParseError::Kind kind,
                          const std::string& msg) {
  throw ParseError(kind, s.line, s.column, msg);
}

std::optional<double> read_number(const Sexp& s) {
  if (s.is_list || !looks_numeric(s.atom)) return std::nullopt;
  std::string_view t = s.atom;
  if (!t.empty() && t[0] == '+') t.remove_prefix(1);
  double r = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), r);
  if (ec == std::errc::result_out_of_range && !std::isfinite(r)) {
    fail_at(s, ParseError::Kind::Syntax, "real literal out of range: " + s.atom);
  }
  if (ec == std::errc::result_out_of_range) {
    // Underflow to a subnormal or zero is accepted.
    return r;
  }
  if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(r)) {
    fail_at(s, ParseError::Kind::Syntax, "bad real literal: " + s.atom);
  }
  return r;
}

const std::string& head_of(const Sexp& s) {
  static const std::string empty;
  if (!s.is_list || s.items.empty() || s.items[0].is_list) return empty;
  return s.items[0].atom;
}

Identifier read_ident(const Sexp& s) {
  if (s.is_list || !is_identifier(s.atom)) {
    fail_at(s, ParseError::Kind::Syntax,
            "expected identifier" + (s.is_list ? std::string() : ", got " + s.atom));
  }
  return s.atom;
}

void expect_size(const Sexp& s, std::size_t n, std::string_view form) {
  if (s.items.size() != n) {
    fail_at(s, ParseError::Kind::Arity,
            std::string(form) + " expects " + std::to_string(n - 1) +
                " operand(s), got " + std::to_string(s.items.size() - 1));
  }
}

// (x e) binding pair in let / letk.
const Sexp& binding(const Sexp& s, Identifier& x) {
  const Sexp& b = s.items[1];
  if (!b.is_list || b.items.size() != 2) {
    fail_at(b, ParseError::Kind::Syntax, "expected binding (x e)");
  }
  x = read_ident(b.items[0]);
  return b.items[1];
}

struct LParser {
  bool is_value_form(const Sexp& s) const {
    return !s.is_list || head_of(s) == "lam";
  }

  Value value(const Sexp& s) {
    if (!s.is_list) {
      if (auto r = read_number(s)) return Real{*r};
      return Var{read_ident(s)};
    }
    if (head_of(s) == "lam") {
      expect_size(s, 3, "lam");
      return Lam{read_ident(s.items[1]), expr(s.items[2])};
    }
    fail_at(s, ParseError::Kind::LetNormal,
            "operand must be a value in let-normal form");
  }

  std::vector<Value> operands(const Sexp& s) {
    std::vector<Value> out;
    for (std::size_t i = 1; i < s.items.size(); ++i) out.push_back(value(s.items[i]));
    return out;
  }

  ExprPtr expr(const Sexp& s) {
    if (is_value_form(s)) return val(value(s));
    if (s.items.empty() || s.items[0].is_list) {
      fail_at(s, ParseError::Kind::Syntax, "expected a form name");
    }
    const std::string& h = s.items[0].atom;
    if (h == "app") {
      expect_size(s, 3, "app");
      return app(value(s.items[1]), value(s.items[2]));
    }
    if (h == "let") {
      expect_size(s, 3, "let");
      Identifier x;
      const Sexp& rhs = binding(s, x);
      return let(x, expr(rhs), expr(s.items[2]));
    }
    if (h == "if") {
      expect_size(s, 4, "if");
      return if_(value(s.items[1]), expr(s.items[2]), expr(s.items[3]));
    }
    if (h == "sample") {
      expect_size(s, 1, "sample");
      return sample();
    }
    if (h == "factor") {
      expect_size(s, 2, "factor");
      return factor(value(s.items[1]));
    }
    if (auto d = dist_from_symbol(h)) {
      expect_size(s, static_cast<std::size_t>(arity(*d)) + 1, h);
      return dist(*d, operands(s));
    }
    if (auto o = op_from_symbol(h)) {
      expect_size(s, static_cast<std::size_t>(arity(*o)) + 1, h);
      return op(*o, operands(s));
    }
    fail_at(s.items[0], ParseError::Kind::Syntax, "unknown form: " + h);
  }

  Cont cont(const Sexp& s) {
    const std::string& h = head_of(s);
    if (h == "halt") {
      expect_size(s, 1, "halt");
      return Cont::halt();
    }
    if (h == "letk") {
      expect_size(s, 3, "letk");
      Identifier x;
      const Sexp& body = binding(s, x);
      ExprPtr b = expr(body);
      Cont rest = cont(s.items[2]);
      return Cont::let_k(std::move(x), std::move(b), std::move(rest));
    }
    fail_at(s, ParseError::Kind::Syntax, "expected (halt) or (letk (x e) K)");
  }
};

struct DParser {
  std::vector<DExprPtr> operands(const Sexp& s) {
    std::vector<DExprPtr> out;
    for (std::size_t i = 1; i < s.items.size(); ++i) out.push_back(expr(s.items[i]));
    return out;
  }

  DExprPtr expr(const Sexp& s) {
    if (!s.is_list) {
      if (auto r = read_number(s)) return direct::real(*r);
      return direct::var(read_ident(s));
    }
    if (s.items.empty() || s.items[0].is_list) {
      fail_at(s, ParseError::Kind::Syntax, "expected a form name");
    }
    const std::string& h = s.items[0].atom;
    if (h == "lam") {
      expect_size(s, 3, "lam");
      return direct::lam(read_ident(s.items[1]), expr(s.items[2]));
    }
    if (h == "app") {
      expect_size(s, 3, "app");
      return direct::app(expr(s.items[1]), expr(s.items[2]));
    }
    if (h == "let") {
      expect_size(s, 3, "let");
      Identifier x;
      const Sexp& rhs = binding(s, x);
      return direct::let(x, expr(rhs), expr(s.items[2]));
    }
    if (h == "if") {
      expect_size(s, 4, "if");
      return direct::if_(expr(s.items[1]), expr(s.items[2]), expr(s.items[3]));
    }
    if (h == "sample") {
      expect_size(s, 1, "sample");
      return direct::sample();
    }
    if (h == "factor") {
      expect_size(s, 2, "factor");
      return direct::factor(expr(s.items[1]));
    }
    if (auto o = op_from_symbol(h)) {
      expect_size(s, static_cast<std::size_t>(arity(*o)) + 1, h);
      return direct::op(*o, operands(s));
    }
    fail_at(s.items[0], ParseError::Kind::Syntax, "unknown form: " + h);
  }
};

// ---------------------------------------------------------------------------
// Printing

struct Printer {
  std::string out;

  void value(const Value& v) {
    std::visit(overloaded{
                   [&](const Var& x) { out += x.name; },
                   [&](const Real& r) { out += format_real(r.r); },
                   [&](const Lam& l) {
                     out += "(lam ";
                     out += l.param;
                     out += ' ';
                     expr(*l.body);
                     out += ')';
                   },
               },
               v);
  }

  void form(std::string_view head, const std::vector<Value>& args) {
    out += '(';
    out += head;
    for (const auto& a : args) {
      out += ' ';
      value(a);
    }
    out += ')';
  }

  void expr(const Expr& e) {
    std::visit(overloaded{
                   [&](const node::Val& n) { value(n.v); },
                   [&](const node::App& n) { form("app", {n.fn, n.arg}); },
                   [&](const node::Let& n) {
                     out += "(let (";
                     out += n.x;
                     out += ' ';
                     expr(*n.rhs);
                     out += ") ";
                     expr(*n.body);
                     out += ')';
                   },
                   [&](const node::Op& n) { form(symbol(n.op), n.args); },
                   [&](const node::If& n) {
                     out += "(if ";
                     value(n.cond);
                     out += ' ';
                     expr(*n.then_branch);
                     out += ' ';
                     expr(*n.else_branch);
                     out += ')';
                   },
                   [&](const node::Sample&) { out += "(sample)"; },
                   [&](const node::Factor& n) { form("factor", {n.arg}); },
                   [&](const node::Dist& n) { form(symbol(n.dist), n.args); },
               },
               e.node);
  }

  void dexpr(const DExpr& e) {
    auto form_d = [&](std::string_view head, std::initializer_list<const DExpr*> args) {
      out += '(';
      out += head;
      for (const auto* a : args) {
        out += ' ';
        dexpr(*a);
      }
      out += ')';
    };
    std::visit(overloaded{
                   [&](const dnode::Var& x) { out += x.name; },
                   [&](const dnode::Real& r) { out += format_real(r.r); },
                   [&](const dnode::Lam& l) {
                     out += "(lam ";
                     out += l.param;
                     out += ' ';
                     dexpr(*l.body);
                     out += ')';
                   },
                   [&](const dnode::Let& n) {
                     out += "(let (";
                     out += n.x;
                     out += ' ';
                     dexpr(*n.rhs);
                     out += ") ";
                     dexpr(*n.body);
                     out += ')';
                   },
                   [&](const dnode::App& n) { form_d("app", {n.fn.get(), n.arg.get()}); },
                   [&](const dnode::Op& n) {
                     out += '(';
                     out += symbol(n.op);
                     for (const auto& a : n.args) {
                       out += ' ';
                       dexpr(*a);
                     }
                     out += ')';
                   },
                   [&](const dnode::If& n) {
                     form_d("if", {n.cond.get(), n.then_branch.get(),
                                   n.else_branch.get()});
                   },
                   [&](const dnode::Sample&) { out += "(sample)"; },
                   [&](const dnode::Factor& n) { form_d("factor", {n.arg.get()}); },
               },
               e.node);
  }
};

}  // namespace

bool is_keyword(std::string_view s) {
  for (auto k : kKeywords) {
    if (k == s) return true;
  }
  return op_from_symbol(s).has_value();
}

bool is_identifier(std::string_view s) {
  if (s.empty() || is_keyword(s) || looks_numeric(s)) return false;
  auto ok = [](char c, bool first) {
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '-') return true;
    return !first && std::isdigit(static_cast<unsigned char>(c));
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!ok(s[i], i == 0)) return false;
  }
  return true;
}

ExprPtr parse_expr(std::string_view text) {
  return LParser{}.expr(Reader(text).read_one());
}

DExprPtr parse_direct(std::string_view text) {
  return DParser{}.expr(Reader(text).read_one());
}

Cont parse_cont(std::string_view text) {
  return LParser{}.cont(Reader(text).read_one());
}

Value parse_value(std::string_view text) {
  return LParser{}.value(Reader(text).read_one());
}

std::string format_real(double r) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, r);
  (void)ec;
  return std::string(buf, p);
}

std::string print(const Value& v) {
  Printer p;
  p.value(v);
  return std::move(p.out);
}
std::string print(const Expr& e) {
  Printer p;
  p.expr(e);
  return std::move(p.out);
}
std::string print(const ExprPtr& e) { return print(*e); }
std::string print(const DExpr& e) {
  Printer p;
  p.dexpr(e);
  return std::move(p.out);
}
std::string print(const Cont& k) {
  std::string out;
  std::size_t open = 0;
  for (const Cont* c = &k; !c->is_halt(); c = &c->rest()) {
    out += "(letk (" + c->var() + " " + print(*c->body()) + ") ";
    ++open;
  }
  out += "(halt)";
  out.append(open, ')');
  return out;
}

std::string_view head_name(const Expr& e) {
  return std::visit(overloaded{
                        [](const node::Val& n) -> std::string_view {
                          return std::holds_alternative<Lam>(n.v)    ? "lam"
                                 : std::holds_alternative<Real>(n.v) ? "real"
                                                                     : "var";
                        },
                        [](const node::App&) -> std::string_view { return "app"; },
                        [](const node::Let&) -> std::string_view { return "let"; },
                        [](const node::Op& n) { return symbol(n.op); },
                        [](const node::If&) -> std::string_view { return "if"; },
                        [](const node::Sample&) -> std::string_view { return "sample"; },
                        [](const node::Factor&) -> std::string_view { return "factor"; },
                        [](const node::Dist& n) { return symbol(n.dist); },
                    },
                    e.node);
}

}  // namespace entropic
