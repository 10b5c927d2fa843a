#pragma once

#include <cctype>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "defl/poly.hpp"

namespace defl {

struct ParseError : std::runtime_error {
  std::size_t line, column;
  ParseError(std::size_t l, std::size_t c, const std::string& msg)
      : std::runtime_error("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + msg), line(l), column(c) {}
};

namespace detail {

// Recursive descent over one expression. Float literals (decimals,
// exponents, sqrt) set `inexact`; with K = Rational they are rejected.
template <class K>
class ExprParser {
 public:
  ExprParser(const std::string& text, std::size_t line, std::size_t col0, const std::vector<std::string>& vars, bool allow_imag)
      : s_(text), line_(line), col0_(col0), vars_(vars), allow_imag_(allow_imag) {}

  Polynomial<K> parse() {
    auto p = expr();
    skip();
    if (i_ < s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return p;
  }

  bool inexact = false;

 private:
  using P = Polynomial<K>;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, col0_ + i_ + 1, msg); }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  std::size_t n() const { return vars_.size(); }

  P expr() {
    P acc = term();
    for (;;) {
      if (eat('+'))
        acc += term();
      else if (eat('-'))
        acc -= term();
      else
        return acc;
    }
  }

  P term() {
    P acc = unary();
    for (;;) {
      if (eat('*')) {
        acc *= unary();
      } else if (eat('/')) {
        std::size_t at = i_;
        P d = unary();
        if (d.is_zero() || d.degree() != 0) {
          i_ = at;
          fail("division only by a nonzero constant");
        }
        acc = (K(1) / d.leading().coeff) * acc;
      } else {
        return acc;
      }
    }
  }

  P unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }

  P power() {
    P base = primary();
    if (eat('^')) {
      skip();
      std::size_t start = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (start == i_) fail("expected a non-negative integer exponent");
      return base.pow(unsigned(std::stoul(s_.substr(start, i_ - start))));
    }
    return base;
  }

  P primary() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end of expression");
    char c = s_[i_];
    if (c == '(') {
      ++i_;
      P p = expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
      std::string name = s_.substr(start, i_ - start);
      for (std::size_t v = 0; v < vars_.size(); ++v)
        if (vars_[v] == name) return P::variable(n(), v);
      if (name == "sqrt") return sqrt_call();
      if (name == "I" && allow_imag_) {
        if constexpr (scalar_traits<K>::complex) {
          inexact = true;
          return P::constant(n(), K(0.0, 1.0));
        }
      }
      i_ = start;
      fail("unknown variable '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  P sqrt_call() {
    if (!eat('(')) fail("expected '(' after sqrt");
    skip();
    std::size_t start = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (start == i_) fail("sqrt takes a positive integer literal");
    unsigned long k = std::stoul(s_.substr(start, i_ - start));
    if (k == 0) fail("sqrt takes a positive integer literal");
    if (!eat(')')) fail("expected ')'");
    inexact = true;
    if constexpr (is_exact_v<K>) {
      fail("sqrt is not exact");
    } else {
      return P::constant(n(), K(std::sqrt(double(k))));
    }
  }

  P number() {
    std::size_t start = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    bool is_float = false;
    if (i_ < s_.size() && s_[i_] == '.') {
      is_float = true;
      ++i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
      std::size_t save = i_++;
      if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
      if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
        is_float = true;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      } else {
        i_ = save;
      }
    }
    std::string lit = s_.substr(start, i_ - start);
    if (lit == ".") {
      i_ = start;
      fail("malformed number");
    }
    if (is_float) {
      inexact = true;
      if constexpr (is_exact_v<K>) {
        i_ = start;
        fail("decimal literal in exact parse");
      } else {
        return P::constant(n(), K(std::stod(lit)));
      }
    }
    return P::constant(n(), scalar_cast<K>(Rational(lit)));
  }

  const std::string& s_;
  std::size_t line_, col0_;
  const std::vector<std::string>& vars_;
  bool allow_imag_;
  std::size_t i_ = 0;
};

}  // namespace detail

// Parsed input file. The coefficient field is the narrowest of rational,
// float and complex that represents every literal and the point.
struct LoadedSystem {
  std::variant<PolySystem<Rational>, PolySystem<double>, PolySystem<Complex>> system;
  std::vector<Exponent> basis;  // optional user E
  std::vector<Complex> start;   // optional start for the extended system

  const std::vector<std::string>& varnames() const {
    return std::visit([](const auto& s) -> const std::vector<std::string>& { return s.varnames; }, system);
  }
  std::string field() const {
    return std::visit([](const auto& s) -> std::string {
      using K = typename std::decay_t<decltype(s.point)>::value_type;
      return scalar_traits<K>::name;
    }, system);
  }
};

namespace detail {

struct Line {
  std::size_t number, body_col;
  std::string keyword, body;
};

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

template <class K>
Polynomial<K> parse_expr(const Line& l, const std::string& text, const std::vector<std::string>& vars, bool imag, bool* inexact) {
  ExprParser<K> p(text, l.number, l.body_col, vars, imag);
  auto r = p.parse();
  if (inexact) *inexact = p.inexact;
  return r;
}

// Positions of whitespace-separated tokens within the body.
inline std::vector<std::pair<std::size_t, std::string>> tokens_with_pos(const std::string& s) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t st = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > st) out.push_back({st, s.substr(st, i - st)});
  }
  return out;
}

}  // namespace detail

inline LoadedSystem parse_system(const std::string& text) {
  std::vector<detail::Line> lines;
  {
    std::istringstream in(text);
    std::string raw;
    std::size_t no = 0;
    while (std::getline(in, raw)) {
      ++no;
      if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
      std::size_t i = 0;
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      if (i == raw.size()) continue;
      std::size_t k = i;
      while (k < raw.size() && !std::isspace(static_cast<unsigned char>(raw[k]))) ++k;
      lines.push_back({no, k, raw.substr(i, k - i), raw.substr(k)});
    }
  }
  std::vector<std::string> vars;
  const detail::Line* vars_line = nullptr;
  std::vector<const detail::Line*> polys, points, bases, starts;
  for (const auto& l : lines) {
    if (l.keyword == "vars") {
      if (vars_line) throw ParseError(l.number, 1, "duplicate vars line");
      vars_line = &l;
      vars = detail::split_ws(l.body);
      if (vars.empty()) throw ParseError(l.number, 1, "vars needs at least one name");
      for (std::size_t a = 0; a < vars.size(); ++a) {
        const auto& v = vars[a];
        if (!(std::isalpha(static_cast<unsigned char>(v[0])) || v[0] == '_') || v == "sqrt" || v == "I")
          throw ParseError(l.number, 1, "invalid variable name '" + v + "'");
        for (char ch : v)
          if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) throw ParseError(l.number, 1, "invalid variable name '" + v + "'");
        for (std::size_t b = 0; b < a; ++b)
          if (vars[b] == v) throw ParseError(l.number, 1, "repeated variable '" + v + "'");
      }
    } else if (l.keyword == "poly") {
      polys.push_back(&l);
    } else if (l.keyword == "point") {
      points.push_back(&l);
    } else if (l.keyword == "basis") {
      bases.push_back(&l);
    } else if (l.keyword == "start") {
      starts.push_back(&l);
    } else {
      throw ParseError(l.number, 1, "unknown keyword '" + l.keyword + "'");
    }
  }
  if (!vars_line) throw ParseError(lines.empty() ? 1 : lines.front().number, 1, "missing vars line");
  if (polys.empty()) throw ParseError(vars_line->number, 1, "system has no polynomials");
  if (points.size() > 1) throw ParseError(points[1]->number, 1, "more than one point");
  for (const auto* l : polys)
    if (l->number < vars_line->number) throw ParseError(l->number, 1, "poly before vars");
  const std::size_t n = vars.size();

  bool poly_float = false;
  std::vector<Polynomial<double>> fp;
  for (const auto* l : polys) {
    bool inexact = false;
    fp.push_back(detail::parse_expr<double>(*l, l->body, vars, false, &inexact));
    poly_float |= inexact;
  }

  std::vector<Complex> pt;
  bool point_float = false, point_complex = false;
  if (!points.empty()) {
    const auto* l = points.front();
    auto toks = detail::tokens_with_pos(l->body);
    if (toks.size() != n) throw ParseError(l->number, 1, "point has " + std::to_string(toks.size()) + " coordinates, expected " + std::to_string(n));
    for (const auto& [pos, tok] : toks) {
      bool inexact = false;
      detail::Line sub{l->number, l->body_col + pos, "", ""};
      auto c = detail::parse_expr<Complex>(sub, tok, {}, true, &inexact);
      if (c.degree() > 0) throw ParseError(l->number, l->body_col + pos + 1, "point coordinate is not a constant");
      Complex v = c.is_zero() ? Complex(0) : c.leading().coeff;
      point_float |= inexact;
      point_complex |= v.imag() != 0.0;
      pt.push_back(v);
    }
  }

  LoadedSystem out;
  auto finish = [&](auto sys) {
    sys.varnames = vars;
    sys.validate();
    out.system = std::move(sys);
  };
  if (point_complex) {
    PolySystem<Complex> s;
    for (const auto& p : fp) s.polys.push_back(p.cast<Complex>());
    s.point = pt;
    finish(std::move(s));
  } else if (poly_float || point_float) {
    PolySystem<double> s;
    s.polys = fp;
    for (auto v : pt) s.point.push_back(v.real());
    finish(std::move(s));
  } else {
    PolySystem<Rational> s;
    for (const auto* l : polys) s.polys.push_back(detail::parse_expr<Rational>(*l, l->body, vars, false, nullptr));
    if (!points.empty()) {
      const auto* l = points.front();
      for (const auto& [pos, tok] : detail::tokens_with_pos(l->body)) {
        detail::Line sub{l->number, l->body_col + pos, "", ""};
        auto c = detail::parse_expr<Rational>(sub, tok, {}, false, nullptr);
        s.point.push_back(c.is_zero() ? Rational(0) : c.leading().coeff);
      }
    }
    finish(std::move(s));
  }

  for (const auto* l : bases)
    for (const auto& [pos, tok] : detail::tokens_with_pos(l->body)) {
      detail::Line sub{l->number, l->body_col + pos, "", ""};
      auto m = detail::parse_expr<Rational>(sub, tok, vars, false, nullptr);
      if (m.size() != 1 || m.leading().coeff != 1) throw ParseError(l->number, l->body_col + pos + 1, "basis entries must be monomials");
      out.basis.push_back(m.leading().exp);
    }
  for (const auto* l : starts)
    for (const auto& [pos, tok] : detail::tokens_with_pos(l->body)) {
      detail::Line sub{l->number, l->body_col + pos, "", ""};
      auto c = detail::parse_expr<Complex>(sub, tok, {}, true, nullptr);
      if (c.degree() > 0) throw ParseError(l->number, l->body_col + pos + 1, "start value is not a constant");
      out.start.push_back(c.is_zero() ? Complex(0) : c.leading().coeff);
    }
  return out;
}

template <class K>
std::string print_system(const PolySystem<K>& s) {
  std::string out = "vars";
  for (const auto& v : s.varnames) out += " " + v;
  out += "\n";
  for (const auto& p : s.polys) out += "poly " + p.to_string(s.varnames) + "\n";
  if (s.has_point()) {
    out += "point";
    for (const auto& x : s.point) {
      std::string t = to_string(x);
      t.erase(std::remove(t.begin(), t.end(), ' '), t.end());
      out += " " + t;
    }
    out += "\n";
  }
  return out;
}

// x1³+x1²−x2², x2³+x2²−x3, …, x_{n−1}³+x_{n−1}²−x_n, x_n², at the origin.
inline PolySystem<Rational> emit_family(std::size_t n) {
  if (n < 2) throw std::invalid_argument("family needs n >= 2");
  PolySystem<Rational> s;
  s.varnames = default_varnames(n);
  using P = Polynomial<Rational>;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    P x = P::variable(n, i), y = P::variable(n, i + 1);
    s.polys.push_back(x.pow(3) + x.pow(2) - (i == 0 ? y.pow(2) : y));
  }
  s.polys.push_back(P::variable(n, n - 1).pow(2));
  s.point.assign(n, Rational(0));
  return s;
}

}  // namespace defl
