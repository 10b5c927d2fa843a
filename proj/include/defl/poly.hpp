#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "defl/scalar.hpp"

namespace defl {

// Monomial exponent stored sparsely as (variable, power) pairs sorted by
// variable. Extended systems can have thousands of variables, most of which
// are absent from any given monomial.
class Exponent {
 public:
  struct Factor {
    std::uint32_t var;
    std::uint32_t pow;
    friend bool operator==(const Factor&, const Factor&) = default;
  };

  Exponent() = default;
  Exponent(std::initializer_list<int> dense) : Exponent(std::span<const int>(dense.begin(), dense.size())) {}
  explicit Exponent(std::span<const int> dense) {
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (dense[i] < 0) throw std::invalid_argument("negative exponent");
      if (dense[i] > 0) push(i, dense[i]);
    }
  }
  explicit Exponent(const std::vector<int>& dense) : Exponent(std::span<const int>(dense)) {}

  static Exponent unit(std::size_t var, unsigned pow = 1) {
    Exponent e;
    if (pow) e.push(var, pow);
    return e;
  }

  unsigned degree() const { return degree_; }
  bool is_one() const { return factors_.empty(); }
  std::span<const Factor> factors() const { return {factors_.data(), factors_.size()}; }

  unsigned operator[](std::size_t var) const {
    for (const auto& f : factors_) {
      if (f.var == var) return f.pow;
      if (f.var > var) break;
    }
    return 0;
  }

  // One past the largest variable index present.
  std::size_t support_end() const { return factors_.empty() ? 0 : factors_.back().var + 1; }

  std::vector<int> dense(std::size_t n) const {
    std::vector<int> v(n, 0);
    for (const auto& f : factors_) {
      if (f.var >= n) throw std::out_of_range("exponent exceeds variable count");
      v[f.var] = int(f.pow);
    }
    return v;
  }

  Exponent operator+(const Exponent& o) const {
    Exponent r;
    r.factors_.reserve(factors_.size() + o.factors_.size());
    auto a = factors_.begin(), ae = factors_.end();
    auto b = o.factors_.begin(), be = o.factors_.end();
    while (a != ae || b != be) {
      if (b == be || (a != ae && a->var < b->var)) {
        r.factors_.push_back(*a++);
      } else if (a == ae || b->var < a->var) {
        r.factors_.push_back(*b++);
      } else {
        r.factors_.push_back({a->var, a->pow + b->pow});
        ++a, ++b;
      }
    }
    r.degree_ = degree_ + o.degree_;
    return r;
  }

  // Componentwise this <= o.
  bool divides(const Exponent& o) const {
    if (degree_ > o.degree_) return false;
    auto b = o.factors_.begin(), be = o.factors_.end();
    for (const auto& f : factors_) {
      while (b != be && b->var < f.var) ++b;
      if (b == be || b->var != f.var || b->pow < f.pow) return false;
    }
    return true;
  }

  Exponent operator-(const Exponent& o) const {
    if (!o.divides(*this)) throw std::domain_error("exponent subtraction would go negative");
    Exponent r;
    auto b = o.factors_.begin(), be = o.factors_.end();
    for (const auto& f : factors_) {
      while (b != be && b->var < f.var) ++b;
      unsigned sub = (b != be && b->var == f.var) ? b->pow : 0;
      if (f.pow > sub) r.push(f.var, f.pow - sub);
    }
    return r;
  }

  Exponent shifted(std::size_t offset) const {
    Exponent r = *this;
    for (auto& f : r.factors_) f.var += std::uint32_t(offset);
    return r;
  }

  // 1/β! as a scalar.
  template <class K>
  K inverse_factorial() const {
    K r(1);
    for (const auto& f : factors_)
      for (unsigned k = 2; k <= f.pow; ++k) r /= K(double(k));
    return r;
  }

  std::size_t hash() const {
    std::size_t h = degree_;
    for (const auto& f : factors_) h = h * 1000003u ^ (std::size_t(f.var) << 20 | f.pow);
    return h;
  }

  friend bool operator==(const Exponent& a, const Exponent& b) {
    return a.degree_ == b.degree_ && std::equal(a.factors_.begin(), a.factors_.end(), b.factors_.begin(), b.factors_.end());
  }

  // Graded lexicographic, variable 0 largest.
  friend std::strong_ordering operator<=>(const Exponent& a, const Exponent& b) {
    if (a.degree_ != b.degree_) return a.degree_ <=> b.degree_;
    auto i = a.factors_.begin(), ie = a.factors_.end();
    auto j = b.factors_.begin(), je = b.factors_.end();
    for (; i != ie && j != je; ++i, ++j) {
      if (i->var != j->var) return i->var < j->var ? std::strong_ordering::greater : std::strong_ordering::less;
      if (i->pow != j->pow) return i->pow <=> j->pow;
    }
    if (i != ie) return std::strong_ordering::greater;
    if (j != je) return std::strong_ordering::less;
    return std::strong_ordering::equal;
  }

  std::string to_string(const std::vector<std::string>& names) const {
    if (factors_.empty()) return "1";
    std::string s;
    for (const auto& f : factors_) {
      if (!s.empty()) s += "*";
      s += f.var < names.size() ? names[f.var] : "v" + std::to_string(f.var + 1);
      if (f.pow > 1) s += "^" + std::to_string(f.pow);
    }
    return s;
  }

 private:
  void push(std::size_t var, unsigned pow) {
    factors_.push_back({std::uint32_t(var), std::uint32_t(pow)});
    degree_ += pow;
  }

  boost::container::small_vector<Factor, 4> factors_;
  unsigned degree_ = 0;
};

struct ExponentHash {
  std::size_t operator()(const Exponent& e) const { return e.hash(); }
};

// All exponents in n variables with |α| = d, in descending graded-lex order.
inline std::vector<Exponent> exponents_of_degree(std::size_t n, unsigned d) {
  std::vector<Exponent> out;
  std::vector<int> e(n, 0);
  std::function<void(std::size_t, unsigned)> rec = [&](std::size_t var, unsigned left) {
    if (var + 1 == n) {
      e[var] = int(left);
      out.emplace_back(e);
      e[var] = 0;
      return;
    }
    for (int k = int(left); k >= 0; --k) {
      e[var] = k;
      rec(var + 1, left - unsigned(k));
    }
    e[var] = 0;
  };
  if (n == 0) {
    if (d == 0) out.emplace_back();
    return out;
  }
  rec(0, d);
  return out;
}

// |α| ≤ d, degree ascending, descending graded-lex within a degree.
inline std::vector<Exponent> exponents_up_to(std::size_t n, unsigned d) {
  std::vector<Exponent> out;
  for (unsigned k = 0; k <= d; ++k) {
    auto level = exponents_of_degree(n, k);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

template <class K>
class Polynomial {
 public:
  struct Term {
    Exponent exp;
    K coeff;
  };

  Polynomial() = default;
  explicit Polynomial(std::size_t nvars) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, const K& c) {
    Polynomial p(nvars);
    if (!defl::is_zero(c)) p.terms_.push_back({Exponent(), c});
    return p;
  }
  static Polynomial variable(std::size_t nvars, std::size_t i) { return monomial(nvars, Exponent::unit(i), K(1)); }
  static Polynomial monomial(std::size_t nvars, Exponent e, const K& c) {
    if (e.support_end() > nvars) throw std::out_of_range("monomial variable out of range");
    Polynomial p(nvars);
    if (!defl::is_zero(c)) p.terms_.push_back({std::move(e), c});
    return p;
  }
  // Terms in any order, duplicates allowed.
  static Polynomial from_terms(std::size_t nvars, std::vector<Term> terms) {
    Polynomial p(nvars);
    for (const auto& t : terms)
      if (t.exp.support_end() > nvars) throw std::out_of_range("monomial variable out of range");
    p.terms_ = std::move(terms);
    p.normalize();
    return p;
  }

  std::size_t nvars() const { return nvars_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  int degree() const { return terms_.empty() ? -1 : int(std::max_element(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) { return a.exp.degree() < b.exp.degree(); })->exp.degree()); }
  const Term& leading() const { return terms_.front(); }

  K coeff(const Exponent& e) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), e, [](const Term& t, const Exponent& x) { return t.exp > x; });
    return (it != terms_.end() && it->exp == e) ? it->coeff : K(0);
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    if (a.nvars_ != b.nvars_ || a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i)
      if (!(a.terms_[i].exp == b.terms_[i].exp) || !(a.terms_[i].coeff == b.terms_[i].coeff)) return false;
    return true;
  }

  Polynomial operator-() const {
    Polynomial r = *this;
    for (auto& t : r.terms_) t.coeff = -t.coeff;
    return r;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) { return merge(a, b, false); }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return merge(a, b, true); }
  Polynomial& operator+=(const Polynomial& o) { return *this = *this + o; }
  Polynomial& operator-=(const Polynomial& o) { return *this = *this - o; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    check(a, b);
    if (a.is_zero() || b.is_zero()) return Polynomial(a.nvars_);
    if (b.terms_.size() == 1) return a.times_term(b.terms_[0].exp, b.terms_[0].coeff);
    if (a.terms_.size() == 1) return b.times_term(a.terms_[0].exp, a.terms_[0].coeff);
    std::vector<Term> prod;
    prod.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& s : a.terms_)
      for (const auto& t : b.terms_) prod.push_back({s.exp + t.exp, s.coeff * t.coeff});
    Polynomial r(a.nvars_);
    r.terms_ = std::move(prod);
    r.normalize();
    return r;
  }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  friend Polynomial operator*(const K& c, const Polynomial& p) {
    Polynomial r(p.nvars_);
    if (defl::is_zero(c)) return r;
    r.terms_.reserve(p.terms_.size());
    for (const auto& t : p.terms_) {
      K v = c * t.coeff;
      if (!defl::is_zero(v)) r.terms_.push_back({t.exp, std::move(v)});
    }
    return r;
  }

  // Multiplication by a monomial keeps the term order.
  Polynomial times_term(const Exponent& e, const K& c) const {
    Polynomial r(nvars_);
    if (defl::is_zero(c)) return r;
    r.terms_.reserve(terms_.size());
    for (const auto& t : terms_) {
      K v = t.coeff * c;
      if (!defl::is_zero(v)) r.terms_.push_back({t.exp + e, std::move(v)});
    }
    return r;
  }

  Polynomial pow(unsigned k) const {
    Polynomial r = constant(nvars_, K(1)), b = *this;
    while (k) {
      if (k & 1) r *= b;
      k >>= 1;
      if (k) b *= b;
    }
    return r;
  }

  Polynomial diff(std::size_t var, unsigned times = 1) const {
    Polynomial r(nvars_);
    if (times == 0) return *this;
    for (const auto& t : terms_) {
      unsigned p = t.exp[var];
      if (p < times) continue;
      K c = t.coeff;
      for (unsigned k = 0; k < times; ++k) c *= K(double(p - k));
      r.terms_.push_back({t.exp - Exponent::unit(var, times), std::move(c)});
    }
    // Differentiation w.r.t. one variable can reorder terms of equal degree.
    r.normalize();
    return r;
  }

  Polynomial diff(const Exponent& beta) const {
    Polynomial r = *this;
    for (const auto& f : beta.factors()) r = r.diff(f.var, f.pow);
    return r;
  }

  template <class T>
  T eval(std::span<const T> pt) const {
    if (pt.size() != nvars_) throw std::invalid_argument("evaluation point has wrong length");
    T acc(0);
    for (const auto& t : terms_) {
      T m = scalar_cast<T>(t.coeff);
      for (const auto& f : t.exp.factors()) m *= ipow(pt[f.var], f.pow);
      acc += m;
    }
    return acc;
  }
  template <class T>
  T eval(const std::vector<T>& pt) const { return eval(std::span<const T>(pt)); }

  // Taylor expansion at xi in the shifted variables y = x − xi, keeping
  // total degree ≤ maxdeg.
  Polynomial taylor(std::span<const K> xi, unsigned maxdeg) const {
    if (xi.size() != nvars_) throw std::invalid_argument("shift point has wrong length");
    std::vector<Term> out;
    std::vector<std::pair<std::uint32_t, unsigned>> chosen;
    for (const auto& t : terms_) {
      auto fs = t.exp.factors();
      // Expand Π (y_v + ξ_v)^{p_v}, choosing k_v powers of y_v.
      std::function<void(std::size_t, unsigned, K)> rec = [&](std::size_t idx, unsigned deg, K c) {
        if (idx == fs.size()) {
          Exponent e;
          for (auto [v, k] : chosen) e = e + Exponent::unit(v, k);
          out.push_back({std::move(e), std::move(c)});
          return;
        }
        auto [v, p] = fs[idx];
        K binom(1);
        for (unsigned k = 0; k <= p && deg + k <= maxdeg; ++k) {
          if (k > 0) binom = binom * K(double(p - k + 1)) / K(double(k));
          K rest = ipow(xi[v], p - k);
          if (p == k || !defl::is_zero(rest)) {
            if (k) chosen.push_back({v, k});
            rec(idx + 1, deg + k, c * binom * rest);
            if (k) chosen.pop_back();
          }
        }
      };
      rec(0, 0, t.coeff);
    }
    return from_terms(nvars_, std::move(out));
  }
  Polynomial taylor(const std::vector<K>& xi, unsigned maxdeg) const { return taylor(std::span<const K>(xi), maxdeg); }

  // q(y) = p(y + xi).
  Polynomial shift(const std::vector<K>& xi) const { return taylor(xi, unsigned(std::max(degree(), 0))); }

  // Same polynomial viewed in a ring with more variables, its variables moved
  // to positions offset..offset+nvars−1.
  Polynomial embed(std::size_t new_nvars, std::size_t offset = 0) const {
    if (offset + nvars_ > new_nvars) throw std::invalid_argument("embedding does not fit");
    Polynomial r(new_nvars);
    r.terms_.reserve(terms_.size());
    for (const auto& t : terms_) r.terms_.push_back({t.exp.shifted(offset), t.coeff});
    if (offset) r.normalize();
    return r;
  }

  template <class K2>
  Polynomial<K2> cast() const {
    std::vector<typename Polynomial<K2>::Term> ts;
    ts.reserve(terms_.size());
    for (const auto& t : terms_) ts.push_back({t.exp, scalar_cast<K2>(t.coeff)});
    return Polynomial<K2>::from_terms(nvars_, std::move(ts));
  }

  double max_abs_coeff() const {
    double m = 0;
    for (const auto& t : terms_) m = std::max(m, magnitude(t.coeff));
    return m;
  }

  // Polynomial with the leading coefficient scaled to 1.
  Polynomial monic() const {
    if (terms_.empty()) return *this;
    K inv = K(1) / terms_.front().coeff;
    return inv * *this;
  }

  std::string to_string(const std::vector<std::string>& names) const {
    if (terms_.empty()) return "0";
    std::string s;
    for (const auto& t : terms_) {
      std::string c = defl::to_string(t.coeff);
      bool neg = !c.empty() && c[0] == '-';
      if (neg) c.erase(0, 1);
      if (s.empty()) {
        if (neg) s += "-";
      } else {
        s += neg ? " - " : " + ";
      }
      if (t.exp.is_one()) {
        s += c;
      } else {
        if (c != "1") s += c + "*";
        s += t.exp.to_string(names);
      }
    }
    return s;
  }

 private:
  template <class T>
  static T ipow(const T& x, unsigned p) {
    T r(1), b = x;
    while (p) {
      if (p & 1) r *= b;
      p >>= 1;
      if (p) b *= b;
    }
    return r;
  }

  static void check(const Polynomial& a, const Polynomial& b) {
    if (a.nvars_ != b.nvars_) throw std::invalid_argument("polynomials live in different rings");
  }

  static Polynomial merge(const Polynomial& a, const Polynomial& b, bool subtract) {
    check(a, b);
    Polynomial r(a.nvars_);
    r.terms_.reserve(a.terms_.size() + b.terms_.size());
    auto i = a.terms_.begin(), ie = a.terms_.end();
    auto j = b.terms_.begin(), je = b.terms_.end();
    while (i != ie || j != je) {
      std::strong_ordering c = (i == ie) ? std::strong_ordering::less : (j == je) ? std::strong_ordering::greater : (i->exp <=> j->exp);
      if (c == std::strong_ordering::greater) {
        r.terms_.push_back(*i++);
      } else if (c == std::strong_ordering::less) {
        r.terms_.push_back({j->exp, subtract ? K(-j->coeff) : j->coeff});
        ++j;
      } else {
        K v = subtract ? K(i->coeff - j->coeff) : K(i->coeff + j->coeff);
        if (!defl::is_zero(v)) r.terms_.push_back({i->exp, std::move(v)});
        ++i, ++j;
      }
    }
    return r;
  }

  void normalize() {
    std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) { return a.exp > b.exp; });
    std::size_t w = 0;
    for (std::size_t r = 0; r < terms_.size();) {
      Term t = std::move(terms_[r++]);
      while (r < terms_.size() && terms_[r].exp == t.exp) t.coeff += terms_[r++].coeff;
      if (!defl::is_zero(t.coeff)) terms_[w++] = std::move(t);
    }
    terms_.resize(w);
  }

  std::size_t nvars_ = 0;
  std::vector<Term> terms_;
};

template <class K>
struct PolySystem {
  std::vector<Polynomial<K>> polys;
  std::vector<std::string> varnames;
  std::vector<K> point;  // empty when absent

  std::size_t nvars() const { return varnames.size(); }
  bool has_point() const { return !point.empty(); }

  void validate() const {
    for (const auto& p : polys)
      if (p.nvars() != varnames.size()) throw std::invalid_argument("polynomial ring does not match variable list");
    if (!point.empty() && point.size() != varnames.size()) throw std::invalid_argument("point has wrong length");
  }

  template <class K2>
  PolySystem<K2> cast() const {
    PolySystem<K2> s;
    s.varnames = varnames;
    for (const auto& p : polys) s.polys.push_back(p.template cast<K2>());
    for (const auto& x : point) s.point.push_back(scalar_cast<K2>(x));
    return s;
  }
};

inline std::vector<std::string> default_varnames(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("x" + std::to_string(i + 1));
  return v;
}

}  // namespace defl
