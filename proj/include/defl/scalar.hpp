#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace defl {

using Rational = mpq_class;
using Complex = std::complex<double>;

// A computation that cannot proceed at the requested tolerance.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iteration that ran out of steps.
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class K>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static constexpr bool complex = false;
  using numeric = double;
  static constexpr const char* name = "rational";
};

template <>
struct scalar_traits<double> {
  static constexpr bool exact = false;
  static constexpr bool complex = false;
  using numeric = double;
  static constexpr const char* name = "float";
};

template <>
struct scalar_traits<Complex> {
  static constexpr bool exact = false;
  static constexpr bool complex = true;
  using numeric = Complex;
  static constexpr const char* name = "complex";
};

template <class K>
concept Scalar = requires { scalar_traits<K>::exact; };

template <class K>
using numeric_t = typename scalar_traits<K>::numeric;

template <class K>
inline constexpr bool is_exact_v = scalar_traits<K>::exact;

inline bool is_zero(const Rational& x) { return sgn(x) == 0; }
inline bool is_zero(double x) { return x == 0.0; }
inline bool is_zero(const Complex& x) { return x.real() == 0.0 && x.imag() == 0.0; }

inline double magnitude(const Rational& x) { return std::abs(x.get_d()); }
inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const Complex& x) { return std::abs(x); }

template <class To, class From>
To scalar_cast(const From& x) {
  if constexpr (std::is_same_v<To, From>) {
    return x;
  } else if constexpr (std::is_same_v<From, Rational>) {
    return To(x.get_d());
  } else if constexpr (std::is_same_v<To, Rational>) {
    if constexpr (std::is_same_v<From, Complex>) {
      if (x.imag() != 0.0) throw std::domain_error("complex value has no rational image");
      return Rational(x.real());
    } else {
      return Rational(double(x));
    }
  } else if constexpr (std::is_same_v<To, double> && std::is_same_v<From, Complex>) {
    if (x.imag() != 0.0) throw std::domain_error("complex value has no real image");
    return x.real();
  } else {
    return To(x);
  }
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_string(const Rational& x) { return x.get_str(); }
inline std::string to_string(double x) { return format_double(x); }
inline std::string to_string(const Complex& x) {
  if (x.imag() == 0.0) return format_double(x.real());
  std::string s = "(" + format_double(x.real());
  s += x.imag() < 0 ? "-" : "+";
  s += format_double(std::abs(x.imag())) + "*I)";
  return s;
}

}  // namespace defl
