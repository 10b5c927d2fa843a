#include <gtest/gtest.h>

#include "defl/dual.hpp"
#include "support.hpp"

using namespace defl;
using defl::test::load_as;
using defl::test::qsystem;
using Q = Rational;

namespace {

// d_{∂_i}Λ: lowers every ∂-monomial containing ∂_i by one in that variable.
template <class K>
Polynomial<K> lower(const Polynomial<K>& c, std::size_t i) {
  std::vector<typename Polynomial<K>::Term> ts;
  for (const auto& t : c.terms())
    if (t.exp[i] > 0) ts.push_back({t.exp - Exponent::unit(i), t.coeff});
  return Polynomial<K>::from_terms(c.nvars(), ts);
}

// Checks d_{∂_i}Λ_j ∈ span{Λ_0..Λ_{j−1}} by reading the combination off the
// leading monomials.
template <class K>
double closedness_defect(const MultiplicityStructure<K>& ms) {
  double worst = 0;
  for (std::size_t j = 0; j < ms.delta; ++j)
    for (std::size_t i = 0; i < ms.nvars; ++i) {
      auto d = lower(ms.dual[j].coeffs, i);
      auto rest = d;
      for (std::size_t k = 0; k < ms.delta; ++k) {
        K c = d.coeff(ms.E[k]);
        if (defl::is_zero(c)) continue;
        if (k >= j) return 1e300;
        rest = rest - c * ms.dual[k].coeffs;
      }
      for (const auto& t : rest.terms()) worst = std::max(worst, magnitude(t.coeff));
    }
  return worst;
}

template <class K>
double orthogonality_defect(const MultiplicityStructure<K>& ms) {
  auto o = orthogonality_matrix(ms);
  return (o - Matrix<K>::identity(ms.delta)).max_abs();
}

}  // namespace

TEST(Macaulay, Shapes) {
  auto cap = load_as<Complex>("caprasse.sys");
  auto m = macaulay_matrix(cap, cap.point, 2);
  EXPECT_EQ(m.rows(), 20u);
  EXPECT_EQ(m.cols(), 15u);
  EXPECT_EQ(null_space(m, 1e-8).size(), 4u);
}

TEST(Macaulay, DoubleRootDegreeOne) {
  auto f = qsystem(defl::test::double_root);
  auto m = macaulay_matrix(f, f.point, 1);
  ASSERT_EQ(m.rows(), 2u);
  ASSERT_EQ(m.cols(), 3u);
  // columns 1, x1, x2
  EXPECT_EQ(m(0, 0), Q(0));
  EXPECT_EQ(m(0, 1), Q(1));
  EXPECT_EQ(m(0, 2), Q(0));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m(1, j), Q(0));
}

TEST(Macaulay, FirstColumnIsEvaluation) {
  auto f = qsystem("vars x y\npoly x^2 + y - 3\npoly x*y + 1\npoint 1 2\n");
  auto m = macaulay_matrix(f, f.point, 1);
  EXPECT_EQ(m(0, 0), Q(0));
  EXPECT_EQ(m(1, 0), Q(3));
  EXPECT_THROW(macaulay_matrix(f, f.point, 0), std::invalid_argument);
}

TEST(DualSpace, DoubleRoot) {
  auto f = qsystem(defl::test::double_root);
  auto ms = dual_space(f, f.point, 1e-8);
  EXPECT_EQ(ms.delta, 2u);
  EXPECT_EQ(ms.nil_index, 1);
  EXPECT_EQ(ms.E, (std::vector<Exponent>{{0, 0}, {0, 1}}));
  EXPECT_EQ(ms.dual[1].coeffs, Polynomial<Q>::variable(2, 1));
  EXPECT_EQ(breadth(ms), 1u);
}

TEST(DualSpace, TripleRoot) {
  auto f = qsystem(defl::test::triple_root);
  auto ms = dual_space(f, f.point, 1e-8);
  EXPECT_EQ(ms.delta, 3u);
  EXPECT_EQ(ms.nil_index, 2);
  EXPECT_EQ(ms.E, (std::vector<Exponent>{{0, 0}, {1, 0}, {2, 0}}));
  // {1, ∂1+∂2, ∂2 + ½∂1² + ∂1∂2 + ½∂2²}, coefficients of (1/β!)∂^β
  EXPECT_EQ(ms.dual[1].coeffs, defl::test::qpoly("x1 x2", "x1 + x2"));
  EXPECT_EQ(ms.dual[2].coeffs, defl::test::qpoly("x1 x2", "x2 + x1^2 + x1*x2 + x2^2"));
}

TEST(DualSpace, Caprasse) {
  auto f = load_as<Complex>("caprasse.sys");
  auto ms = dual_space(f, f.point, 1e-8);
  ASSERT_EQ(ms.delta, 4u);
  EXPECT_EQ(ms.nil_index, 2);
  EXPECT_EQ(ms.E, (std::vector<Exponent>{{0, 0, 0, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}, {2, 0, 0, 0}}));
  const std::size_t x1 = ms.index_of({1, 0, 0, 0}), x2 = ms.index_of({0, 1, 0, 0}), x1sq = ms.index_of({2, 0, 0, 0});
  auto near = [](Complex a, Complex b) { return std::abs(a - b) <= 1e-8; };
  EXPECT_TRUE(near(ms.nu(x1, {0, 0, 1, 0}), -1.0));
  EXPECT_TRUE(near(ms.nu(x1, {0, 0, 0, 1}), 0.0));
  EXPECT_TRUE(near(ms.nu(x2, {0, 0, 1, 0}), 1.0));
  EXPECT_TRUE(near(ms.nu(x2, {0, 0, 0, 1}), 1.0));
  EXPECT_TRUE(near(ms.nu(x1sq, {1, 1, 0, 0}), -0.25));
  EXPECT_TRUE(near(ms.nu(x1sq, {0, 0, 2, 0}), 1.0));
  EXPECT_TRUE(near(nu_outside_Eplus(ms, {0, 0, 2, 0}, x1sq), 1.0));
  EXPECT_TRUE(near(nu_outside_Eplus(ms, {0, 0, 1, 1}, x1sq), -0.25));
  EXPECT_TRUE(near(nu_outside_Eplus(ms, {2, 0, 0, 0}, x1sq), 1.0));
  EXPECT_TRUE(near(nu_outside_Eplus(ms, {3, 0, 0, 0}, x1sq), 0.0));
}

TEST(DualSpace, BenchmarkSystems) {
  struct Case {
    const char* file;
    std::size_t delta;
    int order;
  };
  for (auto c : {Case{"sys2.sys", 16, 7}, Case{"sys3.sys", 5, 4}, Case{"sys4.sys", 18, 7}, Case{"sys1.sys", 131, 10}}) {
    auto L = defl::test::load_file(c.file);
    std::visit(
        [&](const auto& f) {
          auto ms = dual_space(f, f.point, 1e-8);
          EXPECT_EQ(ms.delta, c.delta) << c.file;
          EXPECT_EQ(ms.nil_index, c.order) << c.file;
        },
        L.system);
  }
}

TEST(DualSpace, SimpleRootAndErrors) {
  auto f = qsystem("vars x1 x2\npoly x1\npoly x2\npoint 0 0\n");
  auto ms = dual_space(f, f.point, 1e-8);
  EXPECT_EQ(ms.delta, 1u);
  EXPECT_EQ(ms.nil_index, 0);
  EXPECT_EQ(breadth(ms), 0u);
  auto line = qsystem("vars x1 x2\npoly x1\npoint 0 0\n");
  EXPECT_THROW(dual_space(line, line.point, 1e-8, 6), NumericError);
  auto off = qsystem("vars x1 x2\npoly x1 - 1\npoly x2\npoint 0 0\n");
  EXPECT_THROW(dual_space(off, off.point, 1e-8), NumericError);
}

TEST(DualSpace, FamilyBreadthTwo) {
  for (std::size_t n : {2u, 3u, 4u}) {
    auto f = emit_family(n);
    auto ms = dual_space(f, f.point, 1e-8);
    EXPECT_EQ(ms.delta, std::size_t(1) << n);
    EXPECT_EQ(breadth(ms), 2u);
  }
}

TEST(DualProperty, AnnihilationOrthogonalityClosedness) {
  auto check = [](const auto& f, double tol) {
    auto ms = dual_space(f, f.point, tol);
    for (const auto& l : ms.dual)
      for (const auto& p : f.polys) EXPECT_LE(magnitude(l.apply(p, f.point)), tol * std::max(1.0, p.max_abs_coeff()));
    EXPECT_LE(orthogonality_defect(ms), 1e-9);
    EXPECT_LE(closedness_defect(ms), 1e-9);
    for (std::size_t i = 1; i < ms.E.size(); ++i) EXPECT_LE(ms.E[i - 1].degree(), ms.E[i].degree());
    EXPECT_TRUE(connected_to_one(ms.E));
    for (std::size_t d = 1; d < ms.kernel_dims.size(); ++d) EXPECT_LE(ms.kernel_dims[d - 1], ms.kernel_dims[d]);
    EXPECT_EQ(ms.kernel_dims.back(), ms.delta);
  };
  check(qsystem(defl::test::double_root), 1e-8);
  check(qsystem(defl::test::triple_root), 1e-8);
  check(load_as<Complex>("caprasse.sys"), 1e-8);
  check(load_as<Q>("sys2.sys"), 1e-8);
  check(load_as<double>("sys3.sys"), 1e-8);
  check(load_as<Q>("sys4.sys"), 1e-8);
  for (std::size_t n : {2u, 3u}) check(emit_family(n), 1e-8);
}

TEST(DualProperty, ExactMatchesFloat) {
  for (const char* file : {"sys2.sys", "sys4.sys"}) {
    auto f = load_as<Q>(file);
    auto a = dual_space(f, f.point, 1e-8);
    auto g = f.cast<double>();
    auto b = dual_space(g, g.point, 1e-8);
    EXPECT_EQ(a.delta, b.delta) << file;
    EXPECT_EQ(a.nil_index, b.nil_index) << file;
    EXPECT_EQ(a.E, b.E) << file;
  }
}
