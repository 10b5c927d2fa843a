#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "defl/deflate1.hpp"
#include "defl/linalg.hpp"
#include "support.hpp"

using namespace defl;
using Q = Rational;

namespace {

template <class T>
Matrix<T> from_rows(std::initializer_list<std::initializer_list<T>> rows) {
  Matrix<T> m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (const auto& v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Leibniz formula over all permutations.
Q det_by_permutations(const Matrix<Q>& m) {
  std::vector<std::size_t> p(m.rows());
  std::iota(p.begin(), p.end(), 0);
  Q total = 0;
  do {
    int inv = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = i + 1; j < p.size(); ++j) inv += p[i] > p[j];
    Q prod = 1;
    for (std::size_t i = 0; i < p.size(); ++i) prod *= m(i, p[i]);
    total += (inv % 2) ? Q(-prod) : prod;
  } while (std::next_permutation(p.begin(), p.end()));
  return total;
}

Matrix<Q> random_rational(std::mt19937& rng, std::size_t r, std::size_t c, int lim = 9) {
  std::uniform_int_distribution<int> d(-lim, lim);
  Matrix<Q> m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = Q(d(rng));
  return m;
}

}  // namespace

TEST(NumericalRank, Examples) {
  EXPECT_EQ(numerical_rank(from_rows<double>({{1, 0}, {0, 0}}), 1e-8).rank, 1u);
  EXPECT_EQ(numerical_rank(Matrix<double>(3, 3), 1e-8).rank, 0u);
  EXPECT_EQ(numerical_rank(from_rows<Q>({{1, 0}, {0, 0}}), 0).rank, 1u);
  auto sys1 = defl::test::load_as<Q>("sys1.sys");
  EXPECT_EQ(numerical_rank(jacobian_at(sys1, sys1.point), 1e-8).rank, 0u);
  EXPECT_THROW(numerical_rank(Matrix<double>(), 1e-8), std::invalid_argument);
}

TEST(NumericalRank, LeadingBlockInvertible) {
  auto m = from_rows<double>({{0, 0, 0}, {0, 2, 4}, {0, 1, 2}});
  auto r = numerical_rank(m, 1e-8);
  ASSERT_EQ(r.rank, 1u);
  EXPECT_GT(std::abs(m(r.row_perm[0], r.col_perm[0])), 0.5);
}

TEST(NullSpace, Examples) {
  EXPECT_TRUE(null_space(Matrix<double>::identity(2), 1e-8).empty());
  auto k = null_space(from_rows<Q>({{1, 0}, {0, 0}}), 0);
  ASSERT_EQ(k.size(), 1u);
  EXPECT_EQ(k[0][0], Q(0));
  EXPECT_NE(k[0][1], Q(0));
  auto kf = null_space(from_rows<double>({{1, 0}, {0, 0}}), 1e-8);
  ASSERT_EQ(kf.size(), 1u);
  EXPECT_NEAR(std::abs(kf[0][1]), 1.0, 1e-12);
}

TEST(RowEchelon, Examples) {
  auto id = row_echelon(Matrix<Q>::identity(3), 0);
  EXPECT_EQ(id.pivots, (std::vector<std::size_t>{0, 1, 2}));
  auto e = row_echelon(from_rows<Q>({{0, 1}, {0, 2}}), 0);
  EXPECT_EQ(e.pivots, std::vector<std::size_t>{1});
  EXPECT_EQ(e.reduced(0, 1), Q(1));
  EXPECT_EQ(e.reduced(1, 1), Q(0));
  auto f = row_echelon(from_rows<double>({{0, 1e-12}, {0, 2}}), 1e-8);
  EXPECT_EQ(f.pivots, std::vector<std::size_t>{1});
}

TEST(Det, Examples) {
  EXPECT_EQ(det(Matrix<Q>::identity(4)), Q(1));
  EXPECT_DOUBLE_EQ(det(Matrix<double>::identity(3)), 1.0);
  using P = Polynomial<Q>;
  auto x1 = P::variable(2, 0), x2 = P::variable(2, 1);
  Matrix<P> m(2, 2, P(2));
  m(0, 0) = P::constant(2, Q(1));
  m(0, 1) = P::constant(2, Q(2)) * x2;
  m(1, 0) = P::constant(2, Q(2)) * x1;
  m(1, 1) = P::constant(2, Q(2)) * x2;
  EXPECT_EQ(det(m), defl::test::qpoly("x1 x2", "2*x2 - 4*x1*x2"));
  EXPECT_THROW(det(Matrix<Q>(2, 3)), std::invalid_argument);
}

TEST(Det, MatchesPermutationExpansion) {
  std::mt19937 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto m = random_rational(rng, 3, 3);
    EXPECT_EQ(det(m), det_by_permutations(m));
    auto m4 = random_rational(rng, 4, 4);
    EXPECT_EQ(det(m4), det_by_permutations(m4));
  }
}

TEST(LinalgProperty, DetMultilinearAlternatingMultiplicative) {
  std::mt19937 rng(4);
  for (int t = 0; t < 20; ++t) {
    auto a = random_rational(rng, 3, 3), b = random_rational(rng, 3, 3);
    EXPECT_EQ(det(a * b), Q(det(a) * det(b)));
    auto s = a;
    for (std::size_t j = 0; j < 3; ++j) std::swap(s(0, j), s(1, j));
    EXPECT_EQ(det(s), Q(-det(a)));
    auto u = a, v = a, w = a;
    for (std::size_t j = 0; j < 3; ++j) {
      v(2, j) = b(0, j);
      w(2, j) = a(2, j) + 3 * b(0, j);
    }
    EXPECT_EQ(det(w), Q(det(u) + 3 * det(v)));
  }
}

TEST(LinalgProperty, RankNullityAndResiduals) {
  std::mt19937 rng(5);
  for (int t = 0; t < 30; ++t) {
    std::size_t r = 1 + rng() % 4, rows = 3 + rng() % 4, cols = 3 + rng() % 4;
    auto m = random_rational(rng, rows, r) * random_rational(rng, r, cols);
    auto rq = numerical_rank(m, 1e-8).rank;
    EXPECT_EQ(rq + null_space(m, 0).size(), cols);
    auto md = m.cast<double>();
    auto rd = numerical_rank(md, 1e-8).rank;
    EXPECT_EQ(rd, rq);
    auto ker = null_space(md, 1e-8);
    EXPECT_EQ(rd + ker.size(), cols);
    for (const auto& v : ker) {
      auto mv = md * v;
      double nmv = 0, nv = 0;
      for (double x : mv) nmv = std::max(nmv, std::abs(x));
      for (double x : v) nv = std::max(nv, std::abs(x));
      EXPECT_LE(nmv, 1e-8 * md.max_abs() * nv * double(cols));
    }
  }
}

TEST(SparseEchelon, RankAndKernel) {
  SparseEchelon<Q> e(3);
  EXPECT_TRUE(e.add({{0, Q(1)}, {2, Q(1)}}));
  EXPECT_TRUE(e.add({{1, Q(1)}, {2, Q(2)}}));
  EXPECT_FALSE(e.add({{0, Q(2)}, {1, Q(1)}, {2, Q(4)}}));
  EXPECT_EQ(e.rank(), 2u);
  auto k = e.kernel();
  ASSERT_EQ(k.size(), 1u);
  EXPECT_EQ(k[0].first, 2u);
  std::vector<Q> v(3);
  for (auto [c, x] : k[0].second) v[c] = x;
  EXPECT_EQ(v, (std::vector<Q>{-1, -2, 1}));
}
