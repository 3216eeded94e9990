#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "radks/quadrature.hpp"

using namespace radks;

TEST(GaussLegendre, TwoPointRule) {
  auto const r = gauss_legendre(2);
  ASSERT_EQ(r.size(), 2);
  EXPECT_NEAR(r.points[0], -1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.points[1], 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.weights[0], 1.0, 1e-15);
  EXPECT_NEAR(r.weights[1], 1.0, 1e-15);
}

TEST(GaussLegendre, ExactForDegreeTwoNMinusOne) {
  for (int n = 1; n <= 24; ++n) {
    auto const r = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.points[i], k);
      double const exact = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
      EXPECT_NEAR(s, exact, 2e-14) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GaussLegendre, NotExactBeyondDegree) {
  auto const r = gauss_legendre(3);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += r.weights[i] * std::pow(r.points[i], 6);
  EXPECT_GT(std::abs(s - 2.0 / 7.0), 1e-3);
}

TEST(GaussLegendre, SymmetricSortedPositiveWeights) {
  for (int n = 1; n <= 30; ++n) {
    auto const r = gauss_legendre(n);
    for (int i = 0; i < n; ++i) {
      EXPECT_GT(r.weights[i], 0.0);
      EXPECT_NEAR(r.points[i], -r.points[n - 1 - i], 1e-15);
      if (i > 0) EXPECT_LT(r.points[i - 1], r.points[i]);
    }
  }
}

TEST(GaussLegendre, RejectsNonPositiveSize) {
  EXPECT_THROW(gauss_legendre(0), std::invalid_argument);
  EXPECT_THROW(gauss_legendre(-3), std::invalid_argument);
}

TEST(GaussLobatto, KnownNodes) {
  auto n2 = gauss_lobatto_nodes(2);
  EXPECT_EQ(n2, (std::vector<double>{-1.0, 0.0, 1.0}));
  auto n3 = gauss_lobatto_nodes(3);
  EXPECT_NEAR(n3[1], -1.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(n3[2], 1.0 / std::sqrt(5.0), 1e-15);
  auto n4 = gauss_lobatto_nodes(4);
  EXPECT_NEAR(n4[1], -std::sqrt(3.0 / 7.0), 1e-15);
  EXPECT_EQ(n4[2], 0.0);
}

TEST(GaussLobatto, InteriorNodesAreRootsOfLegendreDerivative) {
  for (int p = 2; p <= 16; ++p) {
    auto const nodes = gauss_lobatto_nodes(p);
    EXPECT_EQ(nodes.front(), -1.0);
    EXPECT_EQ(nodes.back(), 1.0);
    for (int i = 1; i < p; ++i) {
      EXPECT_LT(nodes[i - 1], nodes[i]);
      EXPECT_NEAR(detail::legendre_with_derivative(p, nodes[i]).second, 0.0, 1e-11 * p * p);
    }
  }
  EXPECT_THROW(gauss_lobatto_nodes(0), std::invalid_argument);
}

TEST(ElementBasis, CardinalAndPartitionOfUnity) {
  for (int p : {1, 2, 4, 7, 10}) {
    auto const b = lobatto_basis(p);
    auto const nodes = b.nodes();
    for (int j = 0; j <= p; ++j)
      for (int k = 0; k <= p; ++k) EXPECT_NEAR(b.value(j, nodes[k]), j == k ? 1.0 : 0.0, 1e-13);
    for (double t : {-0.9, -0.31, 0.0, 0.55, 0.99}) {
      double sv = 0.0, sd = 0.0;
      for (int j = 0; j <= p; ++j) {
        sv += b.value(j, t);
        sd += b.derivative(j, t);
      }
      EXPECT_NEAR(sv, 1.0, 1e-13);
      EXPECT_NEAR(sd, 0.0, 1e-11);
    }
  }
}

TEST(ElementBasis, DefaultQuadratureIsPPlusTwo) {
  EXPECT_EQ(lobatto_basis(10).rule().size(), 12);
  EXPECT_EQ(lobatto_basis(3, 9).rule().size(), 9);
  EXPECT_THROW(lobatto_basis(0), std::invalid_argument);
  EXPECT_THROW(lobatto_basis(3, -1), std::invalid_argument);
}

TEST(ElementBasis, TablesMatchDirectEvaluation) {
  auto const b = lobatto_basis(5);
  for (int q = 0; q < b.rule().size(); ++q)
    for (int j = 0; j <= 5; ++j) {
      EXPECT_DOUBLE_EQ(b.shape_value(q, j), b.value(j, b.rule().points[q]));
      EXPECT_DOUBLE_EQ(b.shape_deriv(q, j), b.derivative(j, b.rule().points[q]));
    }
}

TEST(FeEvaluation, ReproducesPolynomialsOfDegreeP) {
  for (int p = 1; p <= 10; ++p) {
    auto const b = lobatto_basis(p);
    auto f = [p](double t) { return std::pow(t, p) - 0.5 * t + 0.25; };
    auto df = [p](double t) { return p * std::pow(t, p - 1) - 0.5; };
    std::vector<double> c;
    for (double x : b.nodes()) c.push_back(f(x));
    for (double t : {-1.0, -0.7, 0.1, 0.63, 1.0}) {
      EXPECT_NEAR(eval_fe_function(b, c, t), f(t), 1e-12) << p;
      EXPECT_NEAR(eval_fe_derivative(b, c, t), df(t), 1e-10) << p;
    }
  }
}

TEST(FeEvaluation, RejectsBadArguments) {
  auto const b = lobatto_basis(3);
  std::vector<double> c(3, 0.0);
  EXPECT_THROW(eval_fe_function(b, c, 0.0), std::invalid_argument);
  c.resize(4);
  EXPECT_THROW(eval_fe_function(b, c, 1.5), std::invalid_argument);
  EXPECT_THROW(eval_fe_derivative(b, c, -1.01), std::invalid_argument);
}
