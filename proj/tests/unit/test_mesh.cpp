#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "radks/mesh.hpp"

using namespace radks;

namespace {

std::vector<double> interpolate(RadialMesh const& mesh, auto f) {
  std::vector<double> c(mesh.num_dofs());
  for (int g = 0; g < mesh.num_dofs(); ++g) c[g] = f(mesh.node(g));
  return c;
}

}  // namespace

TEST(RadialMesh, UniformLayout) {
  auto const m = uniform_mesh(10.0, 5, 3);
  EXPECT_EQ(m.num_elements(), 5);
  EXPECT_EQ(m.num_dofs(), 16);
  EXPECT_EQ(m.radius(), 10.0);
  EXPECT_EQ(m.node(0), 0.0);
  EXPECT_EQ(m.node(3), 2.0);
  EXPECT_EQ(m.node(15), 10.0);
  double w = 0.0;
  for (double v : m.quad_weights()) w += v;
  EXPECT_NEAR(w, 10.0, 1e-13);
  for (int g = 1; g < m.num_dofs(); ++g) EXPECT_LT(m.node(g - 1), m.node(g));
}

TEST(RadialMesh, RejectsBadBoundaries) {
  EXPECT_THROW(RadialMesh({0.0}, 2), std::invalid_argument);
  EXPECT_THROW(RadialMesh({0.1, 1.0}, 2), std::invalid_argument);
  EXPECT_THROW(RadialMesh({0.0, 1.0, 1.0}, 2), std::invalid_argument);
  EXPECT_THROW(uniform_mesh(-1.0, 3, 2), std::invalid_argument);
  EXPECT_THROW(uniform_mesh(1.0, 0, 2), std::invalid_argument);
  EXPECT_THROW(uniform_mesh(1.0, 3, 0), std::invalid_argument);
}

TEST(RadialMesh, LocateAndEvaluate) {
  RadialMesh const m({0.0, 0.5, 2.0, 5.0}, 6);
  EXPECT_EQ(m.locate(0.0), 0);
  EXPECT_EQ(m.locate(1.0), 1);
  EXPECT_EQ(m.locate(5.0), 2);
  auto const c = interpolate(m, [](double x) { return std::exp(-x) * x; });
  for (double x : {0.1, 0.7, 1.9, 3.3, 4.99}) {
    EXPECT_NEAR(m.evaluate(c, x), std::exp(-x) * x, 1e-5);
    EXPECT_NEAR(m.evaluate_derivative(c, x), std::exp(-x) * (1 - x), 1e-4);
  }
  auto const q = m.at_quadrature(c);
  auto const dq = m.derivative_at_quadrature(c);
  auto const r = m.quad_points();
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_NEAR(q[i], m.evaluate(c, r[i]), 1e-14);
    EXPECT_NEAR(dq[i], m.evaluate_derivative(c, r[i]), 1e-12);
  }
  std::vector<double> short_vec(3);
  EXPECT_THROW(m.check_length(short_vec), std::invalid_argument);
}

TEST(ThomasSolve, TwoByTwo) {
  std::vector<double> sub{1.0}, diag{2.0, 2.0}, sup{1.0}, rhs{3.0, 3.0};
  auto const x = thomas_solve(sub, diag, sup, rhs);
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(ThomasSolve, RandomDiagonallyDominantMatchesDense) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int const n = 50;
  std::vector<double> sub(n - 1), diag(n), sup(n - 1), rhs(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = 3.0 + u(gen);
    rhs[i] = b[i] = u(gen);
    a(i, i) = diag[i];
    if (i + 1 < n) {
      sub[i] = u(gen);
      sup[i] = u(gen);
      a(i + 1, i) = sub[i];
      a(i, i + 1) = sup[i];
    }
  }
  Eigen::VectorXd const ref = a.partialPivLu().solve(b);
  auto const x = thomas_solve(sub, diag, sup, rhs);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref[i], 1e-13);
}

TEST(ThomasSolve, Errors) {
  std::vector<double> sub{1.0}, diag{0.0, 2.0}, sup{1.0}, rhs{1.0, 1.0};
  EXPECT_THROW(thomas_solve(sub, diag, sup, rhs), SingularMatrixError);
  std::vector<double> bad{1.0, 2.0};
  EXPECT_THROW(thomas_solve(bad, diag, sup, rhs), std::invalid_argument);
}

TEST(Equidistribution, ConstantMonitorGivesUniformMesh) {
  RadialMesh const m({0.0, 0.1, 0.3, 2.0, 4.0}, 2);
  MonitorSamples mon{{3.0, 3.0, 3.0, 3.0}, 0.01};
  auto const next = equidistribute_step(m, mon);
  for (int i = 0; i <= 4; ++i) EXPECT_NEAR(next.boundaries()[i], i * 1.0, 1e-14);
  auto const again = equidistribute_step(next, mon);
  for (int i = 0; i <= 4; ++i) EXPECT_NEAR(again.boundaries()[i], next.boundaries()[i], 1e-14);
}

TEST(Equidistribution, LinearMonitorFixedPointIsSquareRoot) {
  // M = 2x sampled at midpoints: (x_{i+1} - x_i)(x_{i+1} + x_i) is constant.
  int const n = 20;
  auto m = uniform_mesh(1.0, n, 1);
  for (int it = 0; it < 500; ++it) {
    MonitorSamples mon;
    auto const b = m.boundaries();
    for (int e = 0; e < n; ++e) mon.values.push_back(b[e] + b[e + 1]);
    m = equidistribute_step(m, mon);
  }
  for (int i = 0; i <= n; ++i) EXPECT_NEAR(m.boundaries()[i], std::sqrt(double(i) / n), 1e-12);
}

TEST(Equidistribution, StepRejectsBadMonitor) {
  auto const m = uniform_mesh(1.0, 3, 2);
  EXPECT_THROW(equidistribute_step(m, MonitorSamples{{1.0, 1.0}, 0.01}), std::invalid_argument);
  EXPECT_THROW(equidistribute_step(m, MonitorSamples{{1.0, 0.0, 1.0}, 0.01}), std::invalid_argument);
}

TEST(Monitor, LinearOrbitalGivesConstantMonitor) {
  auto const m = uniform_mesh(4.0, 6, 3);
  std::vector<std::vector<double>> orbs{interpolate(m, [](double x) { return 0.5 * x; })};
  for (auto s : {MonitorSampling::element_mean, MonitorSampling::midpoint}) {
    auto const mon = monitor_from_orbitals(orbs, m, 0.01, s);
    ASSERT_EQ(mon.values.size(), 6u);
    for (double v : mon.values) EXPECT_NEAR(v, std::sqrt(0.26), 1e-13);
  }
  EXPECT_THROW(monitor_from_orbitals({}, m, 0.01), std::invalid_argument);
  EXPECT_THROW(monitor_from_orbitals(orbs, m, 0.0), std::invalid_argument);
}

TEST(Monitor, SumsOverOrbitals) {
  auto const m = uniform_mesh(1.0, 2, 2);
  std::vector<std::vector<double>> orbs{interpolate(m, [](double x) { return x; }),
                                        interpolate(m, [](double x) { return 2 * x; })};
  auto const mon = monitor_from_orbitals(orbs, m, 1.0);
  EXPECT_NEAR(mon.values[0], std::sqrt(6.0), 1e-13);
}

TEST(Equidistribution, FrozenMonitorEquidistributes) {
  auto const m = uniform_mesh(3.0, 12, 4);
  std::vector<std::vector<double>> orbs{interpolate(m, [](double x) { return x * x; })};
  double const alpha = 0.01;
  auto const next = equidistribute_frozen(m, orbs, alpha, 2048);
  // integral of sqrt(alpha + 4 x^2) over each new cell, in closed form
  auto F = [alpha](double x) {
    double const s = std::sqrt(alpha + 4 * x * x);
    return 0.5 * x * s + alpha / 4 * std::log(2 * x + s);
  };
  auto const b = next.boundaries();
  double const target = (F(3.0) - F(0.0)) / 12;
  for (int e = 0; e < 12; ++e) EXPECT_NEAR((F(b[e + 1]) - F(b[e])) / target, 1.0, 1e-5);
  EXPECT_THROW(equidistribute_frozen(m, {}, alpha), std::invalid_argument);
  EXPECT_THROW(equidistribute_frozen(m, orbs, -1.0), std::invalid_argument);
  EXPECT_THROW(equidistribute_frozen(m, orbs, alpha, 0), std::invalid_argument);
}

TEST(Interpolation, PolynomialTransferIsExact) {
  auto const a = uniform_mesh(2.0, 4, 3);
  RadialMesh const b({0.0, 0.2, 0.9, 2.0}, 3);
  auto f = [](double x) { return x * (2.0 - x) * (x + 1.0); };
  auto const cb = interpolate_solution(a, interpolate(a, f), b);
  for (int g = 0; g < b.num_dofs(); ++g) EXPECT_NEAR(cb[g], f(b.node(g)), 1e-13);
  EXPECT_THROW(interpolate_solution(a, interpolate(a, f), uniform_mesh(3.0, 4, 3)), std::invalid_argument);
  EXPECT_THROW(interpolate_solution(a, interpolate(a, f), uniform_mesh(2.0, 4, 2)), std::invalid_argument);
}

TEST(MeshHistory, CsvFormat) {
  std::vector<RadialMesh> h{uniform_mesh(1.0, 1, 1), uniform_mesh(1.0, 2, 1)};
  std::ostringstream os;
  write_mesh_history(os, h);
  EXPECT_EQ(os.str(), "step,boundary_index,x\n0,0,0\n0,1,1\n1,0,0\n1,1,0.5\n1,2,1\n");
}
