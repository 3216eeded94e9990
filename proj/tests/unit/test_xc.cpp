#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "radks/xc.hpp"

using namespace radks;

namespace {

// Richardson-extrapolated central difference of rho * eps(rho).
template <class F>
double derivative_of_energy_density(F eps, double rho) {
  auto g = [&](double x) { return x * eps(x); };
  auto central = [&](double h) { return (g(rho + h) - g(rho - h)) / (2 * h); };
  double const h = 1e-3 * rho;
  return (4 * central(h / 2) - central(h)) / 3;
}

}  // namespace

TEST(Slater, ClosedForm) {
  double const cx = -0.75 * std::cbrt(3.0 / std::numbers::pi);
  for (double rho : {1e-8, 0.01, 1.0, 250.0}) {
    auto const e = slater_exchange(rho);
    EXPECT_NEAR(e.eps, cx * std::cbrt(rho), 1e-14 * std::abs(e.eps));
    EXPECT_NEAR(e.v, 4.0 / 3.0 * e.eps, 1e-15 * std::abs(e.v));
  }
  EXPECT_NEAR(slater_exchange(1.0).eps, -0.73855876638202240588, 1e-15);
}

TEST(Vwn, FrozenValues) {
  // high-precision evaluations of the closed form
  EXPECT_NEAR(vwn_correlation(1.0).eps, -0.071592612306790659721, 1e-15);
  EXPECT_NEAR(vwn_correlation(1.0, VwnParameters::printed_variant()).eps, -0.071338414424868863953, 1e-15);
  EXPECT_NEAR(vwn_correlation(1e-6).eps, -0.0047766175044473057981, 1e-16);
  EXPECT_NEAR(vwn_correlation(1e6).eps / vwn_correlation(1.0).eps, 2.8639347404678828131, 1e-13);
}

TEST(Vwn, DefaultsAreTheFitValues) {
  VwnParameters const p;
  EXPECT_EQ(p.a, 0.0621814);
  EXPECT_EQ(p.b, 3.72744);
  EXPECT_EQ(p.c, 12.9352);
  EXPECT_EQ(p.x0, -0.10498);
  EXPECT_EQ(VwnParameters::printed_variant().c, 12.8352);
}

TEST(Vwn, NegativeAndMonotone) {
  double prev = 0.0;
  for (int i = 0; i <= 60; ++i) {
    double const rho = std::pow(10.0, -10.0 + i * 0.25);
    double const e = vwn_correlation(rho).eps;
    EXPECT_LT(e, 0.0);
    EXPECT_LT(e, prev);  // more negative with density
    prev = e;
  }
}

TEST(Xc, PotentialsMatchFiniteDifferences) {
  for (int i = 0; i < 100; ++i) {
    double const rho = std::pow(10.0, -8.0 + 14.0 * i / 99.0);
    double const fx = derivative_of_energy_density([](double x) { return slater_exchange(x).eps; }, rho);
    double const fc = derivative_of_energy_density([](double x) { return vwn_correlation(x).eps; }, rho);
    EXPECT_NEAR(slater_exchange(rho).v / fx, 1.0, 1e-6) << rho;
    EXPECT_NEAR(vwn_correlation(rho).v / fc, 1.0, 1e-6) << rho;
  }
}

TEST(Xc, VacuumAndInvalidDensities) {
  auto const z = xc_combine(0.0);
  EXPECT_EQ(z.eps_xc(), 0.0);
  EXPECT_EQ(z.v_xc(), 0.0);
  EXPECT_EQ(xc_combine(1e-31).v_xc(), 0.0);
  EXPECT_THROW(slater_exchange(-1e-3), std::invalid_argument);
  EXPECT_THROW(vwn_correlation(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST(Xc, CombineSumsParts) {
  auto const e = xc_combine(0.3);
  EXPECT_EQ(e.eps_x, slater_exchange(0.3).eps);
  EXPECT_EQ(e.v_c, vwn_correlation(0.3).v);
  EXPECT_EQ(e.eps_xc(), e.eps_x + e.eps_c);
  EXPECT_EQ(e.v_xc(), e.v_x + e.v_c);
}
