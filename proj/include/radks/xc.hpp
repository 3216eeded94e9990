#pragma once
// LDA exchange-correlation: Slater exchange + VWN paramagnetic correlation,
// energies per electron and potentials d(rho eps)/d rho, Hartree units.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace radks {

struct XcEval {
  double eps_x = 0.0;
  double eps_c = 0.0;
  double v_x = 0.0;
  double v_c = 0.0;

  [[nodiscard]] double eps_xc() const { return eps_x + eps_c; }
  [[nodiscard]] double v_xc() const { return v_x + v_c; }
};

struct EnergyPotential {
  double eps = 0.0;
  double v = 0.0;
};

/// VWN parameters (paramagnetic fit). `a` is the Rydberg-unit amplitude;
/// the Hartree energy uses a/2.
struct VwnParameters {
  double a = 0.0621814;
  double b = 3.72744;
  double c = 12.9352;
  double x0 = -0.10498;

  /// The c value as printed in some sources (12.8352); not the VWN fit.
  static VwnParameters printed_variant() {
    VwnParameters p;
    p.c = 12.8352;
    return p;
  }
};

/// Densities below this are vacuum.
inline constexpr double kVacuumDensity = 1e-30;

inline void check_density(double rho, char const* who) {
  if (rho < 0.0 || std::isnan(rho)) throw std::invalid_argument(std::string(who) + ": negative density");
}

inline EnergyPotential slater_exchange(double rho) {
  check_density(rho, "slater_exchange");
  if (rho < kVacuumDensity) return {};
  double const eps = -0.75 / std::numbers::pi * std::cbrt(3.0 * std::numbers::pi * std::numbers::pi * rho);
  return {eps, 4.0 / 3.0 * eps};
}

inline EnergyPotential vwn_correlation(double rho, VwnParameters const& par = {}) {
  check_density(rho, "vwn_correlation");
  if (rho < kVacuumDensity) return {};
  double const rs = std::cbrt(3.0 / (4.0 * std::numbers::pi * rho));
  double const x = std::sqrt(rs);
  double const b = par.b;
  double const c = par.c;
  double const x0 = par.x0;
  double const q = std::sqrt(4.0 * c - b * b);
  auto const X = [&](double y) { return y * y + b * y + c; };
  double const Xx = X(x);
  double const Xx0 = X(x0);
  double const atan_term = std::atan(q / (2.0 * x + b));
  double const amp = 0.5 * par.a;
  double const f = b * x0 / Xx0;

  double const eps = amp * (std::log(x * x / Xx) + 2.0 * b / q * atan_term -
                            f * (std::log((x - x0) * (x - x0) / Xx) + 2.0 * (b + 2.0 * x0) / q * atan_term));

  // d/dx atan(q / (2x + b)) = -q / (2 X(x)); X'(x) = 2x + b
  double const dX = (2.0 * x + b) / Xx;
  double const datan = -q / (2.0 * Xx);
  double const deps_dx = amp * (2.0 / x - dX + 2.0 * b / q * datan -
                                f * (2.0 / (x - x0) - dX + 2.0 * (b + 2.0 * x0) / q * datan));
  // rho d eps/d rho = -(rs/3) d eps/d rs = -(x/6) d eps/dx
  return {eps, eps - x / 6.0 * deps_dx};
}

inline XcEval xc_combine(double rho, VwnParameters const& par = {}) {
  auto const x = slater_exchange(rho);
  auto const c = vwn_correlation(rho, par);
  return {x.eps, c.eps, x.v, c.v};
}

}  // namespace radks
