#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "radks/scf.hpp"

using namespace radks;

namespace {

RadialMesh graded_mesh(double radius, int n, int p) {
  // boundaries ~ R (exp(s t) - 1) / (exp(s) - 1)
  std::vector<double> b(n + 1);
  double const s = std::log(radius / 0.05);
  for (int i = 0; i <= n; ++i) b[i] = radius * std::expm1(s * i / n) / std::expm1(s);
  b.back() = radius;
  return RadialMesh(b, p);
}

}  // namespace

TEST(ThomasFermi, FrozenValues) {
  EXPECT_NEAR(thomas_fermi_potential(1, 1.0), -0.39117722794170059929, 1e-15);
  EXPECT_NEAR(thomas_fermi_raw_density(1, 1.0), 0.023371379126738611502, 1e-16);
}

TEST(ThomasFermi, ScalesWithZ) {
  // V(Z, r) = Z^{4/3} V(1, Z^{1/3} r)
  for (int z : {2, 26, 92}) {
    double const s = std::cbrt(static_cast<double>(z));
    EXPECT_NEAR(thomas_fermi_potential(z, 0.3), z * s * thomas_fermi_potential(1, 0.3 * s), 1e-10 * z * z);
  }
}

TEST(ThomasFermi, DensityNormalizedToZ) {
  auto const m = graded_mesh(20.0, 20, 8);
  for (int z : {1, 10, 26}) EXPECT_NEAR(thomas_fermi_density(z, m).electron_count(), z, 1e-12 * z);
  EXPECT_THROW(thomas_fermi_density(0, m), std::invalid_argument);
}

TEST(Mixing, LinearCombination) {
  auto const m = uniform_mesh(1.0, 1, 1, 2);
  DensityField a{m, {1.0, 2.0}}, b{m, {3.0, 6.0}};
  auto const mixed = mix_density(a, b, 0.5);
  EXPECT_EQ(mixed.values, (std::vector<double>{2.0, 4.0}));
  EXPECT_EQ(mix_density(a, b, 1.0).values, b.values);
  EXPECT_THROW(mix_density(a, b, 0.0), std::invalid_argument);
  EXPECT_THROW(mix_density(a, b, 1.5), std::invalid_argument);
  DensityField c{uniform_mesh(2.0, 1, 1, 2), {1.0, 1.0}};
  EXPECT_THROW(mix_density(a, c, 0.5), std::invalid_argument);
}

TEST(Hartree, HydrogenDensity) {
  auto const m = graded_mesh(30.0, 20, 10);
  DensityField rho{m, std::vector<double>(m.num_quad_points())};
  auto const r = m.quad_points();
  for (std::size_t i = 0; i < r.size(); ++i) rho.values[i] = std::exp(-2 * r[i]) / std::numbers::pi;
  for (auto solver : {HartreeSolver::bicg_lu, HartreeSolver::bicg_jacobi}) {
    auto const v = solve_hartree(rho, solver, solver == HartreeSolver::bicg_lu ? 1e-14 : 1e-12);
    for (int g = 0; g < m.num_dofs(); ++g) {
      double const x = m.node(g);
      double const exact = x == 0.0 ? 1.0 : 1.0 / x - std::exp(-2 * x) * (1 + 1 / x);
      ASSERT_NEAR(v[g], exact, 1e-8) << x;
    }
  }
}

TEST(Density, RejectsUnnormalizedOrbital) {
  auto const m = uniform_mesh(5.0, 4, 3);
  Orbital o{1, 0, 1.0, -0.5, std::vector<double>(m.num_dofs(), 0.0)};
  o.coeffs[3] = 1.0;
  std::vector<Orbital> orbs{o};
  EXPECT_THROW(density_update(orbs, m), InvalidStateError);
}

TEST(Scf, HydrogenicWithoutInteractions) {
  ScfOptions opt;
  opt.include_hartree = false;
  opt.include_xc = false;
  auto const st = scf_solve(configuration(1), graded_mesh(40.0, 14, 10), opt);
  EXPECT_TRUE(st.converged);
  EXPECT_NEAR(st.orbitals[0].eigenvalue, -0.5, 1e-9);
  EXPECT_NEAR(st.energy.total, -0.5, 1e-9);
  EXPECT_NEAR(st.energy.kinetic, 0.5, 1e-8);
}

TEST(Scf, HydrogenLda) {
  auto const res = moving_mesh_solve(configuration(1), 20.0, 13, 10);
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.state.energy.total, -0.445671, 1e-6);
  EXPECT_NEAR(res.state.orbitals[0].eigenvalue, -0.233471, 1e-6);
  EXPECT_NEAR(res.state.density.electron_count(), 1.0, 1e-10);
}

TEST(Scf, EnergyBreakdownConsistent) {
  auto const st = scf_solve(configuration(2), graded_mesh(20.0, 16, 10));
  auto const& e = st.energy;
  EXPECT_NEAR(e.total, e.kinetic + e.hartree + e.xc + e.external, 1e-12);
  EXPECT_NEAR(e.kinetic, kinetic_energy_direct(st.orbitals, st.mesh), 1e-7);
  EXPECT_GT(e.kinetic, 0.0);
  EXPECT_GT(e.hartree, 0.0);
  EXPECT_LT(e.xc, 0.0);
  EXPECT_NEAR(e.total, -2.834836, 1e-6);
  // converged trace: last |dE| below tol
  ASSERT_FALSE(st.trace.empty());
  EXPECT_LT(st.trace.back().delta, 1e-8);
}

TEST(Scf, NonConvergenceCarriesPartialState) {
  ScfOptions opt;
  opt.maxit = 2;
  try {
    scf_solve(configuration(10), graded_mesh(20.0, 10, 6), opt);
    FAIL() << "expected ScfConvergenceError";
  } catch (ScfConvergenceError const& e) {
    EXPECT_EQ(e.partial().trace.size(), 2u);
    EXPECT_FALSE(e.partial().converged);
    EXPECT_EQ(e.partial().orbitals.size(), 3u);
  }
}

TEST(Scf, RejectsBadInput) {
  ScfOptions opt;
  opt.tol = 0.0;
  EXPECT_THROW(scf_solve(configuration(1), uniform_mesh(10, 4, 2), opt), std::invalid_argument);
  EXPECT_THROW(scf_solve(configuration(26), uniform_mesh(10, 1, 2)), std::invalid_argument);
}

TEST(Scf, DeterministicRuns) {
  auto const a = scf_solve(configuration(3), graded_mesh(20.0, 12, 8));
  auto const b = scf_solve(configuration(3), graded_mesh(20.0, 12, 8));
  EXPECT_EQ(a.energy.total, b.energy.total);
  EXPECT_EQ(a.trace.size(), b.trace.size());
}

TEST(MovingMesh, MeshHistoryAndSettling) {
  auto const res = moving_mesh_solve(configuration(4), 20.0, 10, 8);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.meshes.size(), static_cast<std::size_t>(res.steps) + 1);
  EXPECT_EQ(res.energies.size(), res.meshes.size());
  EXPECT_NEAR(res.energies.back(), -14.447209, 1e-6);
  // the moved mesh is graded towards the nucleus
  auto const b = res.meshes.back().boundaries();
  EXPECT_LT(b[1], b[10] / 10);
}

TEST(Output, CsvTables) {
  std::vector<ScfIteration> trace{{1, -1.5, std::numeric_limits<double>::infinity(), 0.0, 3, 0.618},
                                  {2, -1.25, 0.25, 0.0, 2, 0.618}};
  std::ostringstream t;
  write_energy_trace(t, trace);
  EXPECT_EQ(t.str(), "iter,E_tot,dE\n1,-1.5,0\n2,-1.25,0.25\n");
  std::vector<Orbital> orbs{{2, 1, 6.0, -0.5, {}}};
  std::ostringstream o;
  write_orbital_table(o, orbs);
  EXPECT_EQ(o.str(), "n,l,f,eps\n2,1,6,-0.5\n");
}
