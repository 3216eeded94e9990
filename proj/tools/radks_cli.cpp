// radks: all-electron LDA ground state of neutral atoms.
//
//   radks --Z 26
//   radks --Z-range 1:10 --compare data/nist_lda_reference.csv --out results
//
// Exit status: 0 when every atom converged (and passed the comparison, if
// requested), 1 otherwise, 2 for usage errors.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>

#include "radks/cli.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  radks::RunSpec spec;
  CLI::App app{"Radial Kohn-Sham LDA solver for neutral atoms"};
  int z = 0;
  std::string z_range;
  std::string out_dir = ".";
  std::string reference;
  auto* z_opt = app.add_option("--Z", z, "Atomic number (1..92)");
  auto* range_opt = app.add_option("--Z-range", z_range, "Inclusive range A:B");
  z_opt->excludes(range_opt);
  app.add_option("--p", spec.order, "Element order")->capture_default_str();
  app.add_option("--nele", spec.elements, "Number of elements")->capture_default_str();
  app.add_option("--R", spec.radius, "Domain radius (default 20 for Z <= 36, else 100)");
  app.add_option("--tol", spec.tol, "Energy tolerance (SCF and moving mesh)")->capture_default_str();
  app.add_option("--scf-maxit", spec.scf_maxit, "SCF iteration limit")->capture_default_str();
  app.add_flag("--moving-mesh,!--no-moving-mesh", spec.moving_mesh, "Redistribute mesh nodes (default on)");
  app.add_option("--compare", reference, "Reference CSV: Z,symbol,E_tot[,eps...]");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", spec.seed, "Seed for the eigensolver start vectors")->capture_default_str();
  app.add_flag("--dump-mesh", spec.dump_mesh, "Write mesh_Z.csv");
  app.add_flag("--dump-density", spec.dump_density, "Write density_Z.csv");
  app.add_option("--threads", spec.threads, "Worker threads for Z ranges (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int const rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::map<int, radks::ReferenceRecord> ref;
  try {
    if (z_opt->count() > 0) {
      spec.z_first = spec.z_last = z;
    } else if (range_opt->count() > 0) {
      std::tie(spec.z_first, spec.z_last) = radks::parse_z_range(z_range);
    } else {
      throw std::invalid_argument("one of --Z or --Z-range is required");
    }
    radks::validate(spec);
    spec.out_dir = out_dir;
    fs::create_directories(spec.out_dir);
    // probe writability up front so a long sweep does not fail at the end
    auto const probe = spec.out_dir / ".radks_write_test";
    {
      std::ofstream f(probe);
      if (!f) throw std::invalid_argument("output directory " + spec.out_dir.string() + " is not writable");
    }
    fs::remove(probe);
    if (!reference.empty()) {
      spec.reference = reference;
      ref = radks::load_reference(*spec.reference);
    }
  } catch (std::exception const& e) {
    std::cerr << "radks: " << e.what() << '\n';
    return 2;
  }

  std::vector<radks::AtomResult> results;
  try {
    results = radks::run_all(spec);
    for (auto const& r : results) radks::write_outputs(r, spec);
  } catch (std::exception const& e) {
    std::cerr << "radks: " << e.what() << '\n';
    return 1;
  }

  bool ok = true;
  for (auto const& r : results) {
    std::printf("%3d %-3s E_tot = %.10f  meshes = %zu  %s\n", r.Z, r.symbol.c_str(), r.energy.total, r.meshes.size(),
                r.converged ? "converged" : ("FAILED: " + r.error).c_str());
    ok = ok && r.converged;
  }

  if (spec.reference) {
    auto const rows = radks::compare(results, ref);
    try {
      std::ofstream csv(spec.out_dir / "comparison.csv");
      if (!csv) throw std::runtime_error("cannot write comparison.csv");
      radks::write_comparison_csv(csv, rows);
      std::ofstream js(spec.out_dir / "comparison.json");
      if (!js) throw std::runtime_error("cannot write comparison.json");
      js << radks::to_json(rows).dump(2) << '\n';
    } catch (std::exception const& e) {
      std::cerr << "radks: " << e.what() << '\n';
      return 1;
    }
    for (auto const& r : rows) {
      if (!r.reference)
        std::printf("%3d %-3s no reference\n", r.Z, r.symbol.c_str());
      else
        std::printf("%3d %-3s |dE| = %.3e  %s\n", r.Z, r.symbol.c_str(), r.abs_error, r.pass ? "pass" : "FAIL");
    }
    ok = ok && radks::comparison_passed(rows);
  }
  return ok ? 0 : 1;
}
