#pragma once
// Run description, reference-energy files, result JSON and the comparison
// table used by the radks command-line driver.

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "radks/atom_data.hpp"
#include "radks/scf.hpp"

namespace radks {

struct RunSpec {
  int z_first = 1;
  int z_last = 1;
  int order = 10;
  int elements = 13;
  double radius = 0.0;  // <= 0: 20 for Z <= 36, 100 beyond
  double tol = 1e-8;
  int scf_maxit = 300;
  bool moving_mesh = true;
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> reference;
  unsigned seed = 20240521u;
  bool dump_mesh = false;
  bool dump_density = false;
  int threads = 0;  // 0: hardware concurrency

  [[nodiscard]] double radius_for(int Z) const {
    if (radius > 0.0) return radius;
    return Z <= 36 ? 20.0 : 100.0;
  }
};

inline void validate(RunSpec const& s) {
  if (s.z_first < 1 || s.z_last > 92 || s.z_first > s.z_last)
    throw std::invalid_argument("Z range must lie within 1..92 with first <= last");
  if (s.order < 1) throw std::invalid_argument("element order must be positive");
  if (s.elements < 1) throw std::invalid_argument("number of elements must be positive");
  if (!(s.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (s.scf_maxit < 1) throw std::invalid_argument("SCF iteration limit must be positive");
  if (s.radius < 0.0 || !std::isfinite(s.radius)) throw std::invalid_argument("radius must be positive");
  if (s.threads < 0) throw std::invalid_argument("thread count must be non-negative");
}

/// Parse "A:B" (or a single "A") into an inclusive Z range.
inline std::pair<int, int> parse_z_range(std::string const& text) {
  auto const colon = text.find(':');
  try {
    std::size_t used = 0;
    if (colon == std::string::npos) {
      int const z = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return {z, z};
    }
    std::string const a = text.substr(0, colon);
    std::string const b = text.substr(colon + 1);
    int const first = std::stoi(a, &used);
    if (used != a.size()) throw std::invalid_argument(text);
    int const last = std::stoi(b, &used);
    if (used != b.size()) throw std::invalid_argument(text);
    return {first, last};
  } catch (std::logic_error const&) {
    throw std::invalid_argument("malformed Z range '" + text + "', expected A:B");
  }
}

// ---------------------------------------------------------------------------
// Reference energies: `Z,symbol,E_tot[,eps_1,eps_2,...]`, eigenvalues in the
// shell order of the shipped configuration. `#` comments and a header row
// starting with `Z,` are skipped.

struct ReferenceRecord {
  int Z = 0;
  std::string symbol;
  double total_energy = 0.0;
  std::vector<double> eigenvalues;
};

namespace detail {

inline std::string trim(std::string s) {
  auto const a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  auto const b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_number(std::string const& field, char const* what) {
  std::string const t = trim(field);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (std::logic_error const&) {
    used = 0;
  }
  if (t.empty() || used != t.size() || !std::isfinite(v))
    throw std::invalid_argument(std::string("bad ") + what + " '" + t + "'");
  return v;
}

}  // namespace detail

inline std::map<int, ReferenceRecord> parse_reference(std::istream& in) {
  std::map<int, ReferenceRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string const t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t.rfind("Z,", 0) == 0) continue;
    try {
      std::vector<std::string> fields;
      std::stringstream ss(t);
      std::string f;
      while (std::getline(ss, f, ',')) fields.push_back(f);
      if (fields.size() < 3) throw std::invalid_argument("expected at least Z,symbol,E_tot");
      ReferenceRecord rec;
      double const z = detail::parse_number(fields[0], "Z");
      if (z != std::floor(z) || z < 1 || z > 92) throw std::invalid_argument("Z out of range");
      rec.Z = static_cast<int>(z);
      rec.symbol = detail::trim(fields[1]);
      if (rec.symbol.empty()) throw std::invalid_argument("empty symbol");
      rec.total_energy = detail::parse_number(fields[2], "E_tot");
      for (std::size_t i = 3; i < fields.size(); ++i) rec.eigenvalues.push_back(detail::parse_number(fields[i], "eigenvalue"));
      if (out.count(rec.Z)) throw std::invalid_argument("duplicate Z " + std::to_string(rec.Z));
      out[rec.Z] = std::move(rec);
    } catch (std::exception const& e) {
      throw std::invalid_argument("reference line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::map<int, ReferenceRecord> load_reference(std::filesystem::path const& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open reference file " + path.string());
  return parse_reference(in);
}

// ---------------------------------------------------------------------------
// One atom

struct AtomResult {
  int Z = 0;
  std::string symbol;
  bool converged = false;
  std::string error;
  double radius = 0.0;
  EnergyBreakdown energy;
  std::vector<Orbital> orbitals;
  std::vector<int> scf_iterations;  // per mesh
  int mesh_steps = 0;
  std::vector<RadialMesh> meshes;
  std::vector<ScfIteration> trace;  // last mesh
  std::vector<double> density_nodes;
  double wall_time = 0.0;
};

inline AtomResult run_atom(RunSpec const& spec, int Z) {
  AtomResult res;
  res.Z = Z;
  auto const config = configuration(Z);
  res.symbol = config.symbol;
  res.radius = spec.radius_for(Z);
  ScfOptions opt;
  opt.tol = spec.tol;
  opt.maxit = spec.scf_maxit;
  opt.seed = spec.seed;
  MovingMeshOptions mopt;
  mopt.tol = spec.tol;
  auto const t0 = std::chrono::steady_clock::now();
  auto keep = [&res](ScfState const& st) {
    res.energy = st.energy;
    res.orbitals = st.orbitals;
    res.trace = st.trace;
    res.density_nodes = density_at_nodes(st.orbitals, st.mesh);
  };
  try {
    if (spec.moving_mesh) {
      auto mm = moving_mesh_solve(config, res.radius, spec.elements, spec.order, opt, mopt);
      keep(mm.state);
      res.scf_iterations = mm.scf_iterations;
      res.mesh_steps = mm.steps;
      res.meshes = mm.meshes;
      res.converged = mm.converged;
      if (!mm.converged)
        res.error = "moving mesh did not settle within " + std::to_string(mopt.max_steps) + " redistributions";
    } else {
      auto mesh = uniform_mesh(res.radius, spec.elements, spec.order);
      auto st = scf_solve(config, mesh, opt);
      keep(st);
      res.scf_iterations = {static_cast<int>(st.trace.size())};
      res.meshes = {mesh};
      res.converged = true;
    }
  } catch (ScfConvergenceError const& e) {
    keep(e.partial());
    res.meshes = {e.partial().mesh};
    res.scf_iterations = {static_cast<int>(e.partial().trace.size())};
    res.error = e.what();
  } catch (ConvergenceError const& e) {
    res.error = e.what();
  }
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Atoms of the spec's Z range, one per task on a small thread pool;
/// results come back in Z order.
inline std::vector<AtomResult> run_all(RunSpec const& spec) {
  validate(spec);
  int const count = spec.z_last - spec.z_first + 1;
  std::vector<AtomResult> results(count);
  unsigned hw = spec.threads > 0 ? static_cast<unsigned>(spec.threads) : std::thread::hardware_concurrency();
  int const workers = std::max(1, std::min<int>(count, static_cast<int>(hw == 0 ? 1 : hw)));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        results[i] = run_atom(spec, spec.z_first + i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (auto const& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(AtomResult const& r, RunSpec const& spec, bool include_time = true) {
  nlohmann::json j;
  j["Z"] = r.Z;
  j["symbol"] = r.symbol;
  j["converged"] = r.converged;
  if (!r.error.empty()) j["error"] = r.error;
  j["settings"] = {{"order", spec.order},        {"elements", spec.elements}, {"radius", r.radius},
                   {"tol", spec.tol},            {"scf_maxit", spec.scf_maxit}, {"moving_mesh", spec.moving_mesh},
                   {"seed", spec.seed}};
  j["energy"] = {{"kinetic", r.energy.kinetic}, {"hartree", r.energy.hartree}, {"xc", r.energy.xc},
                 {"external", r.energy.external}, {"total", r.energy.total}};
  auto orbs = nlohmann::json::array();
  for (auto const& o : r.orbitals)
    orbs.push_back({{"label", o.label()}, {"n", o.n}, {"l", o.l}, {"occupation", o.occupation}, {"eigenvalue", o.eigenvalue}});
  j["orbitals"] = orbs;
  j["scf_iterations"] = r.scf_iterations;
  j["moving_mesh_steps"] = r.mesh_steps;
  auto hist = nlohmann::json::array();
  for (auto const& m : r.meshes) hist.push_back(std::vector<double>(m.boundaries().begin(), m.boundaries().end()));
  j["mesh_history"] = hist;
  if (include_time) j["wall_time_s"] = r.wall_time;
  return j;
}

// ---------------------------------------------------------------------------
// Comparison

inline constexpr double kReferenceThreshold = 1e-6;

struct ComparisonRow {
  int Z = 0;
  std::string symbol;
  double total_energy = 0.0;
  std::optional<double> reference;
  double abs_error = 0.0;
  std::optional<double> max_eigenvalue_error;  // when the reference lists eigenvalues
  bool converged = false;
  bool pass = false;
  std::string note;
};

inline std::vector<ComparisonRow> compare(std::vector<AtomResult> const& results,
                                          std::map<int, ReferenceRecord> const& reference,
                                          double threshold = kReferenceThreshold) {
  std::vector<ComparisonRow> rows;
  for (auto const& r : results) {
    ComparisonRow row;
    row.Z = r.Z;
    row.symbol = r.symbol;
    row.total_energy = r.energy.total;
    row.converged = r.converged;
    auto const it = reference.find(r.Z);
    if (it == reference.end()) {
      row.note = "missing reference";
      rows.push_back(row);
      continue;
    }
    auto const& ref = it->second;
    row.reference = ref.total_energy;
    row.abs_error = std::abs(r.energy.total - ref.total_energy);
    row.pass = r.converged && row.abs_error < threshold;
    if (!ref.eigenvalues.empty()) {
      if (ref.eigenvalues.size() != r.orbitals.size()) {
        row.pass = false;
        row.note = "eigenvalue count differs from configuration";
      } else {
        double worst = 0.0;
        for (std::size_t i = 0; i < r.orbitals.size(); ++i)
          worst = std::max(worst, std::abs(r.orbitals[i].eigenvalue - ref.eigenvalues[i]));
        row.max_eigenvalue_error = worst;
        if (!(worst < threshold)) row.pass = false;
      }
    }
    if (!r.converged && row.note.empty()) row.note = "not converged";
    rows.push_back(row);
  }
  return rows;
}

/// Rows for atoms with a reference must pass; missing ones do not fail.
inline bool comparison_passed(std::vector<ComparisonRow> const& rows) {
  for (auto const& r : rows)
    if (r.reference && !r.pass) return false;
  return true;
}

inline void write_comparison_csv(std::ostream& os, std::vector<ComparisonRow> const& rows) {
  auto const old = os.precision(12);
  os << "Z,symbol,E_tot,E_ref,abs_dE,max_abs_deps,status\n";
  for (auto const& r : rows) {
    os << r.Z << ',' << r.symbol << ',' << r.total_energy << ',';
    if (r.reference) os << *r.reference;
    os << ',';
    if (r.reference) os << r.abs_error;
    os << ',';
    if (r.max_eigenvalue_error) os << *r.max_eigenvalue_error;
    os << ',' << (!r.reference ? "missing" : (r.pass ? "pass" : "fail")) << '\n';
  }
  os.precision(old);
}

inline nlohmann::json to_json(std::vector<ComparisonRow> const& rows) {
  auto arr = nlohmann::json::array();
  for (auto const& r : rows) {
    nlohmann::json j{{"Z", r.Z}, {"symbol", r.symbol}, {"E_tot", r.total_energy}, {"converged", r.converged}};
    j["E_ref"] = r.reference ? nlohmann::json(*r.reference) : nlohmann::json(nullptr);
    j["abs_dE"] = r.reference ? nlohmann::json(r.abs_error) : nlohmann::json(nullptr);
    if (r.max_eigenvalue_error) j["max_abs_deps"] = *r.max_eigenvalue_error;
    j["status"] = !r.reference ? "missing" : (r.pass ? "pass" : "fail");
    if (!r.note.empty()) j["note"] = r.note;
    arr.push_back(j);
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Output files

inline void write_density_csv(std::ostream& os, AtomResult const& r) {
  auto const old = os.precision(17);
  os << "r,rho\n";
  if (!r.meshes.empty()) {
    auto const& mesh = r.meshes.back();
    for (int g = 0; g < mesh.num_dofs() && g < static_cast<int>(r.density_nodes.size()); ++g)
      os << mesh.node(g) << ',' << r.density_nodes[g] << '\n';
  }
  os.precision(old);
}

/// Writes result_Z.json, trace_Z.csv, orbitals_Z.csv and the optional dumps.
inline void write_outputs(AtomResult const& r, RunSpec const& spec) {
  auto const open = [](std::filesystem::path const& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  };
  std::string const z = std::to_string(r.Z);
  {
    auto f = open(spec.out_dir / ("result_" + z + ".json"));
    f << to_json(r, spec).dump(2) << '\n';
  }
  {
    auto f = open(spec.out_dir / ("trace_" + z + ".csv"));
    write_energy_trace(f, r.trace);
  }
  {
    auto f = open(spec.out_dir / ("orbitals_" + z + ".csv"));
    write_orbital_table(f, r.orbitals);
  }
  if (spec.dump_mesh) {
    auto f = open(spec.out_dir / ("mesh_" + z + ".csv"));
    write_mesh_history(f, r.meshes);
  }
  if (spec.dump_density) {
    auto f = open(spec.out_dir / ("density_" + z + ".csv"));
    write_density_csv(f, r);
  }
}

}  // namespace radks
