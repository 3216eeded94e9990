#pragma once
// Electron configurations for Z = 1..92.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "radks/configurations_data.hpp"

namespace radks {

struct Shell {
  int n = 1;
  int l = 0;
  double occupation = 0.0;
};

struct AtomConfig {
  int Z = 0;
  std::string symbol;
  std::vector<Shell> shells;

  [[nodiscard]] double electron_count() const {
    double s = 0.0;
    for (auto const& sh : shells) s += sh.occupation;
    return s;
  }
  [[nodiscard]] int max_l() const {
    int m = 0;
    for (auto const& sh : shells) m = std::max(m, sh.l);
    return m;
  }
};

inline char l_letter(int l) {
  static constexpr char letters[] = "spdfghik";
  return l >= 0 && l < 8 ? letters[l] : '?';
}

inline std::string shell_label(int n, int l) { return std::to_string(n) + l_letter(l); }

/// Throws std::invalid_argument on any violated invariant: occupation within
/// (0, 2(2l+1)], n > l, unique (n, l), and sum of occupations equal to Z.
inline void validate(AtomConfig const& c) {
  std::set<std::pair<int, int>> seen;
  for (auto const& sh : c.shells) {
    if (sh.l < 0 || sh.n < sh.l + 1)
      throw std::invalid_argument(c.symbol + ": invalid quantum numbers " + std::to_string(sh.n) + "," +
                                  std::to_string(sh.l));
    if (!(sh.occupation > 0.0) || sh.occupation > 2.0 * (2 * sh.l + 1))
      throw std::invalid_argument(c.symbol + ": occupation out of range for " + shell_label(sh.n, sh.l));
    if (!seen.insert({sh.n, sh.l}).second)
      throw std::invalid_argument(c.symbol + ": duplicate shell " + shell_label(sh.n, sh.l));
  }
  if (std::abs(c.electron_count() - c.Z) > 1e-12)
    throw std::invalid_argument(c.symbol + ": occupations do not sum to Z");
}

/// Parse one `Z,symbol,n:l:f;n:l:f;...` record.
inline AtomConfig parse_configuration_line(std::string const& line) {
  auto const c1 = line.find(',');
  auto const c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
  if (c2 == std::string::npos) throw std::invalid_argument("configuration line needs three fields: " + line);
  AtomConfig cfg;
  cfg.Z = std::stoi(line.substr(0, c1));
  cfg.symbol = line.substr(c1 + 1, c2 - c1 - 1);
  std::stringstream shells(line.substr(c2 + 1));
  std::string tok;
  while (std::getline(shells, tok, ';')) {
    if (tok.find_first_not_of(" \t\r") == std::string::npos) continue;
    Shell sh;
    char s1 = 0, s2 = 0;
    std::istringstream ts(tok);
    if (!(ts >> sh.n >> s1 >> sh.l >> s2 >> sh.occupation) || s1 != ':' || s2 != ':')
      throw std::invalid_argument("malformed shell '" + tok + "' in: " + line);
    cfg.shells.push_back(sh);
  }
  validate(cfg);
  return cfg;
}

/// Parse a configuration file; `#` starts a comment line.
inline std::map<int, AtomConfig> parse_configurations(std::istream& in) {
  std::map<int, AtomConfig> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto const first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      auto cfg = parse_configuration_line(line);
      out[cfg.Z] = std::move(cfg);
    } catch (std::exception const& e) {
      throw std::invalid_argument("configuration line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::map<int, AtomConfig> const& shipped_configurations() {
  static auto const table = [] {
    std::istringstream in(data::kConfigurationsCsv);
    return parse_configurations(in);
  }();
  return table;
}

inline AtomConfig configuration(int Z) {
  if (Z < 1 || Z > 92) throw std::invalid_argument("configuration: Z must be in 1..92, got " + std::to_string(Z));
  return shipped_configurations().at(Z);
}

/// Number of lowest eigenpairs needed per l. Occupied shells of one l must be
/// the lowest ones (n = l+1, l+2, ...).
inline std::map<int, int> orbitals_per_l(AtomConfig const& c) {
  std::map<int, std::vector<int>> ns;
  for (auto const& sh : c.shells) ns[sh.l].push_back(sh.n);
  std::map<int, int> out;
  for (auto& [l, list] : ns) {
    std::sort(list.begin(), list.end());
    for (std::size_t i = 0; i < list.size(); ++i)
      if (list[i] != l + 1 + static_cast<int>(i))
        throw std::invalid_argument(c.symbol + ": shells with l = " + std::to_string(l) +
                                    " are not the lowest ones (gap before n = " + std::to_string(list[i]) + ")");
    out[l] = static_cast<int>(list.size());
  }
  return out;
}

}  // namespace radks
