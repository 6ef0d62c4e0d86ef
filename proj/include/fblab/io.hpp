#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fblab/field.hpp"
#include "fblab/onephase.hpp"
#include "fblab/profile_data.hpp"
#include "fblab/reaction.hpp"
#include "fblab/stability.hpp"

namespace fblab::io {

/// Round-trip formatting for doubles in text outputs.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string reaction_csv(const ReactionTable& tab) {
  std::ostringstream os;
  os << "t,beta,beta_prime,Phi\n";
  for (std::size_t k = 0; k < tab.t.size(); ++k)
    os << fmt(tab.t[k]) << ',' << fmt(tab.beta[k]) << ',' << fmt(tab.beta_prime[k]) << ',' << fmt(tab.phi[k]) << '\n';
  return os.str();
}

inline std::string profile_csv(const Profile1D& p) {
  std::ostringstream os;
  os << "x,u,du\n";
  for (std::size_t k = 0; k < p.xs.size(); ++k) os << fmt(p.xs[k]) << ',' << fmt(p.us[k]) << ',' << fmt(p.dus[k]) << '\n';
  return os.str();
}

inline std::string field_csv(const AxiField& u) {
  std::ostringstream os;
  os << "s,t,u\n";
  for (std::size_t i = 0; i < u.grid.ns; ++i)
    for (std::size_t j = 0; j < u.grid.nt; ++j)
      os << fmt(u.grid.s(i)) << ',' << fmt(u.grid.t(j)) << ',' << fmt(u(i, j)) << '\n';
  return os.str();
}

inline std::string boundary_csv(const RevolutionBoundary& b) {
  std::ostringstream os;
  os << "t,s,H,nu_s,nu_t\n";
  for (std::size_t k = 0; k < b.size(); ++k)
    os << fmt(b.t[k]) << ',' << fmt(b.s[k]) << ',' << fmt(b.mean_curv[k]) << ',' << fmt(b.nu_s[k]) << ','
       << fmt(b.nu_t[k]) << '\n';
  return os.str();
}

/// Two-column plot data.
inline std::string dat(const std::vector<double>& x, const std::vector<double>& y) {
  std::ostringstream os;
  for (std::size_t k = 0; k < x.size() && k < y.size(); ++k) os << fmt(x[k]) << ' ' << fmt(y[k]) << '\n';
  return os.str();
}

// Binary field block: 8-byte magic, int64 n, ns, nt, then float64 s_max,
// t_min, t_max, hs, ht, then ns*nt float64 values, row i = s index. Native
// little-endian layout.
inline constexpr char field_magic[8] = {'F', 'B', 'L', 'F', 'I', 'E', 'L', 'D'};

inline std::string field_binary(const AxiField& u) {
  std::string out(field_magic, 8);
  auto put_i = [&](std::int64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); };
  auto put_d = [&](double v) { out.append(reinterpret_cast<const char*>(&v), 8); };
  put_i(u.grid.n);
  put_i(static_cast<std::int64_t>(u.grid.ns));
  put_i(static_cast<std::int64_t>(u.grid.nt));
  put_d(u.grid.s_max);
  put_d(u.grid.t_min);
  put_d(u.grid.t_max);
  put_d(u.grid.hs());
  put_d(u.grid.ht());
  out.append(reinterpret_cast<const char*>(u.values.data()), u.values.size() * sizeof(double));
  return out;
}

inline AxiField read_field_binary(const std::string& bytes) {
  constexpr std::size_t header = 8 + 3 * 8 + 5 * 8;
  if (bytes.size() < header || std::memcmp(bytes.data(), field_magic, 8) != 0)
    throw Error("read_field_binary: not a field block");
  std::size_t pos = 8;
  auto get_i = [&] {
    std::int64_t v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  };
  auto get_d = [&] {
    double v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  };
  AxiGrid g;
  g.n = static_cast<int>(get_i());
  g.ns = static_cast<std::size_t>(get_i());
  g.nt = static_cast<std::size_t>(get_i());
  g.s_max = get_d();
  g.t_min = get_d();
  g.t_max = get_d();
  pos += 16;  // hs, ht are derived
  g.validate();
  if (bytes.size() != header + g.size() * sizeof(double)) throw Error("read_field_binary: truncated block");
  AxiField u(g);
  std::memcpy(u.values.data(), bytes.data() + pos, g.size() * sizeof(double));
  return u;
}

inline nlohmann::json to_json(const SpectralReport& r) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return {{"verdict", std::string(to_string(r.verdict))},
          {"rayleigh_min", num(r.rayleigh_min)},
          {"alpha", r.probe.alpha},
          {"R", r.probe.R},
          {"eps_inner", r.probe.eps_inner},
          {"lhs", r.form_lhs},
          {"rhs", r.form_rhs},
          {"iterations", r.iterations},
          {"residual", num(r.residual)},
          {"certified", r.certified},
          {"exploratory", r.exploratory}};
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Reaction term from a CSV with columns t and beta (header required; other
/// columns ignored).
inline ReactionTerm read_reaction_table(const std::filesystem::path& p) {
  std::istringstream in(read_text(p));
  std::string line;
  if (!std::getline(in, line)) throw Error("reaction table " + p.string() + ": empty file");
  std::vector<std::string> head;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) head.push_back(cell);
  }
  long ct = -1, cb = -1;
  for (std::size_t k = 0; k < head.size(); ++k) {
    if (head[k] == "t") ct = static_cast<long>(k);
    if (head[k] == "beta") cb = static_cast<long>(k);
  }
  if (ct < 0 || cb < 0) throw Error("reaction table " + p.string() + ": need columns t and beta");
  std::vector<double> ts, bs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    try {
      ts.push_back(std::stod(cells.at(static_cast<std::size_t>(ct))));
      bs.push_back(std::stod(cells.at(static_cast<std::size_t>(cb))));
    } catch (const std::exception&) {
      throw Error("reaction table " + p.string() + ": bad row at line " + std::to_string(lineno));
    }
  }
  return make_tabulated_beta(ts, bs, "table:" + p.string());
}

/// Output files staged in memory and written together, so that a failed
/// run leaves nothing behind.
struct OutputBundle {
  std::map<std::string, std::string> files;

  void add(const std::string& name, std::string content) { files[name] = std::move(content); }

  void commit(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : files) {
      std::ofstream out(dir / name, std::ios::binary);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!out) throw Error("cannot write " + (dir / name).string());
    }
  }
};

}  // namespace fblab::io
