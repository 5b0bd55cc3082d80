#pragma once

// Serialisation: JSON for measures and reports, CSV tables, binary frame logs, SHA-256.
// Needs nlohmann/json and OpenSSL libcrypto (target envavg_io).

#include "agentsim.hpp"
#include "hydro.hpp"
#include "kinetic.hpp"
#include "spectral.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace envavg::io {

using json = nlohmann::json;

// ---- hashing

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string sha256_file(const std::filesystem::path& p) { return sha256_hex(read_file(p)); }

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

// ---- JSON

inline json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vec vec_from_json(const json& j) {
  auto s = j.get<std::vector<double>>();
  return Eigen::Map<Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
}

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

inline Mat mat_from_json(const json& j) {
  if (!j.is_array()) throw Error("matrix must be a list of rows");
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  const Eigen::Index c = r ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != c) throw Error("matrix rows differ in length");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

inline json to_json(const Domain& d) {
  json j{{"dim", d.dim}};
  j["period"] = json::array();
  for (int a = 0; a < d.dim; ++a) j["period"].push_back(d.period[a]);  // 0 = unbounded axis
  return j;
}

inline Domain domain_from_json(const json& j) {
  Domain d;
  d.dim = j.at("dim").get<int>();
  if (d.dim < 1 || d.dim > 2) throw Error("domain dim must be 1 or 2");
  auto p = j.at("period").get<std::vector<double>>();
  if (static_cast<int>(p.size()) != d.dim) throw Error("domain period needs one entry per axis");
  for (int a = 0; a < d.dim; ++a) {
    if (p[a] < 0) throw Error("domain period must be non-negative");
    d.period[a] = p[a];
  }
  return d;
}

inline json to_json(const Measure& m) {
  json j{{"domain", to_json(m.domain())}, {"weights", to_json(m.weights())}};
  if (m.is_grid()) {
    j["representation"] = "grid";
    j["cells"] = m.cells();
    j["spacing"] = m.spacing();
    j["origin"] = std::vector<double>(m.origin().begin(), m.origin().begin() + m.dim());
  } else {
    j["representation"] = "atomic";
    j["points"] = to_json(m.points());
  }
  return j;
}

inline Measure measure_from_json(const json& j) {
  Domain d = domain_from_json(j.at("domain"));
  Vec w = vec_from_json(j.at("weights"));
  const std::string rep = j.at("representation").get<std::string>();
  if (rep == "grid") {
    auto o = j.at("origin").get<std::vector<double>>();
    std::array<double, 2> origin{0, 0};
    for (size_t a = 0; a < o.size() && a < 2; ++a) origin[a] = o[a];
    return Measure::grid_box(d, j.at("cells").get<int>(), j.at("spacing").get<double>(), origin, std::move(w));
  }
  if (rep == "atomic") return Measure::atomic(d, mat_from_json(j.at("points")), std::move(w));
  throw Error("unknown measure representation '" + rep + "'");
}

inline json to_json(const FiniteModel& fm) { return {{"kappa", to_json(fm.kappa)}, {"A", to_json(fm.A)}}; }

inline FiniteModel finite_model_from_json(const json& j) {
  return FiniteModel(vec_from_json(j.at("kappa")), mat_from_json(j.at("A")));
}

inline json to_json(const Flags& f) {
  return {{"conservative", f.conservative},
          {"symmetric", f.symmetric},
          {"ball_positive", f.ball_positive},
          {"galilean", f.galilean}};
}

inline json to_json(const CheckResult& c) { return {{"ok", c.ok}, {"residual", c.residual}}; }

inline json to_json(const PropertyReport& r) {
  return {{"model", r.model},
          {"declared", to_json(r.declared)},
          {"conservative", to_json(r.conservative)},
          {"symmetric", to_json(r.symmetric)},
          {"ball_positive", to_json(r.ball_positive)},
          {"galilean_residual", r.galilean},
          {"agree", r.agree}};
}

inline json to_json(const GapReport& g) {
  return {{"model", g.model},         {"law", g.law},
          {"E0", g.E0},               {"E1", g.E1},
          {"E2", g.E2},               {"A0", g.A0},
          {"A1", g.A1},               {"eps_measured", g.eps_measured},
          {"eps_bound", g.eps_bound}, {"lambda_measured", g.lambda_measured},
          {"thickness", g.thickness}, {"constant", g.constant},
          {"holds", g.holds}};
}

inline json to_json(const LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"n", f.n}};
}

// ---- CSV

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> r) {
    if (r.size() != columns.size()) throw Error("table row has wrong width");
    rows.push_back(std::move(r));
  }
};

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << "\n";
  for (const auto& r : t.rows) {
    for (size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
    os << "\n";
  }
  return os.str();
}

inline Table read_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw Error("empty csv");
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    for (const auto& c : split(line)) r.push_back(std::stod(c));
    t.add(std::move(r));
  }
  return t;
}

inline Table density_table(const Measure& rho) {
  if (!rho.is_grid() || rho.dim() != 1) throw Error("density table needs a 1D grid measure");
  Table t{{"x", "rho"}, {}};
  Vec d = rho.density();
  for (Eigen::Index i = 0; i < rho.size(); ++i) t.add({rho.points()(i, 0), d(i)});
  return t;
}

inline Table matrix_table(const Mat& K) {
  Table t{{"i", "j", "value"}, {}};
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index j = 0; j < K.cols(); ++j) t.add({double(i), double(j), K(i, j)});
  return t;
}

inline Table diagnostics_table(const Diagnostics& d) {
  const bool two = !d.rows.empty() && d.rows.front().ubar.size() == 2;
  Table t{{"t", "D", "A", "ubar", "energy", "dissipation", "thickness", "connected"}, {}};
  if (two) t.columns.insert(t.columns.begin() + 4, "ubar_y");
  for (const auto& r : d.rows) {
    std::vector<double> row{r.t, r.D, r.A, r.ubar(0), r.energy, r.dissipation, r.thickness, r.connected ? 1.0 : 0.0};
    if (two) row.insert(row.begin() + 4, r.ubar(1));
    t.add(std::move(row));
  }
  return t;
}

inline Table hydro_table(const HydroState& h, const Vec& e) {
  Table t{{"x", "rho", "u", "e", "s"}, {}};
  for (Eigen::Index i = 0; i < h.rho.size(); ++i) t.add({h.x(i), h.rho(i), h.u(i), e(i), h.s ? (*h.s)(i) : 0.0});
  return t;
}

inline Table kinetic_table(const KineticState& s) {
  Table t{{"x", "v", "f"}, {}};
  for (int i = 0; i < s.g.nx; ++i)
    for (int j = 0; j < s.g.nv; ++j) t.add({s.g.x(i), s.g.v(j), s.f(i, j)});
  return t;
}

// ---- binary frame log
// Little-endian. Header: int64 N, int64 dim, float64 dt. Frame: float64 t, x[N*dim], v[N*dim] row-major.

static_assert(std::endian::native == std::endian::little, "frame log assumes a little-endian host");

struct FrameHeader {
  std::int64_t N = 0, dim = 0;
  double dt = 0;
};

struct Frame {
  double t = 0;
  Mat x, v;
};

class FrameWriter {
 public:
  FrameWriter(const std::filesystem::path& p, std::int64_t N, std::int64_t dim, double dt)
      : out_(p, std::ios::binary), h_{N, dim, dt} {
    if (!out_) throw Error("cannot write " + p.string());
    put(h_.N);
    put(h_.dim);
    put(h_.dt);
  }
  void write(const SwarmState& s) {
    if (s.x.rows() != h_.N || s.x.cols() != h_.dim) throw Error("frame shape does not match the log header");
    put(s.t);
    for (const Mat* m : {&s.x, &s.v})
      for (Eigen::Index i = 0; i < m->rows(); ++i)
        for (Eigen::Index a = 0; a < m->cols(); ++a) put((*m)(i, a));
  }

 private:
  template <class T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  std::ofstream out_;
  FrameHeader h_;
};

inline std::pair<FrameHeader, std::vector<Frame>> read_frames(const std::filesystem::path& p) {
  const std::string b = read_file(p);
  size_t pos = 0;
  auto get = [&](auto& v) {
    if (pos + sizeof v > b.size()) throw Error("truncated frame log");
    std::memcpy(&v, b.data() + pos, sizeof v);
    pos += sizeof v;
  };
  FrameHeader h;
  get(h.N);
  get(h.dim);
  get(h.dt);
  if (h.N < 0 || h.dim < 1 || h.dim > 2) throw Error("bad frame log header");
  std::vector<Frame> frames;
  while (pos < b.size()) {
    Frame f;
    get(f.t);
    f.x.resize(h.N, h.dim);
    f.v.resize(h.N, h.dim);
    for (Mat* m : {&f.x, &f.v})
      for (Eigen::Index i = 0; i < h.N; ++i)
        for (Eigen::Index a = 0; a < h.dim; ++a) get((*m)(i, a));
    frames.push_back(std::move(f));
  }
  return {h, std::move(frames)};
}

}  // namespace envavg::io
