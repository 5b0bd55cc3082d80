#pragma once

#include "averaging.hpp"
#include "transport.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/pending/disjoint_sets.hpp>

#include <deque>
#include <functional>
#include <optional>

namespace envavg {

struct SwarmState {
  Domain domain;
  Mat x;  // N x dim positions
  Mat v;  // N x dim velocities
  Vec m;  // masses, sum 1
  double t = 0;

  Eigen::Index size() const { return m.size(); }
  Measure measure() const { return Measure::atomic(domain, x, m); }
  Eigen::RowVectorXd mean_velocity() const { return m.transpose() * v; }
  double kinetic_energy() const { return 0.5 * (m.array() * v.rowwise().squaredNorm().array()).sum(); }
};

inline SwarmState make_swarm(const Domain& d, Mat x, Mat v, std::optional<Vec> m = std::nullopt) {
  const Eigen::Index N = x.rows();
  if (x.cols() != d.dim || v.rows() != N || v.cols() != d.dim) throw Error("swarm arrays have inconsistent shapes");
  SwarmState s;
  s.domain = d;
  s.m = m ? *m : Vec::Constant(N, 1.0 / static_cast<double>(N));
  if (s.m.size() != N) throw Error("swarm masses have wrong length");
  Measure check = Measure::atomic(d, x, s.m);
  s.x = check.points();
  s.v = std::move(v);
  return s;
}

// Alignment force s (<v> - v) at the agents.
inline Mat alignment_force(const Model& M, const Domain& d, const Mat& x, const Mat& v, const Vec& m) {
  Averager a(M, Measure::atomic(d, x, m));
  return a.weighted(v) - a.strength().asDiagonal() * v;
}

namespace detail {

inline void require_finite(const SwarmState& s) {
  if (!s.x.allFinite() || !s.v.allFinite())
    throw Error("integrator diverged at t = " + std::to_string(s.t));
}

inline void wrap_positions(SwarmState& s) {
  for (Eigen::Index i = 0; i < s.x.rows(); ++i)
    for (int a = 0; a < s.domain.dim; ++a) s.x(i, a) = s.domain.wrap(a, s.x(i, a));
}

}  // namespace detail

// One classical RK4 step of x' = v, v' = s(<v> - v).
inline SwarmState step_deterministic(const Model& M, const SwarmState& s, double dt) {
  if (!(dt > 0)) throw Error("dt must be positive");
  const Domain& d = s.domain;
  auto F = [&](const Mat& x, const Mat& v) { return alignment_force(M, d, x, v, s.m); };
  Mat k1x = s.v, k1v = F(s.x, s.v);
  Mat x2 = s.x + 0.5 * dt * k1x, v2 = s.v + 0.5 * dt * k1v;
  Mat k2x = v2, k2v = F(x2, v2);
  Mat x3 = s.x + 0.5 * dt * k2x, v3 = s.v + 0.5 * dt * k2v;
  Mat k3x = v3, k3v = F(x3, v3);
  Mat x4 = s.x + dt * k3x, v4 = s.v + dt * k3v;
  Mat k4x = v4, k4v = F(x4, v4);
  SwarmState n = s;
  n.x = s.x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
  n.v = s.v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  n.t = s.t + dt;
  detail::wrap_positions(n);
  detail::require_finite(n);
  return n;
}

// Euler-Maruyama: dv = s(<v> - v) dt + sqrt(2 sigma s) dB.  With sigma = 0 no noise is drawn and
// the step is the explicit Euler step of the deterministic system.
inline SwarmState step_stochastic(const Model& M, const SwarmState& s, double dt, double sigma, std::mt19937_64& rng) {
  if (!(dt > 0)) throw Error("dt must be positive");
  if (!(sigma >= 0)) throw Error("sigma must be non-negative");
  Averager a(M, s.measure());
  Mat force = a.weighted(s.v) - a.strength().asDiagonal() * s.v;
  SwarmState n = s;
  n.x = s.x + dt * s.v;
  n.v = s.v + dt * force;
  if (sigma > 0) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      double amp = std::sqrt(2.0 * sigma * a.strength()(i) * dt);
      for (int c = 0; c < s.domain.dim; ++c) n.v(i, c) += amp * g(rng);
    }
  }
  n.t = s.t + dt;
  detail::wrap_positions(n);
  detail::require_finite(n);
  return n;
}

inline SwarmState step_stochastic(const Model& M, const SwarmState& s, double dt, double sigma, std::uint64_t rng_seed) {
  std::mt19937_64 rng = job_rng(rng_seed, static_cast<std::uint64_t>(std::llround(s.t / dt)));
  return step_stochastic(M, s, dt, sigma, rng);
}

inline SwarmState step_euler(const Model& M, const SwarmState& s, double dt) {
  std::mt19937_64 unused(0);
  return step_stochastic(M, s, dt, 0.0, unused);
}

struct PairMax {
  double value = 0;
  Eigen::Index i = 0, j = 0;
};

// Largest pairwise distance; ties go to the lowest (i, j) in lexicographic order.
inline PairMax position_diameter(const SwarmState& s) {
  PairMax p;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = i + 1; j < s.size(); ++j) {
      double d = s.domain.dist(s.x.row(i), s.x.row(j));
      if (d > p.value) p = {d, i, j};
    }
  return p;
}

inline PairMax velocity_diameter(const SwarmState& s) {
  PairMax p;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = i + 1; j < s.size(); ++j) {
      double d = (s.v.row(i) - s.v.row(j)).norm();
      if (d > p.value) p = {d, i, j};
    }
  return p;
}

// Single component of the graph with edges |x_i - x_j| < r.
inline bool chain_connected(const Domain& d, const Mat& pts, double r) {
  const Eigen::Index N = pts.rows();
  if (N == 0) throw Error("empty point set");
  std::vector<int> rank(N), parent(N);
  boost::disjoint_sets<int*, int*> ds(rank.data(), parent.data());
  for (Eigen::Index i = 0; i < N; ++i) ds.make_set(static_cast<int>(i));
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = i + 1; j < N; ++j)
      if (d.dist(pts.row(i), pts.row(j)) < r) ds.union_set(static_cast<int>(i), static_cast<int>(j));
  int root = ds.find_set(0);
  for (Eigen::Index i = 1; i < N; ++i)
    if (ds.find_set(static_cast<int>(i)) != root) return false;
  return true;
}

inline bool chain_connected(const SwarmState& s, double r) { return chain_connected(s.domain, s.x, r); }
inline bool chain_connected(const Measure& rho, double r) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (rho.mass(i) > 0) idx.push_back(i);
  Mat p(idx.size(), rho.dim());
  for (size_t k = 0; k < idx.size(); ++k) p.row(k) = rho.point(idx[k]);
  return chain_connected(rho.domain(), p, r);
}

// Shortest r-chain (fewest links) from a to b, or empty when disconnected.
inline std::vector<Eigen::Index> chain_path(const Domain& d, const Mat& pts, double r, Eigen::Index a, Eigen::Index b) {
  const Eigen::Index N = pts.rows();
  std::vector<Eigen::Index> prev(N, -1);
  std::vector<char> seen(N, 0);
  std::deque<Eigen::Index> q{a};
  seen[a] = 1;
  while (!q.empty()) {
    Eigen::Index i = q.front();
    q.pop_front();
    if (i == b) break;
    for (Eigen::Index j = 0; j < N; ++j)
      if (!seen[j] && d.dist(pts.row(i), pts.row(j)) < r) {
        seen[j] = 1;
        prev[j] = i;
        q.push_back(j);
      }
  }
  if (!seen[b]) return {};
  std::vector<Eigen::Index> path;
  for (Eigen::Index i = b; i != -1; i = prev[i]) path.push_back(i);
  std::reverse(path.begin(), path.end());
  return path;
}

// Greedy sub-chain: from the current anchor jump to the first point at distance >= 2r.  Links of
// the result are shorter than 3r and non-consecutive points are at least 2r apart.
inline std::vector<Eigen::Index> reduce_chain(const Domain& d, const Mat& pts, const std::vector<Eigen::Index>& chain,
                                              double r) {
  if (chain.empty()) return {};
  std::vector<Eigen::Index> out{chain.front()};
  size_t k = 0;
  while (k + 1 < chain.size()) {
    size_t next = k + 1;
    while (next < chain.size() && d.dist(pts.row(chain[k]), pts.row(chain[next])) < 2 * r) ++next;
    if (next >= chain.size()) {
      if (out.back() != chain.back()) out.push_back(chain.back());
      break;
    }
    out.push_back(chain[next]);
    k = next;
  }
  return out;
}

struct DiagnosticsRow {
  double t = 0, D = 0, A = 0;
  Eigen::RowVectorXd ubar;
  double energy = 0, dissipation = 0, thickness = 0;
  bool connected = false;
  double vmax = 0, vmin = 0;
};

struct RunOptions {
  double T = 1.0;
  double dt = 1e-3;
  double sigma = 0.0;
  int record_every = 100;
  std::uint64_t seed = 0;  // stochastic runs
  double chain_r = 0.0;    // 0 disables the connectivity diagnostic
  double thickness_r = 0.0;
  bool check_max_principle = true;
  std::function<void(const SwarmState&)> on_record;  // called with the state at every recorded row
};

struct Diagnostics {
  std::vector<DiagnosticsRow> rows;
  double dt_used = 0;
  bool dt_halved = false;
  double max_overshoot = 0;  // largest excess of any velocity component over its initial range
  double max_energy_increase = 0;  // largest per-step increase of kinetic energy
  SwarmState final_state;
};

inline DiagnosticsRow diagnose(const Model& M, const SwarmState& s, const RunOptions& o) {
  DiagnosticsRow r;
  r.t = s.t;
  r.D = position_diameter(s).value;
  r.A = velocity_diameter(s).value;
  r.ubar = s.mean_velocity();
  r.energy = s.kinetic_energy();
  Averager a(M, s.measure());
  Mat w = a.weighted(s.v);
  double uu = (s.m.array() * a.strength().array() * s.v.rowwise().squaredNorm().array()).sum();
  double ua = (s.m.asDiagonal() * s.v).cwiseProduct(w).sum();
  r.dissipation = uu - ua;
  if (o.thickness_r > 0) {
    Measure rho = s.measure();
    r.thickness = ball_thickness(rho, o.thickness_r, rho.points());
  }
  if (o.chain_r > 0) r.connected = chain_connected(s, o.chain_r);
  r.vmax = s.v.maxCoeff();
  r.vmin = s.v.minCoeff();
  return r;
}

// Integrates to T recording diagnostics every `record_every` steps.  The maximum-principle sentinel
// halves dt once when a velocity component leaves its initial range by more than 10 dt^4 T.
inline Diagnostics run(const Model& M, const SwarmState& init, const RunOptions& o) {
  if (!(o.T > 0) || !(o.dt > 0)) throw Error("run needs positive T and dt");
  Diagnostics out;
  SwarmState s = init;
  double dt = o.dt;
  const Eigen::RowVectorXd hi0 = init.v.colwise().maxCoeff(), lo0 = init.v.colwise().minCoeff();
  std::mt19937_64 rng = job_rng(o.seed, 0);
  long steps = std::lround(o.T / dt);
  long k = 0;
  out.rows.push_back(diagnose(M, s, o));
  if (o.on_record) o.on_record(s);
  double e_prev = s.kinetic_energy();
  while (k < steps) {
    SwarmState n;
    try {
      if (o.sigma > 0) n = step_stochastic(M, s, dt, o.sigma, rng);
      else n = step_deterministic(M, s, dt);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " (step at t = " + std::to_string(s.t) + ")");
    }
    if (o.check_max_principle && o.sigma == 0) {
      double tol = 10.0 * std::pow(dt, 4) * o.T;
      double over = std::max((n.v.colwise().maxCoeff() - hi0).maxCoeff(), (lo0 - n.v.colwise().minCoeff()).maxCoeff());
      if (over > tol && !out.dt_halved) {
        out.dt_halved = true;
        dt *= 0.5;
        steps = k * 2 + std::lround((o.T - s.t) / dt);
        k *= 2;
        continue;
      }
      out.max_overshoot = std::max(out.max_overshoot, over);
    }
    double e = n.kinetic_energy();
    out.max_energy_increase = std::max(out.max_energy_increase, e - e_prev);
    e_prev = e;
    s = std::move(n);
    ++k;
    long every = out.dt_halved ? 2L * o.record_every : o.record_every;
    if (k % every == 0 || k == steps) {
      out.rows.push_back(diagnose(M, s, o));
      if (o.on_record) o.on_record(s);
    }
  }
  out.dt_used = dt;
  out.final_state = s;
  return out;
}

// Log-linear fit of a positive series over t in [t0, t1].
inline LinearFit fit_log_decay(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1,
                               double floor = 1e-300) {
  std::vector<double> xs, ys;
  for (size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t0 - 1e-12 && t[i] <= t1 + 1e-12 && y[i] > floor) {
      xs.push_back(t[i]);
      ys.push_back(std::log(y[i]));
    }
  return fit_line(xs, ys);
}

// ---- mean-field experiments ----

// Phase-space sampler: maps a point of [0,1)^2 to (x, v) in 1D.
using PhaseSampler = std::function<std::pair<double, double>(double, double)>;

// Density 1 + a sin(2 pi x / L) on the torus, velocity u0(x) + spread * N(0,1).
inline PhaseSampler smooth_flock_sampler(double L, double a, double spread) {
  const double two_pi = 2 * M_PI;
  return [=](double h1, double h2) {
    // invert the CDF x/L - a L/(2 pi) (cos(2 pi x/L) - 1)/L by Newton iterations
    double x = h1 * L;
    for (int it = 0; it < 50; ++it) {
      double F = x / L - a / two_pi * (std::cos(two_pi * x / L) - 1.0);
      double f = (1.0 + a * std::sin(two_pi * x / L)) / L;
      x -= (F - h1) / f;
    }
    boost::math::normal nd;
    double z = boost::math::quantile(nd, std::min(std::max(h2, 1e-12), 1 - 1e-12));
    double v = std::sin(two_pi * x / L) + spread * z;
    return std::make_pair(x, v);
  };
}

inline double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// First N points of a randomly shifted Halton sequence (bases 2, 3); prefixes are nested.
inline Mat halton_points(int N, std::uint64_t seed) {
  std::mt19937_64 rng = job_rng(seed, 0);
  std::uniform_real_distribution<double> U(0, 1);
  double s1 = U(rng), s2 = U(rng);
  Mat h(N, 2);
  for (int i = 0; i < N; ++i) {
    h(i, 0) = std::fmod(radical_inverse(i + 1, 2) + s1, 1.0);
    h(i, 1) = std::fmod(radical_inverse(i + 1, 3) + s2, 1.0);
  }
  return h;
}

inline SwarmState sample_swarm(const Domain& d, const PhaseSampler& f0, const Mat& unit_points) {
  const Eigen::Index N = unit_points.rows();
  Mat x(N, 1), v(N, 1);
  for (Eigen::Index i = 0; i < N; ++i) {
    auto [xi, vi] = f0(unit_points(i, 0), unit_points(i, 1));
    x(i, 0) = xi;
    v(i, 0) = vi;
  }
  return make_swarm(d, x, v);
}

inline Measure phase_measure(const SwarmState& s) {
  if (s.domain.dim != 1) throw Error("phase measures are built for 1D swarms");
  Domain ph = Domain::product(s.domain.period[0], 0.0);
  Mat p(s.size(), 2);
  p.col(0) = s.x.col(0);
  p.col(1) = s.v.col(0);
  return Measure::atomic(ph, p, s.m);
}

struct MeanfieldOptions {
  std::vector<int> Ns = {25, 50, 100, 200};
  int N_ref = 800;
  double T = 1.0;
  double dt = 1e-2;
  double sigma = 0.0;
  int paths = 64;
  std::uint64_t seed = 1;
};

struct MeanfieldPoint {
  int N = 0;
  double w1 = 0;     // deterministic: W1 to the reference; stochastic: ensemble mean
  double w1_sd = 0;  // stochastic: ensemble standard deviation
};

namespace detail {

inline SwarmState evolve(const Model& M, SwarmState s, double T, double dt, double sigma, std::mt19937_64* rng) {
  long steps = std::lround(T / dt);
  for (long k = 0; k < steps; ++k) s = sigma > 0 ? step_stochastic(M, s, dt, sigma, *rng) : step_deterministic(M, s, dt);
  return s;
}

}  // namespace detail

// W1 in phase space between the N-agent empirical measure at T and an N_ref-agent reference.
// Deterministic: nested low-discrepancy samples.  Stochastic: every path couples the N agents to the
// first N reference agents through shared initial data and shared Brownian increments.
inline std::vector<MeanfieldPoint> meanfield_experiment(const Model& M, const Domain& d, const PhaseSampler& f0,
                                                        const MeanfieldOptions& o) {
  if (d.dim != 1) throw Error("mean-field experiment is 1D");
  if (o.Ns.empty()) throw Error("mean-field experiment needs at least one N");
  int nmax = *std::max_element(o.Ns.begin(), o.Ns.end());
  if (o.N_ref < nmax) throw Error("reference unavailable: N_ref must be at least max N");
  TransportOptions topt;
  topt.max_atoms = std::max<Eigen::Index>(o.N_ref, 500);
  std::vector<MeanfieldPoint> out;
  if (o.sigma == 0) {
    Mat H = halton_points(o.N_ref, o.seed);
    SwarmState ref = detail::evolve(M, sample_swarm(d, f0, H), o.T, o.dt, 0, nullptr);
    Measure mref = phase_measure(ref);
    for (int N : o.Ns) {
      SwarmState s = detail::evolve(M, sample_swarm(d, f0, H.topRows(N)), o.T, o.dt, 0, nullptr);
      out.push_back({N, wasserstein1(phase_measure(s), mref, topt), 0.0});
    }
    return out;
  }
  std::vector<std::vector<double>> samples(o.Ns.size());
  const long steps = std::lround(o.T / o.dt);
  for (int p = 0; p < o.paths; ++p) {
    std::mt19937_64 rng = job_rng(o.seed, static_cast<std::uint64_t>(p));
    std::uniform_real_distribution<double> U(0, 1);
    Mat H(o.N_ref, 2);
    for (int i = 0; i < o.N_ref; ++i) {
      H(i, 0) = U(rng);
      H(i, 1) = U(rng);
    }
    // noise increments shared by agent index
    std::normal_distribution<double> g(0, 1);
    Mat noise(steps, o.N_ref);
    for (long k = 0; k < steps; ++k)
      for (int i = 0; i < o.N_ref; ++i) noise(k, i) = g(rng);
    auto evolve_shared = [&](int N) {
      SwarmState s = sample_swarm(d, f0, H.topRows(N));
      for (long k = 0; k < steps; ++k) {
        Averager a(M, s.measure());
        Mat force = a.weighted(s.v) - a.strength().asDiagonal() * s.v;
        SwarmState n = s;
        n.x = s.x + o.dt * s.v;
        n.v = s.v + o.dt * force;
        for (int i = 0; i < N; ++i) n.v(i, 0) += std::sqrt(2 * o.sigma * a.strength()(i) * o.dt) * noise(k, i);
        n.t = s.t + o.dt;
        detail::wrap_positions(n);
        detail::require_finite(n);
        s = std::move(n);
      }
      return s;
    };
    Measure mref = phase_measure(evolve_shared(o.N_ref));
    for (size_t k = 0; k < o.Ns.size(); ++k) samples[k].push_back(wasserstein1(phase_measure(evolve_shared(o.Ns[k])), mref, topt));
  }
  for (size_t k = 0; k < o.Ns.size(); ++k) {
    double mean = 0, sq = 0;
    for (double v : samples[k]) mean += v;
    mean /= samples[k].size();
    for (double v : samples[k]) sq += (v - mean) * (v - mean);
    out.push_back({o.Ns[k], mean, std::sqrt(sq / std::max<size_t>(1, samples[k].size() - 1))});
  }
  return out;
}

}  // namespace envavg
