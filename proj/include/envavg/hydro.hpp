#pragma once

#include "averaging.hpp"

#include <optional>

namespace envavg {

// Pressureless Euler-alignment system on the 1D torus [0, L): rho, u at cell centres, optional
// transported strength s.
struct HydroState {
  double L = 1.0;
  Vec rho;  // density, sum rho dx = 1
  Vec u;
  std::optional<Vec> s;
  double t = 0;

  int cells() const { return static_cast<int>(rho.size()); }
  double dx() const { return L / cells(); }
  double x(int i) const { return (i + 0.5) * dx(); }
  Measure measure() const { return Measure::grid(Domain::torus(L), cells(), rho * dx()); }
  double mass() const { return rho.sum() * dx(); }
  double momentum() const { return rho.dot(u) * dx(); }
  double energy() const { return 0.5 * (rho.array() * u.array().square()).sum() * dx(); }
};

inline HydroState make_hydro(double L, int n, const std::function<double(double)>& rho0,
                             const std::function<double(double)>& u0) {
  if (n < 4 || !(L > 0)) throw Error("hydro grid needs at least 4 cells and positive length");
  HydroState h;
  h.L = L;
  h.rho.resize(n);
  h.u.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = (i + 0.5) * L / n;
    h.rho(i) = rho0(x);
    h.u(i) = u0(x);
    if (!(h.rho(i) >= 0)) throw Error("density must be non-negative");
  }
  h.rho /= h.mass();
  return h;
}

struct BlowUp : Error {
  double time, location;
  BlowUp(double t, double x)
      : Error("blow-up detected at t = " + std::to_string(t) + " (x = " + std::to_string(x) + ")"), time(t), location(x) {}
};

struct HydroOptions {
  double cfl = 0.4;
  bool limiter = true;  // minmod reconstruction; off gives first-order upwind
  double vacuum = 1e-14;
  bool detect_blowup = true;
};

namespace detail {

inline double minmod(double a, double b) {
  if (a * b <= 0) return 0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// Face values (left and right traces) of a periodic cell field.
inline void reconstruct(const Vec& q, bool limiter, Vec& left, Vec& right) {
  const int n = static_cast<int>(q.size());
  Vec slope = Vec::Zero(n);
  if (limiter)
    for (int i = 0; i < n; ++i) slope(i) = minmod(q(i) - q((i - 1 + n) % n), q((i + 1) % n) - q(i));
  left.resize(n);
  right.resize(n);
  for (int i = 0; i < n; ++i) {
    left(i) = q(i) + 0.5 * slope(i);                             // face i+1/2 from cell i
    right(i) = q((i + 1) % n) - 0.5 * slope((i + 1) % n);        // face i+1/2 from cell i+1
  }
}

// Velocity with vacuum cells filled from the nearest occupied cell to the left.
inline Vec extend_velocity(const Vec& rho, const Vec& u, double vac) {
  const int n = static_cast<int>(rho.size());
  Vec out = u;
  int first = -1;
  for (int i = 0; i < n; ++i)
    if (rho(i) >= vac) {
      first = i;
      break;
    }
  if (first < 0) return Vec::Zero(n);
  double last = u(first);
  for (int k = 0; k < n; ++k) {
    int i = (first + k) % n;
    if (rho(i) >= vac) last = u(i);
    else out(i) = last;
  }
  return out;
}

struct HydroRhs {
  Vec drho, dm, ds;
};

}  // namespace detail

class HydroSolver {
 public:
  HydroSolver(Model M, HydroOptions opt = {}) : M_(std::move(M)), opt_(opt) {}

  const Model& model() const { return M_; }
  const HydroOptions& options() const { return opt_; }

  double max_dt(const HydroState& h) const {
    double vmax = h.u.cwiseAbs().maxCoeff();
    return vmax > 0 ? opt_.cfl * h.dx() / vmax : std::numeric_limits<double>::infinity();
  }

  // One SSP-RK2 step.  With h.s set the strength is transported by <u> instead of taken from the model.
  HydroState step(const HydroState& h, double dt) const {
    if (!(dt > 0)) throw Error("dt must be positive");
    double lim = max_dt(h);
    if (dt > lim * (1 + 1e-12))
      throw Error("CFL violated: dt = " + std::to_string(dt) + " exceeds " + std::to_string(lim));
    Vec m = h.rho.cwiseProduct(h.u);
    auto r1 = rhs(h.rho, m, h.s, h.L);
    Vec rho1 = h.rho + dt * r1.drho, m1 = m + dt * r1.dm;
    std::optional<Vec> s1;
    if (h.s) s1 = *h.s + dt * r1.ds;
    auto r2 = rhs(rho1, m1, s1, h.L);
    HydroState n = h;
    n.rho = 0.5 * (h.rho + rho1 + dt * r2.drho);
    Vec m2 = 0.5 * (m + m1 + dt * r2.dm);
    if (h.s) n.s = 0.5 * (*h.s + *s1 + dt * r2.ds);
    n.u = velocity(n.rho, m2);
    n.t = h.t + dt;
    if ((n.rho.array() < -1e-12).any()) throw Error("negative density: scheme instability");
    if (!n.u.allFinite()) throw Error("integrator diverged at t = " + std::to_string(n.t));
    if (opt_.detect_blowup) {
      const int N = n.cells();
      const double thr = 1.0 / (10.0 * n.dx());
      for (int i = 0; i < N; ++i) {
        double g = (n.u((i + 1) % N) - n.u((i - 1 + N) % N)) / (2 * n.dx());
        if (std::abs(g) > thr) throw BlowUp(n.t, n.x(i));
      }
    }
    return n;
  }

  // Strength s_rho of the model at the current density.
  Vec strength(const HydroState& h) const { return averager(h.rho, h.L).strength(); }

  // e = du/dx + s with central differences; s is the transported strength when present.
  Vec e_field(const HydroState& h) const {
    const int N = h.cells();
    Vec s = h.s ? *h.s : strength(h);
    Vec e(N);
    for (int i = 0; i < N; ++i) e(i) = (h.u((i + 1) % N) - h.u((i - 1 + N) % N)) / (2 * h.dx()) + s(i);
    return e;
  }

 private:
  Averager averager(const Vec& rho, double L) const {
    Measure mu = Measure::grid(Domain::torus(L), static_cast<int>(rho.size()), rho.cwiseMax(0.0) * (L / rho.size()), true);
    if (!geo_ || geo_cells_ != rho.size() || geo_L_ != L) {
      geo_ = std::make_shared<const Geometry>(make_geometry(M_, mu));
      geo_cells_ = rho.size();
      geo_L_ = L;
    }
    return Averager(M_, mu, geo_, VacuumPolicy::zero);
  }

  Vec velocity(const Vec& rho, const Vec& m) const {
    Vec u(rho.size());
    for (Eigen::Index i = 0; i < rho.size(); ++i) u(i) = rho(i) >= opt_.vacuum ? m(i) / rho(i) : 0.0;
    return detail::extend_velocity(rho, u, opt_.vacuum);
  }

  detail::HydroRhs rhs(const Vec& rho, const Vec& m, const std::optional<Vec>& s, double L) const {
    const int n = static_cast<int>(rho.size());
    const double dx = L / n;
    Vec u = velocity(rho, m);
    Vec rl, rr, ul, ur;
    detail::reconstruct(rho, opt_.limiter, rl, rr);
    detail::reconstruct(u, opt_.limiter, ul, ur);
    Vec Fr(n), Fm(n);
    for (int i = 0; i < n; ++i) {
      double a = std::max(ul(i), 0.0), b = std::min(ur(i), 0.0);
      Fr(i) = rl(i) * a + rr(i) * b;
      Fm(i) = rl(i) * a * ul(i) + rr(i) * b * ur(i);
    }
    Averager av = averager(rho, L);
    Vec w = av.weighted(u);  // s<u>
    Vec str = av.strength();
    detail::HydroRhs out;
    out.drho.resize(n);
    out.dm.resize(n);
    Vec avg;
    if (s) {
      avg = av.average(u);
      out.ds.resize(n);
    }
    for (int i = 0; i < n; ++i) {
      int im = (i - 1 + n) % n;
      out.drho(i) = -(Fr(i) - Fr(im)) / dx;
      double src = s ? (*s)(i) * (avg(i) - u(i)) : w(i) - str(i) * u(i);
      out.dm(i) = -(Fm(i) - Fm(im)) / dx + rho(i) * src;
    }
    if (s) {
      Vec sl, sr;
      detail::reconstruct(*s, opt_.limiter, sl, sr);
      Vec Fs(n);
      for (int i = 0; i < n; ++i) {
        double wf = 0.5 * (avg(i) + avg((i + 1) % n));
        Fs(i) = wf > 0 ? wf * sl(i) : wf * sr(i);
      }
      for (int i = 0; i < n; ++i) out.ds(i) = -(Fs(i) - Fs((i - 1 + n) % n)) / dx;
    }
    return out;
  }

  Model M_;
  HydroOptions opt_;
  mutable std::shared_ptr<const Geometry> geo_;
  mutable Eigen::Index geo_cells_ = 0;
  mutable double geo_L_ = 0;
};

inline HydroState eas_step(const Model& M, const HydroState& h, double dt, HydroOptions opt = {}) {
  return HydroSolver(M, opt).step(h, dt);
}

struct HydroRecord {
  double t = 0, mass = 0, momentum = 0, energy = 0, e_integral = 0, oscillation = 0;
  double ratio_min = 0, ratio_max = 0;  // s / rho_phi when the strength is transported
};

struct HydroRun {
  std::vector<HydroRecord> records;
  std::vector<HydroState> snapshots;
  HydroState final_state;
  bool blew_up = false;
  double blowup_time = 0, blowup_x = 0;
};

struct HydroRunOptions {
  double T = 1.0;
  double cfl_fraction = 1.0;  // dt = fraction * max_dt, capped by dt_max
  double dt_max = 1e-2;
  int record_every = 10;
  bool keep_snapshots = false;
};

namespace detail {

inline Vec favre_density(const Model& M, const HydroState& h) {
  return Averager(Model::cucker_smale(M.kernel()), h.measure(), VacuumPolicy::zero).strength();
}

inline HydroRecord hydro_record(const HydroSolver& S, const HydroState& h) {
  HydroRecord r;
  r.t = h.t;
  r.mass = h.mass();
  r.momentum = h.momentum();
  r.energy = h.energy();
  r.e_integral = S.e_field(h).sum() * h.dx();
  double hi = -1e300, lo = 1e300;
  for (int i = 0; i < h.cells(); ++i)
    if (h.rho(i) > 1e-10) {
      hi = std::max(hi, h.u(i));
      lo = std::min(lo, h.u(i));
    }
  r.oscillation = hi - lo;
  if (h.s && S.model().has_kernel()) {
    Vec rp = favre_density(S.model(), h);
    Vec q = h.s->cwiseQuotient(rp);
    r.ratio_min = q.minCoeff();
    r.ratio_max = q.maxCoeff();
  }
  return r;
}

}  // namespace detail

inline HydroRun run_hydro(const HydroSolver& S, const HydroState& init, const HydroRunOptions& o) {
  HydroRun out;
  HydroState h = init;
  out.records.push_back(detail::hydro_record(S, h));
  if (o.keep_snapshots) out.snapshots.push_back(h);
  long k = 0;
  while (h.t < o.T - 1e-12) {
    double dt = std::min({o.cfl_fraction * S.max_dt(h), o.dt_max, o.T - h.t});
    try {
      h = S.step(h, dt);
    } catch (const BlowUp& b) {
      out.blew_up = true;
      out.blowup_time = b.time;
      out.blowup_x = b.location;
      break;
    }
    ++k;
    if (k % o.record_every == 0 || h.t >= o.T - 1e-12) {
      out.records.push_back(detail::hydro_record(S, h));
      if (o.keep_snapshots) out.snapshots.push_back(h);
    }
  }
  out.final_state = h;
  return out;
}

// Strength-transport initial data: s0 = c rho_phi(0).
inline HydroState with_transported_strength(const Model& M, HydroState h, double c = 1.0) {
  if (!M.has_kernel()) throw Error("strength transport needs a kernel model");
  h.s = c * detail::favre_density(M, h);
  return h;
}

struct EAudit {
  double integral_drift = 0;  // max |int e(t) - int e(0)|
  double lagrangian_ratio = 0;  // max relative change of e / rho along sampled characteristics
};

namespace detail {

inline double periodic_interp(const Vec& q, double L, double x) {
  const int n = static_cast<int>(q.size());
  const double h = L / n;
  double y = x / h - 0.5;
  double fl = std::floor(y);
  double a = y - fl;
  int i = static_cast<int>(fl);
  i = ((i % n) + n) % n;
  return (1 - a) * q(i) + a * q((i + 1) % n);
}

}  // namespace detail

// Audits the e-law on stored snapshots; characteristics start at `starts` and follow u with
// midpoint steps between snapshots.
inline EAudit e_quantity_audit(const HydroSolver& S, const std::vector<HydroState>& traj,
                               const std::vector<double>& starts) {
  if (traj.size() < 2) throw Error("e audit needs at least two snapshots");
  EAudit a;
  const double L = traj.front().L;
  double e0 = S.e_field(traj.front()).sum() * traj.front().dx();
  std::vector<Vec> ratio;
  for (const auto& h : traj) {
    Vec e = S.e_field(h);
    a.integral_drift = std::max(a.integral_drift, std::abs(e.sum() * h.dx() - e0));
    ratio.push_back(e.cwiseQuotient(h.rho.cwiseMax(1e-300)));
  }
  double scale = ratio.front().cwiseAbs().maxCoeff();
  for (double x0 : starts) {
    double X = x0;
    double r0 = detail::periodic_interp(ratio.front(), L, X);
    for (size_t k = 1; k < traj.size(); ++k) {
      double dt = traj[k].t - traj[k - 1].t;
      double u0 = detail::periodic_interp(traj[k - 1].u, L, X);
      double Xp = X + dt * u0;
      double u1 = detail::periodic_interp(traj[k].u, L, Xp);
      X = X + 0.5 * dt * (u0 + u1);
      X -= L * std::floor(X / L);
      double r = detail::periodic_interp(ratio[k], L, X);
      a.lagrangian_ratio = std::max(a.lagrangian_ratio, std::abs(r - r0) / scale);
    }
  }
  return a;
}

}  // namespace envavg
