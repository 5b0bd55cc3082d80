#pragma once

#include "hydro.hpp"

#include <sstream>

namespace envavg {

// Phase grid: x in the torus [0, L) with nx cells, v in [-V, V] with nv cells.
struct PhaseGrid {
  double L = 1.0;
  int nx = 128;
  double V = 4.0;
  int nv = 256;

  double dx() const { return L / nx; }
  double dv() const { return 2 * V / nv; }
  double cell() const { return dx() * dv(); }
  double x(int i) const { return (i + 0.5) * dx(); }
  double v(int j) const { return -V + (j + 0.5) * dv(); }
  double v_face(int j) const { return -V + (j + 1) * dv(); }  // face between j and j+1
};

// V = |u|_max + 8 sqrt(sigma).
inline PhaseGrid default_phase_grid(double sigma, double umax, double L = 1.0, int nx = 128, int nv = 256) {
  return {L, nx, umax + 8.0 * std::sqrt(sigma), nv};
}

struct KineticState {
  PhaseGrid g;
  Mat f;  // nx x nv
  double sigma = 0;
  double t = 0;
};

struct Moments {
  Vec rho, mom, u;
  double mass = 0, ubar = 0, energy = 0;
};

inline Moments moments(const KineticState& s, double vacuum = 1e-14) {
  const PhaseGrid& g = s.g;
  Vec v(g.nv);
  for (int j = 0; j < g.nv; ++j) v(j) = g.v(j);
  Moments m;
  m.rho = s.f.rowwise().sum() * g.dv();
  m.mom = s.f * v * g.dv();
  m.u.resize(g.nx);
  for (int i = 0; i < g.nx; ++i) m.u(i) = m.rho(i) >= vacuum ? m.mom(i) / m.rho(i) : 0.0;
  m.mass = m.rho.sum() * g.dx();
  m.ubar = m.mom.sum() * g.dx() / m.mass;
  m.energy = 0.5 * (s.f * v.cwiseAbs2()).sum() * g.cell();
  return m;
}

namespace detail {

// Flux through a v-face is (D/dv)(alpha f_j - beta f_{j+1}) with cell Peclet number P = dv a (v_face - w) / D.
// Central drift while |P| <= 2, upwind drift beyond.
inline std::pair<double, double> face_coeffs(double P) {
  if (std::abs(P) <= 2) return {1 - 0.5 * P, 1 + 0.5 * P};
  if (P > 0) return {1.0, 1 + P};
  return {1 - P, 1.0};
}

// Zero-flux profile of the velocity operator for drift centre w and temperature sigma.
inline Vec equilibrium_profile(const PhaseGrid& g, double sigma, double w) {
  if (!(sigma > 0)) throw Error("Maxwellian needs sigma > 0");
  Vec p = Vec::Zero(g.nv);
  int j0 = static_cast<int>(std::clamp(std::floor((w + g.V) / g.dv()), 0.0, g.nv - 1.0));
  p(j0) = 1.0;
  for (int j = j0; j + 1 < g.nv; ++j) {
    auto [a, b] = face_coeffs(g.dv() * (g.v_face(j) - w) / sigma);
    p(j + 1) = p(j) * a / b;
  }
  for (int j = j0 - 1; j >= 0; --j) {
    auto [a, b] = face_coeffs(g.dv() * (g.v_face(j) - w) / sigma);
    p(j) = a > 0 ? p(j + 1) * b / a : 0.0;
  }
  return p;
}

// Circulant Gaussian mollification on the x-grid, normalised to unit discrete mass.
inline Vec grid_mollify(const Vec& q, double delta, double dx) {
  const int n = static_cast<int>(q.size());
  int half = std::min(n / 2, static_cast<int>(std::ceil(8 * delta / dx)));
  Vec w(2 * half + 1);
  for (int k = -half; k <= half; ++k) w(k + half) = std::exp(-0.5 * std::pow(k * dx / delta, 2));
  w /= w.sum();
  Vec out = Vec::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int k = -half; k <= half; ++k) out(i) += w(k + half) * q(((i + k) % n + n) % n);
  return out;
}

}  // namespace detail

// Discrete Maxwellian mu_{sigma,ubar}: the stationary profile of the velocity operator, uniform in x,
// normalised to grid mass one.
inline KineticState maxwellian(double sigma, double ubar, const PhaseGrid& g) {
  Vec p = detail::equilibrium_profile(g, sigma, ubar);
  KineticState s;
  s.g = g;
  s.sigma = sigma;
  s.f = Mat::Ones(g.nx, 1) * p.transpose();
  s.f /= s.f.sum() * g.cell();
  return s;
}

inline KineticState from_density(const PhaseGrid& g, double sigma, const std::function<double(double, double)>& f0) {
  KineticState s;
  s.g = g;
  s.sigma = sigma;
  s.f.resize(g.nx, g.nv);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.nv; ++j) {
      double v = f0(g.x(i), g.v(j));
      if (!(v >= 0)) throw Error("initial distribution must be non-negative");
      s.f(i, j) = v;
    }
  double tot = s.f.sum() * g.cell();
  if (!(tot > 0)) throw Error("initial distribution has zero mass");
  s.f /= tot;
  return s;
}

struct Penalty {
  double eps = 0;    // local alignment strength 1/eps
  double delta = 0;  // mollification width of the local velocity
};

struct KineticOptions {
  bool limiter = false;  // minmod flux limiter in x
  double vacuum = 1e-14;
  std::optional<Penalty> penalty;
};

class FpaSolver {
 public:
  FpaSolver(Model M, KineticOptions opt = {}) : M_(std::move(M)), opt_(opt) {}

  const Model& model() const { return M_; }
  const KineticOptions& options() const { return opt_; }

  // Strength and drift centre of every column.
  std::pair<Vec, Vec> alignment(const KineticState& s) const {
    Moments m = moments(s, opt_.vacuum);
    Averager a = averager(s.g, m.rho);
    Vec str = a.strength();
    Vec w = a.average(m.u);
    for (int i = 0; i < s.g.nx; ++i)
      if (m.rho(i) < opt_.vacuum) w(i) = 0.0;
    if (opt_.penalty) {
      const double k = 1.0 / opt_.penalty->eps;
      Vec ud = mollified_u(s.g, m);
      for (int i = 0; i < s.g.nx; ++i) {
        double tot = str(i) + k;
        w(i) = (str(i) * w(i) + k * ud(i)) / tot;
        str(i) = tot;
      }
    }
    return {str, w};
  }

  // Largest stable dt for the current state.
  double stable_dt(const KineticState& s) const {
    double dt_x = s.g.dx() / s.g.V;
    auto [a, w] = alignment(s);
    double diag = 0;
    for (int i = 0; i < s.g.nx; ++i) diag = std::max(diag, column_diag(s.g, a(i), w(i), diffusion(s, a(i))));
    return diag > 0 ? std::min(dt_x, 1.0 / diag) : dt_x;
  }

  // Strang step: half transport, velocity operator, half transport.
  KineticState step(const KineticState& s, double dt) const {
    if (!(dt > 0)) throw Error("dt must be positive");
    const PhaseGrid& g = s.g;
    if (dt * g.V > g.dx() * (1 + 1e-12)) {
      std::ostringstream os;
      os << "CFL violated in x: dt = " << dt << " > dx/V = " << g.dx() / g.V << "; suggested dt = " << 0.9 * g.dx() / g.V;
      throw Error(os.str());
    }
    KineticState n = s;
    transport(n, 0.5 * dt);
    collide(n, dt);
    transport(n, 0.5 * dt);
    n.t = s.t + dt;
    double fmin = n.f.minCoeff();
    if (fmin < -1e-12 || !n.f.allFinite()) throw Error("scheme instability: min f = " + std::to_string(fmin));
    return n;
  }

 private:
  double diffusion(const KineticState& s, double a) const {
    if (!opt_.penalty) return s.sigma * a;
    // noise acts through the model strength only
    return s.sigma * (a - 1.0 / opt_.penalty->eps);
  }

  static double column_diag(const PhaseGrid& g, double a, double w, double D) {
    const double dv = g.dv();
    double worst = 0;
    for (int j = 0; j < g.nv; ++j) {
      double out = 0;
      if (j + 1 < g.nv) {
        double c = g.v_face(j) - w;
        out += D > 0 ? D / (dv * dv) * detail::face_coeffs(dv * a * c / D).first : a * std::max(-c, 0.0) / dv;
      }
      if (j > 0) {
        double c = g.v_face(j - 1) - w;
        out += D > 0 ? D / (dv * dv) * detail::face_coeffs(dv * a * c / D).second : a * std::max(c, 0.0) / dv;
      }
      worst = std::max(worst, out);
    }
    return worst;
  }

  Averager averager(const PhaseGrid& g, const Vec& rho) const {
    Measure mu = Measure::grid(Domain::torus(g.L), g.nx, rho.cwiseMax(0.0) * g.dx(), true);
    if (!geo_ || geo_nx_ != g.nx || geo_L_ != g.L) {
      geo_ = std::make_shared<const Geometry>(make_geometry(M_, mu));
      geo_nx_ = g.nx;
      geo_L_ = g.L;
    }
    return Averager(M_, mu, geo_, VacuumPolicy::zero);
  }

  Vec mollified_u(const PhaseGrid& g, const Moments& m) const {
    const double d = opt_.penalty->delta;
    Vec rp = detail::grid_mollify(m.rho, d, g.dx());
    Vec up = detail::grid_mollify(m.mom, d, g.dx());
    Vec q(g.nx);
    for (int i = 0; i < g.nx; ++i) q(i) = rp(i) > opt_.vacuum ? up(i) / rp(i) : 0.0;
    return detail::grid_mollify(q, d, g.dx());
  }

  void transport(KineticState& s, double dt) const {
    const PhaseGrid& g = s.g;
    const int n = g.nx;
    Vec F(n);
    for (int j = 0; j < g.nv; ++j) {
      const double v = g.v(j), nu = std::abs(v) * dt / g.dx();
      auto col = s.f.col(j);
      for (int i = 0; i < n; ++i) {
        int im = (i - 1 + n) % n, ip = (i + 1) % n, ipp = (i + 2) % n;
        double up, corr = 0;
        double jump = col(ip) - col(i);
        if (v >= 0) {
          up = col(i);
          if (opt_.limiter && jump != 0) {
            double r = (col(i) - col(im)) / jump;
            corr = 0.5 * (1 - nu) * std::max(0.0, std::min(1.0, r)) * jump;
          }
        } else {
          up = col(ip);
          if (opt_.limiter && jump != 0) {
            double r = (col(ipp) - col(ip)) / jump;
            corr = -0.5 * (1 - nu) * std::max(0.0, std::min(1.0, r)) * jump;
          }
        }
        F(i) = v * (up + corr);
      }
      for (int i = 0; i < n; ++i) col(i) -= dt / g.dx() * (F(i) - F((i - 1 + n) % n));
    }
  }

  void collide(KineticState& s, double dt) const {
    const PhaseGrid& g = s.g;
    auto [a, w] = alignment(s);
    const double dv = g.dv();
    Vec F(g.nv + 1);
    double worst = 0;
    for (int i = 0; i < g.nx; ++i) {
      if (!(a(i) > 0)) continue;
      const double D = diffusion(s, a(i));
      worst = std::max(worst, column_diag(g, a(i), w(i), D));
      F(0) = F(g.nv) = 0;
      for (int j = 0; j + 1 < g.nv; ++j) {
        double c = g.v_face(j) - w(i);
        double fl = s.f(i, j), fr = s.f(i, j + 1);
        if (D > 0) {
          auto [al, be] = detail::face_coeffs(dv * a(i) * c / D);
          F(j + 1) = D / dv * (al * fl - be * fr);
        } else {
          F(j + 1) = -a(i) * c * (c < 0 ? fl : fr);
        }
      }
      for (int j = 0; j < g.nv; ++j) s.f(i, j) -= dt / dv * (F(j + 1) - F(j));
    }
    if (dt * worst > 1 + 1e-12) {
      std::ostringstream os;
      os << "CFL violated in v: dt = " << dt << "; suggested dt = " << 0.9 / worst;
      throw Error(os.str());
    }
  }

  Model M_;
  KineticOptions opt_;
  mutable std::shared_ptr<const Geometry> geo_;
  mutable int geo_nx_ = 0;
  mutable double geo_L_ = 0;
};

inline KineticState fpa_step(const Model& M, const KineticState& s, double dt, KineticOptions opt = {}) {
  return FpaSolver(M, opt).step(s, dt);
}

// sigma * sum f log(f / mu).
inline double relative_entropy(const KineticState& f, const KineticState& mu) {
  if (f.f.rows() != mu.f.rows() || f.f.cols() != mu.f.cols()) throw Error("grids differ");
  double H = 0;
  for (Eigen::Index k = 0; k < f.f.size(); ++k) {
    double a = f.f.data()[k], b = mu.f.data()[k];
    if (a <= 0) continue;
    if (b <= 0) return std::numeric_limits<double>::infinity();
    H += a * std::log(a / b);
  }
  return f.sigma * H * f.g.cell();
}

inline double l1_distance(const KineticState& f, const KineticState& mu) {
  return (f.f - mu.f).cwiseAbs().sum() * f.g.cell();
}

struct Fisher {
  double vv = 0, xx = 0;
};

// Fisher pieces of h = f / mu against d mu, with face differences.
inline Fisher fisher_information(const KineticState& f, const KineticState& mu) {
  const PhaseGrid& g = f.g;
  Fisher I;
  const double s = f.sigma;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.nv; ++j) {
      double m0 = mu.f(i, j);
      if (m0 <= 0) continue;
      double h0 = f.f(i, j) / m0;
      if (j + 1 < g.nv && mu.f(i, j + 1) > 0) {
        double h1 = f.f(i, j + 1) / mu.f(i, j + 1), hf = 0.5 * (h0 + h1), mf = 0.5 * (m0 + mu.f(i, j + 1));
        if (hf > 0) I.vv += std::pow((h1 - h0) / g.dv(), 2) / hf * mf;
      }
      int ip = (i + 1) % g.nx;
      if (mu.f(ip, j) > 0) {
        double h1 = f.f(ip, j) / mu.f(ip, j), hf = 0.5 * (h0 + h1), mf = 0.5 * (m0 + mu.f(ip, j));
        if (hf > 0) I.xx += std::pow((h1 - h0) / g.dx(), 2) / hf * mf;
      }
    }
  I.vv *= s * s * g.cell();
  I.xx *= s * g.cell();
  return I;
}

struct KineticDiagnostics {
  double t = 0, mass = 0, ubar = 0, energy = 0;
  double H = 0, Ivv = 0, Ixx = 0, min_rho = 0, l1 = 0, boundary_mass = 0;
};

inline KineticDiagnostics kinetic_diagnostics(const KineticState& s) {
  Moments m = moments(s);
  KineticDiagnostics d;
  d.t = s.t;
  d.mass = m.mass;
  d.ubar = m.ubar;
  d.energy = m.energy;
  d.min_rho = m.rho.minCoeff();
  d.boundary_mass = (s.f.col(0).sum() + s.f.col(s.g.nv - 1).sum()) * s.g.cell();
  if (s.sigma > 0) {
    KineticState mu = maxwellian(s.sigma, m.ubar, s.g);
    d.H = relative_entropy(s, mu);
    d.l1 = l1_distance(s, mu);
    Fisher I = fisher_information(s, mu);
    d.Ivv = I.vv;
    d.Ixx = I.xx;
  }
  return d;
}

struct KineticRunOptions {
  double T = 1.0;
  double dt_max = 1e-2;
  double safety = 0.8;       // fraction of the stable dt
  double record_dt = 0.1;
};

struct KineticRun {
  std::vector<KineticDiagnostics> rows;
  KineticState final_state;
  long steps = 0;
};

// Adaptive-dt integration landing exactly on the record times.
inline KineticRun run_kinetic(const FpaSolver& S, const KineticState& init, const KineticRunOptions& o) {
  KineticRun out;
  KineticState s = init;
  out.rows.push_back(kinetic_diagnostics(s));
  double next = o.record_dt;
  while (s.t < o.T - 1e-12) {
    double target = std::min(next, o.T);
    double dt = std::min({o.dt_max, o.safety * S.stable_dt(s), target - s.t});
    s = S.step(s, dt);
    ++out.steps;
    if (s.t >= target - 1e-12) {
      s.t = target;
      out.rows.push_back(kinetic_diagnostics(s));
      next += o.record_dt;
    }
  }
  out.final_state = s;
  return out;
}

struct RelaxResult {
  std::vector<double> t, H, l1, min_rho;
  LinearFit fit;                // log H over the final half of the samples with H > 1e-12
  double ck_worst = 0;          // min over snapshots of H - (sigma/2) |f - mu|_1^2
  bool ck_holds = false;
  KineticState final_state;
};

inline LinearFit relaxation_fit(const std::vector<double>& t, const std::vector<double>& H) {
  std::vector<double> xs, ys;
  for (size_t k = t.size() / 2; k < t.size(); ++k)
    if (H[k] > 1e-12) {
      xs.push_back(t[k]);
      ys.push_back(std::log(H[k]));
    }
  if (xs.size() < 2) return LinearFit{};
  return fit_line(xs, ys);
}

// Csiszar-Kullback with constant 1/2: sigma/2 |f - mu|_1^2 <= H.
constexpr double ck_constant = 0.5;

inline RelaxResult relax_experiment(const Model& M, const KineticState& f0, const KineticRunOptions& o,
                                    KineticOptions kopt = {}) {
  if (!(f0.sigma > 0)) throw Error("relaxation needs sigma > 0");
  FpaSolver S(M, kopt);
  KineticRun run = run_kinetic(S, f0, o);
  RelaxResult r;
  r.ck_worst = std::numeric_limits<double>::infinity();
  for (const auto& d : run.rows) {
    r.t.push_back(d.t);
    r.H.push_back(d.H);
    r.l1.push_back(d.l1);
    r.min_rho.push_back(d.min_rho);
    r.ck_worst = std::min(r.ck_worst, d.H - ck_constant * f0.sigma * d.l1 * d.l1);
  }
  r.ck_holds = r.ck_worst >= -1e-14;
  r.fit = relaxation_fit(r.t, r.H);
  r.final_state = run.final_state;
  return r;
}

struct EntropyAudit {
  std::vector<double> residual;  // per record: H_k - H_{k-1} (conservative) or H_k - envelope_k
  double worst = 0;
  double growth = 0;  // fitted Gronwall constant (non-conservative models)
  bool ok = false;
};

// Conservative models: H non-increasing up to tol * max(1, H_0) per record.  Otherwise
// H <= (H_0 + 1) e^{C t} - 1 with C fitted from the largest relative growth.
inline EntropyAudit entropy_law_audit(const std::vector<double>& t, const std::vector<double>& H, bool conservative,
                                      double tol = 1e-6) {
  if (t.size() != H.size() || t.size() < 2) throw Error("entropy audit needs at least two samples");
  EntropyAudit a;
  a.residual.push_back(0.0);
  a.worst = 0;
  if (conservative) {
    double scale = std::max(1.0, H.front());
    for (size_t k = 1; k < H.size(); ++k) {
      a.residual.push_back(H[k] - H[k - 1]);
      a.worst = std::max(a.worst, a.residual.back());
    }
    a.ok = a.worst <= tol * scale;
    return a;
  }
  for (size_t k = 1; k < H.size(); ++k)
    a.growth = std::max(a.growth, std::log((H[k] + 1) / (H[k - 1] + 1)) / (t[k] - t[k - 1]));
  for (size_t k = 1; k < H.size(); ++k) {
    double env = (H.front() + 1) * std::exp(a.growth * (t[k] - t.front())) - 1;
    a.residual.push_back(H[k] - env);
    a.worst = std::max(a.worst, a.residual.back());
  }
  a.ok = a.worst <= tol * std::max(1.0, H.front());
  return a;
}

// ---- monokinetic limit ----

struct MonokineticOptions {
  std::vector<double> eps = {0.4, 0.2, 0.1};
  double T = 1.0;
  double delta_coeff = 1.0, delta_power = 2.0;  // delta = c eps^p
  double L = 1.0;
  int nx = 256, nv = 512;
  double V = 0;  // 0: max|u0| + 5 eps + 0.25, per epsilon
  bool limiter = true;
};

struct MonokineticPoint {
  double eps = 0, delta = 0, w2 = 0;
};

struct MonokineticResult {
  std::vector<MonokineticPoint> points;
  LinearFit loglog;  // log W2 against log eps
};

namespace detail {

// W2 between a grid distribution and rho(x) delta(v - u(x)): x-quantile coupling between the
// densities, every column sent to the target velocity of its partner cell.
inline double monokinetic_w2(const KineticState& s, const HydroState& h) {
  const PhaseGrid& g = s.g;
  if (h.cells() != g.nx || std::abs(h.L - g.L) > 1e-12) throw Error("kinetic and hydro grids differ");
  Moments m = moments(s);
  Vec var(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    double q = 0;
    for (int j = 0; j < g.nv; ++j) q += s.f(i, j) * std::pow(g.v(j) - m.u(i), 2);
    var(i) = m.rho(i) > 0 ? q * g.dv() / m.rho(i) : 0.0;
  }
  Vec a = m.rho * g.dx(), b = h.rho * h.dx();
  a /= a.sum();
  b /= b.sum();
  Domain d = Domain::torus(g.L);
  double cost = 0;
  int i = 0, k = 0;
  double ra = a(0), rb = b(0);
  while (i < g.nx && k < g.nx) {
    double w = std::min(ra, rb);
    double dxx = d.dist(Eigen::RowVectorXd::Constant(1, g.x(i)), Eigen::RowVectorXd::Constant(1, h.x(k)));
    cost += w * (dxx * dxx + var(i) + std::pow(m.u(i) - h.u(k), 2));
    ra -= w;
    rb -= w;
    if (ra <= 1e-300 && ++i < g.nx) ra = a(i);
    if (rb <= 1e-300 && ++k < g.nx) rb = b(k);
  }
  return std::sqrt(std::max(cost, 0.0));
}

}  // namespace detail

inline MonokineticResult monokinetic_experiment(const Model& M, const std::function<double(double)>& rho0,
                                                const std::function<double(double)>& u0,
                                                const MonokineticOptions& o) {
  if (o.eps.empty()) throw Error("monokinetic experiment needs at least one epsilon");
  for (double e : o.eps)
    if (e < 0.05) throw Error("epsilon below 0.05 is not supported (the CFL cost grows like 1/epsilon)");
  // hydrodynamic reference on the same x-grid
  HydroOptions hopt;
  hopt.limiter = o.limiter;
  HydroSolver HS(M, hopt);
  HydroState h0 = make_hydro(o.L, o.nx, rho0, u0);
  HydroRunOptions ro;
  ro.T = o.T;
  ro.dt_max = 1e-3;
  HydroRun ref = run_hydro(HS, h0, ro);
  if (ref.blew_up) throw Error("hydrodynamic reference blew up before T");
  double umax = h0.u.cwiseAbs().maxCoeff();
  MonokineticResult res;
  std::vector<double> le, lw;
  for (double eps : o.eps) {
    PhaseGrid g{o.L, o.nx, o.V > 0 ? o.V : umax + 5 * eps + 0.25, o.nv};
    // f0 = rho0(x) N(u0(x), eps^2) with cell-averaged velocity profile: W2(f0, monokinetic) = eps
    KineticState s;
    s.g = g;
    s.sigma = 0;
    s.f.resize(g.nx, g.nv);
    for (int i = 0; i < g.nx; ++i) {
      double mu = h0.u(i);
      double tot = 0;
      for (int j = 0; j < g.nv; ++j) {
        double lo = (g.v(j) - 0.5 * g.dv() - mu) / (eps * std::sqrt(2.0)), hi = (g.v(j) + 0.5 * g.dv() - mu) / (eps * std::sqrt(2.0));
        s.f(i, j) = 0.5 * (std::erf(hi) - std::erf(lo));
        tot += s.f(i, j);
      }
      s.f.row(i) *= h0.rho(i) / (tot * g.dv());
    }
    s.f /= s.f.sum() * g.cell();
    KineticOptions kopt;
    kopt.limiter = o.limiter;
    kopt.penalty = Penalty{eps, o.delta_coeff * std::pow(eps, o.delta_power)};
    FpaSolver S(M, kopt);
    KineticRunOptions kro;
    kro.T = o.T;
    kro.record_dt = o.T;
    kro.dt_max = 1e-3;
    KineticRun run = run_kinetic(S, s, kro);
    double w2 = detail::monokinetic_w2(run.final_state, ref.final_state);
    res.points.push_back({eps, kopt.penalty->delta, w2});
    le.push_back(std::log(eps));
    lw.push_back(std::log(w2));
  }
  if (le.size() >= 2) res.loglog = fit_line(le, lw);
  return res;
}

}  // namespace envavg
