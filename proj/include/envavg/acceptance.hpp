#pragma once

// Acceptance battery: ten end-to-end checks, shared by the `acceptance` test binary and `envavg suite`.

#include "agentsim.hpp"
#include "hydro.hpp"
#include "kinetic.hpp"
#include "spectral.hpp"
#include "spectral_constants.hpp"

#include <chrono>
#include <functional>
#include <sstream>

namespace envavg::acceptance {

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double budget = 0;  // seconds, 0 = none
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

inline SwarmState random_swarm(std::uint64_t seed, int N, const Domain& d, double xspan, double vscale, bool equal_mass) {
  std::mt19937_64 rng = job_rng(seed, 0);
  std::uniform_real_distribution<double> U(0, 1);
  Mat x(N, d.dim), v(N, d.dim);
  Vec m(N);
  for (int i = 0; i < N; ++i) {
    for (int a = 0; a < d.dim; ++a) {
      x(i, a) = U(rng) * (d.periodic(a) ? d.period[a] : xspan);
      v(i, a) = vscale * (2 * U(rng) - 1);
    }
    m(i) = equal_mass ? 1.0 : 0.5 + U(rng);
  }
  return make_swarm(d, x, v, m / m.sum());
}

// Binomial cascade on a torus grid: each dyadic interval splits its mass p : 1-p, p uniform in [p_lo, 1-p_lo].
inline Measure cascade_density(std::mt19937_64& rng, double L, int levels, double p_lo) {
  std::uniform_real_distribution<double> U(0, 1);
  const int n = 1 << levels;
  Vec w = Vec::Ones(n);
  for (int l = 0; l < levels; ++l) {
    const int block = n >> l, half = block / 2;
    for (int b = 0; b < (1 << l); ++b) {
      double p = p_lo + (1 - 2 * p_lo) * U(rng);
      w.segment(b * block, half) *= 2 * p;
      w.segment(b * block + half, half) *= 2 * (1 - p);
    }
  }
  return Measure::grid(Domain::torus(L), n, w / w.sum());
}

inline Kernel cs_bochner_kinetic() { return Kernel::bochner(Kernel::gaussian(0.25)).scaled(4.0); }

}  // namespace detail

// 1. Fat tail aligns at an exponential rate; thin tail leaves a separated pair unaligned.
inline Result cs_dichotomy() {
  Result r{1, "Cucker-Smale dichotomy", false, "", 0, 30};
  RunOptions o;
  o.T = 10;
  o.dt = 1e-2;
  o.record_every = 10;
  SwarmState s = detail::random_swarm(1, 50, Domain::line(), 5.0, 1.0, true);
  Diagnostics fat = run(Model::cucker_smale(Kernel::cs_power(1.0, 0.4)), s, o);
  std::vector<double> t, A;
  for (const auto& row : fat.rows) {
    t.push_back(row.t);
    A.push_back(row.A);
  }
  LinearFit f = fit_log_decay(t, A, 2, 10);

  Mat x(2, 1), v(2, 1);
  x << 0.0, 1.0;
  v << -2.0, 2.0;
  Diagnostics thin = run(Model::cucker_smale(Kernel::cs_power(1.0, 3.0)), make_swarm(Domain::line(), x, v), o);
  const double ratio = thin.rows.back().A / thin.rows.front().A;
  r.pass = f.slope < -0.01 && f.r2 > 0.95 && ratio >= 0.9;
  r.detail = "beta=0.4 slope " + detail::fmt(f.slope) + " R2 " + detail::fmt(f.r2) + "; beta=3 A(10)/A(0) " +
             detail::fmt(ratio);
  return r;
}

// 2. Implication lattice on random finite models plus the three-point counterexample.
inline Result structural_lattice() {
  Result r{2, "structural lattice", false, "", 0, 0};
  std::mt19937_64 rng(2);
  int violations = 0, sym = 0, bp = 0;
  for (int t = 0; t < 10000; ++t) {
    FiniteModel f = random_finite_model(rng, 2 + t % 6, t);
    bool s = is_symmetric(f), b = is_ball_positive(f).positive, c = is_conservative(f);
    sym += s;
    bp += b;
    if ((s || b) && !c) ++violations;
  }
  FiniteModel ce = counterexample_3pt(0.5, 1.0 / 3);
  double row = (ce.A.rowwise().sum().array() - 1).abs().maxCoeff();
  double col = (ce.A.colwise().sum().array() - 1).abs().maxCoeff();
  BallVerdict bv = is_ball_positive(ce);
  bool ce_ok = row < 1e-12 && col < 1e-12 && bv.margin > -1e-12 && symmetry_residual(ce) > 1e-3;

  int two_point_bad = 0, two_point_bp = 0;
  for (int ia = 0; ia <= 40; ++ia)
    for (int ib = 0; ib <= 40; ++ib)
      for (double k2 : {0.25, 0.5, 1.0, 2.0, 3.0}) {
        double a = ia / 40.0, b = ib / 40.0;
        Mat A(2, 2);
        A << 1 - a, a, b, 1 - b;
        Vec k(2);
        k << 1.0, k2;
        FiniteModel f(k, A);
        if (is_ball_positive(f).positive) {
          ++two_point_bp;
          if (std::abs(k(0) * a - k(1) * b) > 1e-9) ++two_point_bad;
        }
      }
  r.pass = violations == 0 && ce_ok && two_point_bad == 0 && sym > 0 && bp > 0;
  r.detail = "violations " + std::to_string(violations) + " (symmetric " + std::to_string(sym) + ", ball-positive " +
             std::to_string(bp) + "); 3-point margins row " + detail::fmt(row) + " col " + detail::fmt(col) +
             " ball " + detail::fmt(bv.margin) + " asym " + detail::fmt(symmetry_residual(ce)) + "; 2-point " +
             std::to_string(two_point_bad) + "/" + std::to_string(two_point_bp) + " asymmetric";
  return r;
}

// 3. Momentum, maximum principle and energy for CS, overmollified and segregation runs.
inline Result conservation_battery() {
  Result r{3, "conservation / maximum principle", false, "", 0, 60};
  SwarmState s = detail::random_swarm(3, 100, Domain::torus(1.0), 1.0, 1.0, false);
  RunOptions o;
  o.T = 10;
  o.dt = 1e-3;
  o.record_every = 1000;
  bool ok = true;
  std::ostringstream os;
  for (const Model& M : {Model::cucker_smale(Kernel::gaussian(0.15)), Model::overmollified(Kernel::bump(0.3), 128),
                         Model::segregation_uniform(4, 1.0)}) {
    Diagnostics d = run(M, s, o);
    double drift = (d.rows.back().ubar - d.rows.front().ubar).cwiseAbs().maxCoeff();
    bool m_ok = drift < 1e-8 && d.max_overshoot < 1e-6 && !d.dt_halved;
    if (M.flags().symmetric) m_ok = m_ok && d.max_energy_increase <= 1e-6;
    ok = ok && m_ok;
    os << M.name() << ": drift " << detail::fmt(drift) << " overshoot " << detail::fmt(d.max_overshoot)
       << " dE+ " << detail::fmt(d.max_energy_increase) << "; ";
  }
  r.pass = ok;
  r.detail = os.str();
  return r;
}

// 4. Low-energy gap bounds with the frozen constants, and two exact identities.
inline Result spectral_gaps() {
  Result r{4, "spectral gap bounds", false, "", 0, 0};
  int violations = 0;
  double worst_a = 1e300, worst_b = 1e300;
  for (int s = 0; s < 100; ++s) {
    std::mt19937_64 rng = job_rng(4, s);
    Measure rho = random_grid_density(rng, reference::domain(), reference::cells, 0.25 + 0.02 * s);
    GapReport a = low_energy_bounds(reference::overmollified(), rho, gap_constants::overmollified);
    GapReport b = low_energy_bounds(reference::cs_bochner(), rho, gap_constants::cs_bochner);
    violations += !a.holds + !b.holds;
    worst_a = std::min(worst_a, a.eps_measured / a.eps_bound);
    worst_b = std::min(worst_b, b.eps_measured / b.eps_bound);
  }
  std::normal_distribution<double> g(0, 1);
  double amf = 0;
  {
    const Kernel phi = Kernel::bump(0.2);
    Model M = Model::overmollified(phi, 512);
    for (int s = 0; s < 5; ++s) {
      std::mt19937_64 rng = job_rng(40, s);
      Measure rho = random_grid_density(rng, reference::domain(), reference::cells, 1.0);
      Vec u(rho.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = g(rng);
      amf = std::max(amf, std::abs(energies(M, rho, u).A1() - overmollified_alignment_quadrature(phi, rho, u, 1024)));
    }
  }
  double favre = 0;
  {
    const Kernel psi = Kernel::gaussian(0.15);
    Model cs = Model::cucker_smale(Kernel::bochner(psi));
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> U(0, 1);
    for (int s = 0; s < 10; ++s) {
      const int N = 8 + s;
      std::vector<double> x(N), w(N);
      double tot = 0;
      for (int i = 0; i < N; ++i) {
        x[i] = 2 * U(rng);
        w[i] = 0.2 + U(rng);
        tot += w[i];
      }
      for (double& v : w) v /= tot;
      Measure rho = Measure::atomic(Domain::line(), x, w);
      Vec u(N);
      for (int i = 0; i < N; ++i) u(i) = g(rng);
      Vec direct = Averager(cs, rho).average(u);
      favre = std::max(favre, (direct - nested_favre_average(psi, rho, u, 0.01)).cwiseAbs().maxCoeff());
    }
  }
  r.pass = violations == 0 && amf < 1e-8 && favre < 1e-9;
  r.detail = "violations " + std::to_string(violations) + "/200; min eps/bound overmollified " + detail::fmt(worst_a) +
             " cs-bochner " + detail::fmt(worst_b) + "; alignment identity err " + detail::fmt(amf) +
             "; nested Favre err " + detail::fmt(favre);
  return r;
}

// 5. Kinetic relaxation to the Maxwellian, and instant filling of vacuum.
inline Result fpa_relaxation() {
  Result r{5, "FPA relaxation", false, "", 0, 300};
  const double sigma = 0.5, two_pi = 2 * M_PI;
  Model M = Model::cucker_smale(detail::cs_bochner_kinetic());
  PhaseGrid g = default_phase_grid(sigma, 1.5, 1.0, 128, 256);
  KineticState f0 = from_density(g, sigma, [&](double x, double v) {
    double a = 1 + 0.5 * std::cos(two_pi * x);
    return a * (std::exp(-std::pow(v - 1.5, 2) / (2 * sigma)) + std::exp(-std::pow(v + 1.2, 2) / (2 * sigma)));
  });
  KineticRunOptions o;
  o.T = 6.0;
  o.record_dt = 0.25;
  RelaxResult res = relax_experiment(M, f0, o);
  bool mono = true;
  for (size_t k = 1; k < res.t.size(); ++k)
    if (res.t[k] > 1.0 && res.H[k] > res.H[k - 1]) mono = false;

  PhaseGrid gv = default_phase_grid(sigma, 0.0, 1.0, 128, 256);
  KineticState half = from_density(gv, sigma, [](double x, double v) { return (x < 0.5 ? 1.0 : 0.0) * std::exp(-v * v); });
  KineticRunOptions ov;
  ov.T = 0.5;
  ov.record_dt = 0.5;
  RelaxResult vac = relax_experiment(M, half, ov);
  const double min_rho = vac.min_rho.back();
  r.pass = mono && res.fit.slope < -0.05 && res.ck_holds && min_rho > 0;
  r.detail = std::string("H monotone after t=1: ") + (mono ? "yes" : "no") + "; log H slope " + detail::fmt(res.fit.slope) +
             "; CK worst margin " + detail::fmt(res.ck_worst) + "; min rho(0.5) from half vacuum " + detail::fmt(min_rho);
  return r;
}

// 6. Empirical measures approach the reference swarm as N grows.
inline Result meanfield() {
  Result r{6, "mean-field convergence", false, "", 0, 300};
  Domain d = Domain::torus(1.0);
  Model M = Model::cucker_smale(Kernel::gaussian(0.2));
  PhaseSampler f0 = smooth_flock_sampler(1.0, 0.5, 0.3);
  MeanfieldOptions o;
  o.Ns = {25, 50, 100, 200};
  o.N_ref = 800;
  o.T = 1.0;
  o.dt = 0.02;
  auto det = meanfield_experiment(M, d, f0, o);
  o.sigma = 0.1;
  o.paths = 64;
  o.seed = 6;
  auto sto = meanfield_experiment(M, d, f0, o);
  bool dec_d = true, dec_s = true;
  std::ostringstream os;
  os << "deterministic W1";
  for (size_t k = 0; k < det.size(); ++k) {
    os << " " << detail::fmt(det[k].w1);
    if (k && !(det[k].w1 < det[k - 1].w1)) dec_d = false;
  }
  os << "; stochastic mean W1";
  for (size_t k = 0; k < sto.size(); ++k) {
    os << " " << detail::fmt(sto[k].w1);
    if (k && !(sto[k].w1 < sto[k - 1].w1)) dec_s = false;
  }
  r.pass = dec_d && dec_s;
  r.detail = os.str();
  return r;
}

// 7. Penalised kinetic solutions approach the monokinetic hydrodynamic solution as eps -> 0.
inline Result monokinetic() {
  Result r{7, "monokinetic limit", false, "", 0, 600};
  const double two_pi = 2 * M_PI;
  MonokineticOptions o;
  o.eps = {0.4, 0.2, 0.1};
  o.nx = 256;
  o.nv = 512;
  MonokineticResult res = monokinetic_experiment(
      Model::cucker_smale(Kernel::cs_power(1.0, 1.0)), [&](double x) { return 1 + 0.2 * std::sin(two_pi * x); },
      [&](double x) { return 0.1 * std::cos(two_pi * x); }, o);
  bool dec = true;
  std::ostringstream os;
  os << "W2";
  for (size_t k = 0; k < res.points.size(); ++k) {
    os << " " << detail::fmt(res.points[k].w2);
    if (k && !(res.points[k].w2 < res.points[k - 1].w2)) dec = false;
  }
  os << "; log-log slope " << detail::fmt(res.loglog.slope) << " (window 0.3..0.7)";
  r.pass = dec && res.loglog.slope >= 0.3 && res.loglog.slope <= 0.7;
  r.detail = os.str();
  return r;
}

// 8. e = u_x + s: conserved integral, blow-up for negative e0, transported strength.
inline Result hydro_e_quantity() {
  Result r{8, "hydro e-quantity", false, "", 0, 0};
  const double two_pi = 2 * M_PI;
  auto wave = [&](int n, double amp, double rho_amp) {
    return make_hydro(
        1.0, n, [&](double x) { return 1 + rho_amp * std::cos(two_pi * x); },
        [&](double x) { return -amp * std::sin(two_pi * x); });
  };
  Model M = Model::cucker_smale(Kernel::cs_power(1.0, 1.0));
  HydroSolver S(M);
  HydroRunOptions o;
  o.T = 5.0;
  o.record_every = 5;
  HydroRun smooth = run_hydro(S, wave(256, 0.1, 0.3), o);
  double drift = 0;
  for (const auto& rec : smooth.records) drift = std::max(drift, std::abs(rec.e_integral - smooth.records.front().e_integral));

  std::vector<double> times;
  double e0min = 0;
  for (int n : {256, 512}) {
    HydroState h = wave(n, 0.4, 0.0);
    e0min = S.e_field(h).minCoeff();
    HydroRun b = run_hydro(S, h, o);
    times.push_back(b.blew_up ? b.blowup_time : -1);
  }
  const bool both = times[0] > 0 && times[1] > 0;
  const double spread = both ? std::abs(times[1] - times[0]) / times[1] : 1e300;

  HydroRunOptions os;
  os.T = 2.0;
  HydroRun tr = run_hydro(S, with_transported_strength(M, wave(256, 0.15, 0.3)), os);
  double ratio = 0;
  for (const auto& rec : tr.records) ratio = std::max({ratio, rec.ratio_max - 1.0, 1.0 - rec.ratio_min});

  r.pass = !smooth.blew_up && drift < 1e-6 && e0min < 0 && both && spread < 0.10 && !tr.blew_up && ratio < 0.01;
  r.detail = "int e drift " + detail::fmt(drift) + "; min e0 " + detail::fmt(e0min) + ", blow-up at " +
             detail::fmt(times[0]) + " / " + detail::fmt(times[1]) + " (rel. spread " + detail::fmt(spread) +
             "); s/rho_phi drift " + detail::fmt(ratio);
  return r;
}

// 9. L2(rho) error of the mollified velocity is linear in delta on a multiscale density.
inline Result mollification_rate() {
  Result r{9, "mollification estimate", false, "", 0, 0};
  // fields vary on the torus scale L, well above every delta; the cascade is rough at every scale
  const double L = 16.0;
  double lo = 1e300, hi = -1e300;
  int bad = 0;
  for (int f = 0; f < 20; ++f) {
    std::mt19937_64 rng = job_rng(9, f);
    Measure rho = detail::cascade_density(rng, L, 13, 0.05);
    std::normal_distribution<double> g(0, 1);
    std::vector<double> a(4), b(4);
    for (int k = 0; k < 4; ++k) {
      a[k] = g(rng) / ((k + 1.0) * (k + 1));
      b[k] = g(rng) / ((k + 1.0) * (k + 1));
    }
    Field u(rho.size(), 1);
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
      double x = rho.points()(i, 0), s = 0;
      for (int k = 0; k < 4; ++k) s += a[k] * std::cos(2 * M_PI * (k + 1) * x / L) + b[k] * std::sin(2 * M_PI * (k + 1) * x / L);
      u(i, 0) = s;
    }
    std::vector<double> ld, le;
    for (double d : {0.2, 0.1, 0.05, 0.025}) {
      Field e = mollified_velocity(u, rho, d) - u;
      ld.push_back(std::log(d));
      le.push_back(0.5 * std::log((rho.weights().array() * e.col(0).array().square()).sum()));
    }
    double s = fit_line(ld, le).slope;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    if (std::abs(s - 1.0) > 0.15) ++bad;
  }
  r.pass = bad == 0;
  r.detail = "slopes in [" + detail::fmt(lo) + ", " + detail::fmt(hi) + "], " + std::to_string(bad) + "/20 outside 1 +- 0.15";
  return r;
}

// 10. Constant of the beta-weighted convolution inequality for a plateau kernel.
inline Result sandwich_constant() {
  Result r{10, "kernel sandwich constant", false, "", 0, 0};
  const Kernel phi = Kernel::tabulated({0.0, 0.1, 0.2}, {1.0, 1.0, 0.0});  // r0 = 0.1, R0 = 0.2
  std::vector<double> C;
  for (double beta : {0.0, 0.5, 1.0}) {
    double c = 0;
    for (int s = 0; s < 100; ++s) {
      std::mt19937_64 rng = job_rng(10, s);
      Measure rho = random_grid_density(rng, Domain::torus(1.0), 256, 1.0);
      c = std::max(c, check_kmt_inequality(phi, beta, rho));
    }
    C.push_back(c);
  }
  const double lo = *std::min_element(C.begin(), C.end()), hi = *std::max_element(C.begin(), C.end());
  r.pass = hi / lo <= 2.0 && C[2] == 1.0;
  r.detail = "C(beta=0, 0.5, 1) = " + detail::fmt(C[0]) + ", " + detail::fmt(C[1]) + ", " + detail::fmt(C[2]) +
             "; max/min " + detail::fmt(hi / lo);
  return r;
}

struct Entry {
  int id;
  const char* name;
  std::function<Result()> run;
};

inline std::vector<Entry> battery() {
  return {{1, "Cucker-Smale dichotomy", cs_dichotomy},
          {2, "structural lattice", structural_lattice},
          {3, "conservation / maximum principle", conservation_battery},
          {4, "spectral gap bounds", spectral_gaps},
          {5, "FPA relaxation", fpa_relaxation},
          {6, "mean-field convergence", meanfield},
          {7, "monokinetic limit", monokinetic},
          {8, "hydro e-quantity", hydro_e_quantity},
          {9, "mollification estimate", mollification_rate},
          {10, "kernel sandwich constant", sandwich_constant}};
}

inline Result run_timed(const Entry& e) {
  auto t0 = std::chrono::steady_clock::now();
  Result r;
  try {
    r = e.run();
  } catch (const std::exception& ex) {
    r.pass = false;
    r.detail = std::string("error: ") + ex.what();
  }
  r.id = e.id;
  r.name = e.name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.budget > 0 && r.seconds > r.budget) {
    r.pass = false;
    r.detail += "; over the " + detail::fmt(r.budget) + " s budget";
  }
  return r;
}

inline std::string format(const Result& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << " (" << detail::fmt(r.seconds) << " s): " << r.detail;
  return os.str();
}

}  // namespace envavg::acceptance
