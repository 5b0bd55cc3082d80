#pragma once

#include "averaging.hpp"
#include "finite.hpp"

#include <functional>

namespace envavg {

struct ProbeOptions {
  int probes = 200;
  std::uint64_t seed = 12345;
};

struct CheckResult {
  bool ok = false;
  double residual = 0;  // conservation residual, or worst margin for positivity-type checks
};

namespace detail {

inline Field random_probe(std::mt19937_64& rng, Eigen::Index N, Eigen::Index m) {
  std::normal_distribution<double> g(0.0, 1.0);
  Field u(N, m);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index c = 0; c < m; ++c) u(i, c) = g(rng);
  return u;
}

}  // namespace detail

// Finite reduction of a model on an atomic (or grid) measure.
inline FiniteModel finite_model_of(const Averager& a) {
  auto [kappa, A] = a.finite_reduction();
  if ((kappa.array() <= 0).any()) throw Error("finite reduction needs positive strength at every atom");
  return FiniteModel(kappa, A);
}

inline FiniteModel finite_model_of(const Model& M, const Measure& rho) { return finite_model_of(Averager(M, rho)); }

// max over probes of |sum m s (<u> - u)| with u scaled to sup-norm 1.
inline CheckResult check_conservative(const Model& M, const Measure& rho, double tol = 1e-9, ProbeOptions opt = {}) {
  Averager a(M, rho);
  std::mt19937_64 rng(opt.seed);
  const Vec kappa = a.masses().cwiseProduct(a.strength());
  double worst = 0;
  for (int p = 0; p < opt.probes; ++p) {
    Vec u = detail::random_probe(rng, rho.size(), 1).col(0);
    u /= u.cwiseAbs().maxCoeff();
    Vec w = a.weighted(u);
    double r = std::abs(a.masses().dot(w) - kappa.dot(u));
    worst = std::max(worst, r);
  }
  return {worst < tol, worst};
}

inline CheckResult check_symmetric(const Model& M, const Measure& rho, double tol = 1e-9) {
  Mat K = Averager(M, rho).kernel_matrix();
  Vec m = rho.weights();
  Mat W = m.asDiagonal() * K * m.asDiagonal();
  double r = (W - W.transpose()).cwiseAbs().maxCoeff();
  return {r < tol, r};
}

// min over probes of [(u,<u>)_k - (<u>,<u>)_k] / (u,u)_k; probes are random fields plus the
// eigen-directions of the symmetric part of the finite reduction.
inline CheckResult check_ball_positive(const Model& M, const Measure& rho, double tol = 1e-10, ProbeOptions opt = {}) {
  Averager a(M, rho);
  const Vec kappa = a.masses().cwiseProduct(a.strength());
  auto margin = [&](const Vec& u) {
    Vec av = a.average(u);
    double n = (kappa.array() * u.array().square()).sum();
    if (!(n > 0)) return 0.0;
    return ((kappa.array() * u.array() * av.array()).sum() - (kappa.array() * av.array().square()).sum()) / n;
  };
  std::mt19937_64 rng(opt.seed);
  double worst = std::numeric_limits<double>::infinity();
  for (int p = 0; p < opt.probes; ++p) worst = std::min(worst, margin(detail::random_probe(rng, rho.size(), 1).col(0)));
  if ((kappa.array() > 0).all()) {
    FiniteModel fm = finite_model_of(a);
    Mat KA = fm.kappa.asDiagonal() * fm.A;
    Mat Q = sym(KA - fm.A.transpose() * KA);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Q, Mat(fm.kappa.asDiagonal()));
    worst = std::min(worst, es.eigenvalues()(0));
    for (Eigen::Index c = 0; c < std::min<Eigen::Index>(3, es.eigenvectors().cols()); ++c)
      worst = std::min(worst, margin(es.eigenvectors().col(c)));
  }
  return {worst >= -tol, worst};
}

// Convex profiles for the Jensen check, applied to |u|.
enum class ConvexProfile { square, abs, cosh_minus_one };

inline double apply_profile(ConvexProfile p, double x) {
  switch (p) {
    case ConvexProfile::square: return x * x;
    case ConvexProfile::abs: return std::abs(x);
    case ConvexProfile::cosh_minus_one: return std::cosh(x) - 1.0;
  }
  return 0;
}

// psi(|<u>|) <= <psi(|u|)> at points with positive strength; residual = min of the gap.
inline CheckResult check_jensen(const Model& M, const Measure& rho, const Field& u, ConvexProfile psi, double tol = 1e-10) {
  Averager a(M, rho);
  Field av = a.average(u);
  Vec pu(u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i) pu(i) = apply_profile(psi, u.row(i).norm());
  Vec apu = a.average(pu);
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    if (!(a.strength()(i) > 0)) continue;
    worst = std::min(worst, apu(i) - apply_profile(psi, av.row(i).norm()));
  }
  if (!std::isfinite(worst)) worst = 0;
  return {worst >= -tol, worst};
}

// Translation invariance: averages on the shifted measure equal the unshifted ones.
inline double galilean_residual(const Model& M, const Measure& rho, const Field& u, const Eigen::RowVectorXd& h) {
  Field a0 = Averager(M, rho).average(u);
  Field a1 = Averager(M, rho.translated(h)).average(u);
  return (a0 - a1).cwiseAbs().maxCoeff();
}

// max over the grid of (rho / rho_phi^(1-beta))_phi / rho_phi^beta.
inline double check_kmt_inequality(const Kernel& phi, double beta, const Measure& rho) {
  if (!(beta >= 0 && beta <= 1)) throw Error("beta must lie in [0,1]");
  if (!rho.is_grid()) throw Error("check_kmt_inequality needs a grid measure");
  Mat P = detail::pair_kernel(phi, rho);
  const Vec& m = rho.weights();
  Vec rp = P * m;
  Vec q(m.size());
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    if (m(j) == 0) q(j) = 0;
    else q(j) = beta == 1.0 ? m(j) : m(j) / std::pow(rp(j), 1.0 - beta);
  }
  Vec num = P * q;
  double C = 0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!(rp(i) > 0)) continue;
    double den = beta == 1.0 ? rp(i) : std::pow(rp(i), beta);
    C = std::max(C, num(i) / den);
  }
  return C;
}

struct CounterexampleSearch {
  bool found = false;
  double margin = 0;
  Mat points;
  Vec weights;
  int trials = 0;
};

// Random search for a measure on which the topological model fails ball-positivity.
// Candidates are evenly spaced chains with jitter; spacing near half the kernel range makes
// the pair kernel lose positive-definiteness.
inline CounterexampleSearch search_topological_counterexample(const Model& M, const Domain& d, std::uint64_t seed,
                                                              int max_trials = 200) {
  if (M.kind() != ModelKind::topological) throw Error("counterexample search expects a topological model");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double R = M.kernel().compact() ? M.kernel().support() : 3.0 * M.kernel().locality_radius();
  CounterexampleSearch out;
  for (int t = 0; t < max_trials; ++t) {
    int N = 3 + static_cast<int>(U(rng) * 8);
    double gap = R * (0.4 + 0.35 * U(rng));
    Mat pts(N, d.dim);
    Vec w(N);
    for (int i = 0; i < N; ++i) {
      pts(i, 0) = i * gap + 0.05 * gap * (U(rng) - 0.5);
      if (d.dim == 2) pts(i, 1) = 0.05 * gap * (U(rng) - 0.5);
      w(i) = 0.5 + U(rng);
    }
    w /= w.sum();
    Measure rho = Measure::atomic(d, pts, w);
    CheckResult r = check_ball_positive(M, rho, 1e-10, {20, seed + static_cast<std::uint64_t>(t)});
    out.trials = t + 1;
    if (!r.ok) {
      out.found = true;
      out.margin = r.residual;
      out.points = rho.points();
      out.weights = w;
      return out;
    }
  }
  return out;
}

struct PropertyReport {
  std::string model;
  Flags declared;
  CheckResult conservative, symmetric, ball_positive;
  double galilean = 0;
  bool agree = true;  // declared flags consistent with the checks on this instance
};

inline PropertyReport property_report(const Model& M, const Measure& rho, ProbeOptions opt = {}) {
  PropertyReport r;
  r.model = M.name();
  r.declared = M.flags();
  r.conservative = check_conservative(M, rho, 1e-9, opt);
  r.symmetric = check_symmetric(M, rho);
  r.ball_positive = check_ball_positive(M, rho, 1e-10, opt);
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Constant(rho.dim(), 0.123);
  std::mt19937_64 rng(opt.seed + 1);
  Field u = detail::random_probe(rng, rho.size(), 1);
  r.galilean = galilean_residual(M, rho, u, h);
  // declared-true flags must pass; declared-false flags are allowed to pass on a particular instance
  if (r.declared.conservative && !r.conservative.ok) r.agree = false;
  if (r.declared.symmetric && !r.symmetric.ok) r.agree = false;
  if (r.declared.ball_positive && !r.ball_positive.ok) r.agree = false;
  if (r.declared.galilean && r.galilean > 1e-9) r.agree = false;
  return r;
}

}  // namespace envavg
