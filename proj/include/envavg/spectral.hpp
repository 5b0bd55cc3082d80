#pragma once

#include "probes.hpp"

#include <Eigen/Eigenvalues>

#include <functional>
#include <optional>

namespace envavg {

struct Energies {
  double E0 = 0, E1 = 0, E2 = 0;
  double A0() const { return E0 - E1; }
  double A1() const { return E1 - E2; }
};

inline Energies energies(const Averager& a, const Field& u) {
  if (u.rows() != a.size()) throw Error("field and measure differ in length");
  const Vec kappa = a.masses().cwiseProduct(a.strength());
  Field av = a.average(u);
  Energies e;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    e.E0 += kappa(i) * u.row(i).squaredNorm();
    e.E1 += kappa(i) * u.row(i).dot(av.row(i));
    e.E2 += kappa(i) * av.row(i).squaredNorm();
  }
  return e;
}

inline Energies energies(const Model& M, const Measure& rho, const Field& u) { return energies(Averager(M, rho), u); }
inline Energies energies(const Model& M, const Measure& rho, const Vec& u) { return energies(M, rho, Field(u)); }

enum class GapFlavor { numerical_range, variational_lambda };

inline double spectral_gap(const Model& M, const Measure& rho, GapFlavor flavor) {
  FiniteModel fm = finite_model_of(M, rho);
  if (flavor == GapFlavor::numerical_range) return spectral_gap_finite(fm, GapSubspace::zero_momentum, rho.weights());
  return variational_lambda(fm, rho.weights());
}

// Zero-momentum field attaining the numerical range sup of (u,<u>)_kappa / (u,u)_kappa.
struct WorstField {
  double eps = 0;
  Vec u;
};

inline WorstField worst_field(const FiniteModel& fm, const Vec& m) {
  Mat B = complement_basis(m);
  if (B.cols() == 0) return {1.0, Vec::Zero(m.size())};
  Mat KA = fm.kappa.asDiagonal() * fm.A;
  Mat P = B.transpose() * sym(KA) * B;
  Mat G = B.transpose() * fm.kappa.asDiagonal() * B;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(sym(P), sym(G));
  Eigen::Index top = es.eigenvalues().size() - 1;
  Vec u = B * es.eigenvectors().col(top);
  u /= std::sqrt(fm.kappa.dot(u.cwiseAbs2()));
  return {1.0 - es.eigenvalues()(top), u};
}

// ---- random densities ------------------------------------------------------------------

// rho proportional to exp(amp * sum_k (a_k cos 2 pi k x/L + b_k sin 2 pi k x/L) / k), k = 1..modes.
inline Measure random_grid_density(std::mt19937_64& rng, const Domain& d, int n, double amp, int modes = 6) {
  if (d.dim != 1 || !d.is_torus()) throw Error("random_grid_density: 1D torus only");
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(modes), b(modes);
  for (int k = 0; k < modes; ++k) {
    a[k] = g(rng) / (k + 1);
    b[k] = g(rng) / (k + 1);
  }
  const double L = d.period[0];
  return Measure::grid_density(d, n, [&](double x, double) {
    double s = 0;
    for (int k = 0; k < modes; ++k) s += a[k] * std::cos(2 * M_PI * (k + 1) * x / L) + b[k] * std::sin(2 * M_PI * (k + 1) * x / L);
    return std::exp(amp * s);
  });
}

// ---- low-energy bounds -----------------------------------------------------------------

enum class BoundLaw { overmollified, cs_bochner, segregation, beta_near_uniform };

inline const char* law_name(BoundLaw l) {
  switch (l) {
    case BoundLaw::overmollified: return "overmollified: c * thickness";
    case BoundLaw::cs_bochner: return "cs_bochner: c * thickness^3";
    case BoundLaw::segregation: return "segregation: c * thickness^(2L)";
    case BoundLaw::beta_near_uniform: return "beta: c on near-uniform densities";
  }
  return "";
}

struct BoundShape {
  BoundLaw law;
  double radius = 0;  // thickness radius
  double power = 1;
};

inline BoundShape bound_shape(const Model& M) {
  switch (M.kind()) {
    case ModelKind::overmollified: {
      double r0 = M.kernel().locality_radius();
      if (!std::isfinite(r0)) throw Error("low-energy method inapplicable: kernel has no locality radius");
      return {BoundLaw::overmollified, 0.5 * r0, 1.0};
    }
    case ModelKind::cucker_smale: {
      const Kernel& k = M.kernel();
      if (!k.is_bochner()) throw Error("low-energy method inapplicable: cucker_smale kernel is not of the form psi*psi");
      return {BoundLaw::cs_bochner, 0.5 * k.psi()->locality_radius(), 3.0};
    }
    case ModelKind::segregation: {
      const auto& s = M.seg();
      const Eigen::Index L = s.centers.rows();
      if (s.centers.cols() != 1) throw Error("low-energy method inapplicable: segregation bound is 1D only");
      // adjacent bumps of radius w with centre spacing D share a ball of radius (2w - D)/4 around the midpoint
      double D = std::numeric_limits<double>::infinity();
      for (Eigen::Index l = 0; l < L; ++l)
        for (Eigen::Index m = l + 1; m < L; ++m) D = std::min(D, std::abs(s.centers(l, 0) - s.centers(m, 0)));
      if (L == 1) D = 0;
      double r = 0.25 * (2 * s.width - D);
      if (!(r > 0)) throw Error("low-energy method inapplicable: segregation bumps do not overlap");
      return {BoundLaw::segregation, r, 2.0 * static_cast<double>(L)};
    }
    case ModelKind::beta:
      if (!M.kernel().is_bochner()) throw Error("low-energy method inapplicable: beta kernel is not of the form psi*psi");
      return {BoundLaw::beta_near_uniform, 0, 0};
    default:
      throw Error("low-energy method inapplicable to the " + M.name() + " model");
  }
}

// L1 distance of a 1D torus grid density from the uniform one.
inline double uniform_l1_deviation(const Measure& rho) {
  if (!rho.is_grid()) throw Error("near-uniform check needs a grid measure");
  const double L = rho.domain().period[0];
  return (rho.density().array() - 1.0 / L).abs().sum() * rho.spacing();
}

// Near-uniform radius for the beta law, and the fraction of the uniform gap it guarantees.
inline constexpr double beta_uniform_delta = 0.2;
inline constexpr double beta_gap_fraction = 0.5;

struct GapReport {
  std::string model;
  std::string law;
  double E0 = 0, E1 = 0, E2 = 0, A0 = 0, A1 = 0;  // on the worst zero-momentum field
  double eps_measured = 0;
  double eps_bound = 0;
  double lambda_measured = 0;
  double thickness = 0;
  double constant = 0;
  bool holds = false;
};

// Bound value before the constant: thickness^power, or 1 for the beta law.
inline double bound_base(const BoundShape& b, const Measure& rho) {
  if (b.law == BoundLaw::beta_near_uniform) {
    if (uniform_l1_deviation(rho) > beta_uniform_delta)
      throw Error("low-energy method inapplicable: density is not near uniform");
    return 1.0;
  }
  return std::pow(ball_thickness(rho, b.radius), b.power);
}

// Constant so that eps = c * base on the uniform grid with n cells.
inline double calibrate_gap_constant(const Model& M, const Domain& d, int n) {
  BoundShape b = bound_shape(M);
  Measure u = Measure::uniform_grid(d, n);
  double eps = spectral_gap(M, u, GapFlavor::numerical_range);
  if (b.law == BoundLaw::beta_near_uniform) eps *= beta_gap_fraction;
  return eps / bound_base(b, u);
}

inline GapReport low_energy_bounds(const Model& M, const Measure& rho, double constant) {
  BoundShape b = bound_shape(M);
  if (!rho.is_grid()) throw Error("low_energy_bounds needs a grid measure");
  GapReport r;
  r.model = M.name();
  r.law = law_name(b.law);
  r.constant = constant;
  Averager a(M, rho);
  FiniteModel fm = finite_model_of(a);
  WorstField w = worst_field(fm, rho.weights());
  Energies e = energies(a, Field(w.u));
  r.E0 = e.E0;
  r.E1 = e.E1;
  r.E2 = e.E2;
  r.A0 = e.A0();
  r.A1 = e.A1();
  r.eps_measured = w.eps;
  r.lambda_measured = variational_lambda(fm, rho.weights());
  r.thickness = b.law == BoundLaw::beta_near_uniform ? 0.0 : ball_thickness(rho, b.radius);
  r.eps_bound = constant * bound_base(b, rho);
  r.holds = r.eps_measured >= r.eps_bound;
  return r;
}

inline GapReport low_energy_bounds(const Model& M, const Measure& rho) {
  return low_energy_bounds(M, rho, calibrate_gap_constant(M, rho.domain(), rho.cells()));
}

// ---- CS flatness gap ---------------------------------------------------------------------

struct FlatnessGap {
  bool applicable = false;
  double eps = 0;
  double c0 = 0;     // sup over non-zero modes of |phi^(k)|, phi of unit mass on the grid
  double ratio = 0;  // sup rho / rho_phi
};

inline FlatnessGap cs_flatness_gap(const Measure& rho, const Kernel& phi) {
  if (!rho.is_grid() || rho.dim() != 1 || !rho.domain().is_torus()) throw Error("flatness gap needs a 1D torus grid");
  const int n = rho.cells();
  const double h = rho.spacing();
  Vec k(n);
  for (int j = 0; j < n; ++j) k(j) = phi(rho.domain().dist(Eigen::Matrix<double, 1, 1>(0.0), Eigen::Matrix<double, 1, 1>(j * h)));
  const double mass = k.sum();
  if (!(mass > 0)) throw Error("flatness gap: kernel vanishes on the grid");
  FlatnessGap f;
  for (int q = 1; q < n; ++q) {
    double re = 0, im = 0;
    for (int j = 0; j < n; ++j) {
      re += k(j) * std::cos(2 * M_PI * q * j / n);
      im -= k(j) * std::sin(2 * M_PI * q * j / n);
    }
    f.c0 = std::max(f.c0, std::hypot(re, im) / mass);
  }
  const Vec& m = rho.weights();
  for (int i = 0; i < n; ++i) {
    double rp = 0;
    for (int j = 0; j < n; ++j) rp += k((j - i + n) % n) * m(j);
    rp /= mass;
    if (m(i) > 0) f.ratio = std::max(f.ratio, m(i) / rp);
  }
  f.eps = 1.0 - f.c0 * f.ratio;
  f.applicable = f.eps > 0;
  return f;
}

// ---- MT small-variation condition ----------------------------------------------------------

struct MtGap {
  bool holds = false;
  double rho_minus = 0, rho_plus = 0;
  double lambda_predicted = 0;  // (c/2) rho_-^2 / rho_+
  double lambda_measured = 0;
};

// c is the kinematic constant of lambda >= c rho_-^2 / rho_+ for the CS model on the same kernel
// (normalised to unit mass, see calibrate_cs_lambda).
inline MtGap mt_gap_condition(const Measure& rho, const Kernel& phi, double c) {
  if (!rho.is_grid()) throw Error("mt_gap_condition needs a grid measure");
  Vec dens = rho.density();
  MtGap g;
  g.rho_minus = dens.minCoeff();
  g.rho_plus = dens.maxCoeff();
  if (!(g.rho_minus > 0)) return g;
  g.holds = g.rho_plus - g.rho_minus <= c * std::pow(g.rho_minus, 3) / g.rho_plus;
  g.lambda_predicted = 0.5 * c * g.rho_minus * g.rho_minus / g.rho_plus;
  g.lambda_measured = spectral_gap(Model::motsch_tadmor(phi), rho, GapFlavor::variational_lambda);
  return g;
}

// min over samples of lambda_CS * rho_+ / rho_-^2 on near-uniform random densities, phi of unit mass.
inline double calibrate_cs_lambda(const Kernel& phi_in, const Domain& d, int n, int samples, std::uint64_t seed, double amp) {
  const Kernel phi = phi_in.is_mollifier() ? phi_in : phi_in.mollifier(d.dim);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    std::mt19937_64 rng = job_rng(seed, static_cast<std::uint64_t>(s));
    Measure rho = random_grid_density(rng, d, n, amp);
    Vec dens = rho.density();
    double lam = spectral_gap(Model::cucker_smale(phi), rho, GapFlavor::variational_lambda);
    best = std::min(best, lam * dens.maxCoeff() / (dens.minCoeff() * dens.minCoeff()));
  }
  return best;
}

// ---- identities ------------------------------------------------------------------------------

// A1 for the overmollified model by direct quadrature of 1/2 int int rho_phiphi(z,z') |u_F(z) - u_F(z')|^2
// on an independent periodic lattice of `nodes` points.
inline double overmollified_alignment_quadrature(const Kernel& phi, const Measure& rho, const Vec& u, int nodes) {
  const Domain& d = rho.domain();
  if (d.dim != 1 || !d.is_torus()) throw Error("alignment quadrature: 1D torus only");
  const double L = d.period[0], w = L / nodes;
  const Eigen::Index N = rho.size();
  Mat K(N, nodes);
  for (Eigen::Index i = 0; i < N; ++i)
    for (int q = 0; q < nodes; ++q) K(i, q) = phi(d.dist(rho.point(i), Eigen::Matrix<double, 1, 1>((q + 0.25) * w)));
  // unit mass on this lattice
  double tot = 0;
  for (int q = 0; q < nodes; ++q) tot += phi(d.dist(Eigen::Matrix<double, 1, 1>(0.0), Eigen::Matrix<double, 1, 1>(q * w)));
  K /= tot * w;
  const Vec& m = rho.weights();
  Vec rp = K.transpose() * m;
  Vec uF = (K.transpose() * m.cwiseProduct(u)).cwiseQuotient(rp);
  Mat R = K.transpose() * m.asDiagonal() * K;  // rho_phiphi(z, z')
  double s = 0;
  for (int a = 0; a < nodes; ++a)
    for (int b = 0; b < nodes; ++b) s += R(a, b) * (uF(a) - uF(b)) * (uF(a) - uF(b));
  return 0.5 * s * w * w;
}

// <u> for CS with phi = psi*psi computed as two nested Favre filtrations with psi, the intermediate
// field living on a lattice of spacing h.
inline Vec nested_favre_average(const Kernel& psi, const Measure& rho, const Vec& u, double h) {
  const Domain& d = rho.domain();
  if (d.dim != 1) throw Error("nested Favre average: 1D only");
  std::vector<double> z;
  if (d.is_torus()) {
    const int n = static_cast<int>(std::lround(d.period[0] / h));
    for (int q = 0; q < n; ++q) z.push_back(q * d.period[0] / n);
    h = d.period[0] / n;
  } else {
    const double pad = psi.compact() ? psi.support() : 12.0 * psi.locality_radius();
    const double lo = rho.points().col(0).minCoeff() - pad, hi = rho.points().col(0).maxCoeff() + pad;
    for (double x = lo; x <= hi; x += h) z.push_back(x);
  }
  const Eigen::Index N = rho.size(), Q = static_cast<Eigen::Index>(z.size());
  Mat K(N, Q);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index q = 0; q < Q; ++q) K(i, q) = psi(d.dist(rho.point(i), Eigen::Matrix<double, 1, 1>(z[q])));
  const Vec& m = rho.weights();
  Vec varrho = K.transpose() * m;                                    // rho_psi
  Vec v = (K.transpose() * m.cwiseProduct(u)).cwiseQuotient(varrho);  // (u rho)_psi / rho_psi
  Vec num = K * v.cwiseProduct(varrho) * h;                          // (v varrho)_psi at the atoms
  Vec den = K * varrho * h;                                          // varrho_psi
  return num.cwiseQuotient(den);
}

}  // namespace envavg

namespace envavg::reference {

// Reference configuration for the frozen gap constants: unit torus, 256-cell grids.
inline constexpr int cells = 256;
inline constexpr int lambda_samples = 100;
inline constexpr std::uint64_t lambda_seed = 2024;
inline constexpr double lambda_amp = 0.1;

inline Domain domain() { return Domain::torus(1.0); }
inline Kernel psi() { return Kernel::bump(0.1); }
inline Model overmollified() { return Model::overmollified(Kernel::bump(0.2), 512); }
inline Model cs_bochner() { return Model::cucker_smale(Kernel::bochner(psi())); }
inline Model segregation() { return Model::segregation_uniform(4, 1.0, 1.0); }
inline Model beta_half() { return Model::beta(Kernel::bochner(psi()), 0.5); }

}  // namespace envavg::reference
