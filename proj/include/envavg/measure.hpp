#pragma once

#include "core.hpp"
#include "kernel.hpp"

#include <functional>
#include <initializer_list>
#include <optional>

namespace envavg {

// Values aligned with a measure's carrier points: N rows, one column per component.
using Field = Mat;

inline Field as_field(const Vec& v) { return Field(v); }

class Measure {
 public:
  enum class Rep { atomic, grid };

  static constexpr double mass_tol = 1e-12;

  static Measure atomic(const Domain& d, Mat points, Vec weights, bool normalize = false) {
    if (points.cols() != d.dim) throw Error("points must have one column per domain axis");
    if (points.rows() != weights.size()) throw Error("points and weights differ in length");
    if (points.rows() == 0) throw Error("measure needs at least one atom");
    Measure m;
    m.domain_ = d;
    m.rep_ = Rep::atomic;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
      for (int a = 0; a < d.dim; ++a) points(i, a) = d.wrap(a, points(i, a));
    m.points_ = std::move(points);
    m.weights_ = std::move(weights);
    m.check_weights(normalize);
    return m;
  }

  static Measure atomic(const Domain& d, const std::vector<double>& x, const std::vector<double>& w,
                        bool normalize = false) {
    if (d.dim != 1) throw Error("scalar positions need a 1D domain");
    Mat p(x.size(), 1);
    Vec ww(w.size());
    for (size_t i = 0; i < x.size(); ++i) p(i, 0) = x[i];
    for (size_t i = 0; i < w.size(); ++i) ww(i) = w[i];
    return atomic(d, std::move(p), std::move(ww), normalize);
  }

  static Measure atomic(const Domain& d, std::initializer_list<double> x, std::initializer_list<double> w,
                        bool normalize = false) {
    return atomic(d, std::vector<double>(x), std::vector<double>(w), normalize);
  }

  static Measure uniform_atoms(const Domain& d, Mat points) {
    Vec w = Vec::Constant(points.rows(), 1.0 / static_cast<double>(points.rows()));
    return atomic(d, std::move(points), std::move(w));
  }

  // Grid measure on a torus: n cells per axis, masses in row-major (axis 0 fastest for 2D is not used;
  // index = i0 + n*i1).
  static Measure grid(const Domain& d, int n, Vec masses, bool normalize = false) {
    if (!d.is_torus()) throw Error("grid measures on the line need an explicit origin and spacing");
    return grid_box(d, n, d.period[0] / n, {0.0, 0.0}, std::move(masses), normalize);
  }

  // Grid of n cells per axis with spacing h starting at origin (cell i covers [o+i h, o+(i+1)h)).
  static Measure grid_box(const Domain& d, int n, double h, std::array<double, 2> origin, Vec masses,
                          bool normalize = false) {
    if (n < 1 || !(h > 0)) throw Error("grid needs positive cell count and spacing");
    const Eigen::Index total = d.dim == 1 ? n : static_cast<Eigen::Index>(n) * n;
    if (masses.size() != total) throw Error("grid mass vector has wrong length");
    Measure m;
    m.domain_ = d;
    m.rep_ = Rep::grid;
    m.n_ = n;
    m.h_ = h;
    m.origin_ = origin;
    m.points_.resize(total, d.dim);
    for (Eigen::Index k = 0; k < total; ++k) {
      Eigen::Index i0 = k % n, i1 = k / n;
      m.points_(k, 0) = origin[0] + (i0 + 0.5) * h;
      if (d.dim == 2) m.points_(k, 1) = origin[1] + (i1 + 0.5) * h;
    }
    m.weights_ = std::move(masses);
    m.check_weights(normalize);
    return m;
  }

  // Midpoint-sampled density on a torus grid, renormalised to unit mass.
  static Measure grid_density(const Domain& d, int n, const std::function<double(double, double)>& density) {
    if (!d.is_torus()) throw Error("grid_density needs a torus domain");
    const double h = d.period[0] / n;
    const Eigen::Index total = d.dim == 1 ? n : static_cast<Eigen::Index>(n) * n;
    Vec w(total);
    for (Eigen::Index k = 0; k < total; ++k) {
      double x0 = (k % n + 0.5) * h, x1 = d.dim == 2 ? (k / n + 0.5) * h : 0.0;
      double v = density(x0, x1);
      if (!(v >= 0)) throw Error("density must be non-negative");
      w(k) = v * std::pow(h, d.dim);
    }
    return grid(d, n, std::move(w), true);
  }

  static Measure uniform_grid(const Domain& d, int n) {
    return grid_density(d, n, [](double, double) { return 1.0; });
  }

  // Default resolution: 256 cells per unit length.
  static int default_cells(const Domain& d) {
    return std::max(8, static_cast<int>(std::lround(256.0 * d.period[0])));
  }

  const Domain& domain() const { return domain_; }
  Rep rep() const { return rep_; }
  bool is_grid() const { return rep_ == Rep::grid; }
  int dim() const { return domain_.dim; }
  Eigen::Index size() const { return weights_.size(); }
  const Mat& points() const { return points_; }
  const Vec& weights() const { return weights_; }
  auto point(Eigen::Index i) const { return points_.row(i); }
  double mass(Eigen::Index i) const { return weights_(i); }

  int cells() const { return n_; }
  double spacing() const { return h_; }
  std::array<double, 2> origin() const { return origin_; }
  double cell_volume() const { return std::pow(h_, domain_.dim); }

  // Grid density values (mass / cell volume).
  Vec density() const {
    if (!is_grid()) throw Error("density() is only defined for grid measures");
    return weights_ / cell_volume();
  }

  // Same carrier, new masses (renormalised).
  Measure with_weights(Vec w, bool normalize = true) const {
    Measure m = *this;
    m.weights_ = std::move(w);
    m.check_weights(normalize);
    return m;
  }

  // Shift every atom by h (component-wise), wrapping on tori.
  Measure translated(const Eigen::RowVectorXd& h) const {
    Measure m = *this;
    for (Eigen::Index i = 0; i < size(); ++i)
      for (int a = 0; a < dim(); ++a) m.points_(i, a) = domain_.wrap(a, points_(i, a) + h(a));
    if (is_grid())
      for (int a = 0; a < dim(); ++a) m.origin_[a] += h(a);
    return m;
  }

  double dist(Eigen::Index i, Eigen::Index j) const { return domain_.dist(points_.row(i), points_.row(j)); }

 private:
  void check_weights(bool normalize) {
    if ((weights_.array() < 0).any()) throw Error("measure weights must be non-negative");
    if (!weights_.allFinite()) throw Error("measure weights must be finite");
    double s = weights_.sum();
    if (normalize) {
      if (!(s > 0)) throw Error("measure has zero total mass");
      weights_ /= s;
    } else if (std::abs(s - 1.0) > mass_tol) {
      throw Error("total mass must be 1 (got " + std::to_string(s) + ")");
    }
  }

  Domain domain_;
  Rep rep_ = Rep::atomic;
  Mat points_;
  Vec weights_;
  int n_ = 0;
  double h_ = 0;
  std::array<double, 2> origin_{0.0, 0.0};
};

// (rho * k)(x)
template <class P>
double convolve(const Measure& rho, const Kernel& k, const P& x) {
  double s = 0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    double m = rho.mass(i);
    if (m == 0) continue;
    s += m * k(rho.domain().dist(x, rho.point(i)));
  }
  return s;
}

inline double convolve(const Measure& rho, const Kernel& k, double x) {
  Eigen::Matrix<double, 1, 1> p(x);
  return convolve(rho, k, p);
}

// Smooth cutoff: 1 on [0, 1/2], 0 on [1, inf), C-infinity step in between.
namespace cutoff {

inline double smooth_step(double y) {
  if (y <= 0) return 0.0;
  if (y >= 1) return 1.0;
  double a = std::exp(-1.0 / y), b = std::exp(-1.0 / (1.0 - y));
  return a / (a + b);
}

inline double chi(double t) {
  t = std::abs(t);
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  return smooth_step(2.0 - 2.0 * t);
}

// Integral of chi(|x|/r) over R^dim: 1.5 r in 1D (smooth_step(y) + smooth_step(1-y) = 1).
inline double integral(double r, int dim) {
  if (dim == 1) return 1.5 * r;
  auto f = [](double s) { return chi(s) * s; };
  double core = 0.125;  // int_0^{1/2} s ds
  double tail = 0;
  for (int p = 0; p < 32; ++p)
    tail += boost::math::quadrature::gauss<double, 30>::integrate(f, 0.5 + p / 64.0, 0.5 + (p + 1) / 64.0);
  return 2 * M_PI * (core + tail) * r * r;
}

}  // namespace cutoff

inline double thickness_at(const Measure& rho, double r, const Eigen::RowVectorXd& x) {
  double s = 0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    double m = rho.mass(i);
    if (m == 0) continue;
    s += m * cutoff::chi(rho.domain().dist(x, rho.point(i)) / r);
  }
  return s;
}

// inf over the rows of S of (rho * chi_r).
inline double ball_thickness(const Measure& rho, double r, const Mat& S) {
  if (!(r > 0)) throw Error("ball_thickness: r must be positive");
  if (S.rows() == 0) throw Error("empty evaluation set");
  if (S.cols() != rho.dim()) throw Error("ball_thickness: evaluation points have wrong dimension");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < S.rows(); ++j) best = std::min(best, thickness_at(rho, r, S.row(j)));
  return std::min(1.0, std::max(0.0, best));
}

// Evaluation set "domain": a uniform lattice over a torus, or over the support hull on the line.
inline Mat domain_sample(const Measure& rho, double r) {
  const Domain& d = rho.domain();
  std::array<double, 2> lo{0, 0}, len{0, 0};
  for (int a = 0; a < d.dim; ++a) {
    if (d.periodic(a)) {
      lo[a] = 0;
      len[a] = d.period[a];
    } else {
      lo[a] = rho.points().col(a).minCoeff();
      len[a] = rho.points().col(a).maxCoeff() - lo[a];
    }
  }
  std::array<int, 2> n{1, 1};
  for (int a = 0; a < d.dim; ++a)
    n[a] = len[a] > 0 ? std::max(2, static_cast<int>(std::ceil(std::max(256.0 * len[a], 8.0 * len[a] / r)))) : 1;
  if (d.dim == 2) {
    n[0] = std::min(n[0], 512);
    n[1] = std::min(n[1], 512);
  }
  Mat S(static_cast<Eigen::Index>(n[0]) * n[1], d.dim);
  for (int i1 = 0; i1 < n[1]; ++i1)
    for (int i0 = 0; i0 < n[0]; ++i0) {
      Eigen::Index k = i0 + static_cast<Eigen::Index>(n[0]) * i1;
      auto coord = [&](int a, int i) {
        if (d.periodic(a)) return lo[a] + (i + 0.5) * len[a] / n[a];
        return n[a] == 1 ? lo[a] : lo[a] + len[a] * i / (n[a] - 1);
      };
      S(k, 0) = coord(0, i0);
      if (d.dim == 2) S(k, 1) = coord(1, i1);
    }
  return S;
}

inline double ball_thickness(const Measure& rho, double r) { return ball_thickness(rho, r, domain_sample(rho, r)); }

// Quadrature lattice for auxiliary integrals over the domain: nodes anchored at `anchor` so that
// translating the measure translates the lattice.  Torus: n nodes per axis.  Line: nodes covering
// the support widened by `pad`, spacing `h_line`.
struct QuadLattice {
  Mat nodes;
  double weight = 0;  // node volume
};

inline QuadLattice make_lattice(const Measure& rho, int n_torus, double pad, double h_line) {
  const Domain& d = rho.domain();
  QuadLattice q;
  std::array<int, 2> n{1, 1};
  std::array<double, 2> start{0, 0}, step{0, 0};
  for (int a = 0; a < d.dim; ++a) {
    double anchor = rho.is_grid() ? rho.origin()[a] : rho.point(0)(a);
    if (d.periodic(a)) {
      n[a] = n_torus;
      step[a] = d.period[a] / n_torus;
      start[a] = anchor;
    } else {
      double lo = rho.points().col(a).minCoeff() - pad, hi = rho.points().col(a).maxCoeff() + pad;
      step[a] = h_line;
      // align to anchor so translation moves the lattice rigidly
      double k0 = std::floor((lo - anchor) / h_line);
      start[a] = anchor + k0 * h_line;
      n[a] = static_cast<int>(std::ceil((hi - start[a]) / h_line)) + 1;
    }
  }
  q.nodes.resize(static_cast<Eigen::Index>(n[0]) * n[1], d.dim);
  for (int i1 = 0; i1 < n[1]; ++i1)
    for (int i0 = 0; i0 < n[0]; ++i0) {
      Eigen::Index k = i0 + static_cast<Eigen::Index>(n[0]) * i1;
      q.nodes(k, 0) = d.wrap(0, start[0] + i0 * step[0]);
      if (d.dim == 2) q.nodes(k, 1) = d.wrap(1, start[1] + i1 * step[1]);
    }
  q.weight = step[0] * (d.dim == 2 ? step[1] : 1.0);
  return q;
}

// u_delta = ((u rho)_psi / rho_psi)_psi with psi a Gaussian of width delta; the outer convolution
// is normalised on the quadrature lattice so constants and the maximum principle hold exactly.
inline Field mollified_velocity(const Field& u, const Measure& rho, double delta) {
  if (!(delta > 0)) throw Error("mollified_velocity: delta must be positive");
  if (u.rows() != rho.size()) throw Error("field and measure differ in length");
  const Domain& d = rho.domain();
  const double cut = 8.0 * delta;
  int n_torus = 0;
  if (d.is_torus()) {
    n_torus = std::max(512, static_cast<int>(std::ceil(8.0 * d.period[0] / delta)));
    if (d.dim == 2) n_torus = std::min(n_torus, 256);
  }
  QuadLattice q = make_lattice(rho, n_torus, cut, delta / 8.0);
  auto psi = [&](double r) { return r >= cut ? 0.0 : std::exp(-0.5 * r * r / (delta * delta)); };
  const Eigen::Index N = rho.size(), Q = q.nodes.rows();
  Mat W(N, Q);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index k = 0; k < Q; ++k) W(i, k) = psi(d.dist(rho.point(i), q.nodes.row(k)));
  Vec rp = W.transpose() * rho.weights();
  Mat F = W.transpose() * (rho.weights().asDiagonal() * u);
  Vec active = Vec::Zero(Q);
  for (Eigen::Index k = 0; k < Q; ++k) {
    if (rp(k) > 0) {
      F.row(k) /= rp(k);
      active(k) = 1.0;
    } else {
      F.row(k).setZero();
    }
  }
  Mat out = W * F;
  Vec norm = W * active;
  for (Eigen::Index i = 0; i < N; ++i) {
    if (norm(i) > 0) out.row(i) /= norm(i);
    else out.row(i) = u.row(i);
  }
  return out;
}

}  // namespace envavg
