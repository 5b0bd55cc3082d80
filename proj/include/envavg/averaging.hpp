#pragma once

#include "model.hpp"

#include <memory>

namespace envavg {

enum class VacuumPolicy { error, zero };

// Position-only data of a model evaluation; reusable while the carrier points stay fixed.
struct Geometry {
  Mat pair;              // kernel phi(x_i - x_j) (Favre family)
  Mat aux;               // phi(x_i - z_q) (overmollified) or g_l(x_i) (segregation)
  double node_weight = 0;
  std::vector<int> block;  // rough partition block of each carrier point
  int blocks = 0;
};

namespace detail {

inline Mat pair_kernel(const Kernel& k, const Measure& rho) {
  const Eigen::Index N = rho.size();
  const Domain& d = rho.domain();
  Mat P(N, N);
  if (rho.is_grid() && d.dim == 1 && d.periodic(0)) {
    // circulant: depends only on the index offset
    const int n = rho.cells();
    Vec row(n);
    for (int k2 = 0; k2 < n; ++k2) row(k2) = k(d.dist(rho.point(0), rho.point(k2)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) P(i, j) = row((j - i + n) % n);
    return P;
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    P(i, i) = k(0.0);
    for (Eigen::Index j = i + 1; j < N; ++j) P(i, j) = P(j, i) = k(rho.dist(i, j));
  }
  return P;
}

inline Mat segregation_values(const SegregationSpec& s, const Domain& d, const Mat& pts) {
  const Eigen::Index N = pts.rows(), L = s.centers.rows();
  if (s.centers.cols() != d.dim) throw Error("segregation centres have wrong dimension");
  Kernel b = Kernel::bump(s.width);
  Mat G(N, L);
  for (Eigen::Index i = 0; i < N; ++i) {
    double tot = 0;
    for (Eigen::Index l = 0; l < L; ++l) {
      G(i, l) = b(d.dist(pts.row(i), s.centers.row(l)));
      tot += G(i, l);
    }
    if (!(tot > 0)) throw Error("segregation bumps do not cover the point " + std::to_string(pts(i, 0)));
    G.row(i) /= tot;
  }
  return G;
}

inline double smooth_indicator_step(double t, double eta) { return cutoff::smooth_step((t + eta) / (2 * eta)); }

// Mollified indicator of the region O(x,y) evaluated at z.
template <class P>
double region_indicator(const Domain& d, const P& x, const P& y, const P& z, const TopologicalSpec& t) {
  if (d.dim == 1) {
    double ell = d.disp(0, x[0], y[0]);
    double a = x[0];
    if (ell < 0) {
      a = y[0];
      ell = -ell;
    }
    double delta = d.disp(0, a, z[0]);
    return smooth_indicator_step(delta, t.eta) * smooth_indicator_step(ell - delta, t.eta);
  }
  double sxy = d.dist(x, y), s = d.dist(z, x) + d.dist(z, y);
  return smooth_indicator_step(t.ecc * sxy - s, t.eta);
}

}  // namespace detail

inline Geometry make_geometry(const Model& M, const Measure& rho) {
  Geometry g;
  switch (M.kind()) {
    case ModelKind::cucker_smale:
    case ModelKind::motsch_tadmor:
    case ModelKind::beta:
      g.pair = detail::pair_kernel(M.kernel(), rho);
      break;
    case ModelKind::overmollified: {
      // unit-mass kernel so that the strength is one
      const Kernel k = M.kernel().is_mollifier() ? M.kernel() : M.kernel().mollifier(rho.dim());
      double pad = k.compact() ? k.support() : 10.0 * k.locality_radius();
      double h_line = (k.compact() ? k.support() : k.locality_radius()) / 64.0;
      int n = M.quad_nodes();
      if (rho.dim() == 2) n = std::max(8, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)) * 4)));
      QuadLattice q = make_lattice(rho, n, pad, h_line);
      const Eigen::Index N = rho.size(), Q = q.nodes.rows();
      g.aux.resize(N, Q);
      Kernel kq = k;
      if (rho.domain().is_torus()) {
        // unit mass for the periodic quadrature itself
        double tot = 0;
        for (Eigen::Index j = 0; j < Q; ++j) tot += k(rho.domain().dist(q.nodes.row(0), q.nodes.row(j)));
        kq = k.scaled(1.0 / (tot * q.weight));
      }
      for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < Q; ++j) g.aux(i, j) = kq(rho.domain().dist(rho.point(i), q.nodes.row(j)));
      g.node_weight = q.weight;
      break;
    }
    case ModelKind::segregation:
      g.aux = detail::segregation_values(M.seg(), rho.domain(), rho.points());
      break;
    case ModelKind::rough_partition: {
      if (!rho.is_grid()) throw Error("rough partition model requires a grid measure");
      const Domain& d = rho.domain();
      if (d.dim != 1 || !d.periodic(0)) throw Error("rough partition model requires a 1D torus grid");
      const auto& cuts = M.rough().cuts;
      const int K = static_cast<int>(cuts.size());
      g.blocks = K;
      g.block.resize(rho.size());
      for (Eigen::Index i = 0; i < rho.size(); ++i) {
        double x = rho.point(i)(0);
        int b = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin()) - 1;
        if (b < 0) b = K - 1;  // wraps into the last block
        g.block[i] = b;
      }
      break;
    }
    default:
      break;
  }
  return g;
}

// A model bound to a measure: strength s_rho and the weighted average s<u> at the carrier points.
class Averager {
 public:
  Averager(const Model& M, const Measure& rho, VacuumPolicy vp = VacuumPolicy::error)
      : Averager(M, rho, std::make_shared<const Geometry>(make_geometry(M, rho)), vp) {}

  Averager(const Model& M, const Measure& rho, std::shared_ptr<const Geometry> g, VacuumPolicy vp = VacuumPolicy::error)
      : kind_(M.kind()), m_(rho.weights()), geo_(std::move(g)) {
    const Eigen::Index N = rho.size();
    switch (kind_) {
      case ModelKind::global:
      case ModelKind::identity:
        s_ = Vec::Ones(N);
        break;
      case ModelKind::cucker_smale:
      case ModelKind::motsch_tadmor:
      case ModelKind::beta: {
        Vec rp = geo_->pair * m_;
        double b = kind_ == ModelKind::cucker_smale ? 1.0 : kind_ == ModelKind::motsch_tadmor ? 0.0 : M.beta_exponent();
        s_.resize(N);
        scale_.resize(N);
        for (Eigen::Index i = 0; i < N; ++i) {
          if (rp(i) > 0) {
            s_(i) = b == 1.0 ? rp(i) : std::pow(rp(i), b);
            scale_(i) = b == 1.0 ? 1.0 : std::pow(rp(i), b - 1.0);
          } else if (b < 1.0 && vp == VacuumPolicy::error) {
            throw Error("vacuum evaluation");
          } else {
            s_(i) = 0;
            scale_(i) = 0;
          }
        }
        break;
      }
      case ModelKind::overmollified: {
        Vec rz = geo_->aux.transpose() * m_;
        scale_.resize(rz.size());
        Vec active(rz.size());
        for (Eigen::Index q = 0; q < rz.size(); ++q) {
          scale_(q) = rz(q) > 0 ? geo_->node_weight / rz(q) : 0.0;
          active(q) = rz(q) > 0 ? geo_->node_weight : 0.0;
        }
        s_ = geo_->aux * active;
        break;
      }
      case ModelKind::segregation: {
        Vec mass = geo_->aux.transpose() * m_;
        scale_.resize(mass.size());
        Vec active(mass.size());
        for (Eigen::Index l = 0; l < mass.size(); ++l) {
          scale_(l) = mass(l) > 0 ? 1.0 / mass(l) : 0.0;
          active(l) = mass(l) > 0 ? 1.0 : 0.0;
        }
        s_ = geo_->aux * active;
        break;
      }
      case ModelKind::rough_partition: {
        scale_ = Vec::Zero(geo_->blocks);
        for (Eigen::Index i = 0; i < N; ++i) scale_(geo_->block[i]) += m_(i);
        for (int b = 0; b < geo_->blocks; ++b) {
          if (!(scale_(b) > 0)) throw Error("rough partition block " + std::to_string(b) + " has zero mass");
          scale_(b) = 1.0 / scale_(b);
        }
        s_ = Vec::Ones(N);
        break;
      }
      case ModelKind::topological: {
        topo_ = topological_kernel(M, rho);
        s_ = topo_ * m_;
        break;
      }
    }
  }

  Eigen::Index size() const { return m_.size(); }
  const Vec& strength() const { return s_; }
  const Vec& masses() const { return m_; }

  // s<u> at every carrier point.
  Field weighted(const Field& u) const {
    if (u.rows() != m_.size()) throw Error("field and measure differ in length");
    Field mu = m_.asDiagonal() * u;
    switch (kind_) {
      case ModelKind::global: {
        Eigen::RowVectorXd mean = mu.colwise().sum();
        return s_ * mean;
      }
      case ModelKind::identity:
        return u;
      case ModelKind::cucker_smale:
      case ModelKind::motsch_tadmor:
      case ModelKind::beta:
        return scale_.asDiagonal() * (geo_->pair * mu);
      case ModelKind::overmollified:
        return geo_->aux * (scale_.asDiagonal() * (geo_->aux.transpose() * mu));
      case ModelKind::segregation:
        return geo_->aux * (scale_.asDiagonal() * (geo_->aux.transpose() * mu));
      case ModelKind::rough_partition: {
        Mat sums = Mat::Zero(geo_->blocks, u.cols());
        for (Eigen::Index i = 0; i < u.rows(); ++i) sums.row(geo_->block[i]) += mu.row(i);
        Field out(u.rows(), u.cols());
        for (Eigen::Index i = 0; i < u.rows(); ++i) out.row(i) = sums.row(geo_->block[i]) * scale_(geo_->block[i]);
        return out;
      }
      case ModelKind::topological:
        return topo_ * mu;
    }
    return u;
  }

  // <u>; at points with zero strength the field itself is returned (no alignment there).
  Field average(const Field& u) const {
    Field w = weighted(u);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      if (s_(i) > 0) w.row(i) /= s_(i);
      else w.row(i) = u.row(i);
    }
    return w;
  }

  Vec average(const Vec& u) const { return average(Field(u)).col(0); }
  Vec weighted(const Vec& u) const { return weighted(Field(u)).col(0); }

  // phi_rho(x_i, x_j).
  Mat kernel_matrix() const {
    const Eigen::Index N = m_.size();
    switch (kind_) {
      case ModelKind::global:
        return Mat::Ones(N, N);
      case ModelKind::identity: {
        Mat K = Mat::Zero(N, N);
        for (Eigen::Index i = 0; i < N; ++i) K(i, i) = m_(i) > 0 ? 1.0 / m_(i) : 0.0;
        return K;
      }
      case ModelKind::cucker_smale:
      case ModelKind::motsch_tadmor:
      case ModelKind::beta:
        return scale_.asDiagonal() * geo_->pair;
      case ModelKind::overmollified:
      case ModelKind::segregation:
        return geo_->aux * scale_.asDiagonal() * geo_->aux.transpose();
      case ModelKind::rough_partition: {
        Mat K = Mat::Zero(N, N);
        for (Eigen::Index i = 0; i < N; ++i)
          for (Eigen::Index j = 0; j < N; ++j)
            if (geo_->block[i] == geo_->block[j]) K(i, j) = scale_(geo_->block[i]);
        return K;
      }
      case ModelKind::topological:
        return topo_;
    }
    return {};
  }

  // Finite reduction: kappa_i = m_i s_i, A_ij = m_j phi_rho(x_i,x_j) / s_i (identity row where s_i = 0).
  std::pair<Vec, Mat> finite_reduction() const {
    Mat K = kernel_matrix();
    const Eigen::Index N = m_.size();
    Vec kappa = m_.cwiseProduct(s_);
    Mat A(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
      if (s_(i) > 0) A.row(i) = K.row(i).cwiseProduct(m_.transpose()) / s_(i);
      else {
        A.row(i).setZero();
        A(i, i) = 1.0;
      }
    }
    return {kappa, A};
  }

 private:
  static Mat topological_kernel(const Model& M, const Measure& rho) {
    const Eigen::Index N = rho.size();
    const Domain& d = rho.domain();
    const auto& t = M.topo();
    const Kernel& psi = M.kernel();
    Mat K(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = i; j < N; ++j) {
        double dr = 0;
        for (Eigen::Index k = 0; k < N; ++k) {
          double mk = rho.mass(k);
          if (mk == 0) continue;
          dr += mk * detail::region_indicator(d, rho.point(i), rho.point(j), rho.point(k), t);
        }
        double v = psi(rho.dist(i, j)) / std::pow(t.eps + dr * dr, 0.5 * t.alpha);
        K(i, j) = K(j, i) = v;
      }
    return K;
  }

  ModelKind kind_;
  Vec m_;
  std::shared_ptr<const Geometry> geo_;
  Vec s_;
  Vec scale_;
  Mat topo_;
};

inline Vec strength(const Model& M, const Measure& rho) { return Averager(M, rho).strength(); }
inline Field average(const Model& M, const Measure& rho, const Field& u) { return Averager(M, rho).average(u); }

struct KernelMatrix {
  Mat phi;
  Vec strength;
};

inline KernelMatrix kernel_matrix(const Model& M, const Measure& rho) {
  if (rho.size() > 10000) throw Error("kernel_matrix: at most 10^4 atoms");
  Averager a(M, rho);
  return {a.kernel_matrix(), a.strength()};
}

}  // namespace envavg
