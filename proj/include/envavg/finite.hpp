#pragma once

#include "core.hpp"

#include <Eigen/Eigenvalues>

#include <optional>
#include <sstream>

namespace envavg {

// Model on N labelled points: strengths kappa and a right-stochastic averaging matrix A.
struct FiniteModel {
  Vec kappa;
  Mat A;

  static constexpr double stochastic_tol = 1e-12;

  FiniteModel() = default;
  FiniteModel(Vec k, Mat a) : kappa(std::move(k)), A(std::move(a)) { validate(); }

  Eigen::Index size() const { return kappa.size(); }
  Mat K() const { return kappa.asDiagonal(); }

  void validate() const {
    const Eigen::Index N = kappa.size();
    if (N == 0) throw Error("finite model needs at least one point");
    if (A.rows() != N || A.cols() != N) throw Error("A must be N x N with N = len(kappa)");
    if ((kappa.array() <= 0).any()) throw Error("kappa must be positive");
    if ((A.array() < -stochastic_tol).any()) throw Error("A must be non-negative");
    Vec rows = A.rowwise().sum();
    if ((rows.array() - 1.0).abs().maxCoeff() > stochastic_tol) throw Error("A must be right-stochastic (rows sum to 1)");
  }
};

namespace finite_tol {
constexpr double exact = 1e-10;
constexpr double ball = 1e-10;
}  // namespace finite_tol

inline Mat sym(const Mat& M) { return 0.5 * (M + M.transpose()); }

inline double conservation_residual(const FiniteModel& fm) {
  return (fm.A.transpose() * fm.kappa - fm.kappa).cwiseAbs().maxCoeff();
}

inline bool is_conservative(const FiniteModel& fm) { return conservation_residual(fm) < finite_tol::exact; }

inline double symmetry_residual(const FiniteModel& fm) {
  Mat KA = fm.kappa.asDiagonal() * fm.A;
  return (KA - KA.transpose()).cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const FiniteModel& fm) { return symmetry_residual(fm) < finite_tol::exact; }

struct BallVerdict {
  bool positive = false;
  double margin = 0;      // smallest eigenvalue of Sym(KA - A^T K A)
  bool boundary = false;  // |margin| within the slack
};

inline BallVerdict is_ball_positive(const FiniteModel& fm) {
  Mat KA = fm.kappa.asDiagonal() * fm.A;
  Mat Q = sym(KA - fm.A.transpose() * KA);
  Eigen::SelfAdjointEigenSolver<Mat> es(Q, Eigen::EigenvaluesOnly);
  BallVerdict v;
  v.margin = es.eigenvalues()(0);
  v.positive = v.margin >= -finite_tol::ball;
  v.boundary = std::abs(v.margin) <= finite_tol::ball;
  return v;
}

// Doubly stochastic, ball-positive, non-symmetric three-point model with kappa = (1,1,1).
inline FiniteModel counterexample_3pt(double l1, double l2) {
  if (!(l1 > 0 && l1 < 1 && l2 > 0 && l2 < 1)) throw Error("lambda values must lie in (0,1)");
  if (l1 == l2) throw Error("λ₁ ≠ λ₂ required");
  if (1 + l2 - 2 * l1 < 0 || 1 + l1 - 2 * l2 < 0) {
    std::ostringstream os;
    os << "non-negativity inequality fails: 1+l2-2 l1 = " << 1 + l2 - 2 * l1 << ", 1+l1-2 l2 = " << 1 + l1 - 2 * l2;
    throw Error(os.str());
  }
  double lhs = (l1 + l2 - 2 * l1 * l2), rhs = 16 * (l2 - l2 * l2) * (l1 - l1 * l1);
  if (lhs * lhs > rhs)
    throw Error("ball-positivity inequality (l1+l2-2 l1 l2)^2 <= 16 (l2-l2^2)(l1-l1^2) fails");
  Mat A(3, 3);
  A << 1 + l1 + l2, 1 + l2 - 2 * l1, 1 + l1 - 2 * l2, 1 - l1, 1 + 2 * l1, 1 - l1, 1 - l2, 1 - l2, 1 + 2 * l2;
  A /= 3.0;
  return FiniteModel(Vec::Ones(3), A);
}

// Orthonormal basis (columns) of {u : w.u = 0}.
inline Mat complement_basis(const Vec& w) {
  const Eigen::Index N = w.size();
  if (N < 2) return Mat(N, 0);
  Mat wm = w;
  Eigen::HouseholderQR<Mat> qr(wm);
  Mat Q = qr.householderQ() * Mat::Identity(N, N);
  return Q.rightCols(N - 1);
}

enum class GapSubspace { zero_momentum, zero_kappa_mean };

// 1 - sup{(u,Au)_K / (u,u)_K} over the subspace {rho.u = 0} or {kappa.u = 0}.
inline double spectral_gap_finite(const FiniteModel& fm, GapSubspace sub, const std::optional<Vec>& rho = std::nullopt) {
  Vec w;
  if (sub == GapSubspace::zero_momentum) {
    if (!rho) throw Error("zero-momentum gap needs the mass vector rho");
    if (rho->size() != fm.size()) throw Error("rho has wrong length");
    w = *rho;
  } else {
    w = fm.kappa;
  }
  Mat B = complement_basis(w);
  if (B.cols() == 0) return 1.0;
  Mat KA = fm.kappa.asDiagonal() * fm.A;
  Mat P = B.transpose() * sym(KA) * B;
  Mat G = B.transpose() * fm.kappa.asDiagonal() * B;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(sym(P), sym(G), Eigen::EigenvaluesOnly);
  return 1.0 - es.eigenvalues().maxCoeff();
}

// inf over {sum m u = 0} of (u, K(I - A)u) / (u, u)_m.
inline double variational_lambda(const FiniteModel& fm, const Vec& m) {
  if (m.size() != fm.size()) throw Error("mass vector has wrong length");
  Mat B = complement_basis(m);
  if (B.cols() == 0) return 0.0;
  Mat KA = fm.kappa.asDiagonal() * fm.A;
  Mat L = Mat(fm.kappa.asDiagonal()) - KA;
  Mat P = B.transpose() * sym(L) * B;
  Mat G = B.transpose() * m.asDiagonal() * B;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(sym(P), sym(G), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct GapEquivalence {
  double eps_momentum = 0, eps_kappa = 0, factor = 0;
  double slack_forward = 0, slack_converse = 0;  // >= 0 when the inequality holds
  bool holds = false;
};

// Both implications between the zero-momentum and zero-kappa-mean gaps, given c0 <= kappa/rho <= c1.
inline GapEquivalence check_gap_equivalence(const FiniteModel& fm, const Vec& rho, double c0, double c1) {
  if (!is_conservative(fm)) throw Error("gap equivalence needs a conservative model");
  if (rho.size() != fm.size()) throw Error("rho has wrong length");
  if (std::abs(rho.sum() - 1.0) > 1e-12) throw Error("rho must have unit mass");
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho(i) <= 0) continue;
    double r = fm.kappa(i) / rho(i);
    if (r < c0 * (1 - 1e-12) || r > c1 * (1 + 1e-12)) throw Error("kappa/rho outside [c0, c1]");
  }
  GapEquivalence g;
  g.eps_momentum = spectral_gap_finite(fm, GapSubspace::zero_momentum, rho);
  g.eps_kappa = spectral_gap_finite(fm, GapSubspace::zero_kappa_mean);
  g.factor = c0 / (c0 + c1);
  g.slack_forward = g.eps_momentum - g.eps_kappa * g.factor;
  g.slack_converse = g.eps_kappa - g.eps_momentum * g.factor;
  g.holds = g.slack_forward >= -1e-12 && g.slack_converse >= -1e-12;
  return g;
}

// Random right-stochastic models for the implication sweep.  Mixes generic stochastic matrices,
// symmetric kernels (kappa = W 1, A = K^-1 W) and adjoint products A* A which are ball-positive.
inline FiniteModel random_finite_model(std::mt19937_64& rng, int N, int family) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto sparse = [&](double keep) {
    Mat W(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) W(i, j) = U(rng) < keep ? U(rng) : 0.0;
    for (int i = 0; i < N; ++i) W(i, i) += 1e-3;
    return W;
  };
  switch (family % 3) {
    case 0: {
      Mat W = sparse(0.7);
      Vec k(N);
      for (int i = 0; i < N; ++i) k(i) = 0.1 + U(rng);
      Mat A = W.array().colwise() / W.rowwise().sum().array();
      return FiniteModel(k, A);
    }
    case 1: {
      Mat W = sparse(0.7);
      W = sym(W);
      Vec k = W.rowwise().sum();
      Mat A = k.cwiseInverse().asDiagonal() * W;
      return FiniteModel(k, A);
    }
    default: {
      Mat W = sparse(0.7);
      Vec k(N);
      for (int i = 0; i < N; ++i) k(i) = 0.1 + U(rng);
      Mat A = W.array().colwise() / W.rowwise().sum().array();
      // adjoint in L^2(kappa): A* = K^-1 A^T K; kappa' = A^T kappa keeps A* A stochastic
      Vec kp = A.transpose() * k;
      Mat As = kp.cwiseInverse().asDiagonal() * A.transpose() * k.asDiagonal();
      Mat B = As * A;
      B = B.array().colwise() / B.rowwise().sum().array();
      return FiniteModel(kp, B);
    }
  }
}

}  // namespace envavg
