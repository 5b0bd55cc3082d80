#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace envavg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Spatial domain: up to two axes, each either periodic with a period or unbounded.
namespace detail {
// Eigen 1-vectors; dist() must not touch x[1] on them
template <class T>
concept fixed_one = requires { T::SizeAtCompileTime; } && (T::SizeAtCompileTime == 1);
}  // namespace detail

struct Domain {
  int dim = 1;
  std::array<double, 2> period{0.0, 0.0};

  static Domain torus(double L, int dim = 1) {
    if (!(L > 0)) throw Error("torus length must be positive");
    if (dim < 1 || dim > 2) throw Error("dimension must be 1 or 2");
    Domain d;
    d.dim = dim;
    d.period = {L, dim == 2 ? L : 0.0};
    return d;
  }
  static Domain line(int dim = 1) {
    if (dim < 1 || dim > 2) throw Error("dimension must be 1 or 2");
    Domain d;
    d.dim = dim;
    return d;
  }
  // Mixed product, used for phase space (periodic x, unbounded v).
  static Domain product(double period0, double period1) {
    Domain d;
    d.dim = 2;
    d.period = {period0, period1};
    return d;
  }

  bool periodic(int axis) const { return period[axis] > 0; }
  bool is_torus() const {
    for (int a = 0; a < dim; ++a)
      if (!periodic(a)) return false;
    return true;
  }

  double wrap(int axis, double x) const {
    if (!periodic(axis)) return x;
    double L = period[axis];
    double r = std::fmod(x, L);
    if (r < 0) r += L;
    if (r >= L) r -= L;
    return r;
  }

  // Minimal-image signed displacement y - x along one axis.
  double disp(int axis, double x, double y) const {
    double d = y - x;
    if (!periodic(axis)) return d;
    double L = period[axis];
    d -= L * std::round(d / L);
    return d;
  }

  template <class A, class B>
  double dist(const A& x, const B& y) const {
    if (dim == 1) return std::abs(disp(0, x[0], y[0]));
    if constexpr (detail::fixed_one<A> || detail::fixed_one<B>) return std::abs(disp(0, x[0], y[0]));
    double d0 = disp(0, x[0], y[0]), d1 = disp(1, x[1], y[1]);
    return std::hypot(d0, d1);
  }

  bool operator==(const Domain& o) const { return dim == o.dim && period == o.period; }
  bool operator!=(const Domain& o) const { return !(*this == o); }
};

// Per-job RNG streams: job k of master seed s is seeded by seed_seq{s_lo, s_hi, k_lo, k_hi}.
inline std::mt19937_64 job_rng(std::uint64_t master_seed, std::uint64_t job) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(job), static_cast<std::uint32_t>(job >> 32)};
  return std::mt19937_64(seq);
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
  int n = 0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("linear fit needs at least two samples");
  const int n = static_cast<int>(x.size());
  Mat X(n, 2);
  Vec Y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = x[i];
    X(i, 1) = 1.0;
    Y(i) = y[i];
  }
  Vec c = X.colPivHouseholderQr().solve(Y);
  LinearFit f;
  f.slope = c(0);
  f.intercept = c(1);
  f.n = n;
  double mean = Y.mean();
  double ss_tot = (Y.array() - mean).square().sum();
  double ss_res = (Y - X * c).squaredNorm();
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace envavg
