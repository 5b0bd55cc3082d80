#pragma once

#include "core.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <limits>
#include <memory>
#include <sstream>

namespace envavg {

// Radial kernel profile k(|x|), evaluated on the minimal-image distance on tori.
class Kernel {
 public:
  enum class Kind { cs_power, bump, gaussian, bochner, tabulated };

  static Kernel cs_power(double lambda, double beta) {
    if (!(lambda > 0)) throw Error("cs_power: lambda must be positive");
    if (!(beta >= 0)) throw Error("cs_power: beta must be non-negative");
    Kernel k(Kind::cs_power);
    k.p0_ = lambda;
    k.p1_ = beta;
    k.support_ = inf();
    return k;
  }

  // exp(1 - 1/(1-(r/R)^2)) on r < R; equals 1 at the origin.
  static Kernel bump(double R) {
    if (!(R > 0)) throw Error("bump: radius must be positive");
    Kernel k(Kind::bump);
    k.p0_ = R;
    k.support_ = R;
    return k;
  }

  static Kernel gaussian(double h) {
    if (!(h > 0)) throw Error("gaussian: width must be positive");
    Kernel k(Kind::gaussian);
    k.p0_ = h;
    k.support_ = inf();
    k.positive_definite_ = true;
    return k;
  }

  // Piecewise linear profile through (r_i, k_i), zero past the last node.
  static Kernel tabulated(std::vector<double> r, std::vector<double> values) {
    if (r.size() != values.size() || r.size() < 2) throw Error("tabulated: need matching r and value lists");
    for (size_t i = 0; i < r.size(); ++i) {
      if (values[i] < 0) throw Error("tabulated: values must be non-negative");
      if (i > 0 && !(r[i] > r[i - 1])) throw Error("tabulated: r must be strictly increasing");
    }
    if (r.front() != 0.0) throw Error("tabulated: first node must be r = 0");
    Kernel k(Kind::tabulated);
    auto t = std::make_shared<Table>();
    t->r = std::move(r);
    t->v = std::move(values);
    k.support_ = t->r.back();
    k.table_ = std::move(t);
    return k;
  }

  // phi = psi * psi. Gaussian psi has a closed form in any dimension; compactly
  // supported psi is tabulated in 1D.
  static Kernel bochner(const Kernel& psi, int dim = 1) {
    if (psi.kind_ == Kind::gaussian) {
      Kernel k = gaussian(std::sqrt(2.0) * psi.p0_);
      k.amp_ = psi.amp_ * psi.amp_ * std::pow(std::sqrt(M_PI) * psi.p0_, dim);
      k.kind_ = Kind::bochner;
      k.psi_ = std::make_shared<Kernel>(psi);
      k.gauss_form_ = true;
      return k;
    }
    if (dim != 1) throw Error("bochner: compactly supported psi is only tabulated in 1D");
    if (!std::isfinite(psi.support_))
      throw Error("bochner: psi must be gaussian or compactly supported");
    const double a = psi.support_;
    const int n = 4096;
    auto t = std::make_shared<Table>();
    t->uniform = true;
    t->h = 2 * a / n;
    t->v.resize(n + 1);
    // trapezoid rule on the table spacing: spectrally accurate for smooth compact psi
    const int half = n / 2;
    std::vector<double> ps(2 * half + 1);
    for (int j = -half; j <= half; ++j) ps[j + half] = psi(std::abs(j * t->h));
    for (int i = 0; i <= n; ++i) {
      double s = 0;
      for (int j = std::max(-half, i - half); j <= half; ++j) s += ps[j + half] * ps[i - j + half];
      t->v[i] = std::max(0.0, s * t->h);
    }
    Kernel k(Kind::bochner);
    k.support_ = 2 * a;
    k.table_ = std::move(t);
    k.psi_ = std::make_shared<Kernel>(psi);
    k.positive_definite_ = true;
    return k;
  }

  double operator()(double r) const {
    r = std::abs(r);
    if (r >= support_) return 0.0;
    switch (kind_) {
      case Kind::cs_power:
        return amp_ * p0_ * std::pow(1.0 + r * r, -0.5 * p1_);
      case Kind::bump: {
        double q = r / p0_;
        return amp_ * std::exp(1.0 - 1.0 / (1.0 - q * q));
      }
      case Kind::gaussian:
        return amp_ * std::exp(-0.5 * r * r / (p0_ * p0_));
      case Kind::bochner:
        if (gauss_form_) return amp_ * std::exp(-0.5 * r * r / (p0_ * p0_));
        return amp_ * eval_uniform_table(r);
      case Kind::tabulated:
        return amp_ * eval_linear_table(r);
    }
    return 0.0;
  }

  // Scaled copy with unit integral over R^dim.
  Kernel mollifier(int dim = 1) const {
    double I = integral(dim);
    if (!(I > 0) || !std::isfinite(I)) throw Error("kernel is not integrable; cannot normalise as a mollifier");
    Kernel k = *this;
    k.amp_ = amp_ / I;
    k.mollifier_ = true;
    return k;
  }

  Kernel scaled(double c) const {
    if (!(c > 0)) throw Error("kernel scale must be positive");
    Kernel k = *this;
    k.amp_ = amp_ * c;
    return k;
  }

  // Integral over R^dim of the profile.
  double integral(int dim = 1) const {
    const double omega = dim == 1 ? 2.0 : 2.0 * M_PI;
    auto radial = [&](double r) { return (*this)(r) * (dim == 1 ? 1.0 : r); };
    if ((kind_ == Kind::gaussian) || (kind_ == Kind::bochner && gauss_form_))
      return amp_ * std::pow(std::sqrt(2 * M_PI) * p0_, dim);
    if (std::isfinite(support_)) {
      double s = 0;
      // fixed composite Gauss rule: bump-like profiles are flat at the endpoint
      const int panels = 64;
      for (int p = 0; p < panels; ++p) {
        double a = support_ * p / panels, b = support_ * (p + 1) / panels;
        s += boost::math::quadrature::gauss<double, 30>::integrate(radial, a, b);
      }
      return omega * s;
    }
    if (kind_ == Kind::cs_power && p1_ <= dim) return inf();
    boost::math::quadrature::exp_sinh<double> es;
    return omega * es.integrate(radial, 0.0, inf());
  }

  Kind kind() const { return kind_; }
  double support() const { return support_; }
  bool compact() const { return std::isfinite(support_); }
  bool is_mollifier() const { return mollifier_; }
  bool positive_definite() const { return positive_definite_; }
  bool is_bochner() const { return kind_ == Kind::bochner; }
  double amplitude() const { return amp_; }
  double param0() const { return p0_; }
  double param1() const { return p1_; }
  const Kernel* psi() const { return psi_.get(); }

  // Radius r0 with k >= c > 0 on |x| < r0 (locality); infinite for everywhere-positive profiles.
  double locality_radius() const {
    switch (kind_) {
      case Kind::bump:
        return 0.5 * p0_;
      case Kind::gaussian:
        return 2.0 * p0_;
      case Kind::bochner:
        return gauss_form_ ? 2.0 * p0_ : psi_->support();
      case Kind::tabulated: {
        const auto& t = *table_;
        for (size_t i = 1; i < t.v.size(); ++i)
          if (t.v[i] <= 0) return t.r[i - 1];
        return t.r.back();
      }
      case Kind::cs_power:
        return inf();
    }
    return inf();
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::cs_power:
        os << "cs_power(lambda=" << p0_ << ", beta=" << p1_ << "): lambda*(1+r^2)^(-beta/2)";
        break;
      case Kind::bump:
        os << "bump(R=" << p0_ << "): exp(1-1/(1-(r/R)^2)) on r<R";
        break;
      case Kind::gaussian:
        os << "gaussian(h=" << p0_ << "): exp(-r^2/(2h^2))";
        break;
      case Kind::bochner:
        os << "bochner(psi=" << psi_->describe() << "): psi*psi";
        break;
      case Kind::tabulated:
        os << "tabulated(" << table_->r.size() << " nodes, support " << support_ << ")";
        break;
    }
    if (mollifier_) os << " [unit mass]";
    else if (amp_ != 1.0) os << " x " << amp_;
    return os.str();
  }

 private:
  struct Table {
    bool uniform = false;
    double h = 0;
    std::vector<double> r, v;
  };

  explicit Kernel(Kind k) : kind_(k) {}
  static double inf() { return std::numeric_limits<double>::infinity(); }

  double eval_uniform_table(double r) const {
    const auto& t = *table_;
    const int n = static_cast<int>(t.v.size()) - 1;
    double s = r / t.h;
    int i = static_cast<int>(std::floor(s));
    if (i >= n) return 0.0;
    double f = s - i;
    auto at = [&](int j) {
      if (j < 0) j = -j;  // even extension
      return j > n ? 0.0 : t.v[j];
    };
    double y0 = at(i - 1), y1 = at(i), y2 = at(i + 1), y3 = at(i + 2);
    // cubic Lagrange through nodes -1,0,1,2
    double v = -f * (f - 1) * (f - 2) / 6 * y0 + (f + 1) * (f - 1) * (f - 2) / 2 * y1 -
               (f + 1) * f * (f - 2) / 2 * y2 + (f + 1) * f * (f - 1) / 6 * y3;
    return std::max(0.0, v);
  }

  double eval_linear_table(double r) const {
    const auto& t = *table_;
    auto it = std::upper_bound(t.r.begin(), t.r.end(), r);
    if (it == t.r.end()) return 0.0;
    size_t j = static_cast<size_t>(it - t.r.begin());
    double w = (r - t.r[j - 1]) / (t.r[j] - t.r[j - 1]);
    return (1 - w) * t.v[j - 1] + w * t.v[j];
  }

  Kind kind_;
  double p0_ = 0, p1_ = 0;
  double amp_ = 1.0;
  double support_ = 0;
  bool mollifier_ = false;
  bool positive_definite_ = false;
  bool gauss_form_ = false;
  std::shared_ptr<const Table> table_;
  std::shared_ptr<const Kernel> psi_;
};

}  // namespace envavg
