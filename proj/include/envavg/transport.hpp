#pragma once

#include "measure.hpp"

#include <algorithm>
#include <numeric>

namespace envavg {

struct TransportOptions {
  Eigen::Index max_atoms = 500;  // exact solver cap for dimension 2
};

namespace detail {

struct Atoms1D {
  std::vector<double> x, w;
};

inline Atoms1D sorted_atoms(const Measure& m) {
  std::vector<Eigen::Index> idx(m.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return m.point(a)(0) < m.point(b)(0); });
  Atoms1D out;
  for (auto i : idx) {
    if (m.mass(i) <= 0) continue;
    out.x.push_back(m.point(i)(0));
    out.w.push_back(m.mass(i));
  }
  return out;
}

// Monotone (quantile) coupling cost on the line.
inline double quantile_cost_line(const Atoms1D& a, const Atoms1D& b, int p) {
  size_t i = 0, j = 0;
  double ra = a.w.empty() ? 0 : a.w[0], rb = b.w.empty() ? 0 : b.w[0];
  double cost = 0;
  while (i < a.x.size() && j < b.x.size()) {
    const bool adv_a = ra <= rb, adv_b = rb <= ra;
    double t = std::min(ra, rb);
    double d = std::abs(a.x[i] - b.x[j]);
    cost += t * (p == 1 ? d : d * d);
    ra -= t;
    rb -= t;
    if (adv_a && ++i < a.x.size()) ra = a.w[i];
    if (adv_b && ++j < b.x.size()) rb = b.w[j];
  }
  return cost;
}

// Lifted quantile function t -> position on the universal cover of a circle of length L.
struct CircleQuantile {
  std::vector<double> x, c;  // sorted positions, cumulative masses (c.back() = 1)
  double L;
  double operator()(double t) const {
    double k = std::floor(t);
    double s = t - k;
    size_t i = static_cast<size_t>(std::upper_bound(c.begin(), c.end(), s) - c.begin());
    if (i >= x.size()) i = x.size() - 1;
    return x[i] + k * L;
  }
};

inline CircleQuantile circle_quantile(const Atoms1D& a, double L) {
  CircleQuantile q;
  q.L = L;
  q.x = a.x;
  double s = 0;
  for (double w : a.w) q.c.push_back(s += w);
  for (double& v : q.c) v /= s;
  q.c.back() = 1.0;
  return q;
}

inline double circle_shift_cost(const CircleQuantile& F, const CircleQuantile& G, double theta) {
  std::vector<double> br = {0.0, 1.0};
  for (double c : F.c) br.push_back(c);
  double fl = std::floor(theta);
  for (double d : G.c) {
    double b = d - (theta - fl);
    if (b < 0) b += 1.0;
    if (b >= 1.0) b -= 1.0;
    br.push_back(b);
  }
  std::sort(br.begin(), br.end());
  double cost = 0;
  for (size_t k = 0; k + 1 < br.size(); ++k) {
    double len = br[k + 1] - br[k];
    if (len <= 0) continue;
    double t = 0.5 * (br[k] + br[k + 1]);
    double d = F(t) - G(t + theta);
    cost += len * d * d;
  }
  return cost;
}

// W1 on a circle: integral of |F - G - alpha| with alpha the Lebesgue median of F - G.
inline double circle_w1(const Atoms1D& a, const Atoms1D& b, double L) {
  std::vector<std::pair<double, double>> ev;  // position, jump of F - G
  for (size_t i = 0; i < a.x.size(); ++i) ev.push_back({a.x[i], a.w[i]});
  for (size_t j = 0; j < b.x.size(); ++j) ev.push_back({b.x[j], -b.w[j]});
  std::sort(ev.begin(), ev.end());
  std::vector<std::pair<double, double>> pieces;  // value, length
  double h = 0, pos = 0;
  for (auto& [x, jump] : ev) {
    if (x > pos) pieces.push_back({h, x - pos});
    h += jump;
    pos = x;
  }
  if (L > pos) pieces.push_back({h, L - pos});
  auto sorted = pieces;
  std::sort(sorted.begin(), sorted.end());
  double half = 0.5 * L, acc = 0, alpha = 0;
  for (auto& [v, len] : sorted) {
    acc += len;
    if (acc >= half) {
      alpha = v;
      break;
    }
  }
  double w = 0;
  for (auto& [v, len] : pieces) w += len * std::abs(v - alpha);
  return w;
}

inline double circle_w2_squared(const Atoms1D& a, const Atoms1D& b, double L) {
  CircleQuantile F = circle_quantile(a, L), G = circle_quantile(b, L);
  // The shift cost is convex in theta; golden-section search on [-1, 1].
  double lo = -1.0, hi = 1.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = circle_shift_cost(F, G, x1), f2 = circle_shift_cost(F, G, x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = circle_shift_cost(F, G, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = circle_shift_cost(F, G, x2);
    }
  }
  return std::min(f1, f2);
}

}  // namespace detail

// Exact discrete optimal transport by successive shortest paths with potentials
// (dense bipartite residual graph).  Returns the optimal cost and plan.
struct TransportPlan {
  double cost = 0;
  Mat plan;
};

inline TransportPlan exact_transport(const Vec& a, const Vec& b, const Mat& C) {
  const Eigen::Index n = a.size(), m = b.size();
  if (C.rows() != n || C.cols() != m) throw Error("cost matrix shape mismatch");
  const double tol = 1e-14;
  const double INF = std::numeric_limits<double>::infinity();
  Vec s = a, d = b;
  Mat X = Mat::Zero(n, m);
  Vec pu = Vec::Zero(n), pv(m);
  for (Eigen::Index j = 0; j < m; ++j) pv(j) = C.col(j).minCoeff();
  std::vector<std::vector<Eigen::Index>> in_flow(m);  // sources with flow into sink j

  std::vector<double> ds(n), dt(m);
  std::vector<Eigen::Index> pred_sink(m), pred_src(n);
  std::vector<char> vs(n), vt(m);
  for (int guard = 0; guard < 100 * static_cast<int>(n + m) + 100; ++guard) {
    if (s.maxCoeff() <= tol || d.maxCoeff() <= tol) break;
    std::fill(ds.begin(), ds.end(), INF);
    std::fill(dt.begin(), dt.end(), INF);
    std::fill(vs.begin(), vs.end(), 0);
    std::fill(vt.begin(), vt.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      pred_src[i] = -1;
      if (s(i) > tol) ds[i] = 0;
    }
    Eigen::Index target = -1;
    double D = INF;
    while (true) {
      double best = INF;
      Eigen::Index bi = -1;
      bool is_src = false;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!vs[i] && ds[i] < best) {
          best = ds[i];
          bi = i;
          is_src = true;
        }
      for (Eigen::Index j = 0; j < m; ++j)
        if (!vt[j] && dt[j] < best) {
          best = dt[j];
          bi = j;
          is_src = false;
        }
      if (bi < 0) break;
      if (is_src) {
        vs[bi] = 1;
        for (Eigen::Index j = 0; j < m; ++j) {
          if (vt[j]) continue;
          double r = C(bi, j) + pu(bi) - pv(j);
          if (r < 0) r = 0;
          double nd = best + r;
          if (nd < dt[j]) {
            dt[j] = nd;
            pred_sink[j] = bi;
          }
        }
      } else {
        vt[bi] = 1;
        if (d(bi) > tol) {
          target = bi;
          D = best;
          break;
        }
        for (Eigen::Index i : in_flow[bi]) {
          if (vs[i] || X(i, bi) <= tol) continue;
          double r = -(C(i, bi) + pu(i) - pv(bi));
          if (r < 0) r = 0;
          double nd = best + r;
          if (nd < ds[i]) {
            ds[i] = nd;
            pred_src[i] = bi;
          }
        }
      }
    }
    if (target < 0) throw Error("exact transport: no augmenting path (masses unbalanced)");
    for (Eigen::Index i = 0; i < n; ++i)
      if (vs[i]) pu(i) += std::min(ds[i], D) - D;
    for (Eigen::Index j = 0; j < m; ++j)
      if (vt[j] || dt[j] < D) pv(j) += std::min(dt[j], D) - D;
    // bottleneck
    double delta = d(target);
    Eigen::Index j = target;
    Eigen::Index root = -1;
    while (true) {
      Eigen::Index i = pred_sink[j];
      Eigen::Index jb = pred_src[i];
      if (jb < 0) {
        root = i;
        break;
      }
      delta = std::min(delta, X(i, jb));
      j = jb;
    }
    delta = std::min(delta, s(root));
    j = target;
    while (true) {
      Eigen::Index i = pred_sink[j];
      if (X(i, j) <= tol) in_flow[j].push_back(i);
      X(i, j) += delta;
      Eigen::Index jb = pred_src[i];
      if (jb < 0) break;
      X(i, jb) -= delta;
      if (X(i, jb) <= tol) {
        X(i, jb) = 0;
        auto& v = in_flow[jb];
        v.erase(std::remove(v.begin(), v.end(), i), v.end());
      }
      j = jb;
    }
    s(root) -= delta;
    d(target) -= delta;
  }
  TransportPlan out;
  out.plan = X;
  out.cost = (X.array() * C.array()).sum();
  return out;
}

inline double wasserstein(const Measure& mu, const Measure& nu, int p, const TransportOptions& opt = {}) {
  if (p != 1 && p != 2) throw Error("wasserstein: order must be 1 or 2");
  if (mu.domain() != nu.domain()) throw Error("measures live on different domains");
  const Domain& dom = mu.domain();
  if (dom.dim == 1) {
    auto a = detail::sorted_atoms(mu), b = detail::sorted_atoms(nu);
    if (!dom.periodic(0)) {
      double c = detail::quantile_cost_line(a, b, p);
      return p == 1 ? c : std::sqrt(std::max(0.0, c));
    }
    if (p == 1) return detail::circle_w1(a, b, dom.period[0]);
    return std::sqrt(std::max(0.0, detail::circle_w2_squared(a, b, dom.period[0])));
  }
  if (mu.size() > opt.max_atoms || nu.size() > opt.max_atoms) throw Error("instance too large for exact OT");
  Mat C(mu.size(), nu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = 0; j < nu.size(); ++j) {
      double dd = dom.dist(mu.point(i), nu.point(j));
      C(i, j) = p == 1 ? dd : dd * dd;
    }
  double c = exact_transport(mu.weights(), nu.weights(), C).cost;
  return p == 1 ? c : std::sqrt(std::max(0.0, c));
}

inline double wasserstein1(const Measure& mu, const Measure& nu, const TransportOptions& opt = {}) {
  return wasserstein(mu, nu, 1, opt);
}
inline double wasserstein2(const Measure& mu, const Measure& nu, const TransportOptions& opt = {}) {
  return wasserstein(mu, nu, 2, opt);
}

}  // namespace envavg
