#pragma once

#include "measure.hpp"

#include <optional>
#include <sstream>

namespace envavg {

struct Flags {
  bool conservative = false;
  bool symmetric = false;
  bool ball_positive = false;
  bool galilean = false;
};

enum class ModelKind {
  global,
  identity,
  cucker_smale,
  motsch_tadmor,
  beta,
  overmollified,
  segregation,
  rough_partition,
  topological
};

inline const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::global: return "global";
    case ModelKind::identity: return "identity";
    case ModelKind::cucker_smale: return "cucker_smale";
    case ModelKind::motsch_tadmor: return "motsch_tadmor";
    case ModelKind::beta: return "beta";
    case ModelKind::overmollified: return "overmollified";
    case ModelKind::segregation: return "segregation";
    case ModelKind::rough_partition: return "rough_partition";
    case ModelKind::topological: return "topological";
  }
  return "?";
}

inline std::vector<ModelKind> all_model_kinds() {
  return {ModelKind::global,        ModelKind::identity,     ModelKind::cucker_smale,
          ModelKind::motsch_tadmor, ModelKind::beta,         ModelKind::overmollified,
          ModelKind::segregation,   ModelKind::rough_partition, ModelKind::topological};
}

inline ModelKind parse_kind(const std::string& s) {
  for (auto k : all_model_kinds())
    if (s == kind_name(k)) return k;
  throw Error("unknown model '" + s + "'");
}

// Smooth partition of unity: g_l = b_l / sum_k b_k with b_l a bump of radius `width` centred at c_l.
struct SegregationSpec {
  Mat centers;  // L x dim
  double width = 0;
};

// Blocks of a 1D torus: [cuts[k], cuts[k+1]) cyclically.
struct RoughPartitionSpec {
  std::vector<double> cuts;
};

struct TopologicalSpec {
  double alpha = 1.0;
  double eps = 0.1;
  double eta = 0.02;  // mollification width of the region indicator
  double ecc = 1.2;   // 2D ellipse: |z-x|+|z-y| <= ecc |x-y|
};

class Model {
 public:
  static Model global() { return Model(ModelKind::global); }
  static Model identity() { return Model(ModelKind::identity); }
  static Model cucker_smale(Kernel phi) {
    Model m(ModelKind::cucker_smale);
    m.kernel_ = std::move(phi);
    return m;
  }
  static Model motsch_tadmor(Kernel phi) {
    Model m(ModelKind::motsch_tadmor);
    m.kernel_ = std::move(phi);
    return m;
  }
  static Model beta(Kernel phi, double b) {
    if (!(b >= 0 && b <= 1)) throw Error("beta model: beta must lie in [0,1]");
    Model m(ModelKind::beta);
    m.kernel_ = std::move(phi);
    m.beta_ = b;
    return m;
  }
  static Model overmollified(Kernel phi, int quad_nodes = 512) {
    if (quad_nodes < 8) throw Error("overmollified: quadrature needs at least 8 nodes");
    Model m(ModelKind::overmollified);
    m.kernel_ = std::move(phi);
    m.quad_nodes_ = quad_nodes;
    return m;
  }
  static Model segregation(SegregationSpec spec) {
    if (spec.centers.rows() < 1) throw Error("segregation: need at least one bump");
    if (!(spec.width > 0)) throw Error("segregation: width must be positive");
    Model m(ModelKind::segregation);
    m.seg_ = std::move(spec);
    return m;
  }
  // L equally spaced bumps on a 1D torus of length P, each of radius width_factor * spacing.
  static Model segregation_uniform(int L, double P, double width_factor = 1.0) {
    SegregationSpec s;
    s.centers.resize(L, 1);
    for (int l = 0; l < L; ++l) s.centers(l, 0) = (l + 0.5) * P / L;
    s.width = width_factor * P / L;
    return segregation(std::move(s));
  }
  static Model rough_partition(RoughPartitionSpec spec) {
    if (spec.cuts.empty()) throw Error("rough_partition: need at least one cut");
    std::sort(spec.cuts.begin(), spec.cuts.end());
    Model m(ModelKind::rough_partition);
    m.rough_ = std::move(spec);
    return m;
  }
  static Model topological(Kernel psi, TopologicalSpec spec) {
    if (!(spec.alpha >= 0)) throw Error("topological: alpha must be non-negative");
    if (!(spec.eps > 0)) throw Error("topological: eps must be positive");
    if (!(spec.eta > 0)) throw Error("topological: eta must be positive");
    if (!(spec.ecc >= 1)) throw Error("topological: ecc must be at least 1");
    Model m(ModelKind::topological);
    m.kernel_ = std::move(psi);
    m.topo_ = spec;
    return m;
  }

  ModelKind kind() const { return kind_; }
  std::string name() const { return kind_name(kind_); }
  bool has_kernel() const { return kernel_.has_value(); }
  const Kernel& kernel() const {
    if (!kernel_) throw Error(name() + " model has no kernel");
    return *kernel_;
  }
  double beta_exponent() const { return beta_; }
  int quad_nodes() const { return quad_nodes_; }
  const SegregationSpec& seg() const { return seg_; }
  const RoughPartitionSpec& rough() const { return rough_; }
  const TopologicalSpec& topo() const { return topo_; }

  Flags flags() const {
    switch (kind_) {
      case ModelKind::identity:
      case ModelKind::global:
      case ModelKind::overmollified:
        return {true, true, true, true};
      case ModelKind::cucker_smale:
        return {true, true, kernel_->positive_definite(), true};
      case ModelKind::beta:
        if (beta_ == 1.0) return {true, true, kernel_->positive_definite(), true};
        return {false, false, false, true};
      case ModelKind::motsch_tadmor:
        return {false, false, false, true};
      case ModelKind::segregation:
      case ModelKind::rough_partition:
        return {true, true, true, false};
      case ModelKind::topological:
        return {true, true, false, true};
    }
    return {};
  }

  std::optional<double> locality_radius() const {
    if (!kernel_) return std::nullopt;
    double r = kernel_->locality_radius();
    if (!std::isfinite(r)) return std::nullopt;
    return r;
  }

  // Bound on s_rho over all probability measures.
  double strength_bound() const {
    switch (kind_) {
      case ModelKind::cucker_smale:
        return (*kernel_)(0.0);
      case ModelKind::beta:
        return std::pow((*kernel_)(0.0), beta_);
      case ModelKind::topological:
        return (*kernel_)(0.0) / std::pow(topo_.eps, 0.5 * topo_.alpha);
      default:
        return 1.0;
    }
  }

  // Reproducing-kernel row of the model family.
  std::string kernel_formula() const {
    switch (kind_) {
      case ModelKind::global: return "s = 1, <u> = int u drho, phi_rho(x,y) = 1";
      case ModelKind::identity: return "s = 1, <u> = u, phi_rho(x,y) = delta(x-y)/rho";
      case ModelKind::cucker_smale: return "s = rho_phi, <u> = (u rho)_phi / rho_phi, phi_rho(x,y) = phi(x-y)";
      case ModelKind::motsch_tadmor: return "s = 1, <u> = (u rho)_phi / rho_phi, phi_rho(x,y) = phi(x-y) / rho_phi(x)";
      case ModelKind::beta:
        return "s = rho_phi^beta, <u> = (u rho)_phi / rho_phi, phi_rho(x,y) = phi(x-y) / rho_phi^(1-beta)(x)";
      case ModelKind::overmollified:
        return "s = 1, <u> = ((u rho)_phi / rho_phi)_phi (phi of unit mass), phi_rho(x,y) = int phi(x-z) phi(y-z) / rho_phi(z) dz";
      case ModelKind::segregation:
        return "s = 1, <u> = sum_l g_l(x) rho(u g_l) / rho(g_l), phi_rho(x,y) = sum_l g_l(x) g_l(y) / rho(g_l)";
      case ModelKind::rough_partition:
        return "s = 1, <u> = rho(u 1_A) / rho(A) on each block A, phi_rho(x,y) = sum_l 1_Al(x) 1_Al(y) / rho(A_l)";
      case ModelKind::topological:
        return "s = int phi_rho(x,y) drho(y), phi_rho(x,y) = psi(x-y) / (eps + d_rho(x,y)^2)^(alpha/2), "
               "d_rho(x,y) = rho(O(x,y))";
    }
    return "";
  }

  std::string describe() const {
    std::ostringstream os;
    Flags f = flags();
    os << "model: " << name() << "\n";
    os << "kernel: " << kernel_formula() << "\n";
    if (kernel_) os << "profile: " << kernel_->describe() << "\n";
    if (kind_ == ModelKind::beta) os << "beta: " << beta_ << "\n";
    if (kind_ == ModelKind::overmollified) os << "quadrature nodes: " << quad_nodes_ << "\n";
    if (kind_ == ModelKind::segregation) os << "bumps: " << seg_.centers.rows() << ", width " << seg_.width << "\n";
    if (kind_ == ModelKind::rough_partition) os << "blocks: " << rough_.cuts.size() << "\n";
    if (kind_ == ModelKind::topological)
      os << "alpha: " << topo_.alpha << ", eps: " << topo_.eps << ", eta: " << topo_.eta << "\n";
    if (auto r = locality_radius()) os << "locality radius r0: " << *r << "\n";
    os << "conservative: " << (f.conservative ? "yes" : "no") << "\n";
    os << "symmetric: " << (f.symmetric ? "yes" : "no") << "\n";
    os << "ball-positive: " << (f.ball_positive ? "yes" : "no") << "\n";
    os << "galilean: " << (f.galilean ? "yes" : "no") << "\n";
    return os.str();
  }

 private:
  explicit Model(ModelKind k) : kind_(k) {}
  ModelKind kind_;
  std::optional<Kernel> kernel_;
  double beta_ = 1.0;
  int quad_nodes_ = 512;
  SegregationSpec seg_;
  RoughPartitionSpec rough_;
  TopologicalSpec topo_;
};

}  // namespace envavg
