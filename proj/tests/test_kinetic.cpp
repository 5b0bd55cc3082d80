#include <envavg/kinetic.hpp>

#include <gtest/gtest.h>

using namespace envavg;

namespace {

const double two_pi = 2 * M_PI;

Model cs_bochner() { return Model::cucker_smale(Kernel::bochner(Kernel::gaussian(0.25)).scaled(4.0)); }

KineticState bimodal(const PhaseGrid& g, double sigma) {
  return from_density(g, sigma, [&](double x, double v) {
    double r = 1 + 0.5 * std::cos(two_pi * x);
    return r * (std::exp(-std::pow(v - 1.5, 2) / (2 * sigma)) + std::exp(-std::pow(v + 1.2, 2) / (2 * sigma)));
  });
}

}  // namespace

TEST(Maxwellian, Moments) {
  PhaseGrid g = default_phase_grid(0.5, 0.7, 1.0, 32, 128);
  KineticState mu = maxwellian(0.5, 0.7, g);
  Moments m = moments(mu);
  EXPECT_NEAR(m.mass, 1.0, 1e-14);
  EXPECT_NEAR(m.ubar, 0.7, 1e-10);
  EXPECT_LT((m.u.array() - 0.7).abs().maxCoeff(), 1e-10);
  EXPECT_DOUBLE_EQ(relative_entropy(mu, mu), 0.0);
  Fisher I = fisher_information(mu, mu);
  EXPECT_LT(I.vv, 1e-6);
  EXPECT_LT(I.xx, 1e-6);
  // close to the sampled Gaussian
  double err = 0;
  for (int j = 0; j < g.nv; ++j) {
    double gauss = std::exp(-std::pow(g.v(j) - 0.7, 2) / (2 * 0.5)) / std::sqrt(2 * M_PI * 0.5);
    err = std::max(err, std::abs(mu.f(0, j) - gauss));
  }
  EXPECT_LT(err, 2e-3);
  KineticDiagnostics d = kinetic_diagnostics(mu);
  EXPECT_LT(d.boundary_mass, 1e-10);
  EXPECT_THROW(maxwellian(0.0, 0.0, g), Error);
}

TEST(Fpa, MaxwellianIsStationary) {
  PhaseGrid g = default_phase_grid(0.5, 0.3, 1.0, 32, 128);
  KineticState mu = maxwellian(0.5, 0.3, g);
  for (const Model& M : {cs_bochner(), Model::overmollified(Kernel::bump(0.3), 128), Model::global()}) {
    FpaSolver S(M);
    KineticState s = mu;
    double dt = 0.8 * S.stable_dt(s);
    for (int k = 0; k < 50; ++k) s = S.step(s, dt);
    EXPECT_LT((s.f - mu.f).cwiseAbs().maxCoeff(), 1e-12) << M.name();
  }
}

TEST(Fpa, FreeStreamingTranslatesBump) {
  PhaseGrid g{1.0, 200, 2.0, 8};
  const int jv = 6;  // v = 1.25
  auto bump = [](double x) { return std::exp(-std::pow((x - 0.3) / 0.08, 2)); };
  auto run = [&](bool limiter) {
    KineticState s;
    s.g = g;
    s.sigma = 0;
    s.f = Mat::Zero(g.nx, g.nv);
    for (int i = 0; i < g.nx; ++i) s.f(i, jv) = bump(g.x(i));
    const double scale = s.f.sum() * g.cell();
    s.f /= scale;
    KineticOptions o;
    o.limiter = limiter;
    FpaSolver S(Model::identity(), o);
    const double dt = 0.4 * g.dx() / g.V;
    const int steps = 400;
    for (int k = 0; k < steps; ++k) s = S.step(s, dt);
    EXPECT_NEAR(s.f.col(jv).sum(), s.f.sum(), 1e-12 * s.f.sum());
    const double shift = g.v(jv) * dt * steps;
    double err = 0;
    for (int i = 0; i < g.nx; ++i) {
      double xs = g.x(i) - shift;
      xs -= std::floor(xs);
      err = std::max(err, std::abs(s.f(i, jv) * scale - bump(xs)));
    }
    return err;
  };
  double e1 = run(false), e2 = run(true);
  EXPECT_LT(e2, 0.08);
  EXPECT_LT(e2, 0.5 * e1);
}

TEST(Fpa, MassMomentumAndPositivity) {
  PhaseGrid g = default_phase_grid(0.5, 1.5, 1.0, 32, 96);
  KineticState s = bimodal(g, 0.5);
  FpaSolver S(cs_bochner());
  Moments m0 = moments(s);
  double dt = 0.8 * S.stable_dt(s);
  for (int k = 0; k < 1000; ++k) s = S.step(s, dt);
  Moments m1 = moments(s);
  EXPECT_NEAR(m1.mass, m0.mass, 1e-12);
  EXPECT_GE(s.f.minCoeff(), 0.0);
  EXPECT_GT(s.t, 1.0);
  EXPECT_NEAR(m1.ubar, m0.ubar, 1e-6);
}

TEST(Fpa, CflErrors) {
  PhaseGrid g = default_phase_grid(0.5, 0.0, 1.0, 32, 64);
  KineticState mu = maxwellian(0.5, 0.0, g);
  FpaSolver S(cs_bochner());
  try {
    S.step(mu, 10 * g.dx() / g.V);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("suggested dt"), std::string::npos);
  }
  PhaseGrid fine{1.0, 8, 4.0, 512};
  KineticState mf = maxwellian(0.5, 0.0, fine);
  try {
    S.step(mf, 0.9 * fine.dx() / fine.V);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("CFL violated in v"), std::string::npos);
  }
}

TEST(Relax, EquilibriumStaysPut) {
  PhaseGrid g = default_phase_grid(0.5, 0.0, 1.0, 32, 64);
  KineticRunOptions o;
  o.T = 1.0;
  o.record_dt = 0.25;
  RelaxResult r = relax_experiment(cs_bochner(), maxwellian(0.5, 0.0, g), o);
  for (double h : r.H) EXPECT_LT(std::abs(h), 1e-12);
  EXPECT_TRUE(r.ck_holds);
}

TEST(Relax, BimodalRelaxes) {
  PhaseGrid g = default_phase_grid(0.5, 1.5, 1.0, 48, 128);
  KineticRunOptions o;
  o.T = 6.0;
  o.record_dt = 0.25;
  RelaxResult r = relax_experiment(cs_bochner(), bimodal(g, 0.5), o);
  EXPECT_TRUE(r.ck_holds);
  EXPECT_LT(r.fit.slope, -0.05);
  for (size_t k = 1; k < r.t.size(); ++k) {
    if (r.t[k] > 1.0) {
      EXPECT_LE(r.H[k], r.H[k - 1]);
    }
  }
  EntropyAudit a = entropy_law_audit(r.t, r.H, true);
  EXPECT_TRUE(a.ok) << a.worst;
}

TEST(Relax, VacuumFillsIn) {
  PhaseGrid g = default_phase_grid(0.5, 0.0, 1.0, 64, 96);
  KineticState s = from_density(g, 0.5, [](double x, double v) {
    return (x < 0.5 ? 1.0 : 0.0) * std::exp(-v * v);
  });
  EXPECT_EQ(moments(s).rho.minCoeff(), 0.0);
  KineticRunOptions o;
  o.T = 0.5;
  o.record_dt = 0.5;
  RelaxResult r = relax_experiment(cs_bochner(), s, o);
  EXPECT_GT(r.min_rho.back(), 0.0);
}

TEST(Relax, EnvelopeForNonConservativeModel) {
  PhaseGrid g = default_phase_grid(0.5, 1.5, 1.0, 32, 96);
  KineticRunOptions o;
  o.T = 2.0;
  o.record_dt = 0.1;
  RelaxResult r = relax_experiment(Model::motsch_tadmor(Kernel::gaussian(0.2)), bimodal(g, 0.5), o);
  EntropyAudit a = entropy_law_audit(r.t, r.H, false);
  EXPECT_TRUE(a.ok);
  EXPECT_GE(a.growth, 0.0);
  EXPECT_THROW(entropy_law_audit({0.0}, {1.0}, true), Error);
}

TEST(Monokinetic, Guards) {
  auto rho0 = [](double x) { return 1 + 0.2 * std::sin(two_pi * x); };
  auto u0 = [](double x) { return 0.3 * std::cos(two_pi * x); };
  MonokineticOptions o;
  o.eps = {0.04};
  EXPECT_THROW(monokinetic_experiment(cs_bochner(), rho0, u0, o), Error);
  o.eps = {0.4};
  o.nx = 64;
  o.nv = 96;
  o.T = 0.25;
  MonokineticResult r = monokinetic_experiment(Model::cucker_smale(Kernel::cs_power(1, 1)), rho0, u0, o);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.points[0].w2));
  EXPECT_GT(r.points[0].w2, 0.0);
  EXPECT_NEAR(r.points[0].delta, 0.16, 1e-15);
}
