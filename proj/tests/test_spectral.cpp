#include <envavg/spectral.hpp>
#include <envavg/spectral_constants.hpp>

#include <gtest/gtest.h>

using namespace envavg;

namespace {

Measure random_density(std::uint64_t seed, double amp) {
  std::mt19937_64 rng = job_rng(seed, 0);
  return random_grid_density(rng, reference::domain(), reference::cells, amp);
}

Measure random_atoms(std::uint64_t seed, int N, const Domain& d) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> x(N), w(N);
  for (int i = 0; i < N; ++i) {
    x[i] = d.is_torus() ? U(rng) * d.period[0] : 2 * U(rng);
    w[i] = 0.2 + U(rng);
  }
  double t = 0;
  for (double v : w) t += v;
  for (double& v : w) v /= t;
  return Measure::atomic(d, x, w);
}

}  // namespace

TEST(Energies, ConstantField) {
  Measure rho = random_density(1, 1.0);
  for (const Model& M : {Model::global(), reference::overmollified(), reference::cs_bochner(),
                         Model::motsch_tadmor(Kernel::gaussian(0.1))}) {
    Averager a(M, rho);
    const double kap = a.masses().dot(a.strength());
    Field u = Field::Constant(rho.size(), 1, -1.7);
    Energies e = energies(a, u);
    EXPECT_NEAR(e.E0, 1.7 * 1.7 * kap, 1e-12) << M.name();
    EXPECT_NEAR(e.E1, e.E0, 1e-10) << M.name();
    EXPECT_NEAR(e.E2, e.E0, 1e-10) << M.name();
  }
}

TEST(Energies, GlobalZeroMomentum) {
  Measure rho = random_atoms(3, 12, Domain::torus(1.0));
  Vec u = Vec::LinSpaced(12, -1, 2);
  u.array() -= rho.weights().dot(u);
  Energies e = energies(Model::global(), rho, u);
  EXPECT_NEAR(e.E1, 0.0, 1e-15);
  EXPECT_NEAR(e.E2, 0.0, 1e-15);
  EXPECT_NEAR(e.E0, rho.weights().dot(u.cwiseAbs2()), 1e-15);
}

TEST(Energies, ChainAndA0AboveA1OnProbes) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  Measure rho = random_density(2, 1.5);
  for (const Model& M : {reference::overmollified(), reference::cs_bochner(), reference::segregation()}) {
    Averager a(M, rho);
    int bad = 0;
    for (int p = 0; p < 1000; ++p) {
      Field u(rho.size(), 1);
      for (Eigen::Index i = 0; i < u.rows(); ++i) u(i, 0) = g(rng);
      Energies e = energies(a, u);
      const double tol = 1e-12 * e.E0;
      if (!(e.E0 >= e.E1 - tol && e.E1 >= e.E2 - tol && e.A0() >= e.A1() - tol)) ++bad;
    }
    EXPECT_EQ(bad, 0) << M.name();
  }
}

TEST(Energies, NonBallPositiveProbeBreaksLowerLink) {
  // kernel weaker at the origin than at distance 1: the two atoms mostly average each other
  Measure rho = Measure::atomic(Domain::line(), {0.0, 1.0}, {0.5, 0.5});
  Model M = Model::cucker_smale(Kernel::tabulated({0.0, 0.5, 1.0, 1.5}, {0.1, 0.5, 1.0, 0.0}));
  EXPECT_FALSE(check_ball_positive(M, rho).ok);
  Averager a(M, rho);
  FiniteModel fm = finite_model_of(a);
  Mat KA = fm.kappa.asDiagonal() * fm.A;
  Mat Q = sym(KA) - fm.A.transpose() * fm.kappa.asDiagonal() * fm.A;
  Eigen::SelfAdjointEigenSolver<Mat> es(Q);
  Energies e = energies(a, Field(es.eigenvectors().col(0)));
  EXPECT_LT(e.E1, e.E2);
}

TEST(Gap, IdentityAndGlobal) {
  Measure rho = random_atoms(4, 10, Domain::torus(1.0));
  EXPECT_NEAR(spectral_gap(Model::identity(), rho, GapFlavor::numerical_range), 0.0, 1e-12);
  EXPECT_NEAR(spectral_gap(Model::identity(), rho, GapFlavor::variational_lambda), 0.0, 1e-12);
  EXPECT_NEAR(spectral_gap(Model::global(), rho, GapFlavor::numerical_range), 1.0, 1e-12);
  EXPECT_NEAR(spectral_gap(Model::global(), rho, GapFlavor::variational_lambda), 1.0, 1e-12);
}

TEST(Gap, WorstFieldAttainsNumericalRange) {
  Measure rho = random_density(6, 1.0);
  GapReport r = low_energy_bounds(reference::overmollified(), rho, gap_constants::overmollified);
  EXPECT_NEAR(r.E0, 1.0, 1e-10);
  EXPECT_NEAR(r.A0, r.eps_measured * r.E0, 1e-10);
  EXPECT_GE(r.A0, r.A1 - 1e-12);
  EXPECT_NEAR(r.eps_measured, spectral_gap(reference::overmollified(), rho, GapFlavor::numerical_range), 1e-10);
}

TEST(Gap, FrozenConstantsMatchCalibration) {
  const Domain d = reference::domain();
  const int n = reference::cells;
  EXPECT_NEAR(calibrate_gap_constant(reference::overmollified(), d, n) / gap_constants::overmollified, 1.0, 1e-9);
  EXPECT_NEAR(calibrate_gap_constant(reference::cs_bochner(), d, n) / gap_constants::cs_bochner, 1.0, 1e-9);
  EXPECT_NEAR(calibrate_gap_constant(reference::segregation(), d, n) / gap_constants::segregation, 1.0, 1e-9);
  EXPECT_NEAR(calibrate_gap_constant(reference::beta_half(), d, n) / gap_constants::beta_half, 1.0, 1e-9);
}

TEST(Gap, LowEnergyBoundsOnRandomDensities) {
  int violations = 0;
  for (int s = 0; s < 12; ++s) {
    Measure rho = random_density(100 + s, 0.5 + 0.25 * s);
    GapReport a = low_energy_bounds(reference::overmollified(), rho, gap_constants::overmollified);
    GapReport b = low_energy_bounds(reference::cs_bochner(), rho, gap_constants::cs_bochner);
    GapReport c = low_energy_bounds(reference::segregation(), rho, gap_constants::segregation);
    for (const GapReport* r : {&a, &b, &c}) {
      if (!r->holds) ++violations;
      EXPECT_GT(r->eps_bound, 0.0);
      EXPECT_GE(r->A0, r->A1 - 1e-12);
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(Gap, BetaNearUniform) {
  int checked = 0;
  for (int s = 0; s < 20; ++s) {
    Measure rho = random_density(300 + s, 0.1);
    if (uniform_l1_deviation(rho) > beta_uniform_delta) continue;
    ++checked;
    EXPECT_TRUE(low_energy_bounds(reference::beta_half(), rho, gap_constants::beta_half).holds);
  }
  EXPECT_GT(checked, 10);
  Measure far = random_density(5, 2.0);
  ASSERT_GT(uniform_l1_deviation(far), beta_uniform_delta);
  EXPECT_THROW(low_energy_bounds(reference::beta_half(), far, gap_constants::beta_half), Error);
}

TEST(Gap, InapplicableModels) {
  Measure rho = Measure::uniform_grid(reference::domain(), 64);
  for (const Model& M : {Model::identity(), Model::global(), Model::motsch_tadmor(Kernel::gaussian(0.1)),
                         Model::cucker_smale(Kernel::bump(0.2))}) {
    try {
      low_energy_bounds(M, rho, 1.0);
      FAIL() << M.name();
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find("low-energy method inapplicable"), std::string::npos);
    }
  }
}

TEST(Gap, CsLambdaKinematicEstimate) {
  // fresh densities, not the calibration sample
  const Kernel phi = Kernel::bochner(reference::psi()).mollifier();
  double worst = 1e300;
  for (int s = 0; s < 30; ++s) {
    Measure rho = random_density(500 + s, reference::lambda_amp);
    Vec dens = rho.density();
    double lam = spectral_gap(Model::cucker_smale(phi), rho, GapFlavor::variational_lambda);
    worst = std::min(worst, lam * dens.maxCoeff() / (dens.minCoeff() * dens.minCoeff()));
  }
  EXPECT_GE(worst, gap_constants::cs_lambda);
  EXPECT_LT(worst, 2 * gap_constants::cs_lambda);
}

TEST(Flatness, UniformPeakedAndGentle) {
  const Kernel phi = Kernel::bochner(reference::psi());
  Measure uni = Measure::uniform_grid(reference::domain(), 256);
  FlatnessGap f = cs_flatness_gap(uni, phi);
  EXPECT_NEAR(f.ratio, 1.0, 1e-12);
  EXPECT_NEAR(f.eps, 1.0 - f.c0, 1e-12);
  EXPECT_LT(f.c0, 1.0);
  EXPECT_NEAR(f.eps, spectral_gap(Model::cucker_smale(phi), uni, GapFlavor::numerical_range), 1e-9);

  // peak with rho/rho_phi beyond 1/c0
  Measure peak = Measure::grid_density(reference::domain(), 256, [](double x, double) {
    return 0.05 + std::exp(-std::pow((x - 0.5) / 0.01, 2));
  });
  FlatnessGap p = cs_flatness_gap(peak, phi);
  EXPECT_GT(p.ratio, 1.0 / p.c0);
  EXPECT_FALSE(p.applicable);

  Measure gentle = Measure::grid_density(reference::domain(), 256, [](double x, double) {
    return 1 + 0.1 * std::cos(2 * M_PI * x);
  });
  FlatnessGap g = cs_flatness_gap(gentle, phi);
  ASSERT_TRUE(g.applicable);
  EXPECT_GT(g.eps, 0.0);
  EXPECT_LE(g.eps, spectral_gap(Model::cucker_smale(phi), gentle, GapFlavor::numerical_range) + 1e-12);
}

TEST(MtGap, Condition) {
  const Kernel phi = Kernel::bochner(reference::psi());
  const double c = gap_constants::cs_lambda;
  MtGap u = mt_gap_condition(Measure::uniform_grid(reference::domain(), 256), phi, c);
  EXPECT_TRUE(u.holds);
  EXPECT_GT(u.lambda_predicted, 0.0);
  EXPECT_GE(u.lambda_measured, u.lambda_predicted);
  Measure half = Measure::grid_density(reference::domain(), 256, [](double x, double) {
    return 1 + 0.25 * std::cos(2 * M_PI * x);
  });
  EXPECT_FALSE(mt_gap_condition(half, phi, c).holds);
  int held = 0;
  for (int s = 0; s < 20; ++s) {
    Measure rho = random_density(700 + s, 0.01);
    MtGap g = mt_gap_condition(rho, phi, c);
    if (!g.holds) continue;
    ++held;
    EXPECT_GE(g.lambda_measured, g.lambda_predicted);
  }
  EXPECT_GT(held, 10);
}

TEST(Identities, OvermollifiedAlignmentFormula) {
  const Kernel phi = Kernel::bump(0.2);
  Model M = Model::overmollified(phi, 512);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  for (int s = 0; s < 3; ++s) {
    Measure rho = random_density(900 + s, 1.0 + s);
    Vec u(rho.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = g(rng);
    Energies e = energies(M, rho, u);
    double q = overmollified_alignment_quadrature(phi, rho, u, 1024);
    EXPECT_NEAR(e.A1(), q, 1e-8);
  }
}

TEST(Identities, NestedFavre) {
  const Kernel psi = Kernel::gaussian(0.15);
  Model cs = Model::cucker_smale(Kernel::bochner(psi));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 1);
  for (int s = 0; s < 10; ++s) {
    Measure rho = random_atoms(40 + s, 8 + s, Domain::line());
    Vec u(rho.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = g(rng);
    Vec direct = Averager(cs, rho).average(u);
    Vec nested = nested_favre_average(psi, rho, u, 0.01);
    EXPECT_LT((direct - nested).cwiseAbs().maxCoeff(), 1e-9);
  }
}
