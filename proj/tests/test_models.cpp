#include <envavg/probes.hpp>

#include <gtest/gtest.h>

using namespace envavg;

namespace {

Measure random_atoms(std::uint64_t seed, int N, const Domain& d = Domain::torus(1.0)) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  Mat p(N, d.dim);
  Vec w(N);
  for (int i = 0; i < N; ++i) {
    for (int a = 0; a < d.dim; ++a) p(i, a) = U(rng) * (d.periodic(a) ? d.period[a] : 1.0);
    w(i) = 0.2 + U(rng);
  }
  return Measure::atomic(d, p, w / w.sum());
}

Field random_field(std::uint64_t seed, Eigen::Index N, Eigen::Index m = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Field u(N, m);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index c = 0; c < m; ++c) u(i, c) = g(rng);
  return u;
}

std::vector<Model> zoo() {
  return {Model::global(),
          Model::identity(),
          Model::cucker_smale(Kernel::cs_power(1.0, 1.0)),
          Model::cucker_smale(Kernel::bochner(Kernel::gaussian(0.1))),
          Model::motsch_tadmor(Kernel::bump(0.3)),
          Model::beta(Kernel::gaussian(0.15), 0.5),
          Model::overmollified(Kernel::bump(0.3), 256),
          Model::segregation_uniform(4, 1.0, 1.0),
          Model::topological(Kernel::bump(0.4), {})};
}

}  // namespace

TEST(Strength, GlobalIsOne) {
  Measure r = random_atoms(1, 7);
  EXPECT_TRUE((strength(Model::global(), r).array() == 1.0).all());
}

TEST(Strength, CsSingleAtom) {
  Measure r = Measure::atomic(Domain::line(), {0.0}, {1.0});
  Kernel phi = Kernel::cs_power(2.0, 1.0);
  EXPECT_DOUBLE_EQ(strength(Model::cucker_smale(phi), r)(0), phi(0.0));
}

TEST(Strength, BetaHalfTwoAtoms) {
  const double d = 0.37;
  Kernel phi = Kernel::cs_power(1.0, 2.0);
  Measure r = Measure::atomic(Domain::line(), {0.0, d}, {0.5, 0.5});
  double expect = std::sqrt(0.5 * phi(0.0) + 0.5 * phi(d));
  EXPECT_NEAR(strength(Model::beta(phi, 0.5), r)(0), expect, 1e-15);
}

TEST(Strength, ConstantOneModels) {
  Measure r = random_atoms(2, 9);
  for (const Model& m : {Model::motsch_tadmor(Kernel::bump(0.3)), Model::global()})
    EXPECT_NEAR((strength(m, r).array() - 1.0).abs().maxCoeff(), 0.0, 1e-14);
  // overmollified and segregation strengths are one up to quadrature on the carrier
  EXPECT_NEAR((strength(Model::overmollified(Kernel::gaussian(0.1), 512), r).array() - 1.0).abs().maxCoeff(), 0.0, 1e-9);
  EXPECT_NEAR((strength(Model::segregation_uniform(4, 1.0), r).array() - 1.0).abs().maxCoeff(), 0.0, 1e-12);
}

TEST(Strength, VacuumEvaluation) {
  Domain d = Domain::torus(1.0);
  Vec m = Vec::Zero(64);
  m.head(8).setConstant(1.0 / 8);
  Measure r = Measure::grid(d, 64, m);
  try {
    strength(Model::motsch_tadmor(Kernel::bump(0.1)), r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "vacuum evaluation");
  }
  EXPECT_NO_THROW(strength(Model::cucker_smale(Kernel::bump(0.1)), r));
}

TEST(Average, ConstantsAndMaximumPrinciple) {
  for (const Model& M : zoo()) {
    Measure r = random_atoms(3, 12);
    Field c = Field::Constant(12, 2, -1.25);
    Field ac = average(M, r, c);
    EXPECT_NEAR((ac.array() + 1.25).abs().maxCoeff(), 0.0, 1e-10) << M.name();
    Field u = random_field(4, 12, 2);
    Field au = average(M, r, u);
    for (int k = 0; k < 2; ++k) {
      EXPECT_LE(au.col(k).maxCoeff(), u.col(k).maxCoeff() + 1e-12) << M.name();
      EXPECT_GE(au.col(k).minCoeff(), u.col(k).minCoeff() - 1e-12) << M.name();
    }
    // order preservation
    Field pos = u.cwiseAbs();
    EXPECT_GE(average(M, r, pos).minCoeff(), -1e-14) << M.name();
  }
}

TEST(Average, StrengthBound) {
  for (const Model& M : zoo()) {
    Measure r = random_atoms(5, 15);
    EXPECT_LE(strength(M, r).maxCoeff(), M.strength_bound() + 1e-12) << M.name();
  }
}

TEST(Average, GlobalTwoAtoms) {
  Measure r = Measure::atomic(Domain::line(), {0.0, 3.0}, {0.3, 0.7});
  Field u(2, 1);
  u << 2.0, -1.0;
  Field a = average(Model::global(), r, u);
  EXPECT_NEAR(a(0, 0), 0.3 * 2.0 - 0.7, 1e-15);
  EXPECT_NEAR(a(1, 0), 0.3 * 2.0 - 0.7, 1e-15);
}

TEST(Average, SegregationSupportedInOneBump) {
  SegregationSpec s;
  s.centers.resize(2, 1);
  s.centers << 0.0, 1.0;
  s.width = 0.6;
  Model M = Model::segregation(s);
  // every atom lies where the second bump vanishes, so its term is 0/0 and dropped
  Measure r = Measure::atomic(Domain::line(), {-0.3, 0.0, 0.35}, {0.2, 0.5, 0.3});
  Field u(3, 1);
  u << 1.0, -2.0, 4.0;
  Field a = average(M, r, u);
  double mean = 0.2 * 1.0 + 0.5 * -2.0 + 0.3 * 4.0;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(a(i, 0), mean, 1e-14);
}

TEST(Average, SegregationOverlapHandFormula) {
  SegregationSpec s;
  s.centers.resize(2, 1);
  s.centers << 0.0, 0.5;
  s.width = 0.6;
  Model M = Model::segregation(s);
  std::vector<double> x = {0.1, 0.25, 0.45}, w = {0.3, 0.3, 0.4};
  Measure r = Measure::atomic(Domain::line(), x, w);
  Field u(3, 1);
  u << 1.0, 0.0, -1.0;
  auto bump = [](double t) { return std::abs(t) < 0.6 ? std::exp(1 - 1 / (1 - t * t / 0.36)) : 0.0; };
  auto g = [&](int l, double y) {
    double b0 = bump(y), b1 = bump(y - 0.5);
    return (l == 0 ? b0 : b1) / (b0 + b1);
  };
  for (int i = 0; i < 3; ++i) {
    double expect = 0;
    for (int l = 0; l < 2; ++l) {
      double num = 0, den = 0;
      for (int j = 0; j < 3; ++j) {
        num += w[j] * u(j, 0) * g(l, x[j]);
        den += w[j] * g(l, x[j]);
      }
      expect += g(l, x[i]) * num / den;
    }
    EXPECT_NEAR(average(M, r, u)(i, 0), expect, 1e-14);
  }
}

TEST(Average, SegregationPartitionOfUnity) {
  Model M = Model::segregation_uniform(5, 1.0, 0.8);
  Mat pts(200, 1);
  for (int i = 0; i < 200; ++i) pts(i, 0) = i / 200.0;
  Mat G = detail::segregation_values(M.seg(), Domain::torus(1.0), pts);
  EXPECT_NEAR((G.rowwise().sum().array() - 1.0).abs().maxCoeff(), 0.0, 1e-10);
}

TEST(Average, RoughPartitionGridOnly) {
  Model M = Model::rough_partition({{0.0, 0.25, 0.5}});
  EXPECT_THROW(strength(M, random_atoms(6, 4)), Error);
  Measure g = Measure::uniform_grid(Domain::torus(1.0), 64);
  Field u(64, 1);
  for (int i = 0; i < 64; ++i) u(i, 0) = i;
  Field a = average(M, g, u);
  // block [0, 0.25) holds cells 0..15
  EXPECT_NEAR(a(3, 0), 7.5, 1e-12);
  EXPECT_NEAR(a(40, 0), (32 + 63) / 2.0, 1e-12);
  Vec m = Vec::Zero(64);
  m.tail(32).setConstant(1.0 / 32);
  EXPECT_THROW(strength(M, Measure::grid(Domain::torus(1.0), 64, m)), Error);
}

TEST(KernelMatrix, RowIdentityAndReproduction) {
  for (const Model& M : zoo()) {
    Measure r = random_atoms(7, 11);
    KernelMatrix km = kernel_matrix(M, r);
    Vec rows = km.phi * r.weights();
    EXPECT_NEAR((rows - km.strength).cwiseAbs().maxCoeff(), 0.0, 1e-9) << M.name();
    Field u = random_field(8, 11, 2);
    Field w = km.phi * (r.weights().asDiagonal() * u);
    Field sa = km.strength.asDiagonal() * average(M, r, u);
    EXPECT_NEAR((w - sa).cwiseAbs().maxCoeff(), 0.0, 1e-9) << M.name();
  }
}

TEST(KernelMatrix, CsSymmetricMtNot) {
  Measure r = random_atoms(9, 6);
  Kernel phi = Kernel::bump(0.5);
  Mat cs = kernel_matrix(Model::cucker_smale(phi), r).phi;
  EXPECT_NEAR((cs - cs.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(cs(i, j), phi(r.dist(i, j)));
  Mat mt = kernel_matrix(Model::motsch_tadmor(phi), r).phi;
  EXPECT_GT((mt - mt.transpose()).cwiseAbs().maxCoeff(), 1e-3);
  Vec rp = cs * r.weights();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(mt(i, j), phi(r.dist(i, j)) / rp(i), 1e-14);
}

TEST(KernelMatrix, SegregationSymmetric) {
  Measure r = random_atoms(10, 5);
  Mat k = kernel_matrix(Model::segregation_uniform(3, 1.0), r).phi;
  EXPECT_NEAR((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_THROW(kernel_matrix(Model::global(), Measure::uniform_grid(Domain::torus(1.0), 10001)), Error);
}

TEST(Conservative, CsTrueMtFalseGlobalTrue) {
  Measure r10 = random_atoms(11, 10);
  CheckResult cs = check_conservative(Model::cucker_smale(Kernel::cs_power(1.0, 1.0)), r10);
  EXPECT_TRUE(cs.ok);
  EXPECT_LT(cs.residual, 1e-10);
  Measure r3 = Measure::atomic(Domain::line(), {0.0, 0.1, 0.35}, {0.2, 0.5, 0.3});
  EXPECT_FALSE(check_conservative(Model::motsch_tadmor(Kernel::cs_power(1.0, 2.0)), r3).ok);
  EXPECT_TRUE(check_conservative(Model::global(), r10).ok);
}

TEST(Conservative, DeclaredFlagsOnRandomMeasures) {
  int mt_failures = 0;
  for (int t = 0; t < 100; ++t) {
    Measure r = random_atoms(100 + t, 8);
    for (const Model& M : zoo()) {
      if (!M.flags().conservative) continue;
      EXPECT_TRUE(check_conservative(M, r, 1e-9, {20, 7}).ok) << M.name();
    }
    if (!check_conservative(Model::motsch_tadmor(Kernel::bump(0.3)), r, 1e-9, {20, 7}).ok) ++mt_failures;
  }
  EXPECT_GT(mt_failures, 0);
}

TEST(BallPositive, Overmollified) {
  for (int t = 0; t < 5; ++t) EXPECT_TRUE(check_ball_positive(Model::overmollified(Kernel::bump(0.3), 256), random_atoms(20 + t, 10)).ok);
}

TEST(BallPositive, CsBochner) {
  Model M = Model::cucker_smale(Kernel::bochner(Kernel::bump(0.2)));
  for (int t = 0; t < 5; ++t) EXPECT_TRUE(check_ball_positive(M, random_atoms(30 + t, 10)).ok);
}

TEST(BallPositive, TopologicalCounterexampleFound) {
  Model M = Model::topological(Kernel::bump(0.4), {});
  CounterexampleSearch s = search_topological_counterexample(M, Domain::line(), 2024);
  EXPECT_TRUE(s.found);
  EXPECT_LT(s.margin, -1e-10);
}

TEST(Jensen, Profiles) {
  Measure r = random_atoms(40, 8);
  Field c = Field::Constant(8, 1, 0.7);
  CheckResult eq = check_jensen(Model::cucker_smale(Kernel::bump(0.4)), r, c, ConvexProfile::abs);
  EXPECT_TRUE(eq.ok);
  EXPECT_NEAR(eq.residual, 0.0, 1e-14);
  Field u = random_field(41, 8);
  CheckResult var = check_jensen(Model::global(), r, u, ConvexProfile::square);
  EXPECT_TRUE(var.ok);
  EXPECT_GT(var.residual, 0.0);
  double mean = r.weights().dot(u.col(0));
  double variance = (r.weights().array() * (u.col(0).array() - mean).square()).sum();
  EXPECT_NEAR(var.residual, variance, 1e-12);
  for (const Model& M : zoo()) {
    for (ConvexProfile p : {ConvexProfile::square, ConvexProfile::abs, ConvexProfile::cosh_minus_one}) {
      EXPECT_TRUE(check_jensen(M, r, u, p).ok) << M.name();
    }
  }
}

TEST(Kmt, BetaOneIsOneAndUniform) {
  Kernel phi = Kernel::bump(0.2);
  Measure uni = Measure::uniform_grid(Domain::torus(1.0), 128);
  Measure rough = Measure::grid_density(Domain::torus(1.0), 128, [](double x, double) { return 1.0 + std::sin(6 * x) * std::sin(6 * x); });
  EXPECT_DOUBLE_EQ(check_kmt_inequality(phi, 1.0, rough), 1.0);
  EXPECT_NEAR(check_kmt_inequality(phi, 0.0, uni), 1.0, 1e-12);
}

TEST(Galilean, TranslationInvariantModels) {
  Eigen::RowVectorXd h(1);
  h << 0.3141;
  for (const Model& M : zoo()) {
    if (!M.flags().galilean) continue;
    Measure r = random_atoms(50, 9);
    EXPECT_LT(galilean_residual(M, r, random_field(51, 9), h), 1e-12) << M.name();
  }
  Model seg = Model::segregation_uniform(3, 1.0);
  EXPECT_GT(galilean_residual(seg, random_atoms(50, 9), random_field(51, 9), h), 1e-6);
}

TEST(Implications, SymmetricAndBallPositiveImplyConservative) {
  for (int t = 0; t < 30; ++t) {
    Measure r = random_atoms(200 + t, 7);
    for (const Model& M : zoo()) {
      PropertyReport p = property_report(M, r, {30, 3});
      if (p.symmetric.ok) {
        EXPECT_TRUE(p.conservative.ok) << M.name();
      }
      if (p.ball_positive.ok) {
        EXPECT_TRUE(p.conservative.ok) << M.name();
      }
      EXPECT_TRUE(p.agree) << M.name();
    }
  }
}

TEST(Models, DescribeAndParse) {
  EXPECT_EQ(parse_kind("cucker_smale"), ModelKind::cucker_smale);
  EXPECT_THROW(parse_kind("nope"), Error);
  std::string d = Model::overmollified(Kernel::bump(0.3)).describe();
  EXPECT_NE(d.find("locality radius r0: 0.15"), std::string::npos);
  EXPECT_THROW(Model::beta(Kernel::bump(0.3), 1.5), Error);
}

TEST(Models, TwoDimensional) {
  Domain d = Domain::torus(1.0, 2);
  Measure r = random_atoms(60, 12, d);
  for (const Model& M : {Model::cucker_smale(Kernel::gaussian(0.2)), Model::overmollified(Kernel::gaussian(0.15), 256),
                         Model::topological(Kernel::bump(0.5), {})}) {
    Field u = random_field(61, 12, 2);
    Field a = average(M, r, u);
    EXPECT_LE(a.col(0).maxCoeff(), u.col(0).maxCoeff() + 1e-12);
    EXPECT_TRUE(check_conservative(M, r).ok) << M.name();
  }
}
