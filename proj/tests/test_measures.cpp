#include <envavg/measure.hpp>
#include <envavg/transport.hpp>

#include <gtest/gtest.h>

using namespace envavg;

TEST(Measure, RejectsBadMass) {
  Domain d = Domain::line();
  EXPECT_THROW(Measure::atomic(d, {0.0, 1.0}, {0.5, 0.6}), Error);
  EXPECT_THROW(Measure::atomic(d, {0.0, 1.0}, {1.5, -0.5}), Error);
  EXPECT_NO_THROW(Measure::atomic(d, {0.0, 1.0}, {0.5, 0.5}));
}

TEST(Measure, TorusPositionsWrapped) {
  Measure m = Measure::atomic(Domain::torus(2.0), {-0.5, 2.5}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(m.point(0)(0), 1.5);
  EXPECT_DOUBLE_EQ(m.point(1)(0), 0.5);
}

TEST(Convolve, SingleAtom) {
  Measure m = Measure::atomic(Domain::line(), {0.0}, {1.0});
  Kernel k = Kernel::gaussian(0.3);
  EXPECT_DOUBLE_EQ(convolve(m, k, 0.0), k(0.0));
}

TEST(Convolve, UniformGridWithMollifierIsConstant) {
  const double L = 2.0;
  Domain d = Domain::torus(L);
  Measure m = Measure::uniform_grid(d, 512);
  Kernel k = Kernel::bump(0.3).mollifier(1);
  for (double x : {0.0, 0.37, 1.2, 1.99}) EXPECT_NEAR(convolve(m, k, x), 1.0 / L, 1e-10);
}

TEST(Convolve, TwoAtomsBump) {
  // tabulated flat-top kernel equal to 1 on [0, 0.2)
  Kernel k = Kernel::tabulated({0.0, 0.2 - 1e-12, 0.2}, {1.0, 1.0, 0.0});
  Measure m = Measure::atomic(Domain::line(), {0.0, 0.3}, {0.5, 0.5});
  EXPECT_NEAR(convolve(m, k, 0.0), 0.5, 1e-12);
}

TEST(Convolve, MollifierMassOnGrid) {
  Domain d = Domain::torus(1.0);
  Measure rho = Measure::grid_density(d, 256, [](double x, double) { return 1.0 + 0.5 * std::sin(2 * M_PI * x); });
  Kernel k = Kernel::gaussian(0.05).mollifier(1);
  double total = 0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) total += convolve(rho, k, rho.point(i)) * rho.spacing();
  EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(Kernel, MollifierIntegrals) {
  EXPECT_NEAR(Kernel::bump(0.4).mollifier(1).integral(1), 1.0, 1e-10);
  EXPECT_NEAR(Kernel::gaussian(0.2).mollifier(2).integral(2), 1.0, 1e-10);
  EXPECT_NEAR(Kernel::cs_power(1.0, 3.0).mollifier(1).integral(1), 1.0, 1e-8);
  EXPECT_THROW(Kernel::cs_power(1.0, 0.4).mollifier(1), Error);
}

TEST(Kernel, BochnerGaussianClosedForm) {
  Kernel psi = Kernel::gaussian(0.1);
  Kernel phi = Kernel::bochner(psi, 1);
  // (psi*psi)(r) = sqrt(pi) h exp(-r^2/(4h^2))
  for (double r : {0.0, 0.05, 0.2}) EXPECT_NEAR(phi(r), std::sqrt(M_PI) * 0.1 * std::exp(-r * r / 0.04), 1e-14);
  EXPECT_TRUE(phi.positive_definite());
}

TEST(Kernel, BochnerCompactMatchesDirectQuadrature) {
  Kernel psi = Kernel::bump(0.2);
  Kernel phi = Kernel::bochner(psi, 1);
  EXPECT_EQ(phi.support(), 0.4);
  // independent trapezoid quadrature of psi*psi
  for (double r : {0.0, 0.07, 0.21, 0.35}) {
    const int n = 200000;
    double s = 0, h = 0.4 / n;
    for (int i = 0; i <= n; ++i) {
      double z = -0.2 + i * h;
      double w = (i == 0 || i == n) ? 0.5 : 1.0;
      s += w * psi(z) * psi(r - z);
    }
    EXPECT_NEAR(phi(r), s * h, 1e-8);
  }
  EXPECT_EQ(phi(0.41), 0.0);
}

TEST(Thickness, UniformDensity) {
  const double L = 1.0, r = 0.1;
  Measure m = Measure::uniform_grid(Domain::torus(L), 1000);
  // the cutoff integrates to 1.5 r in 1D
  EXPECT_NEAR(ball_thickness(m, r), 1.5 * r / L, 1e-6);
}

TEST(Thickness, SingleAtomAndFarPoint) {
  Measure m = Measure::atomic(Domain::line(), {0.0}, {1.0});
  Mat S(1, 1);
  S << 0.0;
  EXPECT_DOUBLE_EQ(ball_thickness(m, 0.3, S), 1.0);
  S << 0.31;
  EXPECT_DOUBLE_EQ(ball_thickness(m, 0.3, S), 0.0);
  EXPECT_THROW(ball_thickness(m, 0.3, Mat(0, 1)), Error);
}

TEST(Thickness, MonotoneInRadius) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> x(30), w(30, 1.0 / 30);
  for (auto& v : x) v = U(rng);
  Measure m = Measure::atomic(Domain::torus(1.0), x, w);
  double prev = 0;
  for (double r : {0.02, 0.05, 0.1, 0.2, 0.4}) {
    double t = ball_thickness(m, r);
    EXPECT_GE(t, prev - 1e-15);
    prev = t;
  }
}

TEST(Mollified, ConstantsPreserved) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> x(20), w(20, 0.05);
  for (auto& v : x) v = U(rng);
  Measure m = Measure::atomic(Domain::torus(1.0), x, w);
  Field u = Field::Constant(20, 1, 2.5);
  Field ud = mollified_velocity(u, m, 0.05);
  EXPECT_NEAR((ud.array() - 2.5).abs().maxCoeff(), 0.0, 1e-12);
  EXPECT_THROW(mollified_velocity(u, m, 0.0), Error);
}

TEST(Mollified, SingleAtomAndMaxPrinciple) {
  Measure one = Measure::atomic(Domain::line(), {0.3}, {1.0});
  Field u(1, 1);
  u << -1.7;
  EXPECT_NEAR(mollified_velocity(u, one, 0.1)(0, 0), -1.7, 1e-14);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0, 1);
  std::vector<double> x(40), w(40, 1.0 / 40);
  for (auto& v : x) v = U(rng);
  Measure m = Measure::atomic(Domain::torus(1.0), x, w);
  Field f(40, 1);
  for (int i = 0; i < 40; ++i) f(i, 0) = std::sin(2 * M_PI * x[i]) + 0.3 * (U(rng) - 0.5);
  Field fd = mollified_velocity(f, m, 0.07);
  EXPECT_LE(fd.cwiseAbs().maxCoeff(), f.cwiseAbs().maxCoeff() + 1e-14);
}

TEST(Mollified, LinearRateOnLipschitzField) {
  // rough multiscale measure; error of u_delta in L2(rho) against delta
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0, 1);
  const int N = 400;
  std::vector<double> x(N), w(N);
  for (int i = 0; i < N; ++i) {
    x[i] = U(rng);
    w[i] = std::pow(U(rng), 3);
  }
  double tot = 0;
  for (double v : w) tot += v;
  for (double& v : w) v /= tot;
  Measure m = Measure::atomic(Domain::torus(1.0), x, w);
  Field u(N, 1);
  for (int i = 0; i < N; ++i) u(i, 0) = std::abs(std::sin(2 * M_PI * x[i]));
  std::vector<double> ld, le;
  for (double d : {0.1, 0.05, 0.025}) {
    Field e = mollified_velocity(u, m, d) - u;
    double err = std::sqrt((m.weights().array() * e.col(0).array().square()).sum());
    ld.push_back(std::log(d));
    le.push_back(std::log(err));
  }
  LinearFit f = fit_line(ld, le);
  EXPECT_GT(f.slope, 0.5);
}

TEST(Domain, MinimalImage) {
  Domain d = Domain::torus(1.0);
  EXPECT_NEAR(d.disp(0, 0.9, 0.1), 0.2, 1e-15);
  EXPECT_NEAR(d.disp(0, 0.1, 0.9), -0.2, 1e-15);
  Eigen::RowVector2d a(0.05, 0.95), b(0.95, 0.05);
  EXPECT_NEAR(Domain::torus(1.0, 2).dist(a, b), std::sqrt(0.02), 1e-15);
}
