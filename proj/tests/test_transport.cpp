#include <envavg/transport.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace envavg;

namespace {

// Uniform n-to-n transport is attained at a permutation: brute force over all of them.
double brute_permutation(const Measure& a, const Measure& b, int p) {
  const int n = static_cast<int>(a.size());
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  double best = 1e300;
  do {
    double c = 0;
    for (int i = 0; i < n; ++i) {
      double d = a.domain().dist(a.point(i), b.point(perm[i]));
      c += (p == 1 ? d : d * d) / n;
    }
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return p == 1 ? best : std::sqrt(best);
}

Measure random_uniform(std::mt19937_64& rng, const Domain& d, int n) {
  std::uniform_real_distribution<double> U(-1, 2);
  Mat p(n, d.dim);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d.dim; ++a) p(i, a) = U(rng);
  return Measure::uniform_atoms(d, p);
}

const std::vector<double> X = {0.8753, 1.6916, 1.3271, -0.3244, -0.0995, 1.6207};
const std::vector<double> A = {0.086876, 0.132029, 0.146139, 0.157743, 0.262686, 0.214527};
const std::vector<double> Y = {-0.9842, 1.4637, 1.3912, 0.4038, -0.0909, -0.1647};
const std::vector<double> B = {0.221558, 0.332371, 0.098627, 0.081977, 0.218638, 0.046829};

}  // namespace

TEST(Wasserstein, IdenticalIsZero) {
  std::mt19937_64 rng(1);
  Measure m = random_uniform(rng, Domain::line(), 6);
  EXPECT_EQ(wasserstein1(m, m), 0.0);
  EXPECT_EQ(wasserstein2(m, m), 0.0);
}

TEST(Wasserstein, DiracShift) {
  Domain d = Domain::line();
  Measure a = Measure::atomic(d, {0.0}, {1.0}), b = Measure::atomic(d, {0.7}, {1.0});
  EXPECT_DOUBLE_EQ(wasserstein1(a, b), 0.7);
  EXPECT_DOUBLE_EQ(wasserstein2(a, b), 0.7);
}

TEST(Wasserstein, LineMatchesPermutationOracle) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 5; ++t) {
    Measure a = random_uniform(rng, Domain::line(), 6), b = random_uniform(rng, Domain::line(), 6);
    EXPECT_NEAR(wasserstein1(a, b), brute_permutation(a, b, 1), 1e-9);
    EXPECT_NEAR(wasserstein2(a, b), brute_permutation(a, b, 2), 1e-9);
  }
}

TEST(Wasserstein, CircleMatchesPermutationOracle) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 5; ++t) {
    Measure a = random_uniform(rng, Domain::torus(1.0), 6), b = random_uniform(rng, Domain::torus(1.0), 6);
    EXPECT_NEAR(wasserstein1(a, b), brute_permutation(a, b, 1), 1e-9);
    EXPECT_NEAR(wasserstein2(a, b), brute_permutation(a, b, 2), 1e-9);
  }
}

TEST(Wasserstein, TwoDimMatchesPermutationOracle) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 3; ++t) {
    Measure a = random_uniform(rng, Domain::torus(1.0, 2), 6), b = random_uniform(rng, Domain::torus(1.0, 2), 6);
    EXPECT_NEAR(wasserstein1(a, b), brute_permutation(a, b, 1), 1e-9);
    EXPECT_NEAR(wasserstein2(a, b), brute_permutation(a, b, 2), 1e-9);
  }
}

// Reference values from a generic LP solver on the same instances.
TEST(Wasserstein, NonUniformLineMatchesLp) {
  Domain d = Domain::line();
  Measure a = Measure::atomic(d, X, A), b = Measure::atomic(d, Y, B);
  EXPECT_NEAR(wasserstein1(a, b), 0.365979982, 1e-9);
  EXPECT_NEAR(wasserstein2(a, b), 0.5009921804182975, 1e-9);
}

TEST(Wasserstein, NonUniformCircleMatchesLp) {
  Domain d = Domain::torus(1.0);
  Measure a = Measure::atomic(d, X, A), b = Measure::atomic(d, Y, B);
  EXPECT_NEAR(wasserstein1(a, b), 0.13335054400000004, 1e-9);
  EXPECT_NEAR(wasserstein2(a, b), 0.14802730903228636, 1e-9);
}

TEST(Wasserstein, NonUniformTorus2DMatchesLp) {
  Domain d = Domain::torus(1.0, 2);
  Mat P(7, 2), Q(5, 2);
  P << 0.0357, 0.5149, 0.4662, 0.9172, 0.6292, 0.5141, 0.4969, 0.2475, 0.0118, 0.1924, 0.692, 0.2006, 0.3695, 0.0037;
  Q << 0.83, 0.1545, 0.2676, 0.8803, 0.5098, 0.8472, 0.6397, 0.7418, 0.0915, 0.5411;
  Vec wa(7), wb(5);
  wa << 0.159252, 0.252802, 0.12154, 0.182525, 0.04383, 0.128345, 0.111706;
  wb << 0.075305, 0.267249, 0.141357, 0.314059, 0.20203;
  Measure a = Measure::atomic(d, P, wa), b = Measure::atomic(d, Q, wb);
  EXPECT_NEAR(wasserstein1(a, b), 0.22703034979425016, 1e-9);
  EXPECT_NEAR(wasserstein2(a, b), 0.26642716117312437, 1e-9);
}

TEST(Wasserstein, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 rng(14);
  for (const Domain& d : {Domain::line(), Domain::torus(1.0), Domain::torus(1.0, 2)}) {
    for (int t = 0; t < 10; ++t) {
      Measure a = random_uniform(rng, d, 7), b = random_uniform(rng, d, 9), c = random_uniform(rng, d, 5);
      double ab = wasserstein1(a, b), ba = wasserstein1(b, a), bc = wasserstein1(b, c), ac = wasserstein1(a, c);
      EXPECT_NEAR(ab, ba, 1e-9);
      EXPECT_LE(ac, ab + bc + 1e-9);
      EXPECT_LE(ab, wasserstein2(a, b) + 1e-9);
    }
  }
}

TEST(Wasserstein, Errors) {
  std::mt19937_64 rng(15);
  Measure a = random_uniform(rng, Domain::line(), 3), b = random_uniform(rng, Domain::torus(3.0), 3);
  EXPECT_THROW(wasserstein1(a, b), Error);
  Measure big = random_uniform(rng, Domain::torus(1.0, 2), 501), small = random_uniform(rng, Domain::torus(1.0, 2), 3);
  try {
    wasserstein1(big, small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "instance too large for exact OT");
  }
}

TEST(ExactTransport, PlanMarginals) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> U(0, 1);
  Vec a(8), b(11);
  for (auto& v : a) v = U(rng);
  for (auto& v : b) v = U(rng);
  a /= a.sum();
  b /= b.sum();
  Mat C(8, 11);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 11; ++j) C(i, j) = U(rng);
  TransportPlan p = exact_transport(a, b, C);
  EXPECT_NEAR((p.plan.rowwise().sum() - a).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR((p.plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_GE(p.plan.minCoeff(), -1e-15);
}
