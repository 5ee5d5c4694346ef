#include <gtest/gtest.h>

#include <random>

#include "r3dla/fetchq.hpp"

using namespace r3dla;

namespace {

Distribution random_dist(std::mt19937_64& rng, int lo, int hi) {
  Distribution d{lo, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = lo; k <= hi; ++k) d.p.push_back(u(rng) < 0.2 ? 0.0 : u(rng));
  if (d.sum() == 0.0) d.p[0] = 1.0;
  double s = d.sum();
  for (double& x : d.p) x /= s;
  return d;
}

// Stationary vector by Gaussian elimination on (P - I) q = 0 with sum(q) = 1.
std::vector<double> solve_stationary(const std::vector<std::vector<double>>& P) {
  const std::size_t n = P.size();
  std::vector<std::vector<double>> A(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A[i][j] = P[i][j] - (i == j ? 1.0 : 0.0);
  for (std::size_t j = 0; j < n; ++j) A[n - 1][j] = 1.0;
  A[n - 1][n] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || A[r][c] == 0.0) continue;
      double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k <= n; ++k) A[r][k] -= f * A[c][k];
    }
  }
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = A[i][n] / A[i][i];
  return q;
}

}  // namespace

TEST(Convolve, SmallExample) {
  auto c = convolve(Distribution::point(2), Distribution{0, {0.2, 0.2, 0.2, 0.2, 0.2}});
  EXPECT_EQ(c.lo, -2);
  EXPECT_EQ(c.hi(), 2);
  for (int k = -2; k <= 2; ++k) EXPECT_DOUBLE_EQ(c.at(k), 0.2);
}

TEST(Convolve, SupportMassAndMean) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    auto D = random_dist(rng, 0, 4), S = random_dist(rng, 0, 8);
    auto c = convolve(D, S);
    EXPECT_EQ(c.lo, S.lo - D.hi());
    EXPECT_EQ(c.hi(), S.hi() - D.lo);
    EXPECT_NEAR(c.sum(), 1.0, 1e-12);
    EXPECT_NEAR(c.mean(), S.mean() - D.mean(), 1e-12);
    // brute-force sampling of a single point
    int k = c.lo + static_cast<int>(rng() % c.p.size());
    double ref = 0;
    for (int d = 0; d <= 4; ++d) ref += D.at(d) * S.at(k + d);
    EXPECT_NEAR(c.at(k), ref, 1e-15);
  }
}

TEST(Transition, SymmetricWalk) {
  auto P = build_transition(Distribution{-1, {0.5, 0.0, 0.5}}, 2);
  std::vector<std::vector<double>> want{{0.5, 0.5, 0.0}, {0.5, 0.0, 0.5}, {0.0, 0.5, 0.5}};
  EXPECT_EQ(P, want);
  auto m = steady_state(P);
  for (double q : m.steady) EXPECT_NEAR(q, 1.0 / 3.0, 1e-9);
  EXPECT_LT(residual(P, m.steady), 1e-9);
}

TEST(Transition, ColumnsSumToOne) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    auto c = convolve(random_dist(rng, 0, 4), random_dist(rng, 0, 6));
    auto n = 1 + rng() % 40;
    auto P = build_transition(c, n);
    for (std::size_t j = 0; j <= n; ++j) {
      double s = 0;
      for (std::size_t i = 0; i <= n; ++i) s += P[i][j];
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
  EXPECT_THROW(build_transition(Distribution::point(0), 0), std::invalid_argument);
}

TEST(SteadyState, MatchesLinearSolve) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    auto D = random_dist(rng, 0, 4), S = random_dist(rng, 0, 8);
    auto n = 2 + rng() % 40;
    auto m = analyze(D, S, n);
    auto ref = solve_stationary(m.P);
    double l1 = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) l1 += std::abs(ref[i] - m.steady[i]);
    EXPECT_LT(l1, 1e-6) << "trial " << t;
    EXPECT_LT(residual(m.P, m.steady), 1e-9);
  }
}

TEST(SteadyState, PeriodicChainUsesDamping) {
  // deterministic +1/-1 alternation never settles from a non-stationary start
  std::vector<std::vector<double>> P{{0.0, 1.0}, {1.0, 0.0}};
  auto m = steady_state(P);
  EXPECT_NEAR(m.steady[0], 0.5, 1e-9);
  EXPECT_LT(residual(P, m.steady), 1e-9);
}

TEST(ExpectedBubbles, TrivialCases) {
  Distribution D{0, {0.25, 0.25, 0.25, 0.25}};
  EXPECT_DOUBLE_EQ(expected_bubbles(Distribution::point(3), D), 0.0);
  EXPECT_DOUBLE_EQ(expected_bubbles(Distribution::point(10), D), 0.0);
  EXPECT_DOUBLE_EQ(expected_bubbles(Distribution::point(0), D), D.mean());
  EXPECT_DOUBLE_EQ(expected_bubbles(Distribution::point(0), Distribution::point(4)), 4.0);
  EXPECT_DOUBLE_EQ(expected_bubbles(Distribution{0, {0.5, 0.5}}, Distribution::point(2)), 1.5);
  EXPECT_DOUBLE_EQ(expected_bubbles(Distribution{0, {1.0}}, Distribution::point(0)), 0.0);
}

TEST(ExpectedBubbles, FrozenReferenceValues) {
  // computed independently with a dense eigensolver
  Distribution D{0, {0.1, 0.2, 0.3, 0.4}};
  Distribution S{0, {0.25, 0.1, 0.15, 0.2, 0.3}};
  struct Ref {
    std::size_t n;
    double ebf, q0;
  };
  for (auto r : {Ref{4, 0.6236743280321724, 0.2038824733889793}, Ref{8, 0.28786651175023187, 0.09601641851929442},
                 Ref{16, 0.08973169658091885, 0.029919203677336116}}) {
    auto m = analyze(D, S, r.n);
    EXPECT_NEAR(expected_bubbles(m.steady, D), r.ebf, 1e-9) << r.n;
    EXPECT_NEAR(m.steady[0], r.q0, 1e-9) << r.n;
  }
}

TEST(ExpectedBubbles, NonIncreasingInCapacity) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    auto D = random_dist(rng, 0, 4), S = random_dist(rng, 0, 8);
    double prev = 1e9;
    for (std::size_t n = 4; n <= 64; ++n) {
      double e = expected_bubbles(analyze(D, S, n).steady, D);
      EXPECT_LE(e, prev + 1e-9) << "trial " << t << " N=" << n;
      prev = e;
    }
  }
}

TEST(MonteCarlo, DeterministicCases) {
  auto r = monte_carlo(Distribution::point(2), Distribution::point(3), 4, 1000, 1);
  EXPECT_GT(r.occupancy.at(4), 0.99);
  auto z = monte_carlo(Distribution::point(3), Distribution::point(1), 8, 1000, 1);
  EXPECT_DOUBLE_EQ(z.occupancy.at(0), 1.0);
  EXPECT_DOUBLE_EQ(z.bubbles_per_step, 3.0);
}

TEST(MonteCarlo, AgreesWithMarkov) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    auto D = random_dist(rng, 0, 4), S = random_dist(rng, 0, 8);
    std::size_t n = 4 + rng() % 28;
    auto m = analyze(D, S, n);
    auto mc = monte_carlo(D, S, n, 400000, 100 + t);
    EXPECT_LT(l1_distance(mc.occupancy, Distribution{0, m.steady}), 0.03);
    EXPECT_NEAR(mc.bubbles_per_step, expected_bubbles(m.steady, D), 0.03);
  }
}

TEST(Distribution, Checks) {
  EXPECT_THROW((Distribution{0, {}}).check(), std::invalid_argument);
  EXPECT_THROW((Distribution{0, {0.5, 0.6}}).check(), std::invalid_argument);
  EXPECT_THROW((Distribution{0, {1.5, -0.5}}).check(), std::invalid_argument);
  EXPECT_NO_THROW((Distribution{0, {0.5, 0.5}}).check());
  EXPECT_THROW(Distribution::from_histogram(std::vector<int>{0, 0}), std::invalid_argument);
}

TEST(Harvest, FoldsOverflowIntoCap) {
  nlohmann::json r;
  r["stats"]["fetch"]["demand_hist"] = {1, 1, 2};
  r["stats"]["fetch"]["supply_hist"] = {0, 2, 1, 1};
  auto h = harvest_distributions(r, r, 4, 2);
  EXPECT_EQ(h.demand.p, (std::vector<double>{0.25, 0.25, 0.5, 0.0, 0.0}));
  EXPECT_EQ(h.supply.p, (std::vector<double>{0.0, 0.5, 0.5}));
}
