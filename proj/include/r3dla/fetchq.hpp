// Analytical fetch-buffer model: demand and supply distributions are
// convolved into a change distribution, which drives a Markov chain over the
// buffer occupancy. Its stationary vector gives the expected fetch bubbles.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace r3dla {

// Probability mass over the integers lo, lo+1, ..., lo+p.size()-1.
struct Distribution {
  int lo = 0;
  std::vector<double> p;

  int hi() const { return lo + static_cast<int>(p.size()) - 1; }
  double at(int k) const { return k < lo || k > hi() ? 0.0 : p[static_cast<std::size_t>(k - lo)]; }
  double sum() const {
    double s = 0;
    for (double x : p) s += x;
    return s;
  }
  double mean() const {
    double m = 0;
    for (std::size_t i = 0; i < p.size(); ++i) m += p[i] * (lo + static_cast<int>(i));
    return m;
  }
  void check(double tol = 1e-9) const {
    if (p.empty()) throw std::invalid_argument("empty distribution");
    for (double x : p)
      if (!(x >= 0.0)) throw std::invalid_argument("negative probability");
    if (std::abs(sum() - 1.0) > tol) throw std::invalid_argument("probabilities do not sum to 1");
  }

  static Distribution point(int k) { return {k, {1.0}}; }
  // Normalizes a histogram over 0..n-1.
  template <class T>
  static Distribution from_histogram(const std::vector<T>& h) {
    double total = 0;
    for (auto x : h) total += static_cast<double>(x);
    if (total <= 0) throw std::invalid_argument("empty histogram");
    Distribution d{0, {}};
    for (auto x : h) d.p.push_back(static_cast<double>(x) / total);
    return d;
  }
};

using ChangeDistribution = Distribution;

inline double l1_distance(const Distribution& a, const Distribution& b) {
  int lo = std::min(a.lo, b.lo), hi = std::max(a.hi(), b.hi());
  double d = 0;
  for (int k = lo; k <= hi; ++k) d += std::abs(a.at(k) - b.at(k));
  return d;
}

// C_delta = sum over s - d = delta of S_s * D_d.
inline ChangeDistribution convolve(const Distribution& demand, const Distribution& supply) {
  ChangeDistribution c;
  c.lo = supply.lo - demand.hi();
  c.p.assign(static_cast<std::size_t>(supply.hi() - demand.lo - c.lo + 1), 0.0);
  for (int s = supply.lo; s <= supply.hi(); ++s)
    for (int d = demand.lo; d <= demand.hi(); ++d) c.p[static_cast<std::size_t>(s - d - c.lo)] += supply.at(s) * demand.at(d);
  return c;
}

struct QueueModel {
  std::size_t capacity = 0;
  std::vector<std::vector<double>> P;  // P[i][j]: probability of moving from j to i
  std::vector<double> steady;
  std::size_t iterations = 0;
  bool damped = false;
};

inline std::vector<std::vector<double>> build_transition(const ChangeDistribution& c, std::size_t n) {
  if (n < 1) throw std::invalid_argument("capacity must be >= 1");
  std::vector<std::vector<double>> P(n + 1, std::vector<double>(n + 1, 0.0));
  const int N = static_cast<int>(n);
  for (int j = 0; j <= N; ++j)
    for (int k = c.lo; k <= c.hi(); ++k) {
      int i = std::clamp(j + k, 0, N);
      P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += c.at(k);
    }
  return P;
}

namespace detail {

inline std::vector<double> mat_vec(const std::vector<std::vector<double>>& P, const std::vector<double>& q) {
  std::vector<double> out(q.size(), 0.0);
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (q[j] == 0.0) continue;
    for (std::size_t i = 0; i < q.size(); ++i) out[i] += P[i][j] * q[j];
  }
  return out;
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

inline void normalize(std::vector<double>& q) {
  double s = 0;
  for (double x : q) s += x;
  for (double& x : q) x /= s;
}

struct PowerResult {
  std::vector<double> q;
  std::size_t iterations;
  bool converged;
};

inline PowerResult power(const std::vector<std::vector<double>>& P, double tol, std::size_t cap) {
  std::vector<double> q(P.size(), 1.0 / static_cast<double>(P.size()));
  for (std::size_t it = 1; it <= cap; ++it) {
    auto next = mat_vec(P, q);
    normalize(next);
    double delta = l1(next, q);
    q = std::move(next);
    if (delta < tol) return {q, it, true};
  }
  return {q, cap, false};
}

}  // namespace detail

inline double residual(const std::vector<std::vector<double>>& P, const std::vector<double>& q) {
  return detail::l1(detail::mat_vec(P, q), q);
}

// Power iteration from the uniform vector. A periodic chain never settles; in
// that case the chain is replaced by a slightly damped one, which has the same
// stationary vector up to the damping weight.
inline QueueModel steady_state(std::vector<std::vector<double>> P, double tol = 1e-12, std::size_t cap = 1'000'000) {
  QueueModel m;
  m.capacity = P.size() - 1;
  auto r = detail::power(P, tol, cap);
  if (!r.converged || residual(P, r.q) >= 1e-9) {
    const double eps = 1e-6;
    const double u = 1.0 / static_cast<double>(P.size());
    auto D = P;
    for (auto& row : D)
      for (double& x : row) x = (1.0 - eps) * x + eps * u;
    r = detail::power(D, tol, cap);
    m.damped = true;
  }
  m.steady = std::move(r.q);
  m.iterations = r.iterations;
  m.P = std::move(P);
  return m;
}

inline QueueModel analyze(const Distribution& demand, const Distribution& supply, std::size_t n) {
  return steady_state(build_transition(convolve(demand, supply), n));
}

// E(FB) = sum_i Q_i * sum_{j>i} D_j (j - i); j runs over the demand support.
inline double expected_bubbles(const std::vector<double>& q, const Distribution& demand) {
  double e = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double inner = 0;
    for (int j = std::max<int>(demand.lo, static_cast<int>(i) + 1); j <= demand.hi(); ++j)
      inner += demand.at(j) * (j - static_cast<int>(i));
    e += q[i] * inner;
  }
  return e;
}

inline double expected_bubbles(const Distribution& q, const Distribution& demand) {
  std::vector<double> v(static_cast<std::size_t>(std::max(0, q.hi()) + 1), 0.0);
  for (int k = std::max(0, q.lo); k <= q.hi(); ++k) v[static_cast<std::size_t>(k)] = q.at(k);
  return expected_bubbles(v, demand);
}

struct MonteCarloResult {
  Distribution occupancy;  // start-of-step queue length over 0..N
  double bubbles_per_step = 0.0;
};

// Each step: draw s ~ S and d ~ D; serve min(d, q + s); keep at most N.
inline MonteCarloResult monte_carlo(const Distribution& demand, const Distribution& supply, std::size_t n,
                                    std::uint64_t steps, std::uint64_t seed, std::size_t initial = 0) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> dd(demand.p.begin(), demand.p.end());
  std::discrete_distribution<int> sd(supply.p.begin(), supply.p.end());
  std::vector<std::uint64_t> hist(n + 1, 0);
  long long q = static_cast<long long>(std::min(initial, n));
  const long long N = static_cast<long long>(n);
  std::uint64_t bubbles = 0;
  for (std::uint64_t t = 0; t < steps; ++t) {
    ++hist[static_cast<std::size_t>(q)];
    long long d = demand.lo + dd(rng);
    long long s = supply.lo + sd(rng);
    long long served = std::min(d, q + s);
    bubbles += static_cast<std::uint64_t>(std::max(0LL, d - q));
    q = std::min(N, q + s - served);
  }
  return {Distribution::from_histogram(hist), static_cast<double>(bubbles) / static_cast<double>(steps)};
}

struct Harvest {
  Distribution demand;
  Distribution supply;
};

// Reads the demand histogram of an ideal-fetch report and the supply histogram
// of an ideal-backend report (both may be the same report for a quick look).
inline Harvest harvest_distributions(const nlohmann::json& demand_report, const nlohmann::json& supply_report,
                                     std::size_t decode_width = 4, std::size_t fetch_width = 16) {
  auto hist = [](const nlohmann::json& r, const char* key, std::size_t cap) {
    const auto& h = r.at("stats").at("fetch").at(key);
    std::vector<double> v(cap + 1, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) v[std::min(i, cap)] += h[i].get<double>();
    return Distribution::from_histogram(v);
  };
  return {hist(demand_report, "demand_hist", decode_width), hist(supply_report, "supply_hist", fetch_width)};
}

}  // namespace r3dla
