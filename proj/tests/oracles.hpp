#pragma once

// Reference computations used by the tests. They deliberately avoid the
// library's own algorithms: quadrature instead of closed forms, enumeration
// instead of recursions, brute-force sampling instead of importance sampling.

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1] by Golub-Welsch.
inline Rule gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

/// Gauss-Hermite rule for E f(Z), Z ~ N(0,1) (weights sum to 1).
inline Rule gauss_hermite_prob(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

inline double integrate(const Rule& rule, double a, double b, const std::function<double(double)>& f) {
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * s;
}

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Probabilists' Hermite polynomial from the explicit sum
/// He_k(x) = k! sum_m (-1)^m x^{k-2m} / (m! (k-2m)! 2^m).
inline double hermite_explicit(int k, double x) {
  double s = 0.0;
  for (int m = 0; 2 * m <= k; ++m)
    s += ((m % 2) ? -1.0 : 1.0) * std::pow(x, k - 2 * m) *
         std::exp(std::lgamma(k + 1.0) - std::lgamma(m + 1.0) - std::lgamma(k - 2 * m + 1.0) - m * std::log(2.0));
  return s;
}

/// g_k = E[G(Z) He_k(Z)] / k! with G = F^{-1}(Phi(.)) for the count law whose
/// CDF is cdf[j] = F(j), j = 0..top. Each constant piece of G is integrated
/// with a Gauss-Legendre rule; tails are clipped at +-12.
inline double hermite_g_piecewise(const std::vector<double>& cdf, int k, const Rule& gl) {
  const boost::math::normal N;
  auto q = [&](double p) { return p <= 0.0 ? -12.0 : p >= 1.0 ? 12.0 : std::clamp(boost::math::quantile(N, p), -12.0, 12.0); };
  const long top = static_cast<long>(cdf.size()) - 1;
  double total = 0.0;
  for (long j = 1; j <= top; ++j) {
    const double lo = q(cdf[j - 1]);
    const double hi = j == top ? 12.0 : q(cdf[j]);
    if (!(hi > lo)) continue;
    total += j * integrate(gl, lo, hi, [&](double z) { return hermite_explicit(k, z) * phi(z); });
  }
  return total / std::tgamma(k + 1.0);
}

/// The same coefficient by plain Gauss-Hermite quadrature of G(Z) He_k(Z).
inline double hermite_g_gauss_hermite(const std::vector<double>& cdf, int k, const Rule& gh) {
  double total = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    const double u = Phi(gh.nodes[i]);
    long j = 0;
    while (j + 1 < static_cast<long>(cdf.size()) && cdf[j] < u) ++j;
    total += gh.weights[i] * j * hermite_explicit(k, gh.nodes[i]);
  }
  return total / std::tgamma(k + 1.0);
}

/// Stationary law of a two-state chain by power iteration of pi Q.
inline std::vector<double> stationary_power(double alpha, double beta) {
  std::vector<double> pi{0.5, 0.5};
  for (int it = 0; it < 100000; ++it) {
    const std::vector<double> next{pi[0] * alpha + pi[1] * (1.0 - beta), pi[0] * (1.0 - alpha) + pi[1] * beta};
    if (std::abs(next[0] - pi[0]) < 1e-17 && std::abs(next[1] - pi[1]) < 1e-17) return next;
    pi = next;
  }
  return pi;
}

/// Law of the number of wet days in days 1..L, summing over all 2^L paths
/// (day 0 drawn from the stationary law).
inline std::vector<double> tsmc_enumerate(double alpha, double beta, int L) {
  const auto pi = stationary_power(alpha, beta);
  auto q = [&](int from, int to) {
    if (from == 0) return to == 0 ? alpha : 1.0 - alpha;
    return to == 1 ? beta : 1.0 - beta;
  };
  std::vector<double> out(L + 1, 0.0);
  for (int start = 0; start < 2; ++start)
    for (unsigned path = 0; path < (1u << L); ++path) {
      double p = pi[start];
      int prev = start, wet = 0;
      for (int d = 0; d < L; ++d) {
        const int s = (path >> d) & 1u;
        p *= q(prev, s);
        wet += s;
        prev = s;
      }
      out[wet] += p;
    }
  return out;
}

/// SAR(1) with AR(1) noise, Z_t = phi Z_{t-T} + eta_t, eta_t = alpha eta_{t-1} + eps_t:
/// autocorrelations from the truncated MA(infinity) weights
/// psi_j = sum_{i: T i <= j} phi^i alpha^{j - T i}.
struct MaCovariance {
  std::vector<double> rho;       // lag 0..max_lag
  double variance_per_unit = 0;  // sum psi_j^2 (variance for unit innovation variance)
};

inline MaCovariance sar1_ma_oracle(double phi, double alpha, int T, int max_lag, int terms = 6000) {
  std::vector<double> psi(terms + max_lag + 1, 0.0);
  for (std::size_t j = 0; j < psi.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; T * i <= j; ++i) s += std::pow(phi, double(i)) * std::pow(alpha, double(j - T * i));
    psi[j] = s;
  }
  MaCovariance out;
  std::vector<double> gamma(max_lag + 1, 0.0);
  for (int h = 0; h <= max_lag; ++h)
    for (int j = 0; j < terms; ++j) gamma[h] += psi[j] * psi[j + h];
  out.variance_per_unit = gamma[0];
  for (int h = 0; h <= max_lag; ++h) out.rho.push_back(gamma[h] / gamma[0]);
  return out;
}

/// Conditional mean weights and sd of Z_t given Z_1..Z_{t-1} from the joint
/// covariance matrix (Cholesky solve). weights[j] multiplies z_{t-1-j}.
inline std::pair<std::vector<double>, double> conditional_rule(const std::function<double(long, long)>& cov, long t) {
  const long p = t - 1;
  if (p == 0) return {{}, std::sqrt(cov(1, 1))};
  Eigen::MatrixXd S(p, p);
  Eigen::VectorXd c(p);
  for (long i = 0; i < p; ++i) {
    for (long j = 0; j < p; ++j) S(i, j) = cov(i + 1, j + 1);
    c(i) = cov(t, i + 1);
  }
  const Eigen::VectorXd w = S.llt().solve(c);
  std::vector<double> weights(p);
  for (long j = 0; j < p; ++j) weights[j] = w(p - 1 - j);
  return {weights, std::sqrt(cov(t, t) - c.dot(w))};
}

/// Exact P(a_t < Z_t <= b_t, t = 1..4) for a stationary AR(1) by nested
/// Gauss-Legendre quadrature (last coordinate integrated in closed form).
inline double ar1_rectangle_4(double rho, const std::vector<double>& a, const std::vector<double>& b, int nodes = 96) {
  const Rule gl = gauss_legendre(nodes);
  const double s = std::sqrt(1.0 - rho * rho);
  auto clip = [](double v) { return std::clamp(v, -12.0, 12.0); };
  auto cond = [&](double lo, double hi, double prev) {
    return Phi((hi - rho * prev) / s) - Phi((lo - rho * prev) / s);
  };
  return integrate(gl, clip(a[0]), clip(b[0]), [&](double z1) {
    return phi(z1) * integrate(gl, clip(a[1]), clip(b[1]), [&](double z2) {
      const double d2 = phi((z2 - rho * z1) / s) / s;
      return d2 * integrate(gl, clip(a[2]), clip(b[2]), [&](double z3) {
        const double d3 = phi((z3 - rho * z2) / s) / s;
        return d3 * cond(a[3], b[3], z3);
      });
    });
  });
}

struct McEstimate {
  double p = 0.0;
  double se = 0.0;
};

/// Naive Monte Carlo of the AR(1) rectangle probability with std::mt19937_64.
inline McEstimate ar1_rectangle_mc(double rho, const std::vector<double>& a, const std::vector<double>& b,
                                   std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  const double s = std::sqrt(1.0 - rho * rho);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < draws; ++r) {
    double z = N(gen);
    bool in = z > a[0] && z <= b[0];
    for (std::size_t t = 1; t < a.size(); ++t) {
      z = rho * z + s * N(gen);
      in = in && z > a[t] && z <= b[t];
    }
    hits += in ? 1 : 0;
  }
  McEstimate e;
  e.p = double(hits) / double(draws);
  e.se = std::sqrt(e.p * (1.0 - e.p) / double(draws));
  return e;
}

}  // namespace oracle
