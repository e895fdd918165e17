#pragma once

// Box-constrained quasi-Newton minimization (projected L-BFGS with an Armijo
// backtracking search along the projected path) and finite-difference
// derivatives. Objectives may return +inf for infeasible points.

#include "pcount/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace pcount {

using Objective = std::function<double(const std::vector<double>&)>;

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const { return lower.size(); }
  double clamp(std::size_t i, double v) const { return std::clamp(v, lower[i], upper[i]); }
  std::vector<double> project(std::vector<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = clamp(i, x[i]);
    return x;
  }
  bool contains(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
    return true;
  }
};

inline double fd_step(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

/// Central differences with relative step `rel`; one-sided next to a bound.
inline std::vector<double> fd_gradient(const Objective& f, const std::vector<double>& x, double fx,
                                       const Box& box, double rel = 1e-5, std::size_t* evals = nullptr) {
  std::vector<double> g(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i], rel);
    const bool up_ok = x[i] + h <= box.upper[i];
    const bool down_ok = x[i] - h >= box.lower[i];
    double fp = fx, fm = fx, span = 0.0;
    if (up_ok) {
      probe[i] = x[i] + h;
      fp = f(probe);
      span += h;
    }
    if (down_ok) {
      probe[i] = x[i] - h;
      fm = f(probe);
      span += h;
    }
    probe[i] = x[i];
    if (evals) *evals += (up_ok ? 1 : 0) + (down_ok ? 1 : 0);
    g[i] = span > 0.0 ? (fp - fm) / span : 0.0;
  }
  return g;
}

/// Central second differences; step `rel` relative to parameter scale.
inline std::vector<std::vector<double>> fd_hessian(const Objective& f, const std::vector<double>& x,
                                                   double fx, double rel = 1e-4) {
  const std::size_t p = x.size();
  std::vector<std::vector<double>> H(p, std::vector<double>(p, 0.0));
  std::vector<double> probe = x;
  std::vector<double> h(p);
  for (std::size_t i = 0; i < p; ++i) h[i] = fd_step(x[i], rel);
  for (std::size_t i = 0; i < p; ++i) {
    probe[i] = x[i] + h[i];
    const double fp = f(probe);
    probe[i] = x[i] - h[i];
    const double fm = f(probe);
    probe[i] = x[i];
    H[i][i] = (fp - 2.0 * fx + fm) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      double acc = 0.0;
      for (int si : {1, -1})
        for (int sj : {1, -1}) {
          probe[i] = x[i] + si * h[i];
          probe[j] = x[j] + sj * h[j];
          acc += si * sj * f(probe);
        }
      probe[i] = x[i];
      probe[j] = x[j];
      H[i][j] = H[j][i] = acc / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

struct OptimizerOptions {
  int max_iterations = 200;
  /// Stop when the relative objective decrease falls below this.
  double ftol = 1e-6;
  /// Stop when the projected gradient's largest entry falls below this.
  double gtol = 1e-5;
  int memory = 10;
  double fd_rel_step = 1e-5;
};

struct TraceRow {
  int iteration = 0;
  double value = 0.0;
  double projected_gradient = 0.0;
  double step = 0.0;
  std::size_t evaluations = 0;
};

struct OptimizerResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::string message;
  int iterations = 0;
  std::size_t evaluations = 0;
  std::vector<TraceRow> trace;
};

namespace detail {

inline double projected_gradient_norm(const std::vector<double>& x, const std::vector<double>& g,
                                      const Box& box) {
  double out = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = box.clamp(i, x[i] - g[i]) - x[i];
    out = std::max(out, std::abs(moved));
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// Minimize f over the box starting from x0 (projected into the box).
inline OptimizerResult minimize_box(const Objective& f, std::vector<double> x0, const Box& box,
                                    const OptimizerOptions& opt = {}) {
  if (x0.size() != box.size()) throw DomainError("minimize_box: dimension mismatch");
  OptimizerResult res;
  std::vector<double> x = box.project(std::move(x0));
  double fx = f(x);
  res.evaluations = 1;
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.message = "objective not finite at the starting point";
    return res;
  }
  std::vector<double> g = fd_gradient(f, x, fx, box, opt.fd_rel_step, &res.evaluations);
  std::deque<std::vector<double>> S, Y;
  const std::size_t p = x.size();

  for (int it = 1; it <= opt.max_iterations; ++it) {
    const double pg = detail::projected_gradient_norm(x, g, box);
    if (pg <= opt.gtol) {
      res.converged = true;
      res.message = "projected gradient below tolerance";
      break;
    }

    // Variables pinned at a bound with the gradient pushing outward stay fixed.
    std::vector<bool> free(p, true);
    for (std::size_t i = 0; i < p; ++i)
      if ((x[i] <= box.lower[i] && g[i] > 0.0) || (x[i] >= box.upper[i] && g[i] < 0.0)) free[i] = false;

    std::vector<double> q(p);
    for (std::size_t i = 0; i < p; ++i) q[i] = free[i] ? g[i] : 0.0;
    // Two-loop recursion on the free subspace.
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      double sy = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < p; ++i)
        if (free[i]) {
          sy += S[k][i] * Y[k][i];
          sq += S[k][i] * q[i];
        }
      alpha[k] = sy > 0.0 ? sq / sy : 0.0;
      for (std::size_t i = 0; i < p; ++i)
        if (free[i]) q[i] -= alpha[k] * Y[k][i];
    }
    double gamma = 1.0;
    if (!S.empty()) {
      const double sy = detail::dot(S.back(), Y.back());
      const double yy = detail::dot(Y.back(), Y.back());
      if (sy > 0.0 && yy > 0.0) gamma = sy / yy;
    }
    for (double& v : q) v *= gamma;
    for (std::size_t k = 0; k < S.size(); ++k) {
      double sy = 0.0, yq = 0.0;
      for (std::size_t i = 0; i < p; ++i)
        if (free[i]) {
          sy += S[k][i] * Y[k][i];
          yq += Y[k][i] * q[i];
        }
      const double beta = sy > 0.0 ? yq / sy : 0.0;
      for (std::size_t i = 0; i < p; ++i)
        if (free[i]) q[i] += S[k][i] * (alpha[k] - beta);
    }
    std::vector<double> d(p);
    for (std::size_t i = 0; i < p; ++i) d[i] = free[i] ? -q[i] : 0.0;
    if (!(detail::dot(d, g) < 0.0)) {
      // Not a descent direction: fall back to steepest descent.
      S.clear();
      Y.clear();
      for (std::size_t i = 0; i < p; ++i) d[i] = free[i] ? -g[i] : 0.0;
    }
    double step = 1.0;
    if (S.empty()) {
      double dn = 0.0;
      for (double v : d) dn = std::max(dn, std::abs(v));
      // First step moves the largest coordinate by at most ~1e-1 of its scale.
      double scale = 0.0;
      for (std::size_t i = 0; i < p; ++i) scale = std::max(scale, 0.1 * std::max(1.0, std::abs(x[i])));
      if (dn > 0.0) step = std::min(1.0, scale / dn);
    }

    // Backtracking along the projected path.
    std::vector<double> xn(p);
    double fn = fx;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < p; ++i) xn[i] = box.clamp(i, x[i] + step * d[i]);
      fn = f(xn);
      ++res.evaluations;
      double decrease = 0.0;
      for (std::size_t i = 0; i < p; ++i) decrease += g[i] * (xn[i] - x[i]);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it;
    if (!accepted) {
      res.converged = pg <= 10.0 * opt.gtol;
      res.message = "line search failed to decrease the objective";
      res.trace.push_back({it, fx, pg, 0.0, res.evaluations});
      break;
    }
    std::vector<double> gn = fd_gradient(f, xn, fn, box, opt.fd_rel_step, &res.evaluations);
    std::vector<double> s(p), y(p);
    for (std::size_t i = 0; i < p; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    if (detail::dot(s, y) > 1e-12 * std::sqrt(detail::dot(s, s) * detail::dot(y, y))) {
      S.push_back(s);
      Y.push_back(y);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
      }
    }
    const double rel_change = (fx - fn) / std::max({std::abs(fx), std::abs(fn), 1.0});
    x = std::move(xn);
    g = std::move(gn);
    fx = fn;
    res.trace.push_back({it, fx, detail::projected_gradient_norm(x, g, box), step, res.evaluations});
    if (rel_change <= opt.ftol) {
      res.converged = true;
      res.message = "relative objective change below tolerance";
      break;
    }
    if (it == opt.max_iterations) res.message = "iteration budget exhausted";
  }
  res.x = std::move(x);
  res.value = fx;
  return res;
}

}  // namespace pcount
