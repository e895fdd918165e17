#pragma once

// Maximum simulated likelihood for the seasonal copula count models.
// Parameters are flattened into named slots (see ModelLayout); the objective
// is the CRN-fixed GHK log-likelihood, so repeated fits are deterministic.

#include "pcount/errors.hpp"
#include "pcount/fourier.hpp"
#include "pcount/ghk.hpp"
#include "pcount/latent.hpp"
#include "pcount/marginals.hpp"
#include "pcount/normal.hpp"
#include "pcount/optimize.hpp"
#include "pcount/random.hpp"
#include "pcount/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pcount {

enum class SlotRole { Level, Amplitude, Phase, Scalar };

struct Slot {
  std::string name;
  SlotRole role = SlotRole::Scalar;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// Slot layout of a (family, latent kind, period) model. Each seasonal curve
/// contributes <name>.level, <name>.amplitude and <name>.phase (only the level
/// when T = 1); AR1 and SAR1 contribute scalar slots.
class ModelLayout {
public:
  ModelLayout(Family family, LatentKind latent, int period)
      : family_(family), latent_(latent), period_(period) {
    if (period < 1) throw InvalidParameter("period must be >= 1");
    for (const auto& name : curve_names(family)) add_curve(name, level_range(name));
    switch (latent) {
      case LatentKind::WN: break;
      case LatentKind::AR1: slots_.push_back({"phi", SlotRole::Scalar, -0.99, 0.99}); break;
      case LatentKind::PAR1: add_curve("phi", {-0.99, 0.99}); break;
      case LatentKind::SAR1:
        slots_.push_back({"phi", SlotRole::Scalar, -0.99, 0.99});
        slots_.push_back({"alpha", SlotRole::Scalar, -0.99, 0.99});
        break;
    }
  }

  Family family() const { return family_; }
  LatentKind latent() const { return latent_; }
  int period() const { return period_; }
  std::size_t size() const { return slots_.size(); }
  const std::vector<Slot>& slots() const { return slots_; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& s : slots_) out.push_back(s.name);
    return out;
  }

  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < slots_.size(); ++i)
      if (slots_[i].name == name) return i;
    throw ConfigError("unknown parameter '" + name + "'");
  }

  Box box() const {
    Box b;
    for (const auto& s : slots_) {
      b.lower.push_back(s.lower);
      b.upper.push_back(s.upper);
    }
    return b;
  }

  /// Specs for a parameter vector; throws InvalidParameter when infeasible.
  std::pair<MarginalSpec, LatentSpec> decode(const std::vector<double>& x) const {
    if (x.size() != slots_.size()) throw InvalidParameter("parameter vector has the wrong length");
    std::size_t pos = 0;
    std::vector<FourierCurve> curves;
    for (std::size_t c = 0; c < curve_names(family_).size(); ++c) curves.push_back(read_curve(x, pos));
    MarginalSpec marginal(family_, period_, std::move(curves));
    LatentSpec latent;
    switch (latent_) {
      case LatentKind::WN: latent = LatentSpec::white_noise(period_); break;
      case LatentKind::AR1: latent = LatentSpec::ar1(x[pos], period_); break;
      case LatentKind::PAR1: latent = LatentSpec::par1(read_curve(x, pos)); break;
      case LatentKind::SAR1: latent = LatentSpec::sar1(x[pos], x[pos + 1], period_); break;
    }
    validate(latent);
    marginal.validate();
    return {std::move(marginal), std::move(latent)};
  }

  std::vector<double> encode(const MarginalSpec& marginal, const LatentSpec& latent) const {
    if (marginal.family != family_ || latent.kind != latent_ || marginal.period != period_ ||
        latent.period != period_)
      throw InvalidParameter("model does not match the parameter layout");
    std::vector<double> x;
    for (const auto& c : marginal.curves) write_curve(x, c);
    switch (latent_) {
      case LatentKind::WN: break;
      case LatentKind::AR1: x.push_back(latent.phi); break;
      case LatentKind::PAR1: write_curve(x, latent.phi_curve); break;
      case LatentKind::SAR1:
        x.push_back(latent.phi);
        x.push_back(latent.alpha);
        break;
    }
    return x;
  }

  /// Phases wrapped into [0, T) and amplitudes made nonnegative (a negative
  /// amplitude equals a positive one with the phase shifted by T/2).
  std::vector<double> canonicalize(std::vector<double> x) const {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].role != SlotRole::Amplitude) continue;
      if (x[i] < 0.0) {
        x[i] = -x[i];
        x[i + 1] += 0.5 * period_;
      }
      x[i + 1] = wrap_phase(x[i + 1], period_);
    }
    return x;
  }

private:
  std::pair<double, double> level_range(const std::string& curve) const {
    if (curve == "p" || curve == "alpha" || curve == "beta") return {0.01, 0.99};
    if (curve == "variance") return {0.01, 1e4};
    return {0.01, 100.0};
  }

  void add_curve(const std::string& name, std::pair<double, double> range) {
    slots_.push_back({name + ".level", SlotRole::Level, range.first, range.second});
    if (period_ == 1) return;
    const double width = range.second - range.first;
    slots_.push_back({name + ".amplitude", SlotRole::Amplitude, -width, width});
    slots_.push_back({name + ".phase", SlotRole::Phase});
  }

  FourierCurve read_curve(const std::vector<double>& x, std::size_t& pos) const {
    if (period_ == 1) return FourierCurve::constant(x[pos++], 1);
    FourierCurve c(x[pos], x[pos + 1], x[pos + 2], period_);
    pos += 3;
    return c;
  }

  void write_curve(std::vector<double>& x, const FourierCurve& c) const {
    x.push_back(c.level);
    if (period_ == 1) return;
    x.push_back(c.amplitude);
    x.push_back(c.phase);
  }

  Family family_;
  LatentKind latent_;
  int period_;
  std::vector<Slot> slots_;
};

// ---------------------------------------------------------------------------
// Starting values

/// Least-squares first-order cosine through per-season values.
inline FourierCurve fit_cosine(const std::vector<double>& values) {
  const int T = static_cast<int>(values.size());
  if (T == 1) return FourierCurve::constant(values[0], 1);
  Eigen::MatrixXd A(T, 3);
  Eigen::VectorXd b(T);
  for (int s = 1; s <= T; ++s) {
    const double w = 2.0 * std::numbers::pi * s / T;
    A(s - 1, 0) = 1.0;
    A(s - 1, 1) = std::cos(w);
    A(s - 1, 2) = std::sin(w);
    b(s - 1) = values[s - 1];
  }
  const Eigen::VectorXd c = A.completeOrthogonalDecomposition().solve(b);
  const double amplitude = std::hypot(c(1), c(2));
  const double phase = T * std::atan2(c(2), c(1)) / (2.0 * std::numbers::pi);
  return FourierCurve(c(0), amplitude, phase, T);
}

/// Halves the amplitude until `ok` accepts the curve (zero as a last resort).
template <class Pred>
FourierCurve shrink_until(FourierCurve c, Pred ok) {
  for (int i = 0; i < 40 && !ok(c); ++i) c.amplitude *= 0.5;
  if (!ok(c)) c.amplitude = 0.0;
  return c;
}

namespace detail {

struct SeasonMoments {
  std::vector<double> mean;
  std::vector<double> variance;
};

inline SeasonMoments season_moments(const CountSeries& data) {
  const int T = data.period;
  std::vector<double> sum(T, 0.0), sum2(T, 0.0), cnt(T, 0.0);
  double all = 0.0, all2 = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int s = season_of(static_cast<long>(i) + 1, T) - 1;
    const double v = static_cast<double>(data.x[i]);
    sum[s] += v;
    sum2[s] += v * v;
    cnt[s] += 1.0;
    all += v;
    all2 += v * v;
  }
  const double n = static_cast<double>(data.size());
  const double overall_mean = all / n;
  const double overall_var = n > 1 ? (all2 - n * overall_mean * overall_mean) / (n - 1) : overall_mean;
  SeasonMoments m;
  for (int s = 0; s < T; ++s) {
    m.mean.push_back(cnt[s] > 0 ? sum[s] / cnt[s] : overall_mean);
    m.variance.push_back(cnt[s] > 1 ? (sum2[s] - cnt[s] * m.mean[s] * m.mean[s]) / (cnt[s] - 1)
                                    : overall_var);
  }
  return m;
}

// Variance inflation of a 7-day wet count relative to independent days when
// consecutive days have correlation rho.
inline double tsmc_variance_ratio(double rho) {
  double r = 1.0;
  for (int k = 1; k < kWeekLength; ++k) r += 2.0 * (kWeekLength - k) / kWeekLength * std::pow(rho, k);
  return r;
}

inline double sample_corr(const std::vector<double>& r, long lag, int period = 1, int season = 0) {
  double num = 0.0, d1 = 0.0, d2 = 0.0;
  for (std::size_t i = static_cast<std::size_t>(lag); i < r.size(); ++i) {
    if (season > 0 && season_of(static_cast<long>(i) + 1, period) != season) continue;
    num += r[i] * r[i - lag];
    d1 += r[i] * r[i];
    d2 += r[i - lag] * r[i - lag];
  }
  return d1 > 0 && d2 > 0 ? num / std::sqrt(d1 * d2) : 0.0;
}

}  // namespace detail

/// Method-of-moments starting values: per-season moments fitted by cosines for
/// the marginal; autocorrelations of the normal scores under the independence
/// model for the latent process.
inline std::vector<double> default_init(const ModelLayout& layout, const CountSeries& data) {
  if (data.period != layout.period()) throw DataError("data period differs from model period");
  if (data.size() < 2) throw DataError("need at least two observations");
  const int T = layout.period();
  const auto mom = detail::season_moments(data);
  auto curve_ok = [&](double lo, double hi) {
    return [lo, hi](const FourierCurve& c) { return c.min_value() > lo && c.max_value() < hi; };
  };
  auto clamp_all = [](std::vector<double> v, double lo, double hi) {
    for (double& e : v) e = std::clamp(e, lo, hi);
    return v;
  };

  std::vector<FourierCurve> curves;
  switch (layout.family()) {
    case Family::Poisson:
      curves.push_back(shrink_until(fit_cosine(clamp_all(mom.mean, 0.05, 99.0)), curve_ok(0.01, 100.0)));
      break;
    case Family::Binomial: {
      std::vector<double> p(T);
      for (int s = 0; s < T; ++s) p[s] = std::clamp(mom.mean[s] / kWeekLength, 0.02, 0.98);
      curves.push_back(shrink_until(fit_cosine(p), curve_ok(0.01, 0.99)));
      break;
    }
    case Family::TruncGenPoisson: {
      auto mean = shrink_until(fit_cosine(clamp_all(mom.mean, 0.05, 99.0)), curve_ok(0.01, 100.0));
      std::vector<double> var(T);
      for (int s = 0; s < T; ++s) var[s] = std::max(mom.variance[s], 1.1 * mean(s + 1));
      auto variance = fit_cosine(var);
      auto dominates = [&](const FourierCurve& v) {
        for (int s = 1; s <= T; ++s)
          if (!(v(s) >= 1.05 * mean(s))) return false;
        return true;
      };
      variance = shrink_until(variance, dominates);
      if (!dominates(variance)) variance = FourierCurve::constant(1.1 * mean.max_value() + 0.1, T);
      curves.push_back(mean);
      curves.push_back(variance);
      break;
    }
    case Family::TSMC: {
      std::vector<double> pi(T);
      double var_obs = 0.0, var_indep = 0.0;
      for (int s = 0; s < T; ++s) {
        pi[s] = std::clamp(mom.mean[s] / kWeekLength, 0.02, 0.98);
        var_obs += mom.variance[s];
        var_indep += kWeekLength * pi[s] * (1.0 - pi[s]);
      }
      const double target = var_obs / var_indep;
      double lo = 0.0, hi = 0.8;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (detail::tsmc_variance_ratio(mid) < target ? lo : hi) = mid;
      }
      const double rho = 0.5 * (lo + hi);
      std::vector<double> a(T), b(T);
      for (int s = 0; s < T; ++s) {
        a[s] = std::clamp(1.0 - pi[s] * (1.0 - rho), 0.02, 0.98);
        b[s] = std::clamp(rho + pi[s] * (1.0 - rho), 0.02, 0.98);
      }
      curves.push_back(shrink_until(fit_cosine(a), curve_ok(0.01, 0.99)));
      curves.push_back(shrink_until(fit_cosine(b), curve_ok(0.01, 0.99)));
      break;
    }
  }
  MarginalSpec marginal(layout.family(), T, curves);

  // Normal scores of the mid-probabilities under the fitted marginal.
  const auto laws = marginal.laws();
  std::vector<double> r(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& law = laws[season_of(static_cast<long>(i) + 1, T) - 1];
    const double mid = 0.5 * (law.cdf(data.x[i] - 1) + law.cdf(data.x[i]));
    r[i] = norm_quantile(std::clamp(mid, 1e-12, 1.0 - 1e-12));
  }
  LatentSpec latent;
  switch (layout.latent()) {
    case LatentKind::WN: latent = LatentSpec::white_noise(T); break;
    case LatentKind::AR1: latent = LatentSpec::ar1(std::clamp(detail::sample_corr(r, 1), -0.9, 0.9), T); break;
    case LatentKind::PAR1: {
      std::vector<double> phi(T);
      for (int s = 1; s <= T; ++s) phi[s - 1] = std::clamp(detail::sample_corr(r, 1, T, s), -0.9, 0.9);
      latent = LatentSpec::par1(shrink_until(fit_cosine(phi), curve_ok(-0.95, 0.95)));
      break;
    }
    case LatentKind::SAR1: {
      const double alpha = std::clamp(detail::sample_corr(r, 1), -0.9, 0.9);
      const double phi = std::clamp(detail::sample_corr(r, T), -0.9, 0.9);
      latent = LatentSpec::sar1(phi, alpha, T);
      try {
        validate(latent);
      } catch (const InvalidParameter&) {
        latent = LatentSpec::sar1(0.0, 0.0, T);
      }
      break;
    }
  }
  return layout.canonicalize(layout.encode(marginal, latent));
}

// ---------------------------------------------------------------------------
// Fitting

/// GHK log-likelihood at a parameter vector (throws on infeasible input).
inline double loglik_at(const ModelLayout& layout, const std::vector<double>& x, const CountSeries& data,
                        std::size_t particles, std::uint64_t crn_seed) {
  const auto [marginal, latent] = layout.decode(x);
  return ghk_loglik(marginal, latent, data, {particles, crn_seed, false}).loglik;
}

/// Negative log-likelihood objective; infeasible points map to +inf.
inline Objective negative_loglik(const ModelLayout& layout, const CountSeries& data, std::size_t particles,
                                 std::uint64_t crn_seed) {
  return [&layout, &data, particles, crn_seed](const std::vector<double>& x) {
    try {
      return -loglik_at(layout, x, data, particles, crn_seed);
    } catch (const InvalidParameter&) {
      return std::numeric_limits<double>::infinity();
    } catch (const LikelihoodUnderflow&) {
      return std::numeric_limits<double>::infinity();
    }
  };
}

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

inline InformationCriteria information_criteria(double loglik, std::size_t p, std::size_t n) {
  if (p < 1 || n < 1) throw DomainError("information_criteria: need p >= 1 and n >= 1");
  const double k = static_cast<double>(p);
  return {-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * std::log(static_cast<double>(n))};
}

struct StandardErrors {
  std::vector<double> se;
  std::vector<std::vector<double>> hessian;
  bool pseudo_inverse = false;
  std::string warning;
};

/// Hessian of -loglik by central second differences at x (same CRN seed);
/// SEs are the square roots of the diagonal of its inverse. A Hessian that is
/// not positive definite falls back to the pseudo-inverse over its positive
/// eigenvalues and is flagged.
inline StandardErrors standard_errors(const ModelLayout& layout, const std::vector<double>& x,
                                      const CountSeries& data, std::size_t particles, std::uint64_t crn_seed,
                                      double rel_step = 1e-4) {
  const auto f = negative_loglik(layout, data, particles, crn_seed);
  const double fx = f(x);
  if (!std::isfinite(fx)) throw LikelihoodUnderflow("standard_errors: likelihood not finite at the estimate", 0);
  StandardErrors out;
  out.hessian = fd_hessian(f, x, fx, rel_step);
  const std::size_t p = x.size();
  out.se.assign(p, std::numeric_limits<double>::quiet_NaN());
  Eigen::MatrixXd H(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) H(i, j) = out.hessian[i][j];
  if (!H.allFinite()) {
    out.warning = "Hessian has non-finite entries (estimate too close to the feasible boundary)";
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  const auto& lambda = eig.eigenvalues();
  const double tol = 1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t k = 0; k < p; ++k) {
    if (lambda(k) > tol) cov += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / lambda(k);
  }
  if (!(lambda.minCoeff() > tol)) {
    out.pseudo_inverse = true;
    out.warning = "Hessian is not positive definite; standard errors use its pseudo-inverse";
  }
  for (std::size_t i = 0; i < p; ++i)
    if (cov(i, i) > 0.0) out.se[i] = std::sqrt(cov(i, i));
  return out;
}

struct FitOptions {
  std::size_t particles = 500;
  std::uint64_t crn_seed = 1;
  /// Particles for the reported re-evaluation at the estimate (0 skips it).
  std::size_t final_particles = 5000;
  /// Extra optimizations from perturbed starting values.
  int restarts = 3;
  std::uint64_t restart_seed = 12345;
  bool standard_errors = true;
  OptimizerOptions optimizer{};
};

struct RestartRecord {
  std::vector<double> start;
  std::vector<double> estimates;
  double loglik = 0.0;
  bool converged = false;
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> init;
  std::vector<double> estimates;
  double init_loglik = 0.0;
  double loglik = 0.0;
  double loglik_final = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> se;
  bool se_pseudo_inverse = false;
  std::string se_warning;
  double aic = 0.0;
  double bic = 0.0;
  std::size_t n_evals = 0;
  int iterations = 0;
  bool converged = false;
  std::string message;
  std::size_t particles = 0;
  std::size_t final_particles = 0;
  std::uint64_t crn_seed = 0;
  std::vector<TraceRow> trace;
  std::vector<RestartRecord> restarts;
};

/// Maximizes the CRN-fixed GHK log-likelihood over the layout's box.
inline FitResult fit(const CountSeries& data, const ModelLayout& layout, std::optional<std::vector<double>> init,
                     const FitOptions& options = {}) {
  if (data.period != layout.period()) throw DataError("data period differs from model period");
  std::vector<double> x0 = layout.canonicalize(init ? *init : default_init(layout, data));
  const Box box = layout.box();
  if (!box.contains(x0)) throw InvalidParameter("initial values lie outside the parameter bounds");
  {
    // Surface data and parameter problems at the start with their own errors.
    const auto [marginal, latent] = layout.decode(x0);
    (void)bounds_from_data(marginal, data);
    try {
      (void)ghk_loglik(marginal, latent, data, {options.particles, options.crn_seed, false});
    } catch (const LikelihoodUnderflow& e) {
      throw LikelihoodUnderflow(std::string(e.what()) +
                                    " at the initial values; try different initial values or bounds",
                                e.time());
    }
  }
  const auto f = negative_loglik(layout, data, options.particles, options.crn_seed);

  FitResult out;
  out.names = layout.names();
  out.init = x0;
  out.init_loglik = -f(x0);
  out.particles = options.particles;
  out.crn_seed = options.crn_seed;

  auto best = minimize_box(f, x0, box, options.optimizer);
  out.n_evals += best.evaluations;
  out.restarts.push_back({x0, layout.canonicalize(best.x), -best.value, best.converged});

  Rng rng(options.restart_seed);
  for (int r = 0; r < options.restarts; ++r) {
    std::vector<double> start;
    for (int attempt = 0; attempt < 50; ++attempt) {
      start = x0;
      for (std::size_t i = 0; i < start.size(); ++i) {
        const auto& slot = layout.slots()[i];
        if (slot.role == SlotRole::Phase)
          start[i] += (rng.uniform() - 0.5) * 0.5 * layout.period();
        else
          start[i] = box.clamp(i, start[i] + 0.1 * std::max(0.1, std::abs(start[i])) * rng.normal());
      }
      if (std::isfinite(f(start))) break;
      start.clear();
    }
    if (start.empty()) continue;
    auto run = minimize_box(f, start, box, options.optimizer);
    out.n_evals += run.evaluations;
    out.restarts.push_back({start, layout.canonicalize(run.x), -run.value, run.converged});
    if (run.value < best.value) best = std::move(run);
  }

  out.estimates = layout.canonicalize(best.x);
  out.loglik = -best.value;
  out.converged = best.converged;
  out.message = best.message;
  out.iterations = best.iterations;
  out.trace = best.trace;
  const auto ic = information_criteria(out.loglik, layout.size(), data.size());
  out.aic = ic.aic;
  out.bic = ic.bic;
  if (options.standard_errors) {
    const auto se = standard_errors(layout, out.estimates, data, options.particles, options.crn_seed);
    out.se = se.se;
    out.se_pseudo_inverse = se.pseudo_inverse;
    out.se_warning = se.warning;
    out.n_evals += 2 * layout.size() * layout.size() + 1;
  }
  if (options.final_particles > 0) {
    out.final_particles = options.final_particles;
    out.loglik_final = loglik_at(layout, out.estimates, data, options.final_particles, options.crn_seed);
  }
  return out;
}

}  // namespace pcount
