#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "hierclass/prior.hpp"
#include "hierclass/rng.hpp"

namespace hierclass {

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SliceConfig {
  double width = 1.0;
  int max_step_out = 32;

  void validate() const {
    if (!(width > 0.0)) throw SamplerError("slice width must be positive");
    if (max_step_out < 1) throw SamplerError("slice max_step_out must be at least 1");
  }
};

struct HmcConfig {
  int leapfrog_steps = 500;
  double step_size = 0.02;

  void validate() const {
    if (leapfrog_steps < 1) throw SamplerError("HMC needs at least one leapfrog step");
    if (!(step_size > 0.0)) throw SamplerError("HMC step size must be positive");
  }
};

struct SliceResult {
  double x;
  double level;     // log height of the slice the draw came from
  int evaluations;  // log-density calls, including the one at x0
};

/// One univariate slice-sampling transition: stepping out to bracket the
/// slice, then shrinkage sampling from the bracket.
template <typename LogDensity>
SliceResult slice_update_detailed(double x0, LogDensity&& log_density, const SliceConfig& cfg, RngStream& rng) {
  double f0 = log_density(x0);
  if (!std::isfinite(f0)) throw SamplerError("slice_update: log density is not finite at the current point");
  int evals = 1;
  const double level = f0 - rng.gamma(1.0, 1.0);  // log(u * f(x0)), u ~ U(0,1)

  double left = x0 - cfg.width * rng.uniform();
  double right = left + cfg.width;
  int j = static_cast<int>(std::floor(cfg.max_step_out * rng.uniform()));
  int k = cfg.max_step_out - 1 - j;
  while (j-- > 0) {
    ++evals;
    if (!(log_density(left) > level)) break;
    left -= cfg.width;
  }
  while (k-- > 0) {
    ++evals;
    if (!(log_density(right) > level)) break;
    right += cfg.width;
  }

  for (;;) {
    double x1 = rng.uniform(left, right);
    double f1 = log_density(x1);
    ++evals;
    if (f1 >= level && std::isfinite(f1)) return {x1, level, evals};
    if (x1 < x0)
      left = x1;
    else
      right = x1;
    if (!(right - left >= 1e-300) || right - left <= std::abs(x0) * 1e-15)
      throw SamplerError("slice_update: shrinkage collapsed the interval");
  }
}

template <typename LogDensity>
double slice_update(double x0, LogDensity&& log_density, const SliceConfig& cfg, RngStream& rng) {
  return slice_update_detailed(x0, std::forward<LogDensity>(log_density), cfg, rng).x;
}

/// Conditional posterior of a precision lambda = tau^-2 whose prior is
/// `prior` and which governs zero-mean normal values: Gamma(a + k/2, b')
/// with 1/b' = 1/b + sum(v^2)/2.
inline GammaPrior precision_posterior(std::span<const double> values, const GammaPrior& prior) {
  double ss = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw SamplerError("precision update: non-finite value");
    ss += v * v;
  }
  return {prior.shape + 0.5 * static_cast<double>(values.size()), 1.0 / (1.0 / prior.scale + 0.5 * ss)};
}

/// Gibbs draw of tau given the values it governs. With no values this is a
/// draw from the prior.
inline double gibbs_precision_update(std::span<const double> values, const GammaPrior& prior, RngStream& rng) {
  GammaPrior post = precision_posterior(values, prior);
  double lambda = rng.gamma(post.shape, post.scale);
  return 1.0 / std::sqrt(lambda);
}

/// Slice update of tau on the log scale. In u = log(tau) the conditional
/// density is proportional to exp(-(2a + k) u - exp(-2u) (1/b + S/2)).
inline double slice_log_tau_update(double tau, std::span<const double> values, const GammaPrior& prior,
                                   const SliceConfig& cfg, RngStream& rng) {
  double ss = 0.0;
  for (double v : values) ss += v * v;
  const double rate = 1.0 / prior.scale + 0.5 * ss;
  const double slope = 2.0 * prior.shape + static_cast<double>(values.size());
  auto logf = [&](double u) { return -slope * u - std::exp(-2.0 * u) * rate; };
  return std::exp(slice_update(std::log(tau), logf, cfg, rng));
}

/// In-place leapfrog integration of dq/dt = p, dp/dt = grad log pi(q).
/// `grad` is the gradient of log pi at the current q on entry and is left
/// holding it at the final q. Returns false if a non-finite value appears.
template <typename GradFn>
bool leapfrog(Eigen::VectorXd& q, Eigen::VectorXd& p, Eigen::VectorXd& grad, GradFn&& grad_log_pi, double eps,
              int steps) {
  p += 0.5 * eps * grad;
  for (int s = 0; s < steps; ++s) {
    q += eps * p;
    if (!grad_log_pi(q, grad) || !grad.allFinite()) return false;
    if (s + 1 < steps) p += eps * grad;
  }
  p += 0.5 * eps * grad;
  return q.allFinite() && p.allFinite();
}

struct HmcResult {
  bool accepted = false;
  double energy_change = 0.0;  // H(end) - H(start); infinite for a diverged trajectory
};

/// One HMC transition with unit mass matrix. `log_pi(q, grad)` returns the
/// log target at q and writes its gradient; it may throw or return a
/// non-finite value, either of which rejects the trajectory.
template <typename LogPiFn>
HmcResult hmc_update(Eigen::VectorXd& q, LogPiFn&& log_pi, const HmcConfig& cfg, RngStream& rng) {
  cfg.validate();
  Eigen::VectorXd grad(q.size());
  const double lp0 = log_pi(q, grad);
  if (!std::isfinite(lp0) || !grad.allFinite()) throw SamplerError("hmc_update: target not finite at current state");

  Eigen::VectorXd p(q.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.normal();
  const double h0 = -lp0 + 0.5 * p.squaredNorm();

  Eigen::VectorXd q1 = q;
  double lp1 = lp0;
  auto grad_fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    try {
      lp1 = log_pi(x, g);
    } catch (const std::exception&) {
      return false;
    }
    return std::isfinite(lp1);
  };
  bool ok = leapfrog(q1, p, grad, grad_fn, cfg.step_size, cfg.leapfrog_steps);

  HmcResult res;
  if (!ok) {
    res.energy_change = INFINITY;
    rng.uniform();  // keep the draw count independent of divergence
    return res;
  }
  const double h1 = -lp1 + 0.5 * p.squaredNorm();
  res.energy_change = h1 - h0;
  double u = rng.uniform();
  if (std::isfinite(res.energy_change) && std::log(u) < -res.energy_change) {
    q = std::move(q1);
    res.accepted = true;
  }
  return res;
}

}  // namespace hierclass
