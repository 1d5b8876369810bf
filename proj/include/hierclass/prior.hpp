#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace hierclass {

/// Gamma(a, b) in shape/scale form: density [b^a Gamma(a)]^-1 x^(a-1) e^(-x/b),
/// mean a*b, sd sqrt(a)*b. Placed on precisions tau^-2.
struct GammaPrior {
  double shape = 1.0;
  double scale = 1.0;

  GammaPrior() = default;
  GammaPrior(double a, double b) : shape(a), scale(b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw std::invalid_argument("Gamma prior needs positive finite shape and scale");
  }

  double mean() const noexcept { return shape * scale; }
  double sd() const noexcept { return std::sqrt(shape) * scale; }

  double log_density(double x) const {
    if (!(x > 0.0)) return -INFINITY;
    return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) - std::lgamma(shape);
  }

  /// Median of tau = lambda^(-1/2).
  double tau_median() const {
    return 1.0 / std::sqrt(scale * boost::math::gamma_p_inv(shape, 0.5));
  }

  friend bool operator==(const GammaPrior&, const GammaPrior&) = default;
};

inline std::string to_string(const GammaPrior& g) {
  auto fmt = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (s.back() == '.') s.pop_back();
    return s;
  };
  return "Gamma(" + fmt(g.shape) + "," + fmt(g.scale) + ")";
}

/// Quantiles of tau = lambda^(-1/2) where lambda ~ g. Because tau decreases in
/// lambda, the q-quantile of tau comes from the (1-q)-quantile of lambda.
inline std::vector<double> gamma_tau_percentiles(const GammaPrior& g, std::span<const double> q) {
  std::vector<double> out;
  out.reserve(q.size());
  for (double p : q) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("percentile level must lie in (0,1)");
    double lambda = g.scale * boost::math::gamma_q_inv(g.shape, p);
    out.push_back(1.0 / std::sqrt(lambda));
  }
  return out;
}

inline std::array<double, 3> gamma_tau_percentiles(const GammaPrior& g) {
  static constexpr std::array<double, 3> levels{0.025, 0.5, 0.975};
  auto v = gamma_tau_percentiles(g, levels);
  return {v[0], v[1], v[2]};
}

}  // namespace hierclass
