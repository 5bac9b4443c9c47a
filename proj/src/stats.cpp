#include "cyltrack/stats.hpp"

#include "cyltrack/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cyltrack {
namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kTwoPi = 6.2831853071795864769;

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double log_normal_sf(double z) {
  if (z < 35.0) {
    return std::log(0.5 * std::erfc(z / kSqrt2));
  }
  // Asymptotic expansion of Mills' ratio; erfc underflows past z ~ 37.
  const double z2 = z * z;
  return -0.5 * z2 - std::log(z) - 0.5 * kLog2Pi +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  }
  // Acklam's rational approximation, then one Halley step.
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(kTwoPi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double ig_pdf(double t, double mu, double lambda) {
  if (!(mu > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("ig_pdf: mu and lambda must be positive");
  }
  if (t <= 0.0) return 0.0;
  const double d = t - mu;
  const double log_pdf = 0.5 * (std::log(lambda) - kLog2Pi - 3.0 * std::log(t)) -
                         lambda * d * d / (2.0 * mu * mu * t);
  return std::exp(log_pdf);
}

double ig_cdf(double x, double mu, double lambda) {
  if (!(mu > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("ig_cdf: mu and lambda must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double s = std::sqrt(lambda / x);
  const double z1 = s * (x / mu - 1.0);
  const double z2 = s * (x / mu + 1.0);
  const double tail = std::exp(2.0 * lambda / mu + log_normal_sf(z2));
  return std::clamp(normal_cdf(z1) + tail, 0.0, 1.0);
}

double ig_mode(double mu, double lambda) {
  if (!(mu > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("ig_mode: mu and lambda must be positive");
  }
  const double r = 1.5 * mu / lambda;
  return mu * (std::sqrt(1.0 + r * r) - r);
}

double ig_laplace(double s, double mu, double lambda) {
  if (s < 0.0) throw std::invalid_argument("ig_laplace: s must be >= 0");
  return std::exp(lambda / mu *
                  (1.0 - std::sqrt(1.0 + 2.0 * mu * mu * s / lambda)));
}

double ig_sample(double mu, double lambda, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double nu = normal(rng);
  const double y = nu * nu;
  const double x =
      mu + mu * mu * y / (2.0 * lambda) -
      mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  if (unif(rng) <= mu / (mu + x)) return x;
  return mu * mu / x;
}

std::pair<double, double> crossing_law(const DynamicsParams& params,
                                       double l_u) {
  if (!(l_u > 0.0) || !(params.v_x > 0.0) || !(params.sigma_x > 0.0)) {
    throw std::invalid_argument(
        "crossing_law: need l_u > 0, v_x > 0, sigma_x > 0");
  }
  const double ratio = l_u / params.sigma_x;
  return {l_u / params.v_x, ratio * ratio};
}

double death_probability(const DynamicsParams& params, double l_u,
                         double abs_tol) {
  if (!(params.tau_d > 0.0)) {
    throw std::invalid_argument("death_probability: tau_d must be positive");
  }
  const auto [mu, lambda] = crossing_law(params, l_u);
  const double tau_d = params.tau_d;
  auto integrand = [mu, lambda, tau_d](double t) {
    return -std::expm1(-tau_d * t) * ig_pdf(t, mu, lambda);
  };
  const double mode = ig_mode(mu, lambda);
  const double p = quad::integrate_half_line(
      integrand, abs_tol, {0.5 * mode, mode, mu, 2.0 * mu, 8.0 * mu});
  return std::clamp(p, kMinDeathProb, 1.0 - 1e-16);
}

double connection_cost(const OutputEvent& o, const InputEvent& i,
                       const DynamicsParams& params, double l_u) {
  const double s = i.t - o.t;
  if (s <= 0.0) return std::numeric_limits<double>::infinity();
  if (!(l_u > 0.0) || !(params.sigma_x > 0.0) || !(params.sigma_y > 0.0)) {
    throw std::invalid_argument(
        "connection_cost: need l_u > 0 and positive diffusivities");
  }
  const double h = i.y - o.y;
  const double dx = params.v_x * s - l_u;
  const double dy = h - params.v_y * s;
  return std::log(kTwoPi * params.sigma_x * params.sigma_y) +
         2.0 * std::log(s) - std::log(l_u) +
         dx * dx / (2.0 * params.sigma_x * params.sigma_x * s) +
         dy * dy / (2.0 * params.sigma_y * params.sigma_y * s) +
         params.tau_d * s;
}

CostModel make_cost_model(const DynamicsParams& params,
                          const CylinderGeometry& geometry) {
  geometry.validate();
  if (!(params.v_x > 0.0) || !(params.sigma_x > 0.0) ||
      !(params.sigma_y > 0.0) || !(params.tau_alpha >= 0.0) ||
      !(params.tau_d >= 0.0)) {
    throw std::invalid_argument(
        "make_cost_model: need v_x > 0, sigma > 0, nonnegative rates");
  }
  CostModel model;
  model.params = params;
  model.l_u = geometry.hidden_lu();
  model.height_H = geometry.height_H;
  model.beta =
      -std::log(std::max(params.tau_alpha, kMinRate) / geometry.height_H);
  double p_death = params.tau_d > 0.0
                       ? death_probability(params, model.l_u)
                       : 0.0;
  p_death = std::clamp(p_death, kMinDeathProb, 1.0 - 1e-16);
  model.delta = -std::log(p_death);
  return model;
}

double log_likelihood(const Configuration& config,
                      const std::vector<OutputEvent>& outputs,
                      const std::vector<InputEvent>& inputs,
                      const CostModel& model, double T_S) {
  if (!configuration_is_valid(config, outputs, inputs)) {
    throw std::invalid_argument("log_likelihood: invalid configuration");
  }
  const double tau_alpha = std::max(model.params.tau_alpha, kMinRate);
  double log_q = -tau_alpha * T_S;
  log_q -= model.beta * static_cast<double>(config.spontaneous_inputs.size());
  log_q -= model.delta * static_cast<double>(config.dead_outputs.size());
  for (const auto& [o, i] : config.matches) {
    log_q -= model.gamma(outputs[static_cast<std::size_t>(o)],
                         inputs[static_cast<std::size_t>(i)]);
  }
  return log_q;
}

}  // namespace cyltrack
