#pragma once

#include "cyltrack/types.hpp"

#include <random>

namespace cyltrack {

/// Floor applied to rate parameters before taking logs, so degenerate zero
/// estimates yield a large finite cost instead of infinities in the solver.
inline constexpr double kMinRate = 1e-12;

/// Floor applied to the death probability before taking logs.
inline constexpr double kMinDeathProb = 1e-300;

/// Standard normal CDF.
double normal_cdf(double z);

/// log(1 - Phi(z)), stable far into the upper tail.
double log_normal_sf(double z);

/// Inverse standard normal CDF for p in (0, 1).
double normal_quantile(double p);

/// Inverse-Gaussian IG(mu, lambda) density; 0 for t <= 0.
double ig_pdf(double t, double mu, double lambda);

/// Inverse-Gaussian CDF. The e^{2 lambda / mu} Phi(-z) term is assembled in
/// log space so large lambda / mu (narrow hidden passages) cannot overflow.
double ig_cdf(double x, double mu, double lambda);

/// Mode of IG(mu, lambda).
double ig_mode(double mu, double lambda);

/// Laplace transform E[exp(-s T)] for T ~ IG(mu, lambda), s >= 0.
double ig_laplace(double s, double mu, double lambda);

/// One IG(mu, lambda) draw (Michael-Schucany-Haas).
double ig_sample(double mu, double lambda, std::mt19937_64& rng);

/// First-passage law of the hidden crossing: IG(l_u / v_x, (l_u / sigma_x)^2)
/// as mean / shape; returned as {mu, lambda}.
std::pair<double, double> crossing_law(const DynamicsParams& params,
                                       double l_u);

/// P(T_d < T_l): probability that a particle entering the hidden region dies
/// before traversing it. Computed by adaptive quadrature of
/// (1 - e^{-tau_d t}) against the first-passage density, to abs_tol.
double death_probability(const DynamicsParams& params, double l_u,
                         double abs_tol = 1e-8);

/// Negative log-density cost of connecting output o to input i; +infinity
/// when the input does not come strictly later.
double connection_cost(const OutputEvent& o, const InputEvent& i,
                       const DynamicsParams& params, double l_u);

/// Per-event costs of a configuration: beta for a spontaneous input, delta
/// for a dead output, gamma(o, i) for a connection. Zero rate estimates are
/// clamped so every cost stays finite.
struct CostModel {
  double beta = 0.0;
  double delta = 0.0;
  DynamicsParams params;
  double l_u = 0.0;
  double height_H = 0.0;

  double gamma(const OutputEvent& o, const InputEvent& i) const {
    return connection_cost(o, i, params, l_u);
  }
};

CostModel make_cost_model(const DynamicsParams& params,
                          const CylinderGeometry& geometry);

/// log Q(c) of a configuration over a movie of duration T_S (additive
/// constants from the point-process density included). Throws when the
/// configuration is not valid for the given events.
double log_likelihood(const Configuration& config,
                      const std::vector<OutputEvent>& outputs,
                      const std::vector<InputEvent>& inputs,
                      const CostModel& model, double T_S);

}  // namespace cyltrack
