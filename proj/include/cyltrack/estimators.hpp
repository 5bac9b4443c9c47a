#pragma once

#include "cyltrack/simulate.hpp"
#include "cyltrack/types.hpp"

#include <vector>

namespace cyltrack {

struct DirectionSplit {
  std::vector<Index> rightward;  // segment indices with positive net drift
  std::vector<Index> leftward;
  // Segments with one point or exactly zero net displacement; they are also
  // appended to the majority class above.
  std::vector<Index> ambiguous;
};

/// Splits segments by the sign of their wrap-aware mean x-displacement.
DirectionSplit classify_direction(const std::vector<Segment>& segments,
                                  const CylinderGeometry& geometry);

struct DriftDiffusionEstimate {
  Vec2 v_hat{0.0, 0.0};
  Vec2 sigma_hat{0.0, 0.0};
  Index n_increments = 0;
};

/// Per-axis MLE over all pooled one-step increments: v = mean(d) / dt,
/// sigma^2 = population variance(d) / dt. x-increments are wrap-corrected.
DriftDiffusionEstimate estimate_drift_diffusion(
    const std::vector<Segment>& segments, const CylinderGeometry& geometry,
    double delta_t);

struct TauDEstimate {
  double tau_d_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ci_level = 0.95;
  Index n_restricted = 0;  // |S_r|
  Index n_deaths = 0;
};

/// Death-rate estimator over the border-safe restricted region: the fraction
/// of sampled points with no successor, divided by delta_t, with the normal
/// (Wald) confidence interval of the given level.
TauDEstimate estimate_tau_d(const ObservedSample& sample,
                            const CylinderGeometry& geometry,
                            double border_margin, double ci_level = 0.95);

struct TauAlphaEstimate {
  double tau_alpha_hat = 0.0;
  Index n_border = 0;       // N_l: born inside, reached the exit border
  Index n_outputs = 0;      // |S_o|
  Index n_crossers = 0;     // |S_l*|: both an input and an output
  Index n_extension = 0;    // N_x used at the base of the recursion
  double p_extension = 0.0; // p_{l_e}
};

/// Arrival-rate estimator tau_alpha = (N_l + p_{l_e} |S_l*|) / T_S, with
/// p_{l_e} built by the memoryless recursion p_x = p_l + (1 - p_l) p_{x-l}
/// down to directly counted widths. When the window is at least as wide as
/// the hidden region, N_{l_u} is counted directly instead.
TauAlphaEstimate estimate_tau_alpha(const ObservedSample& sample,
                                    const CylinderGeometry& geometry);

struct EstimationReport {
  DriftDiffusionEstimate drift;
  TauDEstimate tau_d;
  TauAlphaEstimate tau_alpha;
  Index n_segments = 0;
  Index n_rightward = 0;
  Index n_leftward = 0;
  Index n_ambiguous = 0;
};

/// All estimators on one sample.
EstimationReport run_estimators(const ObservedSample& sample,
                                const CylinderGeometry& geometry,
                                double border_margin, double ci_level = 0.95);

/// Dynamics parameters assembled from a report (lambda_birth is not
/// identifiable from the window alone and is left at its default).
DynamicsParams estimated_params(const EstimationReport& report);

}  // namespace cyltrack
