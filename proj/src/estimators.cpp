#include "cyltrack/estimators.hpp"

#include "cyltrack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace cyltrack {

DirectionSplit classify_direction(const std::vector<Segment>& segments,
                                  const CylinderGeometry& geometry) {
  geometry.validate();
  DirectionSplit split;
  std::vector<Index> pending;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& pts = segments[s].points;
    const Index idx = static_cast<Index>(s);
    if (pts.size() < 2) {
      pending.push_back(idx);
      continue;
    }
    double net = 0.0;
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
      net += wrap_increment(pts[j + 1].x - pts[j].x, geometry.perimeter_L);
    }
    if (net > 0.0) {
      split.rightward.push_back(idx);
    } else if (net < 0.0) {
      split.leftward.push_back(idx);
    } else {
      pending.push_back(idx);
    }
  }
  // Undecidable segments go with the majority; rightward wins ties (the
  // positive-drift convention).
  auto& majority = split.rightward.size() >= split.leftward.size()
                       ? split.rightward
                       : split.leftward;
  for (Index idx : pending) {
    majority.push_back(idx);
    split.ambiguous.push_back(idx);
  }
  std::sort(majority.begin(), majority.end());
  return split;
}

DriftDiffusionEstimate estimate_drift_diffusion(
    const std::vector<Segment>& segments, const CylinderGeometry& geometry,
    double delta_t) {
  geometry.validate();
  if (!(delta_t > 0.0)) {
    throw std::invalid_argument(
        "estimate_drift_diffusion: delta_t must be positive");
  }
  std::vector<double> dxs, dys;
  for (const Segment& seg : segments) {
    for (std::size_t j = 0; j + 1 < seg.points.size(); ++j) {
      dxs.push_back(wrap_increment(seg.points[j + 1].x - seg.points[j].x,
                                   geometry.perimeter_L));
      dys.push_back(seg.points[j + 1].y - seg.points[j].y);
    }
  }
  if (dxs.empty()) {
    throw std::runtime_error(
        "estimate_drift_diffusion: no increments in the sample");
  }

  const double n = static_cast<double>(dxs.size());
  auto moments = [n](const std::vector<double>& d) {
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= n;
    return std::pair<double, double>(mean, var);
  };
  const auto [mx, vx] = moments(dxs);
  const auto [my, vy] = moments(dys);

  DriftDiffusionEstimate est;
  est.v_hat = Vec2(mx / delta_t, my / delta_t);
  est.sigma_hat = Vec2(std::sqrt(vx / delta_t), std::sqrt(vy / delta_t));
  est.n_increments = static_cast<Index>(dxs.size());
  return est;
}

TauDEstimate estimate_tau_d(const ObservedSample& sample,
                            const CylinderGeometry& geometry,
                            double border_margin, double ci_level) {
  geometry.validate();
  if (!(border_margin >= 0.0)) {
    throw std::invalid_argument("estimate_tau_d: border_margin must be >= 0");
  }
  if (!(ci_level > 0.0 && ci_level < 1.0)) {
    throw std::invalid_argument("estimate_tau_d: ci_level must be in (0, 1)");
  }
  if (!(sample.delta_t > 0.0)) {
    throw std::invalid_argument("estimate_tau_d: sample has no time step");
  }

  const double dt = sample.delta_t;
  const double lo = -geometry.observed_l + border_margin;
  const double hi = -border_margin;
  const double t_max = sample.T_S - dt + 1e-9 * dt;

  TauDEstimate est;
  est.ci_level = ci_level;
  for (const Segment& seg : sample.segments) {
    for (std::size_t j = 0; j < seg.points.size(); ++j) {
      const Point& pt = seg.points[j];
      if (pt.x < lo || pt.x > hi || pt.t > t_max) continue;
      ++est.n_restricted;
      if (j + 1 == seg.points.size()) ++est.n_deaths;
    }
  }
  if (est.n_restricted == 0) {
    throw std::runtime_error(
        "estimate_tau_d: restricted region holds no points");
  }

  const double n = static_cast<double>(est.n_restricted);
  est.tau_d_hat = static_cast<double>(est.n_deaths) / (dt * n);
  const double q = normal_quantile(0.5 * (1.0 + ci_level));
  const double half =
      q * std::sqrt(est.tau_d_hat * (1.0 / dt - est.tau_d_hat) / n);
  est.ci_low = est.tau_d_hat - half;
  est.ci_high = est.tau_d_hat + half;
  return est;
}

TauAlphaEstimate estimate_tau_alpha(const ObservedSample& sample,
                                    const CylinderGeometry& geometry) {
  geometry.validate();
  if (!(sample.T_S > 0.0)) {
    throw std::invalid_argument("estimate_tau_alpha: sample has no duration");
  }

  std::unordered_set<std::int64_t> with_out, with_in;
  for (const OutputEvent& ev : sample.outputs) with_out.insert(ev.segment_id);
  for (const InputEvent& ev : sample.inputs) with_in.insert(ev.segment_id);

  TauAlphaEstimate est;
  // First observed x of the segments that were born inside the window and
  // later reached the exit border.
  std::vector<double> birth_x;
  for (const Segment& seg : sample.segments) {
    const bool has_out = with_out.count(seg.id) > 0;
    const bool has_in = with_in.count(seg.id) > 0;
    if (has_out) ++est.n_outputs;
    if (has_out && has_in) ++est.n_crossers;
    if (has_out && !has_in) birth_x.push_back(seg.points.front().x);
  }
  if (est.n_outputs == 0) {
    throw std::runtime_error(
        "estimate_tau_alpha: no segment reached the exit border; lengthen "
        "the movie duration T_S");
  }

  auto count_born_within = [&birth_x](double x) {
    return static_cast<Index>(std::count_if(
        birth_x.begin(), birth_x.end(), [x](double b) { return b > -x; }));
  };

  const double l = geometry.observed_l;
  const double lu = geometry.hidden_lu();
  est.n_border = count_born_within(l);

  if (lu <= l) {
    // The window covers a full hidden width: count N_{l_u} directly.
    est.n_extension = count_born_within(lu);
    est.tau_alpha_hat = static_cast<double>(est.n_extension) / sample.T_S;
    return est;
  }

  const double n_out = static_cast<double>(est.n_outputs);
  const double p_l = static_cast<double>(est.n_border) / n_out;
  // Peel whole window widths off the extension, then fold the memoryless
  // recursion p_x = p_l + (1 - p_l) p_{x-l} back up.
  double x = geometry.extension_le();
  int folds = 0;
  while (x > l) {
    x -= l;
    ++folds;
  }
  est.n_extension = count_born_within(x);
  double p = static_cast<double>(est.n_extension) / n_out;
  for (int k = 0; k < folds; ++k) {
    p = p_l + (1.0 - p_l) * p;
  }
  est.p_extension = p;
  est.tau_alpha_hat =
      (static_cast<double>(est.n_border) + p * static_cast<double>(est.n_crossers)) /
      sample.T_S;
  return est;
}

EstimationReport run_estimators(const ObservedSample& sample,
                                const CylinderGeometry& geometry,
                                double border_margin, double ci_level) {
  EstimationReport report;
  report.n_segments = static_cast<Index>(sample.segments.size());
  const DirectionSplit split = classify_direction(sample.segments, geometry);
  report.n_rightward = static_cast<Index>(split.rightward.size());
  report.n_leftward = static_cast<Index>(split.leftward.size());
  report.n_ambiguous = static_cast<Index>(split.ambiguous.size());
  report.drift =
      estimate_drift_diffusion(sample.segments, geometry, sample.delta_t);
  report.tau_d = estimate_tau_d(sample, geometry, border_margin, ci_level);
  report.tau_alpha = estimate_tau_alpha(sample, geometry);
  return report;
}

DynamicsParams estimated_params(const EstimationReport& report) {
  DynamicsParams params;
  params.v_x = report.drift.v_hat.x();
  params.v_y = report.drift.v_hat.y();
  params.sigma_x = report.drift.sigma_hat.x();
  params.sigma_y = report.drift.sigma_hat.y();
  params.tau_d = report.tau_d.tau_d_hat;
  params.tau_alpha = report.tau_alpha.tau_alpha_hat;
  return params;
}

}  // namespace cyltrack
