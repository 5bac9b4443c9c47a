#pragma once

#include "cyltrack/types.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace cyltrack {

enum class SpeedMode { kConstant, kUniform };

struct SimOptions {
  double delta_t = 0.25;
  double warmup = 1200.0;   // discarded burn-in ahead of the movie
  double duration = 300.0;  // T_S
  SpeedMode speed_mode = SpeedMode::kConstant;
  double speed_lo = 0.4;  // v_x ~ U(lo, hi) in kUniform mode
  double speed_hi = 0.8;

  void validate() const {
    if (!(delta_t > 0.0) || !(warmup >= 0.0) || !(duration > 0.0)) {
      throw std::invalid_argument(
          "SimOptions: need delta_t > 0, warmup >= 0, duration > 0");
    }
    if (speed_mode == SpeedMode::kUniform &&
        !(0.0 < speed_lo && speed_lo <= speed_hi)) {
      throw std::invalid_argument("SimOptions: need 0 < speed_lo <= speed_hi");
    }
  }
};

/// One simulated particle. Times are relative to the start of the movie, so
/// birth can be negative (born during warmup) and death can exceed T_S.
/// Only samples inside [0, T_S] are retained.
struct Trajectory {
  std::int64_t id = -1;
  double birth_time = 0.0;
  double death_time = 0.0;
  double birth_x = 0.0;  // wrapped
  double birth_y = 0.0;
  double v_x = 0.0;  // realized drift (differs from params in kUniform mode)
  double v_y = 0.0;
  // First sample time at which the cumulative (unwrapped) x reached the
  // seam; NaN if that never happened while sampled.
  double first_seam_crossing = std::numeric_limits<double>::quiet_NaN();
  std::vector<Point> points;
};

/// Birth/death drift-diffusion on the cylinder surface: Poisson births
/// uniform on the surface, exponential lifetimes, exact Euler-Maruyama
/// transition (the discretization is exact for constant drift), wrap at the
/// seam. Trajectories with no retained sample are dropped; ids are dense in
/// birth order.
std::vector<Trajectory> simulate(const CylinderGeometry& geometry,
                                 const DynamicsParams& params,
                                 const SimOptions& options, std::uint64_t seed);

/// A maximal run of consecutive samples of one trajectory inside the window.
struct Segment {
  std::int64_t id = -1;
  std::vector<Point> points;
};

struct ObservedSample {
  std::vector<Segment> segments;  // ordered by id = order of first appearance
  std::vector<OutputEvent> outputs;  // sorted by time
  std::vector<InputEvent> inputs;    // sorted by time
  double T_S = 0.0;
  double delta_t = 0.0;
  // Ground truth: segment id -> trajectory id. Empty when unknown (e.g. a
  // sample read back without its links file).
  std::vector<std::int64_t> true_links;
};

/// Margin within which a segment endpoint counts as touching a border:
/// one drifted step plus three standard deviations.
inline double default_border_margin(const DynamicsParams& params,
                                    double delta_t) {
  return params.v_x * delta_t + 3.0 * params.sigma_x * std::sqrt(delta_t);
}

/// Restriction of the simulation to the window [-l, 0] x [0, H]: segments,
/// border events, ground-truth links.
ObservedSample observe(const std::vector<Trajectory>& trajectories,
                       const CylinderGeometry& geometry,
                       const SimOptions& options, double border_margin);

/// The configuration realized by the ground truth: consecutive segments of
/// one trajectory are matched whenever the earlier one produced an output
/// and the later one an input.
Configuration true_configuration(const ObservedSample& sample);

/// Directly counted arrival rate N_{l_u} / T_S: trajectories born within
/// l_u of the exit border whose first seam crossing falls inside the movie.
double counted_arrival_rate(const std::vector<Trajectory>& trajectories,
                            const CylinderGeometry& geometry, double T_S);

/// Average over the sampling grid of the number of alive trajectories.
double mean_alive_count(const std::vector<Trajectory>& trajectories,
                        double T_S, double delta_t);

}  // namespace cyltrack
