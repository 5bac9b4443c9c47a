#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cyltrack {

using Index = Eigen::Index;
using Vec2 = Eigen::Vector2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using MaskX = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Unwrapped cylinder. x in (-L, 0] is circumferential and wraps at the seam
/// {0} == {-L}; y in [0, H] is axial. The observation window (ROO) is
/// [-l, 0] x [0, H]; the hidden region is [-L, -l] x [0, H].
struct CylinderGeometry {
  double perimeter_L = 50.0;
  double height_H = 30.0;
  double observed_l = 14.7887;

  /// Width of the hidden region, l_u = L - l.
  double hidden_lu() const { return perimeter_L - observed_l; }

  /// Width of the extended zone, l_e = l_u - l. Negative when the window is
  /// wider than the hidden region.
  double extension_le() const { return hidden_lu() - observed_l; }

  bool valid() const {
    return perimeter_L > 0.0 && height_H > 0.0 && observed_l > 0.0 &&
           observed_l < perimeter_L;
  }

  void validate() const {
    if (!valid()) {
      throw std::invalid_argument(
          "CylinderGeometry: need 0 < observed_l < perimeter_L and positive "
          "height");
    }
  }

  /// Geometry with a prescribed observed-to-hidden ratio l / l_u.
  static CylinderGeometry from_ratio(double perimeter, double height,
                                     double ratio) {
    CylinderGeometry g;
    g.perimeter_L = perimeter;
    g.height_H = height;
    g.observed_l = perimeter * ratio / (1.0 + ratio);
    g.validate();
    return g;
  }
};

/// Parameters of the birth/death drift-diffusion dynamics. Drift is oriented
/// so that v_x > 0 (leftward movers are mirrored before estimation).
struct DynamicsParams {
  double v_x = 0.6;
  double v_y = 0.006;
  double sigma_x = 0.2;
  double sigma_y = 0.2;
  double lambda_birth = 0.03;
  double tau_d = 0.005;
  double tau_alpha = 0.0;

  bool valid() const {
    return v_x > 0.0 && sigma_x > 0.0 && sigma_y > 0.0 &&
           lambda_birth >= 0.0 && tau_d > 0.0 && tau_alpha >= 0.0 &&
           std::isfinite(v_x) && std::isfinite(v_y);
  }

  void validate() const {
    if (!valid()) {
      throw std::invalid_argument(
          "DynamicsParams: need v_x > 0, sigma > 0, lambda >= 0, tau_d > 0, "
          "tau_alpha >= 0");
    }
  }
};

/// One sampled observation. x is the wrapped circumferential coordinate.
struct Point {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// A segment leaving the window through the exit border {0} x [0, H].
struct OutputEvent {
  double t = 0.0;
  double y = 0.0;
  std::int64_t segment_id = -1;
};

/// A segment entering the window through the entry border {-l} x [0, H].
struct InputEvent {
  double t = 0.0;
  double y = 0.0;
  std::int64_t segment_id = -1;
};

/// A connection hypothesis c = (D_c, B_c, b_c): every output is either
/// matched to a later input or declared dead in the hidden region, and every
/// unmatched input is a spontaneous hidden birth. Indices refer to positions
/// in the output/input event lists.
struct Configuration {
  std::vector<std::pair<Index, Index>> matches;  // (output, input), sorted
  std::vector<Index> dead_outputs;               // sorted
  std::vector<Index> spontaneous_inputs;         // sorted

  Index n_matches() const { return static_cast<Index>(matches.size()); }

  bool operator==(const Configuration& other) const {
    return matches == other.matches && dead_outputs == other.dead_outputs &&
           spontaneous_inputs == other.spontaneous_inputs;
  }
};

/// Wraps a circumferential coordinate into (-L, 0]; the seam is represented
/// by 0. Total and idempotent.
inline double wrap_x(double x, const CylinderGeometry& geometry) {
  const double L = geometry.perimeter_L;
  double r = std::fmod(x, L);
  if (r > 0.0) {
    r -= L;
  }
  return r + 0.0;  // normalize -0.0 at the seam
}

/// Minimal-image x-increment between consecutive wrapped samples. Exact as
/// long as one step moves less than half the perimeter.
inline double wrap_increment(double dx, double perimeter_L) {
  return dx - perimeter_L * std::round(dx / perimeter_L);
}

/// O(p + q) validity check: row/column sums at most one, the parts partition
/// the event sets, and every match moves forward in time.
bool configuration_is_valid(const Configuration& config,
                            const std::vector<OutputEvent>& outputs,
                            const std::vector<InputEvent>& inputs);

/// Canonical form: sorts the component lists in place.
void canonicalize(Configuration& config);

/// Deterministic ordering key for equal-cost configurations: lexicographic
/// over the sorted match list, then over dead outputs.
bool lex_less(const Configuration& a, const Configuration& b);

}  // namespace cyltrack
