#pragma once

#include "cyltrack/simulate.hpp"
#include "cyltrack/solver.hpp"
#include "cyltrack/types.hpp"

#include <vector>

namespace cyltrack {

/// Clustering of the observed segments into reconstructed trajectories;
/// labels[s] is the cluster of segment index s. Label values are arbitrary
/// (all scores are relabeling-invariant).
struct Partition {
  std::vector<std::int64_t> labels;

  Index size() const { return static_cast<Index>(labels.size()); }
};

/// Chains matched output->input pairs through their segments; connected
/// components become clusters. Throws when a match closes a cycle, which a
/// valid configuration cannot do (time increases along every match).
Partition configuration_to_partition(const Configuration& config,
                                     const ObservedSample& sample);

/// Ground-truth clustering from the sample's trajectory links.
Partition true_partition(const ObservedSample& sample);

/// Rand index (a + b) / C(M, 2).
double rand_index(const Partition& G, const Partition& K);

/// Adjusted Rand index, permutation-model expectation removed via the
/// contingency-table closed form. Degenerate pairs (expectation 1) score 1
/// when the partitions agree and 0 otherwise.
double adjusted_rand_index(const Partition& G, const Partition& K);

struct GapScore {
  double k_gap = 0.0;
  double ari = 0.0;
};

/// K(true configuration) - K(solved), paired with the ARI of the solved
/// partition against ground truth. The gap is nonnegative whenever the
/// solver is exact.
GapScore k_gap(const ObservedSample& sample, const SolverResult& solved,
               const CostModel& model);

/// Rotations per ground-truth trajectory, v_x T_d / L.
std::vector<double> rotation_counts(const std::vector<Trajectory>& trajectories,
                                    const CylinderGeometry& geometry);

/// Expected rotations per particle, v_x / (tau_d L).
double expected_rotations(const DynamicsParams& params,
                          const CylinderGeometry& geometry);

/// Segment count per cluster (the observable rotation proxy), in order of
/// first appearance.
std::vector<Index> segments_per_cluster(const Partition& partition);

}  // namespace cyltrack
