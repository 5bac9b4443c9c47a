#include "cyltrack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace cyltrack {
namespace {

struct UnionFind {
  std::vector<Index> parent;

  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) {
    for (Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  }
  Index find(Index a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  // Returns false if a and b were already connected.
  bool unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(b)] = a;
    return true;
  }
};

/// First-occurrence normal form, so partitions compare as partitions.
std::vector<std::int64_t> normal_form(const std::vector<std::int64_t>& labels) {
  std::vector<std::int64_t> out;
  out.reserve(labels.size());
  std::unordered_map<std::int64_t, std::int64_t> remap;
  for (std::int64_t v : labels) {
    auto [it, inserted] =
        remap.emplace(v, static_cast<std::int64_t>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

struct ContingencySums {
  double pairs_both = 0.0;   // sum C(n_ij, 2)
  double pairs_g = 0.0;      // sum C(a_i, 2)
  double pairs_k = 0.0;      // sum C(b_j, 2)
  double pairs_total = 0.0;  // C(M, 2)
};

double choose2(double n) { return 0.5 * n * (n - 1.0); }

ContingencySums contingency(const Partition& G, const Partition& K) {
  if (G.size() != K.size()) {
    throw std::invalid_argument("partitions cover different element sets");
  }
  if (G.size() < 2) {
    throw std::invalid_argument("partition scores need at least 2 elements");
  }
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> cells;
  std::map<std::int64_t, std::int64_t> rows, cols;
  for (std::size_t s = 0; s < G.labels.size(); ++s) {
    ++cells[{G.labels[s], K.labels[s]}];
    ++rows[G.labels[s]];
    ++cols[K.labels[s]];
  }
  ContingencySums sums;
  for (const auto& [cell, n] : cells) {
    sums.pairs_both += choose2(static_cast<double>(n));
  }
  for (const auto& [label, n] : rows) {
    sums.pairs_g += choose2(static_cast<double>(n));
  }
  for (const auto& [label, n] : cols) {
    sums.pairs_k += choose2(static_cast<double>(n));
  }
  sums.pairs_total = choose2(static_cast<double>(G.size()));
  return sums;
}

}  // namespace

Partition configuration_to_partition(const Configuration& config,
                                     const ObservedSample& sample) {
  const Index n = static_cast<Index>(sample.segments.size());
  std::unordered_map<std::int64_t, Index> seg_pos;
  for (Index s = 0; s < n; ++s) {
    seg_pos[sample.segments[static_cast<std::size_t>(s)].id] = s;
  }

  UnionFind uf(n);
  for (const auto& [o, i] : config.matches) {
    if (o < 0 || o >= static_cast<Index>(sample.outputs.size()) || i < 0 ||
        i >= static_cast<Index>(sample.inputs.size())) {
      throw std::invalid_argument(
          "configuration_to_partition: match index out of range");
    }
    const Index a =
        seg_pos.at(sample.outputs[static_cast<std::size_t>(o)].segment_id);
    const Index b =
        seg_pos.at(sample.inputs[static_cast<std::size_t>(i)].segment_id);
    if (!uf.unite(a, b)) {
      throw std::invalid_argument(
          "configuration_to_partition: matches close a cycle");
    }
  }

  Partition partition;
  partition.labels.reserve(static_cast<std::size_t>(n));
  for (Index s = 0; s < n; ++s) {
    partition.labels.push_back(static_cast<std::int64_t>(uf.find(s)));
  }
  return partition;
}

Partition true_partition(const ObservedSample& sample) {
  if (sample.true_links.size() != sample.segments.size()) {
    throw std::runtime_error(
        "true_partition: sample carries no ground-truth links");
  }
  Partition partition;
  partition.labels = sample.true_links;
  return partition;
}

double rand_index(const Partition& G, const Partition& K) {
  const ContingencySums s = contingency(G, K);
  const double disagree = s.pairs_g + s.pairs_k - 2.0 * s.pairs_both;
  return (s.pairs_total - disagree) / s.pairs_total;
}

double adjusted_rand_index(const Partition& G, const Partition& K) {
  const ContingencySums s = contingency(G, K);
  const double expected = s.pairs_g * s.pairs_k / s.pairs_total;
  const double denom = 0.5 * (s.pairs_g + s.pairs_k) - expected;
  if (denom == 0.0) {
    return normal_form(G.labels) == normal_form(K.labels) ? 1.0 : 0.0;
  }
  return (s.pairs_both - expected) / denom;
}

GapScore k_gap(const ObservedSample& sample, const SolverResult& solved,
               const CostModel& model) {
  const Configuration truth = true_configuration(sample);
  double k_true = 0.0;
  for (const auto& [o, i] : truth.matches) {
    k_true += model.gamma(sample.outputs[static_cast<std::size_t>(o)],
                          sample.inputs[static_cast<std::size_t>(i)]) -
              model.beta - model.delta;
  }
  GapScore score;
  score.k_gap = k_true - solved.K;
  score.ari = adjusted_rand_index(
      true_partition(sample),
      configuration_to_partition(solved.configuration, sample));
  return score;
}

std::vector<double> rotation_counts(const std::vector<Trajectory>& trajectories,
                                    const CylinderGeometry& geometry) {
  geometry.validate();
  std::vector<double> out;
  out.reserve(trajectories.size());
  for (const Trajectory& traj : trajectories) {
    out.push_back(traj.v_x * (traj.death_time - traj.birth_time) /
                  geometry.perimeter_L);
  }
  return out;
}

double expected_rotations(const DynamicsParams& params,
                          const CylinderGeometry& geometry) {
  geometry.validate();
  if (!(params.tau_d > 0.0)) {
    throw std::invalid_argument("expected_rotations: tau_d must be positive");
  }
  return params.v_x / (params.tau_d * geometry.perimeter_L);
}

std::vector<Index> segments_per_cluster(const Partition& partition) {
  std::vector<Index> counts;
  std::unordered_map<std::int64_t, std::size_t> pos;
  for (std::int64_t label : partition.labels) {
    auto [it, inserted] = pos.emplace(label, counts.size());
    if (inserted) {
      counts.push_back(1);
    } else {
      ++counts[it->second];
    }
  }
  return counts;
}

}  // namespace cyltrack
