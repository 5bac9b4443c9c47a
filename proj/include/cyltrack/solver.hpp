#pragma once

#include "cyltrack/stats.hpp"
#include "cyltrack/types.hpp"

#include <optional>
#include <vector>

namespace cyltrack {

/// Sentinel stored at forbidden (o, i) cells. Forbidden pairs are masked
/// structurally; the sentinel is written for inspection and never read by
/// the solver.
inline constexpr double kForbiddenCost = 1e30;

/// Min-cost partial matching instance over outputs (rows) and inputs
/// (columns). adjusted_costs(o, i) = gamma(o, i) - beta - delta, so an edge
/// improves the likelihood exactly when its entry is negative.
struct AssignmentProblem {
  MatX adjusted_costs;
  MaskX forbidden;
  double log_q_const = 0.0;  // -beta q - delta p - tau_alpha T_S

  Index p() const { return adjusted_costs.rows(); }
  Index q() const { return adjusted_costs.cols(); }
};

struct SolverResult {
  Configuration configuration;
  double K = 0.0;      // sum of adjusted costs over the matches
  double log_Q = 0.0;  // log_q_const - K
  int rank = 1;        // 1-based position in best-first order
};

AssignmentProblem build_problem(const std::vector<OutputEvent>& outputs,
                                const std::vector<InputEvent>& inputs,
                                const CostModel& model, double T_S = 0.0);

/// Exact minimizer of K over all configurations (successive shortest
/// augmenting paths; only profitable augmentations are applied).
SolverResult solve(const AssignmentProblem& problem);

/// Exact minimizer among configurations where every row in `required_rows`
/// is matched; std::nullopt when no such configuration exists.
std::optional<SolverResult> solve(const AssignmentProblem& problem,
                                  const std::vector<Index>& required_rows);

/// The n_best lowest-K configurations in nondecreasing (K, lexicographic)
/// order; shorter when the configuration space is exhausted first. Ranks are
/// filled 1..n. Partition search over forced/excluded edges plus
/// required/suppressed rows — the extra row branches cover configurations
/// that strictly contain the current optimum, which a matching that is not
/// forced to be perfect can otherwise slip past.
std::vector<SolverResult> solve_k_best(const AssignmentProblem& problem,
                                       int n_best);

/// Every configuration, sorted like solve_k_best. Guarded to p, q <= 7.
std::vector<SolverResult> brute_force(const AssignmentProblem& problem);

}  // namespace cyltrack
