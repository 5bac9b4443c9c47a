#include "cyltrack/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace cyltrack {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Side constraints describing one cell of the k-best partition.
struct Constraints {
  std::vector<std::pair<Index, Index>> forced;    // edges fixed in
  std::vector<std::pair<Index, Index>> excluded;  // edges fixed out
  std::vector<Index> dead_rows;                   // rows fixed unmatched
  std::vector<Index> required_rows;               // rows fixed matched
};

/// Successive-shortest-path matcher on the bipartite row/column graph.
/// Augmenting paths are found with SPFA (edge weights can be negative, but
/// the residual graph of a min-cost matching has no negative cycles).
class Matcher {
 public:
  Matcher(const AssignmentProblem& problem, const Constraints& cons)
      : problem_(problem),
        p_(problem.p()),
        q_(problem.q()),
        allowed_(!problem.forbidden),
        match_row_(static_cast<std::size_t>(p_), -1),
        match_col_(static_cast<std::size_t>(q_), -1),
        row_dead_(static_cast<std::size_t>(p_), 0),
        feasible_(true) {
    for (const auto& [r, c] : cons.excluded) {
      allowed_(r, c) = false;
    }
    for (Index r : cons.dead_rows) {
      row_dead_[static_cast<std::size_t>(r)] = 1;
      allowed_.row(r).setConstant(false);
    }
    // Forced edges enter the matching up front; their endpoints lose all
    // residual edges so no augmenting path can disturb them.
    for (const auto& [r, c] : cons.forced) {
      if (!allowed_(r, c) || match_row_[static_cast<std::size_t>(r)] >= 0 ||
          match_col_[static_cast<std::size_t>(c)] >= 0) {
        feasible_ = false;
        return;
      }
      match_row_[static_cast<std::size_t>(r)] = c;
      match_col_[static_cast<std::size_t>(c)] = r;
      allowed_.row(r).setConstant(false);
      allowed_.col(c).setConstant(false);
    }
    required_ = cons.required_rows;
  }

  bool run() {
    if (!feasible_) return false;
    // Phase 1: saturate required rows, cheapest paths first, regardless of
    // sign.
    while (true) {
      std::vector<Index> sources;
      for (Index r : required_) {
        if (match_row_[static_cast<std::size_t>(r)] < 0) sources.push_back(r);
      }
      if (sources.empty()) break;
      const Index target = shortest_path(sources, /*need_negative=*/false);
      if (target < 0) return false;
      augment(target);
    }
    // Phase 2: optional augmentations, applied only while they pay for
    // themselves.
    while (true) {
      std::vector<Index> sources;
      for (Index r = 0; r < p_; ++r) {
        if (match_row_[static_cast<std::size_t>(r)] < 0 &&
            !row_dead_[static_cast<std::size_t>(r)]) {
          sources.push_back(r);
        }
      }
      if (sources.empty()) break;
      const Index target = shortest_path(sources, /*need_negative=*/true);
      if (target < 0) break;
      augment(target);
    }
    return true;
  }

  SolverResult result() const {
    SolverResult out;
    double K = 0.0;
    for (Index r = 0; r < p_; ++r) {
      const Index c = match_row_[static_cast<std::size_t>(r)];
      if (c >= 0) {
        out.configuration.matches.emplace_back(r, c);
        K += problem_.adjusted_costs(r, c);
      } else {
        out.configuration.dead_outputs.push_back(r);
      }
    }
    for (Index c = 0; c < q_; ++c) {
      if (match_col_[static_cast<std::size_t>(c)] < 0) {
        out.configuration.spontaneous_inputs.push_back(c);
      }
    }
    out.K = K;
    out.log_Q = problem_.log_q_const - K;
    return out;
  }

 private:
  // Nodes 0..p-1 are rows, p..p+q-1 are columns. Returns the best reachable
  // unmatched column (smallest index on ties), or -1.
  Index shortest_path(const std::vector<Index>& sources, bool need_negative) {
    const Index n = p_ + q_;
    dist_.assign(static_cast<std::size_t>(n), kInf);
    parent_.assign(static_cast<std::size_t>(n), -1);
    std::vector<char> queued(static_cast<std::size_t>(n), 0);
    std::deque<Index> queue;
    for (Index r : sources) {
      dist_[static_cast<std::size_t>(r)] = 0.0;
      queue.push_back(r);
      queued[static_cast<std::size_t>(r)] = 1;
    }
    auto relax = [&](Index node, double nd, Index from) {
      if (nd < dist_[static_cast<std::size_t>(node)]) {
        dist_[static_cast<std::size_t>(node)] = nd;
        parent_[static_cast<std::size_t>(node)] = from;
        if (!queued[static_cast<std::size_t>(node)]) {
          queue.push_back(node);
          queued[static_cast<std::size_t>(node)] = 1;
        }
      }
    };
    while (!queue.empty()) {
      const Index v = queue.front();
      queue.pop_front();
      queued[static_cast<std::size_t>(v)] = 0;
      const double dv = dist_[static_cast<std::size_t>(v)];
      if (v < p_) {
        for (Index c = 0; c < q_; ++c) {
          if (allowed_(v, c) && match_row_[static_cast<std::size_t>(v)] != c) {
            relax(p_ + c, dv + problem_.adjusted_costs(v, c), v);
          }
        }
      } else {
        const Index c = v - p_;
        const Index r = match_col_[static_cast<std::size_t>(c)];
        if (r >= 0) {
          relax(r, dv - problem_.adjusted_costs(r, c), v);
        }
      }
    }
    Index best = -1;
    double best_dist = need_negative ? 0.0 : kInf;
    for (Index c = 0; c < q_; ++c) {
      if (match_col_[static_cast<std::size_t>(c)] >= 0) continue;
      const double d = dist_[static_cast<std::size_t>(p_ + c)];
      if (d < best_dist) {
        best_dist = d;
        best = c;
      }
    }
    return best;
  }

  void augment(Index target_col) {
    Index v = p_ + target_col;
    while (v >= 0) {
      const Index r = parent_[static_cast<std::size_t>(v)];
      const Index next = parent_[static_cast<std::size_t>(r)];
      match_row_[static_cast<std::size_t>(r)] = v - p_;
      match_col_[static_cast<std::size_t>(v - p_)] = r;
      v = next;
    }
  }

  const AssignmentProblem& problem_;
  Index p_, q_;
  MaskX allowed_;
  std::vector<Index> match_row_, match_col_;
  std::vector<char> row_dead_;
  std::vector<Index> required_;
  std::vector<double> dist_;
  std::vector<Index> parent_;
  bool feasible_;
};

std::optional<SolverResult> solve_constrained(const AssignmentProblem& problem,
                                              const Constraints& cons) {
  Matcher matcher(problem, cons);
  if (!matcher.run()) return std::nullopt;
  return matcher.result();
}

}  // namespace

AssignmentProblem build_problem(const std::vector<OutputEvent>& outputs,
                                const std::vector<InputEvent>& inputs,
                                const CostModel& model, double T_S) {
  const Index p = static_cast<Index>(outputs.size());
  const Index q = static_cast<Index>(inputs.size());
  AssignmentProblem problem;
  problem.adjusted_costs.resize(p, q);
  problem.forbidden.resize(p, q);
  for (Index o = 0; o < p; ++o) {
    for (Index i = 0; i < q; ++i) {
      const double gamma = model.gamma(outputs[static_cast<std::size_t>(o)],
                                       inputs[static_cast<std::size_t>(i)]);
      if (std::isfinite(gamma)) {
        problem.forbidden(o, i) = false;
        problem.adjusted_costs(o, i) = gamma - model.beta - model.delta;
      } else {
        problem.forbidden(o, i) = true;
        problem.adjusted_costs(o, i) = kForbiddenCost;
      }
    }
  }
  problem.log_q_const =
      -model.beta * static_cast<double>(q) -
      model.delta * static_cast<double>(p) -
      std::max(model.params.tau_alpha, kMinRate) * T_S;
  return problem;
}

SolverResult solve(const AssignmentProblem& problem) {
  auto result = solve_constrained(problem, Constraints{});
  // The empty matching is always available, so this cannot fail.
  return *result;
}

std::optional<SolverResult> solve(const AssignmentProblem& problem,
                                  const std::vector<Index>& required_rows) {
  Constraints cons;
  cons.required_rows = required_rows;
  for (Index r : required_rows) {
    if (r < 0 || r >= problem.p()) {
      throw std::invalid_argument("solve: required row out of range");
    }
  }
  return solve_constrained(problem, cons);
}

std::vector<SolverResult> solve_k_best(const AssignmentProblem& problem,
                                       int n_best) {
  if (n_best < 1) {
    throw std::invalid_argument("solve_k_best: n_best must be >= 1");
  }

  struct Node {
    SolverResult res;
    Constraints cons;
  };
  struct NodeCompare {
    bool operator()(const Node& a, const Node& b) const {
      if (a.res.K != b.res.K) return a.res.K > b.res.K;
      if (a.res.configuration == b.res.configuration) return false;
      return lex_less(b.res.configuration, a.res.configuration);
    }
  };

  std::priority_queue<Node, std::vector<Node>, NodeCompare> frontier;
  frontier.push({solve(problem), Constraints{}});

  std::vector<SolverResult> out;
  while (!frontier.empty() && static_cast<int>(out.size()) < n_best) {
    Node node = frontier.top();
    frontier.pop();
    node.res.rank = static_cast<int>(out.size()) + 1;
    out.push_back(node.res);

    const Configuration& best = node.res.configuration;

    // Branch 1: exclude each newly chosen edge in turn, forcing the earlier
    // ones, so every configuration missing one of them lands in exactly one
    // child cell.
    Constraints base = node.cons;
    for (const auto& e : best.matches) {
      if (std::find(node.cons.forced.begin(), node.cons.forced.end(), e) !=
          node.cons.forced.end()) {
        continue;
      }
      Constraints child = base;
      child.excluded.push_back(e);
      if (auto r = solve_constrained(problem, child)) {
        frontier.push({*r, child});
      }
      base.forced.push_back(e);
    }

    // Branch 2: configurations that keep every chosen edge but additionally
    // match rows left free here. Ordering by the smallest newly matched row
    // partitions them: child j requires row u_j and suppresses u_1..u_{j-1}.
    std::vector<char> matched_row(static_cast<std::size_t>(problem.p()), 0);
    for (const auto& [r, c] : best.matches) {
      matched_row[static_cast<std::size_t>(r)] = 1;
    }
    for (Index u = 0; u < problem.p(); ++u) {
      if (matched_row[static_cast<std::size_t>(u)]) continue;
      if (std::find(node.cons.dead_rows.begin(), node.cons.dead_rows.end(),
                    u) != node.cons.dead_rows.end()) {
        continue;
      }
      Constraints child = base;
      child.required_rows.push_back(u);
      if (auto r = solve_constrained(problem, child)) {
        frontier.push({*r, child});
      }
      base.dead_rows.push_back(u);
    }
  }

  return out;
}

std::vector<SolverResult> brute_force(const AssignmentProblem& problem) {
  const Index p = problem.p();
  const Index q = problem.q();
  if (p > 7 || q > 7) {
    throw std::invalid_argument("brute_force: limited to p, q <= 7");
  }

  std::vector<SolverResult> all;
  std::vector<Index> choice(static_cast<std::size_t>(p), -1);

  auto emit = [&]() {
    SolverResult res;
    double K = 0.0;
    for (Index r = 0; r < p; ++r) {
      const Index c = choice[static_cast<std::size_t>(r)];
      if (c >= 0) {
        res.configuration.matches.emplace_back(r, c);
        K += problem.adjusted_costs(r, c);
      } else {
        res.configuration.dead_outputs.push_back(r);
      }
    }
    std::vector<char> used_col(static_cast<std::size_t>(q), 0);
    for (const auto& [r, c] : res.configuration.matches) {
      used_col[static_cast<std::size_t>(c)] = 1;
    }
    for (Index c = 0; c < q; ++c) {
      if (!used_col[static_cast<std::size_t>(c)]) {
        res.configuration.spontaneous_inputs.push_back(c);
      }
    }
    res.K = K;
    res.log_Q = problem.log_q_const - K;
    all.push_back(std::move(res));
  };

  std::uint32_t used_mask = 0;
  auto recurse = [&](auto&& self, Index r) -> void {
    if (r == p) {
      emit();
      return;
    }
    choice[static_cast<std::size_t>(r)] = -1;
    self(self, r + 1);
    for (Index c = 0; c < q; ++c) {
      if (problem.forbidden(r, c)) continue;
      if (used_mask & (1u << c)) continue;
      used_mask |= (1u << c);
      choice[static_cast<std::size_t>(r)] = c;
      self(self, r + 1);
      used_mask &= ~(1u << c);
    }
    choice[static_cast<std::size_t>(r)] = -1;
  };
  recurse(recurse, 0);

  std::sort(all.begin(), all.end(), [](const SolverResult& a,
                                       const SolverResult& b) {
    if (a.K != b.K) return a.K < b.K;
    return lex_less(a.configuration, b.configuration);
  });
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].rank = static_cast<int>(i) + 1;
  }
  return all;
}

}  // namespace cyltrack
