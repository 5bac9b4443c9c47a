#pragma once

#include "cyltrack/estimators.hpp"
#include "cyltrack/io.hpp"
#include "cyltrack/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cyltrack {

enum class ParamsSource { kTrue, kTilde, kHat, kMixed };

ParamsSource params_source_from_string(const std::string& name);
std::string to_string(ParamsSource source);

/// Sweep description: the cartesian product of the parameter lists is the
/// experiment grid, each point replicated `replications` times.
struct ExperimentSpec {
  double perimeter_L = 50.0;
  double height_H = 30.0;
  std::vector<double> ratios = {0.42};  // l / l_u
  std::vector<double> lambdas = {0.03};
  std::vector<double> tau_ds = {0.005};
  std::vector<double> sigmas = {0.2};
  std::vector<std::string> speed_modes = {"constant"};
  std::vector<double> durations = {300.0};  // T_S, seconds

  double v_x = 0.6;
  double vy_ratio = 0.01;  // v_y = vy_ratio * v_x
  double delta_t = 0.25;
  double warmup = 1200.0;
  double speed_lo = 0.4;
  double speed_hi = 0.8;
  double border_margin = -1.0;  // < 0: derived from the dynamics
  double ci_level = 0.95;
  double tilde_duration = 1800.0;  // companion movies behind --params tilde

  int replications = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  ParamsSource params_source = ParamsSource::kTrue;
  int k_best = 1;
  bool dump_problems = false;

  void validate() const;
};

struct GridPoint {
  int index = 0;
  double lambda = 0.0;
  double tau_d = 0.0;
  double sigma = 0.0;
  double ratio = 0.0;
  double duration = 0.0;
  SpeedMode speed_mode = SpeedMode::kConstant;
};

std::vector<GridPoint> expand_grid(const ExperimentSpec& spec);

CylinderGeometry grid_geometry(const ExperimentSpec& spec,
                               const GridPoint& point);
DynamicsParams grid_params(const ExperimentSpec& spec, const GridPoint& point);
SimOptions grid_options(const ExperimentSpec& spec, const GridPoint& point);
double grid_border_margin(const ExperimentSpec& spec, const GridPoint& point);

/// Deterministic per-task seed stream derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t grid_index,
                          std::uint64_t replication);

/// Worker count for replication-level parallelism: the CYLTRACK_THREADS
/// environment variable caps (and hardware concurrency defaults) it.
int worker_count(int n_tasks);

/// Pipeline stages. Each writes CSV/JSON artifacts under spec.out_dir (or
/// the given simulation directory) and throws on unrecoverable IO errors;
/// per-movie estimator failures are flagged in the output rows instead.
void run_simulate(const ExperimentSpec& spec);
void run_estimate(const std::filesystem::path& sim_dir);
void run_connect(const std::filesystem::path& sim_dir, ParamsSource source,
                 int k_best, bool dump_problems);
void run_evaluate(const std::filesystem::path& sim_dir, ParamsSource source);
void run_sweep(const ExperimentSpec& spec);

}  // namespace cyltrack
