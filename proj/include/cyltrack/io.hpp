#pragma once

#include "cyltrack/simulate.hpp"
#include "cyltrack/solver.hpp"
#include "cyltrack/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cyltrack::io {

/// Shortest decimal string that parses back to exactly v. Locale-free,
/// '.' decimal separator.
std::string format_double(double v);

/// Strict parse of a full token; context is prepended to error messages.
double parse_double(const std::string& token, const std::string& context);
std::int64_t parse_int(const std::string& token, const std::string& context);

/// Everything needed to re-run or re-read one simulated movie.
struct SampleMeta {
  CylinderGeometry geometry;
  DynamicsParams params;
  SimOptions options;
  std::uint64_t seed = 0;
  double counted_tau_alpha = 0.0;
  double mean_alive = 0.0;
  std::int64_t n_trajectories = 0;
};

/// Writes meta.json, points.csv, outputs.csv, inputs.csv, links.csv and
/// trajectories.csv into dir (created if missing).
void write_sample_bundle(const std::filesystem::path& dir,
                         const ObservedSample& sample,
                         const std::vector<Trajectory>& trajectories,
                         const SampleMeta& meta);

ObservedSample read_sample_bundle(const std::filesystem::path& dir,
                                  SampleMeta* meta_out = nullptr);

/// Trajectory summaries (no sampled points) from a bundle.
std::vector<Trajectory> read_trajectories(const std::filesystem::path& dir);

void write_problem_csv(const std::filesystem::path& path,
                       const AssignmentProblem& problem);
AssignmentProblem read_problem_csv(const std::filesystem::path& path);

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<SolverResult>& results);
std::vector<SolverResult> read_results_csv(const std::filesystem::path& path);

/// Generic CSV surface used by the experiment layer: one header row, then
/// pre-formatted cells. Values must not contain commas or newlines.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path, std::vector<std::string>* header_out);

}  // namespace cyltrack::io
