#include "cyltrack/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <stdexcept>
#include <string>

namespace {

int dispatch(const CLI::App& app, cyltrack::ExperimentSpec& spec,
             const std::string& params_name) {
  spec.params_source = cyltrack::params_source_from_string(params_name);
  if (app.got_subcommand("simulate")) {
    cyltrack::run_simulate(spec);
    std::printf("simulate: wrote bundles under %s\n", spec.out_dir.c_str());
  } else if (app.got_subcommand("estimate")) {
    cyltrack::run_estimate(spec.out_dir);
    std::printf("estimate: wrote %s/estimates.csv\n", spec.out_dir.c_str());
  } else if (app.got_subcommand("connect")) {
    cyltrack::run_connect(spec.out_dir, spec.params_source, spec.k_best,
                          spec.dump_problems);
    std::printf("connect: wrote %s/connect.csv\n", spec.out_dir.c_str());
  } else if (app.got_subcommand("evaluate")) {
    cyltrack::run_evaluate(spec.out_dir, spec.params_source);
    std::printf("evaluate: wrote %s/evaluation.csv\n", spec.out_dir.c_str());
  } else if (app.got_subcommand("sweep")) {
    cyltrack::run_sweep(spec);
    std::printf("sweep: pipeline complete under %s\n", spec.out_dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "cyltrack: simulate partially observed cylinder traffic, estimate its "
      "dynamics and reconnect the broken tracks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI config file; command-line flags win");

  cyltrack::ExperimentSpec spec;
  std::string params_name = "true";

  app.add_option("--seed", spec.seed, "Master seed")->capture_default_str();
  app.add_option("--out", spec.out_dir, "Experiment directory")
      ->capture_default_str();
  app.add_option("--replications", spec.replications,
                 "Movies per grid point")
      ->capture_default_str();
  app.add_option("--params", params_name,
                 "Cost-model parameter source for connect/evaluate")
      ->check(CLI::IsMember({"true", "tilde", "hat", "mixed"}))
      ->capture_default_str();
  app.add_option("--k-best", spec.k_best,
                 "Number of ranked configurations per movie")
      ->capture_default_str();
  app.add_flag("--dump-problems", spec.dump_problems,
               "Also write the assignment cost matrices");

  app.add_option("--lambda", spec.lambdas, "Birth rates (grid axis)");
  app.add_option("--tau-d", spec.tau_ds, "Death rates (grid axis)");
  app.add_option("--sigma", spec.sigmas, "Diffusion sigmas (grid axis)");
  app.add_option("--ratio", spec.ratios,
                 "Observed-to-hidden width ratios l/l_u (grid axis)");
  app.add_option("--duration", spec.durations,
                 "Movie durations T_S in seconds (grid axis)");
  app.add_option("--speed-mode", spec.speed_modes,
                 "Per-particle speed draw: constant or uniform (grid axis)");

  app.add_option("--perimeter", spec.perimeter_L, "Cylinder perimeter L")
      ->capture_default_str();
  app.add_option("--height", spec.height_H, "Cylinder height H")
      ->capture_default_str();
  app.add_option("--vx", spec.v_x, "Mean horizontal speed")
      ->capture_default_str();
  app.add_option("--vy-ratio", spec.vy_ratio, "v_y as a fraction of v_x")
      ->capture_default_str();
  app.add_option("--delta-t", spec.delta_t, "Sampling step")
      ->capture_default_str();
  app.add_option("--warmup", spec.warmup,
                 "Pre-window burn-in, seconds of unrecorded dynamics")
      ->capture_default_str();
  app.add_option("--speed-lo", spec.speed_lo,
                 "Lower speed bound for uniform mode")
      ->capture_default_str();
  app.add_option("--speed-hi", spec.speed_hi,
                 "Upper speed bound for uniform mode")
      ->capture_default_str();
  app.add_option("--border-margin", spec.border_margin,
                 "Border margin for the restricted region; negative derives "
                 "it from the dynamics")
      ->capture_default_str();
  app.add_option("--ci-level", spec.ci_level,
                 "Confidence level for the death-rate interval")
      ->capture_default_str();
  app.add_option("--tilde-duration", spec.tilde_duration,
                 "Companion-movie duration for --params tilde")
      ->capture_default_str();

  app.add_subcommand("simulate", "Simulate movies over the parameter grid");
  app.add_subcommand("estimate",
                     "Run the estimators over a simulated experiment");
  app.add_subcommand("connect",
                     "Solve the track-connection problem per movie");
  app.add_subcommand("evaluate",
                     "Score stored connection results against ground truth");
  app.add_subcommand("sweep",
                     "simulate + estimate + connect + evaluate + figure data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "cyltrack: %s\n", e.what());
    return 2;
  }

  try {
    return dispatch(app, spec, params_name);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "cyltrack: invalid configuration: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cyltrack: %s\n", e.what());
    return 3;
  }
}
