#include "cyltrack/experiment.hpp"

#include "cyltrack/evaluation.hpp"
#include "cyltrack/solver.hpp"
#include "cyltrack/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cyltrack {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Replication slot reserved for the companion movies behind --params tilde.
constexpr std::uint64_t kTildeStream = 0xC0FFEEull;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string bundle_name(int grid, int rep) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "g%04d_r%05d", grid, rep);
  return buf;
}

std::string sanitize_message(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return text;
}

json spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["perimeter_L"] = spec.perimeter_L;
  j["height_H"] = spec.height_H;
  j["ratios"] = spec.ratios;
  j["lambdas"] = spec.lambdas;
  j["tau_ds"] = spec.tau_ds;
  j["sigmas"] = spec.sigmas;
  j["speed_modes"] = spec.speed_modes;
  j["durations"] = spec.durations;
  j["v_x"] = spec.v_x;
  j["vy_ratio"] = spec.vy_ratio;
  j["delta_t"] = spec.delta_t;
  j["warmup"] = spec.warmup;
  j["speed_lo"] = spec.speed_lo;
  j["speed_hi"] = spec.speed_hi;
  j["border_margin"] = spec.border_margin;
  j["ci_level"] = spec.ci_level;
  j["tilde_duration"] = spec.tilde_duration;
  j["replications"] = spec.replications;
  j["seed"] = spec.seed;
  j["params_source"] = to_string(spec.params_source);
  j["k_best"] = spec.k_best;
  j["dump_problems"] = spec.dump_problems;
  return j;
}

ExperimentSpec spec_from_json(const json& j, const std::string& out_dir) {
  ExperimentSpec spec;
  spec.perimeter_L = j.at("perimeter_L").get<double>();
  spec.height_H = j.at("height_H").get<double>();
  spec.ratios = j.at("ratios").get<std::vector<double>>();
  spec.lambdas = j.at("lambdas").get<std::vector<double>>();
  spec.tau_ds = j.at("tau_ds").get<std::vector<double>>();
  spec.sigmas = j.at("sigmas").get<std::vector<double>>();
  spec.speed_modes = j.at("speed_modes").get<std::vector<std::string>>();
  spec.durations = j.at("durations").get<std::vector<double>>();
  spec.v_x = j.at("v_x").get<double>();
  spec.vy_ratio = j.at("vy_ratio").get<double>();
  spec.delta_t = j.at("delta_t").get<double>();
  spec.warmup = j.at("warmup").get<double>();
  spec.speed_lo = j.at("speed_lo").get<double>();
  spec.speed_hi = j.at("speed_hi").get<double>();
  spec.border_margin = j.at("border_margin").get<double>();
  spec.ci_level = j.at("ci_level").get<double>();
  spec.tilde_duration = j.at("tilde_duration").get<double>();
  spec.replications = j.at("replications").get<int>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.params_source = params_source_from_string(
      j.at("params_source").get<std::string>());
  spec.k_best = j.at("k_best").get<int>();
  spec.dump_problems = j.at("dump_problems").get<bool>();
  spec.out_dir = out_dir;
  return spec;
}

ExperimentSpec load_manifest_spec(const fs::path& sim_dir) {
  const fs::path path = sim_dir / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open manifest: " + path.string());
  }
  json j = json::parse(in, nullptr, true);
  return spec_from_json(j.at("spec"), sim_dir.string());
}

/// Runs task(i) for i in [0, n) on a bounded pool. Exceptions are collected
/// and rethrown joined, so callers that want soft failures catch inside.
void parallel_for(int n, const std::function<void(int)>& task) {
  const int workers = worker_count(n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::vector<std::string> errors;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) break;
        try {
          task(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          errors.emplace_back(e.what());
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (!errors.empty()) {
    std::string joined = errors.front();
    for (std::size_t k = 1; k < errors.size(); ++k) {
      joined += "; " + errors[k];
    }
    throw std::runtime_error(joined);
  }
}

struct Task {
  int grid = 0;
  int rep = 0;
};

std::vector<Task> make_tasks(int n_grid, int replications) {
  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(n_grid * replications));
  for (int g = 0; g < n_grid; ++g) {
    for (int r = 0; r < replications; ++r) {
      tasks.push_back({g, r});
    }
  }
  return tasks;
}

/// Column accessor for CSVs read back during aggregation.
class Columns {
 public:
  Columns(const fs::path& path) : path_(path.string()) {
    rows_ = io::read_csv(path, &header_);
    for (std::size_t k = 0; k < header_.size(); ++k) {
      index_[header_[k]] = k;
    }
  }

  std::size_t n_rows() const { return rows_.size(); }

  const std::string& cell(std::size_t row, const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw std::runtime_error(path_ + ": missing column " + name);
    }
    return rows_[row][it->second];
  }

 private:
  std::string path_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::map<std::string, std::size_t> index_;
};

std::vector<std::string> provenance_list(ParamsSource source) {
  switch (source) {
    case ParamsSource::kTrue:
      return {"true"};
    case ParamsSource::kTilde:
      return {"tilde-tau"};
    case ParamsSource::kHat:
      return {"hat-all"};
    case ParamsSource::kMixed:
      return {"true",      "tilde-tau",  "hat-tau",
              "hat-all",   "hat-vsigma", "tilde-tau-hat-vsigma"};
  }
  return {};
}

/// Parameter sets for one movie under the named provenance condition.
/// `counted` is the directly counted arrival rate stored with the bundle;
/// hat/tilde are the same-movie and companion-movie estimator reports.
DynamicsParams provenance_params(const std::string& provenance,
                                 const io::SampleMeta& meta,
                                 const EstimationReport* hat,
                                 const EstimationReport* tilde) {
  DynamicsParams params = meta.params;
  params.tau_alpha = meta.counted_tau_alpha;
  auto need = [&provenance](const EstimationReport* report,
                            const char* which) -> const EstimationReport& {
    if (!report) {
      throw std::runtime_error(std::string(which) +
                               " estimates unavailable for provenance " +
                               provenance);
    }
    return *report;
  };
  if (provenance == "true") {
    return params;
  }
  if (provenance == "tilde-tau") {
    const EstimationReport& t = need(tilde, "companion");
    params.tau_d = t.tau_d.tau_d_hat;
    params.tau_alpha = t.tau_alpha.tau_alpha_hat;
    return params;
  }
  if (provenance == "hat-tau") {
    const EstimationReport& h = need(hat, "same-movie");
    params.tau_d = h.tau_d.tau_d_hat;
    params.tau_alpha = h.tau_alpha.tau_alpha_hat;
    return params;
  }
  if (provenance == "hat-all") {
    const EstimationReport& h = need(hat, "same-movie");
    DynamicsParams est = estimated_params(h);
    est.lambda_birth = meta.params.lambda_birth;
    return est;
  }
  if (provenance == "hat-vsigma") {
    const EstimationReport& h = need(hat, "same-movie");
    params.v_x = h.drift.v_hat.x();
    params.v_y = h.drift.v_hat.y();
    params.sigma_x = h.drift.sigma_hat.x();
    params.sigma_y = h.drift.sigma_hat.y();
    return params;
  }
  if (provenance == "tilde-tau-hat-vsigma") {
    const EstimationReport& h = need(hat, "same-movie");
    const EstimationReport& t = need(tilde, "companion");
    params.v_x = h.drift.v_hat.x();
    params.v_y = h.drift.v_hat.y();
    params.sigma_x = h.drift.sigma_hat.x();
    params.sigma_y = h.drift.sigma_hat.y();
    params.tau_d = t.tau_d.tau_d_hat;
    params.tau_alpha = t.tau_alpha.tau_alpha_hat;
    return params;
  }
  throw std::invalid_argument("unknown provenance: " + provenance);
}

}  // namespace

ParamsSource params_source_from_string(const std::string& name) {
  if (name == "true") return ParamsSource::kTrue;
  if (name == "tilde") return ParamsSource::kTilde;
  if (name == "hat") return ParamsSource::kHat;
  if (name == "mixed") return ParamsSource::kMixed;
  throw std::invalid_argument("params source must be true|tilde|hat|mixed, got '" +
                              name + "'");
}

std::string to_string(ParamsSource source) {
  switch (source) {
    case ParamsSource::kTrue:
      return "true";
    case ParamsSource::kTilde:
      return "tilde";
    case ParamsSource::kHat:
      return "hat";
    case ParamsSource::kMixed:
      return "mixed";
  }
  return "true";
}

void ExperimentSpec::validate() const {
  if (ratios.empty() || lambdas.empty() || tau_ds.empty() || sigmas.empty() ||
      speed_modes.empty() || durations.empty()) {
    throw std::invalid_argument("experiment grid is empty");
  }
  if (replications < 1) {
    throw std::invalid_argument("replications must be >= 1");
  }
  if (k_best < 1) {
    throw std::invalid_argument("k_best must be >= 1");
  }
  if (!(v_x > 0.0) || !(delta_t > 0.0) || !(warmup >= 0.0) ||
      !(perimeter_L > 0.0) || !(height_H > 0.0) || !(tilde_duration > 0.0)) {
    throw std::invalid_argument(
        "need v_x > 0, delta_t > 0, warmup >= 0, positive geometry");
  }
  if (!(ci_level > 0.0 && ci_level < 1.0)) {
    throw std::invalid_argument("ci_level must lie in (0, 1)");
  }
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("ratios must be positive");
  }
  for (double v : lambdas) {
    if (!(v >= 0.0)) throw std::invalid_argument("lambdas must be >= 0");
  }
  for (double v : tau_ds) {
    if (!(v > 0.0)) throw std::invalid_argument("tau_ds must be positive");
  }
  for (double v : sigmas) {
    if (!(v > 0.0)) throw std::invalid_argument("sigmas must be positive");
  }
  for (double v : durations) {
    if (!(v > 0.0)) throw std::invalid_argument("durations must be positive");
  }
  for (const std::string& mode : speed_modes) {
    if (mode != "constant" && mode != "uniform") {
      throw std::invalid_argument("speed mode must be constant|uniform, got '" +
                                  mode + "'");
    }
  }
}

std::vector<GridPoint> expand_grid(const ExperimentSpec& spec) {
  std::vector<GridPoint> grid;
  int index = 0;
  for (double lambda : spec.lambdas) {
    for (double tau_d : spec.tau_ds) {
      for (double sigma : spec.sigmas) {
        for (const std::string& mode : spec.speed_modes) {
          for (double ratio : spec.ratios) {
            for (double duration : spec.durations) {
              GridPoint point;
              point.index = index++;
              point.lambda = lambda;
              point.tau_d = tau_d;
              point.sigma = sigma;
              point.ratio = ratio;
              point.duration = duration;
              point.speed_mode = mode == "uniform" ? SpeedMode::kUniform
                                                   : SpeedMode::kConstant;
              grid.push_back(point);
            }
          }
        }
      }
    }
  }
  return grid;
}

CylinderGeometry grid_geometry(const ExperimentSpec& spec,
                               const GridPoint& point) {
  return CylinderGeometry::from_ratio(spec.perimeter_L, spec.height_H,
                                      point.ratio);
}

DynamicsParams grid_params(const ExperimentSpec& spec, const GridPoint& point) {
  DynamicsParams params;
  params.v_x = spec.v_x;
  params.v_y = spec.vy_ratio * spec.v_x;
  params.sigma_x = point.sigma;
  params.sigma_y = point.sigma;
  params.lambda_birth = point.lambda;
  params.tau_d = point.tau_d;
  params.tau_alpha = 0.0;
  return params;
}

SimOptions grid_options(const ExperimentSpec& spec, const GridPoint& point) {
  SimOptions options;
  options.delta_t = spec.delta_t;
  options.warmup = spec.warmup;
  options.duration = point.duration;
  options.speed_mode = point.speed_mode;
  options.speed_lo = spec.speed_lo;
  options.speed_hi = spec.speed_hi;
  return options;
}

double grid_border_margin(const ExperimentSpec& spec, const GridPoint& point) {
  if (spec.border_margin >= 0.0) return spec.border_margin;
  return default_border_margin(grid_params(spec, point), spec.delta_t);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t grid_index,
                          std::uint64_t replication) {
  return splitmix64(splitmix64(splitmix64(master) ^ grid_index) ^ replication);
}

int worker_count(int n_tasks) {
  if (n_tasks <= 1) return 1;
  int workers = 0;
  if (const char* env = std::getenv("CYLTRACK_THREADS")) {
    try {
      workers = std::stoi(env);
    } catch (const std::exception&) {
      throw std::invalid_argument(
          "CYLTRACK_THREADS must be a positive integer");
    }
    if (workers < 1 || workers > 256) {
      throw std::invalid_argument(
          "CYLTRACK_THREADS must lie between 1 and 256");
    }
  } else {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
  }
  return std::min(workers, n_tasks);
}

void run_simulate(const ExperimentSpec& spec) {
  spec.validate();
  const fs::path out_dir(spec.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " +
                             out_dir.string() + ": " + ec.message());
  }

  const auto grid = expand_grid(spec);
  const auto tasks = make_tasks(static_cast<int>(grid.size()),
                                spec.replications);

  parallel_for(static_cast<int>(tasks.size()), [&](int t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const GridPoint& point = grid[static_cast<std::size_t>(task.grid)];
    const CylinderGeometry geometry = grid_geometry(spec, point);
    const DynamicsParams params = grid_params(spec, point);
    const SimOptions options = grid_options(spec, point);
    const std::uint64_t seed =
        derive_seed(spec.seed, static_cast<std::uint64_t>(task.grid),
                    static_cast<std::uint64_t>(task.rep));

    const auto trajectories = simulate(geometry, params, options, seed);
    const ObservedSample sample = observe(trajectories, geometry, options,
                                          grid_border_margin(spec, point));

    io::SampleMeta meta;
    meta.geometry = geometry;
    meta.params = params;
    meta.options = options;
    meta.seed = seed;
    meta.counted_tau_alpha =
        counted_arrival_rate(trajectories, geometry, options.duration);
    meta.mean_alive =
        mean_alive_count(trajectories, options.duration, options.delta_t);
    meta.n_trajectories = static_cast<std::int64_t>(trajectories.size());
    io::write_sample_bundle(out_dir / bundle_name(task.grid, task.rep), sample,
                            trajectories, meta);
  });

  json manifest;
  manifest["spec"] = spec_to_json(spec);
  json bundles = json::array();
  for (const Task& task : tasks) {
    json b;
    b["grid"] = task.grid;
    b["replication"] = task.rep;
    b["dir"] = bundle_name(task.grid, task.rep);
    b["seed"] = derive_seed(spec.seed, static_cast<std::uint64_t>(task.grid),
                            static_cast<std::uint64_t>(task.rep));
    b["status"] = "ok";
    bundles.push_back(b);
  }
  manifest["bundles"] = bundles;
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write manifest in " + out_dir.string());
  }
  out << manifest.dump(2) << '\n';
}

void run_estimate(const fs::path& sim_dir) {
  const ExperimentSpec spec = load_manifest_spec(sim_dir);
  const auto grid = expand_grid(spec);
  const auto tasks = make_tasks(static_cast<int>(grid.size()),
                                spec.replications);

  const std::vector<std::string> header{
      "grid_index",    "replication",   "lambda",        "tau_d",
      "sigma",         "ratio",         "T_S",           "speed_mode",
      "seed",          "n_segments",    "n_rightward",   "n_leftward",
      "n_ambiguous",   "n_increments",  "v_x_hat",       "v_y_hat",
      "sigma_x_hat",   "sigma_y_hat",   "tau_d_hat",     "tau_d_ci_low",
      "tau_d_ci_high", "n_restricted",  "n_deaths",      "tau_alpha_hat",
      "p_extension",   "n_border",      "n_outputs",     "n_crossers",
      "n_extension",   "counted_tau_alpha", "mean_alive", "error"};

  std::vector<std::vector<std::string>> rows(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), [&](int t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const GridPoint& point = grid[static_cast<std::size_t>(task.grid)];
    io::SampleMeta meta;
    const ObservedSample sample = io::read_sample_bundle(
        sim_dir / bundle_name(task.grid, task.rep), &meta);

    std::vector<std::string> row{
        std::to_string(task.grid),
        std::to_string(task.rep),
        io::format_double(point.lambda),
        io::format_double(point.tau_d),
        io::format_double(point.sigma),
        io::format_double(point.ratio),
        io::format_double(point.duration),
        point.speed_mode == SpeedMode::kUniform ? "uniform" : "constant",
        std::to_string(meta.seed)};
    try {
      const EstimationReport report = run_estimators(
          sample, meta.geometry, grid_border_margin(spec, point),
          spec.ci_level);
      row.insert(row.end(),
                 {std::to_string(report.n_segments),
                  std::to_string(report.n_rightward),
                  std::to_string(report.n_leftward),
                  std::to_string(report.n_ambiguous),
                  std::to_string(report.drift.n_increments),
                  io::format_double(report.drift.v_hat.x()),
                  io::format_double(report.drift.v_hat.y()),
                  io::format_double(report.drift.sigma_hat.x()),
                  io::format_double(report.drift.sigma_hat.y()),
                  io::format_double(report.tau_d.tau_d_hat),
                  io::format_double(report.tau_d.ci_low),
                  io::format_double(report.tau_d.ci_high),
                  std::to_string(report.tau_d.n_restricted),
                  std::to_string(report.tau_d.n_deaths),
                  io::format_double(report.tau_alpha.tau_alpha_hat),
                  io::format_double(report.tau_alpha.p_extension),
                  std::to_string(report.tau_alpha.n_border),
                  std::to_string(report.tau_alpha.n_outputs),
                  std::to_string(report.tau_alpha.n_crossers),
                  std::to_string(report.tau_alpha.n_extension),
                  io::format_double(meta.counted_tau_alpha),
                  io::format_double(meta.mean_alive),
                  ""});
    } catch (const std::exception& e) {
      row.insert(row.end(),
                 {std::to_string(sample.segments.size()), "-", "-", "-", "-",
                  "-", "-", "-", "-", "-", "-", "-", "-", "-", "-", "-", "-",
                  "-", "-", "-", io::format_double(meta.counted_tau_alpha),
                  io::format_double(meta.mean_alive), sanitize_message(e.what())});
    }
    rows[static_cast<std::size_t>(t)] = std::move(row);
  });

  io::write_csv(sim_dir / "estimates.csv", header, rows);
}

void run_connect(const fs::path& sim_dir, ParamsSource source, int k_best,
                 bool dump_problems) {
  if (k_best < 1) {
    throw std::invalid_argument("k_best must be >= 1");
  }
  const ExperimentSpec spec = load_manifest_spec(sim_dir);
  const auto grid = expand_grid(spec);
  const auto tasks = make_tasks(static_cast<int>(grid.size()),
                                spec.replications);
  const auto provenances = provenance_list(source);

  // Companion estimates per grid point for the tilde conditions (one longer
  // movie per point, simulated in memory).
  const bool needs_tilde =
      std::find_if(provenances.begin(), provenances.end(),
                   [](const std::string& p) {
                     return p.find("tilde") != std::string::npos;
                   }) != provenances.end();
  std::vector<EstimationReport> tilde_reports(grid.size());
  std::vector<char> tilde_ok(grid.size(), 0);
  std::vector<std::string> tilde_errors(grid.size());
  if (needs_tilde) {
    parallel_for(static_cast<int>(grid.size()), [&](int g) {
      const GridPoint& point = grid[static_cast<std::size_t>(g)];
      const CylinderGeometry geometry = grid_geometry(spec, point);
      const DynamicsParams params = grid_params(spec, point);
      SimOptions options = grid_options(spec, point);
      options.duration = spec.tilde_duration;
      const std::uint64_t seed = derive_seed(
          spec.seed, static_cast<std::uint64_t>(point.index), kTildeStream);
      try {
        const auto trajectories = simulate(geometry, params, options, seed);
        const ObservedSample companion = observe(
            trajectories, geometry, options, grid_border_margin(spec, point));
        tilde_reports[static_cast<std::size_t>(g)] =
            run_estimators(companion, geometry,
                           grid_border_margin(spec, point), spec.ci_level);
        tilde_ok[static_cast<std::size_t>(g)] = 1;
      } catch (const std::exception& e) {
        tilde_errors[static_cast<std::size_t>(g)] = e.what();
      }
    });
  }

  const std::vector<std::string> header{
      "grid_index", "replication", "lambda",        "tau_d",
      "provenance", "rank",        "K",             "log_Q",
      "n_matches",  "n_dead",      "n_spontaneous", "ari",
      "k_gap",      "n_segments",  "n_outputs",     "n_inputs",
      "error"};

  std::vector<std::vector<std::vector<std::string>>> slots(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), [&](int t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const GridPoint& point = grid[static_cast<std::size_t>(task.grid)];
    const fs::path bundle_dir = sim_dir / bundle_name(task.grid, task.rep);
    io::SampleMeta meta;
    const ObservedSample sample = io::read_sample_bundle(bundle_dir, &meta);

    auto base_row = [&](const std::string& provenance) {
      return std::vector<std::string>{
          std::to_string(task.grid), std::to_string(task.rep),
          io::format_double(point.lambda), io::format_double(point.tau_d),
          provenance};
    };
    auto flag_row = [&](const std::string& provenance,
                        const std::string& message) {
      auto row = base_row(provenance);
      row.insert(row.end(),
                 {"-", "-", "-", "-", "-", "-", "-", "-",
                  std::to_string(sample.segments.size()),
                  std::to_string(sample.outputs.size()),
                  std::to_string(sample.inputs.size()),
                  sanitize_message(message)});
      return row;
    };

    // Same-movie estimates, shared by every hat condition.
    const bool needs_hat =
        std::find_if(provenances.begin(), provenances.end(),
                     [](const std::string& p) {
                       return p.find("hat") != std::string::npos;
                     }) != provenances.end();
    EstimationReport hat_report;
    bool hat_ok = false;
    std::string hat_error;
    if (needs_hat) {
      try {
        hat_report = run_estimators(sample, meta.geometry,
                                    grid_border_margin(spec, point),
                                    spec.ci_level);
        hat_ok = true;
      } catch (const std::exception& e) {
        hat_error = e.what();
      }
    }

    auto& rows = slots[static_cast<std::size_t>(t)];
    for (const std::string& provenance : provenances) {
      const bool wants_hat = provenance.find("hat") != std::string::npos;
      const bool wants_tilde = provenance.find("tilde") != std::string::npos;
      if (wants_hat && !hat_ok) {
        rows.push_back(flag_row(provenance, hat_error));
        continue;
      }
      if (wants_tilde && !tilde_ok[static_cast<std::size_t>(task.grid)]) {
        rows.push_back(flag_row(
            provenance, tilde_errors[static_cast<std::size_t>(task.grid)]));
        continue;
      }
      try {
        const DynamicsParams params = provenance_params(
            provenance, meta, hat_ok ? &hat_report : nullptr,
            tilde_ok[static_cast<std::size_t>(task.grid)]
                ? &tilde_reports[static_cast<std::size_t>(task.grid)]
                : nullptr);
        const CostModel model = make_cost_model(params, meta.geometry);
        const AssignmentProblem problem =
            build_problem(sample.outputs, sample.inputs, model, sample.T_S);
        const std::vector<SolverResult> results =
            k_best == 1 ? std::vector<SolverResult>{solve(problem)}
                        : solve_k_best(problem, k_best);

        io::write_results_csv(bundle_dir / ("results_" + provenance + ".csv"),
                              results);
        if (dump_problems) {
          io::write_problem_csv(bundle_dir / ("problem_" + provenance + ".csv"),
                                problem);
        }
        for (const SolverResult& res : results) {
          const GapScore score = k_gap(sample, res, model);
          auto row = base_row(provenance);
          row.insert(row.end(),
                     {std::to_string(res.rank), io::format_double(res.K),
                      io::format_double(res.log_Q),
                      std::to_string(res.configuration.matches.size()),
                      std::to_string(res.configuration.dead_outputs.size()),
                      std::to_string(res.configuration.spontaneous_inputs.size()),
                      io::format_double(score.ari),
                      io::format_double(score.k_gap),
                      std::to_string(sample.segments.size()),
                      std::to_string(sample.outputs.size()),
                      std::to_string(sample.inputs.size()), ""});
          rows.push_back(std::move(row));
        }
      } catch (const std::exception& e) {
        rows.push_back(flag_row(provenance, e.what()));
      }
    }
  });

  std::vector<std::vector<std::string>> rows;
  for (auto& slot : slots) {
    for (auto& row : slot) rows.push_back(std::move(row));
  }
  io::write_csv(sim_dir / "connect.csv", header, rows);
}

void run_evaluate(const fs::path& sim_dir, ParamsSource source) {
  const ExperimentSpec spec = load_manifest_spec(sim_dir);
  const auto grid = expand_grid(spec);
  const auto tasks = make_tasks(static_cast<int>(grid.size()),
                                spec.replications);
  const auto provenances = provenance_list(source);

  const std::vector<std::string> eval_header{
      "grid_index", "replication", "provenance",      "rank",
      "ari",        "rand_index",  "n_clusters",      "mean_segments_per_cluster",
      "max_segments_per_cluster",  "n_segments",      "error"};
  const std::vector<std::string> rot_header{
      "grid_index", "replication", "kind", "value"};

  std::vector<std::vector<std::vector<std::string>>> eval_slots(tasks.size());
  std::vector<std::vector<std::vector<std::string>>> rot_slots(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), [&](int t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const fs::path bundle_dir = sim_dir / bundle_name(task.grid, task.rep);
    io::SampleMeta meta;
    const ObservedSample sample = io::read_sample_bundle(bundle_dir, &meta);
    auto& eval_rows = eval_slots[static_cast<std::size_t>(t)];
    auto& rot_rows = rot_slots[static_cast<std::size_t>(t)];

    for (double rotations :
         rotation_counts(io::read_trajectories(bundle_dir), meta.geometry)) {
      rot_rows.push_back({std::to_string(task.grid), std::to_string(task.rep),
                          "theory", io::format_double(rotations)});
    }

    for (const std::string& provenance : provenances) {
      const fs::path results_path =
          bundle_dir / ("results_" + provenance + ".csv");
      std::vector<SolverResult> results;
      try {
        results = io::read_results_csv(results_path);
      } catch (const std::exception& e) {
        eval_rows.push_back({std::to_string(task.grid),
                             std::to_string(task.rep), provenance, "-", "-",
                             "-", "-", "-", "-",
                             std::to_string(sample.segments.size()),
                             sanitize_message(e.what())});
        continue;
      }
      for (const SolverResult& res : results) {
        try {
          const Partition truth = true_partition(sample);
          const Partition found =
              configuration_to_partition(res.configuration, sample);
          const auto cluster_sizes = segments_per_cluster(found);
          double mean_size = 0.0;
          Index max_size = 0;
          for (Index size : cluster_sizes) {
            mean_size += static_cast<double>(size);
            max_size = std::max(max_size, size);
          }
          mean_size /= static_cast<double>(cluster_sizes.size());
          eval_rows.push_back(
              {std::to_string(task.grid), std::to_string(task.rep), provenance,
               std::to_string(res.rank),
               io::format_double(adjusted_rand_index(truth, found)),
               io::format_double(rand_index(truth, found)),
               std::to_string(cluster_sizes.size()),
               io::format_double(mean_size), std::to_string(max_size),
               std::to_string(sample.segments.size()), ""});
          if (res.rank == 1) {
            for (Index size : cluster_sizes) {
              rot_rows.push_back({std::to_string(task.grid),
                                  std::to_string(task.rep),
                                  "proxy-" + provenance,
                                  std::to_string(size)});
            }
          }
        } catch (const std::exception& e) {
          eval_rows.push_back({std::to_string(task.grid),
                               std::to_string(task.rep), provenance,
                               std::to_string(res.rank), "-", "-", "-", "-",
                               "-", std::to_string(sample.segments.size()),
                               sanitize_message(e.what())});
        }
      }
    }
  });

  std::vector<std::vector<std::string>> eval_rows, rot_rows;
  for (auto& slot : eval_slots) {
    for (auto& row : slot) eval_rows.push_back(std::move(row));
  }
  for (auto& slot : rot_slots) {
    for (auto& row : slot) rot_rows.push_back(std::move(row));
  }
  io::write_csv(sim_dir / "evaluation.csv", eval_header, eval_rows);
  io::write_csv(sim_dir / "rotations.csv", rot_header, rot_rows);
}

namespace {

/// Projects columns of a stage CSV into a tidy per-figure file.
void project_csv(const fs::path& sim_dir, const std::string& out_name,
                 const std::string& in_name,
                 const std::vector<std::pair<std::string, std::string>>&
                     out_in_columns,
                 const std::function<bool(const Columns&, std::size_t)>& keep) {
  const Columns in(sim_dir / in_name);
  std::vector<std::string> header;
  header.reserve(out_in_columns.size());
  for (const auto& pair : out_in_columns) {
    header.push_back(pair.first);
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < in.n_rows(); ++r) {
    if (!keep(in, r)) continue;
    std::vector<std::string> row;
    row.reserve(out_in_columns.size());
    for (const auto& [out_col, in_col] : out_in_columns) {
      row.push_back(in.cell(r, in_col));
    }
    rows.push_back(std::move(row));
  }
  io::write_csv(sim_dir / out_name, header, rows);
}

}  // namespace

void run_sweep(const ExperimentSpec& spec) {
  run_simulate(spec);
  const fs::path sim_dir(spec.out_dir);
  run_estimate(sim_dir);
  run_connect(sim_dir, spec.params_source, spec.k_best, spec.dump_problems);
  run_evaluate(sim_dir, spec.params_source);

  const auto keep_all = [](const Columns&, std::size_t) { return true; };
  const auto keep_rank1 = [](const Columns& c, std::size_t r) {
    return c.cell(r, "rank") == "1";
  };

  project_csv(sim_dir, "fig4_tau_alpha_vs_ratio.csv", "estimates.csv",
              {{"ratio", "ratio"},
               {"replication", "replication"},
               {"tau_alpha_hat", "tau_alpha_hat"},
               {"counted_tau_alpha", "counted_tau_alpha"},
               {"error", "error"}},
              keep_all);
  project_csv(sim_dir, "fig5_tau_alpha_vs_duration.csv", "estimates.csv",
              {{"T_S", "T_S"},
               {"replication", "replication"},
               {"tau_alpha_hat", "tau_alpha_hat"},
               {"counted_tau_alpha", "counted_tau_alpha"},
               {"error", "error"}},
              keep_all);
  project_csv(sim_dir, "fig6_tau_alpha_vs_rates.csv", "estimates.csv",
              {{"lambda", "lambda"},
               {"tau_d", "tau_d"},
               {"replication", "replication"},
               {"tau_alpha_hat", "tau_alpha_hat"},
               {"counted_tau_alpha", "counted_tau_alpha"},
               {"error", "error"}},
              keep_all);
  project_csv(sim_dir, "fig7_tau_d_vs_rates.csv", "estimates.csv",
              {{"lambda", "lambda"},
               {"tau_d", "tau_d"},
               {"replication", "replication"},
               {"tau_d_hat", "tau_d_hat"},
               {"tau_d_ci_low", "tau_d_ci_low"},
               {"tau_d_ci_high", "tau_d_ci_high"},
               {"error", "error"}},
              keep_all);
  project_csv(sim_dir, "fig8_v_sigma_estimates.csv", "estimates.csv",
              {{"sigma", "sigma"},
               {"speed_mode", "speed_mode"},
               {"replication", "replication"},
               {"v_x_hat", "v_x_hat"},
               {"v_y_hat", "v_y_hat"},
               {"sigma_x_hat", "sigma_x_hat"},
               {"sigma_y_hat", "sigma_y_hat"},
               {"error", "error"}},
              keep_all);
  project_csv(sim_dir, "fig9_ari_vs_rates.csv", "connect.csv",
              {{"lambda", "lambda"},
               {"tau_d", "tau_d"},
               {"replication", "replication"},
               {"provenance", "provenance"},
               {"ari", "ari"},
               {"error", "error"}},
              keep_rank1);
  project_csv(sim_dir, "fig13_kgap_vs_ari.csv", "connect.csv",
              {{"grid_index", "grid_index"},
               {"replication", "replication"},
               {"provenance", "provenance"},
               {"k_gap", "k_gap"},
               {"ari", "ari"},
               {"n_segments", "n_segments"},
               {"error", "error"}},
              keep_rank1);
  project_csv(sim_dir, "fig14_rotation_counts.csv", "rotations.csv",
              {{"grid_index", "grid_index"},
               {"replication", "replication"},
               {"kind", "kind"},
               {"value", "value"}},
              keep_all);
}

}  // namespace cyltrack
