#include "cyltrack/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace cyltrack::io {
namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

/// Encodes a list of indices as "a;b;c", "-" when empty.
std::string encode_list(const std::vector<Index>& values) {
  if (values.empty()) return "-";
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) out += ';';
    out += std::to_string(values[k]);
  }
  return out;
}

std::vector<Index> decode_list(const std::string& text,
                               const std::string& context) {
  std::vector<Index> out;
  if (text == "-" || text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t semi = text.find(';', start);
    const std::string token = semi == std::string::npos
                                  ? text.substr(start)
                                  : text.substr(start, semi - start);
    out.push_back(static_cast<Index>(parse_int(token, context)));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

std::string encode_matches(const std::vector<std::pair<Index, Index>>& m) {
  if (m.empty()) return "-";
  std::string out;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (k > 0) out += ';';
    out += std::to_string(m[k].first);
    out += ':';
    out += std::to_string(m[k].second);
  }
  return out;
}

std::vector<std::pair<Index, Index>> decode_matches(
    const std::string& text, const std::string& context) {
  std::vector<std::pair<Index, Index>> out;
  if (text == "-" || text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t semi = text.find(';', start);
    const std::string token = semi == std::string::npos
                                  ? text.substr(start)
                                  : text.substr(start, semi - start);
    const std::size_t colon = token.find(':');
    if (colon == std::string::npos) {
      throw std::runtime_error(context + ": malformed match pair '" + token +
                               "'");
    }
    out.emplace_back(
        static_cast<Index>(parse_int(token.substr(0, colon), context)),
        static_cast<Index>(parse_int(token.substr(colon + 1), context)));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

json geometry_to_json(const CylinderGeometry& g) {
  return json{{"perimeter_L", g.perimeter_L},
              {"height_H", g.height_H},
              {"observed_l", g.observed_l}};
}

CylinderGeometry geometry_from_json(const json& j) {
  CylinderGeometry g;
  g.perimeter_L = j.at("perimeter_L").get<double>();
  g.height_H = j.at("height_H").get<double>();
  g.observed_l = j.at("observed_l").get<double>();
  return g;
}

json params_to_json(const DynamicsParams& p) {
  return json{{"v_x", p.v_x},       {"v_y", p.v_y},
              {"sigma_x", p.sigma_x}, {"sigma_y", p.sigma_y},
              {"lambda_birth", p.lambda_birth}, {"tau_d", p.tau_d},
              {"tau_alpha", p.tau_alpha}};
}

DynamicsParams params_from_json(const json& j) {
  DynamicsParams p;
  p.v_x = j.at("v_x").get<double>();
  p.v_y = j.at("v_y").get<double>();
  p.sigma_x = j.at("sigma_x").get<double>();
  p.sigma_y = j.at("sigma_y").get<double>();
  p.lambda_birth = j.at("lambda_birth").get<double>();
  p.tau_d = j.at("tau_d").get<double>();
  p.tau_alpha = j.at("tau_alpha").get<double>();
  return p;
}

json options_to_json(const SimOptions& o) {
  return json{{"delta_t", o.delta_t},
              {"warmup", o.warmup},
              {"duration", o.duration},
              {"speed_mode",
               o.speed_mode == SpeedMode::kUniform ? "uniform" : "constant"},
              {"speed_lo", o.speed_lo},
              {"speed_hi", o.speed_hi}};
}

SimOptions options_from_json(const json& j) {
  SimOptions o;
  o.delta_t = j.at("delta_t").get<double>();
  o.warmup = j.at("warmup").get<double>();
  o.duration = j.at("duration").get<double>();
  o.speed_mode = j.at("speed_mode").get<std::string>() == "uniform"
                     ? SpeedMode::kUniform
                     : SpeedMode::kConstant;
  o.speed_lo = j.at("speed_lo").get<double>();
  o.speed_hi = j.at("speed_hi").get<double>();
  return o;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& context) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::runtime_error(context + ": bad number '" + token + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& token, const std::string& context) {
  std::int64_t v = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::runtime_error(context + ": bad integer '" + token + "'");
  }
  return v;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k > 0) out << ',';
    out << header[k];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::runtime_error("write_csv: ragged row in " + path.string());
    }
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0) out << ',';
      out << row[k];
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path, std::vector<std::string>* header_out) {
  auto in = open_in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      if (header_out) *header_out = split_csv_line(line);
      first = false;
      continue;
    }
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (first) {
    throw std::runtime_error("empty CSV: " + path.string());
  }
  return rows;
}

void write_sample_bundle(const std::filesystem::path& dir,
                         const ObservedSample& sample,
                         const std::vector<Trajectory>& trajectories,
                         const SampleMeta& meta) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory " + dir.string() + ": " +
                             ec.message());
  }

  {
    json j;
    j["geometry"] = geometry_to_json(meta.geometry);
    j["params"] = params_to_json(meta.params);
    j["options"] = options_to_json(meta.options);
    j["seed"] = meta.seed;
    j["counted_tau_alpha"] = meta.counted_tau_alpha;
    j["mean_alive"] = meta.mean_alive;
    j["n_trajectories"] = meta.n_trajectories;
    j["n_segments"] = sample.segments.size();
    auto out = open_out(dir / "meta.json");
    out << j.dump(2) << '\n';
  }

  {
    std::vector<std::vector<std::string>> rows;
    for (const Segment& seg : sample.segments) {
      for (const Point& pt : seg.points) {
        rows.push_back({std::to_string(seg.id), format_double(pt.t),
                        format_double(pt.x), format_double(pt.y)});
      }
    }
    write_csv(dir / "points.csv", {"segment_id", "t", "x", "y"}, rows);
  }

  {
    std::vector<std::vector<std::string>> rows;
    for (const OutputEvent& ev : sample.outputs) {
      rows.push_back({format_double(ev.t), format_double(ev.y),
                      std::to_string(ev.segment_id)});
    }
    write_csv(dir / "outputs.csv", {"t", "y", "segment_id"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const InputEvent& ev : sample.inputs) {
      rows.push_back({format_double(ev.t), format_double(ev.y),
                      std::to_string(ev.segment_id)});
    }
    write_csv(dir / "inputs.csv", {"t", "y", "segment_id"}, rows);
  }

  {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t s = 0; s < sample.true_links.size(); ++s) {
      rows.push_back({std::to_string(sample.segments[s].id),
                      std::to_string(sample.true_links[s])});
    }
    write_csv(dir / "links.csv", {"segment_id", "trajectory_id"}, rows);
  }

  {
    std::vector<std::vector<std::string>> rows;
    for (const Trajectory& traj : trajectories) {
      rows.push_back({std::to_string(traj.id), format_double(traj.birth_time),
                      format_double(traj.death_time),
                      format_double(traj.birth_x), format_double(traj.birth_y),
                      format_double(traj.v_x), format_double(traj.v_y),
                      format_double(traj.first_seam_crossing),
                      std::to_string(traj.points.size())});
    }
    write_csv(dir / "trajectories.csv",
              {"id", "birth_time", "death_time", "birth_x", "birth_y", "v_x",
               "v_y", "first_seam_crossing", "n_points"},
              rows);
  }
}

ObservedSample read_sample_bundle(const std::filesystem::path& dir,
                                  SampleMeta* meta_out) {
  SampleMeta meta;
  {
    auto in = open_in(dir / "meta.json");
    json j = json::parse(in, nullptr, true);
    meta.geometry = geometry_from_json(j.at("geometry"));
    meta.params = params_from_json(j.at("params"));
    meta.options = options_from_json(j.at("options"));
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.counted_tau_alpha = j.at("counted_tau_alpha").get<double>();
    meta.mean_alive = j.at("mean_alive").get<double>();
    meta.n_trajectories = j.at("n_trajectories").get<std::int64_t>();
  }

  ObservedSample sample;
  sample.T_S = meta.options.duration;
  sample.delta_t = meta.options.delta_t;

  const std::string points_ctx = (dir / "points.csv").string();
  std::map<std::int64_t, std::size_t> seg_pos;
  for (const auto& row : read_csv(dir / "points.csv", nullptr)) {
    if (row.size() != 4) {
      throw std::runtime_error(points_ctx + ": expected 4 columns");
    }
    const std::int64_t id = parse_int(row[0], points_ctx);
    auto [it, inserted] = seg_pos.emplace(id, sample.segments.size());
    if (inserted) {
      Segment seg;
      seg.id = id;
      sample.segments.push_back(std::move(seg));
    }
    sample.segments[it->second].points.push_back(
        {parse_double(row[1], points_ctx), parse_double(row[2], points_ctx),
         parse_double(row[3], points_ctx)});
  }

  const std::string outputs_ctx = (dir / "outputs.csv").string();
  for (const auto& row : read_csv(dir / "outputs.csv", nullptr)) {
    if (row.size() != 3) {
      throw std::runtime_error(outputs_ctx + ": expected 3 columns");
    }
    sample.outputs.push_back({parse_double(row[0], outputs_ctx),
                              parse_double(row[1], outputs_ctx),
                              parse_int(row[2], outputs_ctx)});
  }
  const std::string inputs_ctx = (dir / "inputs.csv").string();
  for (const auto& row : read_csv(dir / "inputs.csv", nullptr)) {
    if (row.size() != 3) {
      throw std::runtime_error(inputs_ctx + ": expected 3 columns");
    }
    sample.inputs.push_back({parse_double(row[0], inputs_ctx),
                             parse_double(row[1], inputs_ctx),
                             parse_int(row[2], inputs_ctx)});
  }

  const std::string links_ctx = (dir / "links.csv").string();
  sample.true_links.assign(sample.segments.size(), -1);
  for (const auto& row : read_csv(dir / "links.csv", nullptr)) {
    if (row.size() != 2) {
      throw std::runtime_error(links_ctx + ": expected 2 columns");
    }
    const std::int64_t seg = parse_int(row[0], links_ctx);
    auto it = seg_pos.find(seg);
    if (it == seg_pos.end()) {
      throw std::runtime_error(links_ctx + ": unknown segment id " +
                               std::to_string(seg));
    }
    sample.true_links[it->second] = parse_int(row[1], links_ctx);
  }

  if (meta_out) *meta_out = meta;
  return sample;
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& dir) {
  const std::string ctx = (dir / "trajectories.csv").string();
  std::vector<Trajectory> out;
  for (const auto& row : read_csv(dir / "trajectories.csv", nullptr)) {
    if (row.size() != 9) {
      throw std::runtime_error(ctx + ": expected 9 columns");
    }
    Trajectory traj;
    traj.id = parse_int(row[0], ctx);
    traj.birth_time = parse_double(row[1], ctx);
    traj.death_time = parse_double(row[2], ctx);
    traj.birth_x = parse_double(row[3], ctx);
    traj.birth_y = parse_double(row[4], ctx);
    traj.v_x = parse_double(row[5], ctx);
    traj.v_y = parse_double(row[6], ctx);
    traj.first_seam_crossing = parse_double(row[7], ctx);
    out.push_back(traj);
  }
  return out;
}

void write_problem_csv(const std::filesystem::path& path,
                       const AssignmentProblem& problem) {
  std::vector<std::string> header{"output"};
  for (Index i = 0; i < problem.q(); ++i) {
    header.push_back("input_" + std::to_string(i));
  }
  std::vector<std::vector<std::string>> rows;
  for (Index o = 0; o < problem.p(); ++o) {
    std::vector<std::string> row{std::to_string(o)};
    for (Index i = 0; i < problem.q(); ++i) {
      row.push_back(problem.forbidden(o, i)
                        ? "forbidden"
                        : format_double(problem.adjusted_costs(o, i)));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

AssignmentProblem read_problem_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  if (header.empty() || header[0] != "output") {
    throw std::runtime_error(path.string() + ": not a problem CSV");
  }
  const Index q = static_cast<Index>(header.size()) - 1;
  const Index p = static_cast<Index>(rows.size());
  AssignmentProblem problem;
  problem.adjusted_costs.resize(p, q);
  problem.forbidden.resize(p, q);
  const std::string ctx = path.string();
  for (Index o = 0; o < p; ++o) {
    const auto& row = rows[static_cast<std::size_t>(o)];
    if (static_cast<Index>(row.size()) != q + 1) {
      throw std::runtime_error(ctx + ": ragged problem row");
    }
    for (Index i = 0; i < q; ++i) {
      const std::string& cell = row[static_cast<std::size_t>(i) + 1];
      if (cell == "forbidden") {
        problem.forbidden(o, i) = true;
        problem.adjusted_costs(o, i) = kForbiddenCost;
      } else {
        problem.forbidden(o, i) = false;
        problem.adjusted_costs(o, i) = parse_double(cell, ctx);
      }
    }
  }
  return problem;
}

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<SolverResult>& results) {
  std::vector<std::vector<std::string>> rows;
  for (const SolverResult& res : results) {
    rows.push_back({std::to_string(res.rank), format_double(res.K),
                    format_double(res.log_Q),
                    encode_matches(res.configuration.matches),
                    encode_list(res.configuration.dead_outputs),
                    encode_list(res.configuration.spontaneous_inputs)});
  }
  write_csv(path, {"rank", "K", "log_Q", "matches", "dead_outputs",
                   "spontaneous_inputs"},
            rows);
}

std::vector<SolverResult> read_results_csv(const std::filesystem::path& path) {
  const std::string ctx = path.string();
  std::vector<SolverResult> out;
  for (const auto& row : read_csv(path, nullptr)) {
    if (row.size() != 6) {
      throw std::runtime_error(ctx + ": expected 6 columns");
    }
    SolverResult res;
    res.rank = static_cast<int>(parse_int(row[0], ctx));
    res.K = parse_double(row[1], ctx);
    res.log_Q = parse_double(row[2], ctx);
    res.configuration.matches = decode_matches(row[3], ctx);
    res.configuration.dead_outputs = decode_list(row[4], ctx);
    res.configuration.spontaneous_inputs = decode_list(row[5], ctx);
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace cyltrack::io
