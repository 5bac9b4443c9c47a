#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cyltrack/io.hpp"
#include "cyltrack/simulate.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

using namespace cyltrack;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / ("cyltrack-io-" + leaf);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("format_double is shortest and exact") {
  CHECK(io::format_double(0.0) == "0");
  CHECK(io::format_double(2.0) == "2");
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(-3.5) == "-3.5");
  CHECK(io::parse_double(io::format_double(1.0 / 3.0), "t") == 1.0 / 3.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(-40.0, 40.0);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  for (int it = 0; it < 5000; ++it) {
    const double v = mant(rng) * std::pow(10.0, mag(rng));
    CHECK(io::parse_double(io::format_double(v), "fuzz") == v);
  }

  // NaN survives the trip (used for never-crossed seam times).
  const double back = io::parse_double(
      io::format_double(std::numeric_limits<double>::quiet_NaN()), "t");
  CHECK(std::isnan(back));
}

TEST_CASE("strict parsing rejects partial tokens") {
  CHECK(io::parse_double("-1.25e-3", "t") == -1.25e-3);
  CHECK(io::parse_int("-42", "t") == -42);

  CHECK_THROWS_AS(io::parse_double("", "ctx"), std::runtime_error);
  CHECK_THROWS_AS(io::parse_double("1.5x", "ctx"), std::runtime_error);
  CHECK_THROWS_AS(io::parse_double(" 1.5", "ctx"), std::runtime_error);
  CHECK_THROWS_AS(io::parse_int("3.5", "ctx"), std::runtime_error);
  CHECK_THROWS_AS(io::parse_int("12 ", "ctx"), std::runtime_error);

  // Errors carry the caller's context.
  try {
    io::parse_double("abc", "outputs.csv row 3");
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("outputs.csv row 3") !=
          std::string::npos);
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
}

TEST_CASE("generic CSV surface") {
  const fs::path dir = scratch_dir("csv");
  const fs::path path = dir / "table.csv";

  const std::vector<std::string> header{"a", "b", "c"};
  const std::vector<std::vector<std::string>> rows{{"1", "x", "-"},
                                                   {"2", "y", "0.5"}};
  io::write_csv(path, header, rows);

  SUBCASE("round trip") {
    std::vector<std::string> header_back;
    CHECK(io::read_csv(path, &header_back) == rows);
    CHECK(header_back == header);
  }

  SUBCASE("bytes are LF-only and rewriting is deterministic") {
    const std::string bytes = slurp(path);
    CHECK(bytes == "a,b,c\n1,x,-\n2,y,0.5\n");
    io::write_csv(path, header, rows);
    CHECK(slurp(path) == bytes);
  }

  SUBCASE("ragged rows are rejected") {
    CHECK_THROWS_AS(io::write_csv(path, header, {{"1", "2"}}),
                    std::runtime_error);
  }

  SUBCASE("CRLF input and blank lines are tolerated") {
    std::ofstream out(path, std::ios::binary);
    out << "a,b\r\n1,2\r\n\n3,4\n";
    out.close();
    std::vector<std::string> h;
    const auto got = io::read_csv(path, &h);
    CHECK(h == std::vector<std::string>{"a", "b"});
    CHECK(got == std::vector<std::vector<std::string>>{{"1", "2"}, {"3", "4"}});
  }

  SUBCASE("empty and missing files are errors") {
    std::ofstream(dir / "empty.csv").close();
    CHECK_THROWS_AS(io::read_csv(dir / "empty.csv", nullptr),
                    std::runtime_error);
    CHECK_THROWS_AS(io::read_csv(dir / "nope.csv", nullptr),
                    std::runtime_error);
  }
}

TEST_CASE("sample bundles round-trip exactly") {
  const fs::path dir = scratch_dir("bundle");

  const CylinderGeometry g = CylinderGeometry::from_ratio(50.0, 30.0, 0.42);
  DynamicsParams p;
  p.lambda_birth = 0.1;
  p.tau_d = 0.01;
  p.tau_alpha = 0.02;
  SimOptions o;
  o.duration = 120.0;
  o.warmup = 300.0;
  o.speed_mode = SpeedMode::kUniform;

  const auto trajectories = simulate(g, p, o, 777);
  REQUIRE(!trajectories.empty());
  const ObservedSample sample =
      observe(trajectories, g, o, default_border_margin(p, o.delta_t));
  REQUIRE(!sample.segments.empty());

  io::SampleMeta meta;
  meta.geometry = g;
  meta.params = p;
  meta.options = o;
  meta.seed = 777;
  meta.counted_tau_alpha = counted_arrival_rate(trajectories, g, o.duration);
  meta.mean_alive = mean_alive_count(trajectories, o.duration, o.delta_t);
  meta.n_trajectories = static_cast<std::int64_t>(trajectories.size());
  io::write_sample_bundle(dir, sample, trajectories, meta);

  io::SampleMeta back_meta;
  const ObservedSample back = io::read_sample_bundle(dir, &back_meta);

  REQUIRE(back.segments.size() == sample.segments.size());
  for (std::size_t s = 0; s < sample.segments.size(); ++s) {
    CHECK(back.segments[s].id == sample.segments[s].id);
    REQUIRE(back.segments[s].points.size() == sample.segments[s].points.size());
    for (std::size_t k = 0; k < sample.segments[s].points.size(); ++k) {
      CHECK(back.segments[s].points[k].t == sample.segments[s].points[k].t);
      CHECK(back.segments[s].points[k].x == sample.segments[s].points[k].x);
      CHECK(back.segments[s].points[k].y == sample.segments[s].points[k].y);
    }
  }
  REQUIRE(back.outputs.size() == sample.outputs.size());
  for (std::size_t k = 0; k < sample.outputs.size(); ++k) {
    CHECK(back.outputs[k].t == sample.outputs[k].t);
    CHECK(back.outputs[k].y == sample.outputs[k].y);
    CHECK(back.outputs[k].segment_id == sample.outputs[k].segment_id);
  }
  REQUIRE(back.inputs.size() == sample.inputs.size());
  for (std::size_t k = 0; k < sample.inputs.size(); ++k) {
    CHECK(back.inputs[k].t == sample.inputs[k].t);
    CHECK(back.inputs[k].segment_id == sample.inputs[k].segment_id);
  }
  CHECK(back.true_links == sample.true_links);
  CHECK(back.T_S == o.duration);
  CHECK(back.delta_t == o.delta_t);

  CHECK(back_meta.geometry.perimeter_L == g.perimeter_L);
  CHECK(back_meta.geometry.observed_l == g.observed_l);
  CHECK(back_meta.params.lambda_birth == p.lambda_birth);
  CHECK(back_meta.params.tau_alpha == p.tau_alpha);
  CHECK(back_meta.options.speed_mode == SpeedMode::kUniform);
  CHECK(back_meta.options.warmup == o.warmup);
  CHECK(back_meta.seed == 777);
  CHECK(back_meta.counted_tau_alpha == meta.counted_tau_alpha);
  CHECK(back_meta.mean_alive == meta.mean_alive);
  CHECK(back_meta.n_trajectories == meta.n_trajectories);

  SUBCASE("trajectory summaries match the source") {
    const auto summaries = io::read_trajectories(dir);
    REQUIRE(summaries.size() == trajectories.size());
    bool saw_nan_crossing = false;
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
      CHECK(summaries[k].id == trajectories[k].id);
      CHECK(summaries[k].birth_time == trajectories[k].birth_time);
      CHECK(summaries[k].death_time == trajectories[k].death_time);
      CHECK(summaries[k].v_x == trajectories[k].v_x);
      CHECK(summaries[k].v_y == trajectories[k].v_y);
      if (std::isnan(trajectories[k].first_seam_crossing)) {
        saw_nan_crossing = true;
        CHECK(std::isnan(summaries[k].first_seam_crossing));
      } else {
        CHECK(summaries[k].first_seam_crossing ==
              trajectories[k].first_seam_crossing);
      }
    }
    CHECK(saw_nan_crossing);  // short-lived particles never reach the seam
  }
}

TEST_CASE("problem CSV round-trips costs and forbidden cells") {
  const fs::path dir = scratch_dir("problem");
  const fs::path path = dir / "problem.csv";

  AssignmentProblem problem;
  problem.adjusted_costs.resize(3, 2);
  problem.adjusted_costs << -1.5, 0.125, 2.0 / 3.0, -10.0, 0.0, 1e-17;
  problem.forbidden.setConstant(3, 2, false);
  problem.forbidden(1, 0) = true;
  problem.adjusted_costs(1, 0) = kForbiddenCost;

  io::write_problem_csv(path, problem);
  const AssignmentProblem back = io::read_problem_csv(path);

  REQUIRE(back.p() == 3);
  REQUIRE(back.q() == 2);
  for (Index o = 0; o < 3; ++o) {
    for (Index i = 0; i < 2; ++i) {
      CHECK(back.forbidden(o, i) == problem.forbidden(o, i));
      CHECK(back.adjusted_costs(o, i) == problem.adjusted_costs(o, i));
    }
  }

  SUBCASE("a foreign CSV is rejected") {
    io::write_csv(path, {"x", "y"}, {{"1", "2"}});
    CHECK_THROWS_AS(io::read_problem_csv(path), std::runtime_error);
  }
}

TEST_CASE("results CSV round-trips configurations") {
  const fs::path dir = scratch_dir("results");
  const fs::path path = dir / "results.csv";

  SolverResult first;
  first.rank = 1;
  first.K = -12.75;
  first.log_Q = 3.0 + 1.0 / 7.0;
  first.configuration.matches = {{0, 1}, {2, 0}};
  first.configuration.dead_outputs = {1};
  first.configuration.spontaneous_inputs = {2, 3};

  SolverResult second;  // everything-empty row exercises the "-" encoding
  second.rank = 2;
  second.K = 0.0;
  second.log_Q = -0.5;

  io::write_results_csv(path, {first, second});
  const auto back = io::read_results_csv(path);

  REQUIRE(back.size() == 2);
  CHECK(back[0].rank == 1);
  CHECK(back[0].K == first.K);
  CHECK(back[0].log_Q == first.log_Q);
  CHECK(back[0].configuration == first.configuration);
  CHECK(back[1].rank == 2);
  CHECK(back[1].configuration == second.configuration);
  CHECK(back[1].configuration.matches.empty());

  SUBCASE("malformed match pairs are rejected") {
    io::write_csv(path,
                  {"rank", "K", "log_Q", "matches", "dead_outputs",
                   "spontaneous_inputs"},
                  {{"1", "0", "0", "0;1", "-", "-"}});
    CHECK_THROWS_AS(io::read_results_csv(path), std::runtime_error);
  }
}
