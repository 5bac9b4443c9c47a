#include "cyltrack/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace cyltrack {

std::vector<Trajectory> simulate(const CylinderGeometry& geometry,
                                 const DynamicsParams& params,
                                 const SimOptions& options,
                                 std::uint64_t seed) {
  geometry.validate();
  params.validate();
  options.validate();

  std::vector<Trajectory> out;
  if (params.lambda_birth <= 0.0) return out;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> birth_gap(params.lambda_birth);
  std::exponential_distribution<double> lifetime(params.tau_d);

  const double total = options.warmup + options.duration;
  const double dt = options.delta_t;
  const double sx = params.sigma_x * std::sqrt(dt);
  const double sy = params.sigma_y * std::sqrt(dt);
  const double eps = 1e-9 * dt;

  std::int64_t next_id = 0;
  for (double birth = birth_gap(rng); birth <= total; birth += birth_gap(rng)) {
    Trajectory traj;
    traj.v_x = params.v_x;
    if (options.speed_mode == SpeedMode::kUniform) {
      traj.v_x =
          options.speed_lo + (options.speed_hi - options.speed_lo) * unif(rng);
    }
    // Axial drift keeps the configured v_y / v_x ratio.
    traj.v_y = params.v_y / params.v_x * traj.v_x;
    traj.birth_x = wrap_x(-geometry.perimeter_L * unif(rng), geometry);
    traj.birth_y = geometry.height_H * unif(rng);
    const double death = birth + lifetime(rng);
    traj.birth_time = birth - options.warmup;
    traj.death_time = death - options.warmup;

    double cum_x = traj.birth_x;  // unwrapped
    double y = traj.birth_y;
    const double vdt = traj.v_x * dt;
    const double wdt = traj.v_y * dt;
    for (std::int64_t k = 0;; ++k) {
      const double t = birth + static_cast<double>(k) * dt;
      if (t > death || t > total + eps) break;
      if (cum_x >= 0.0 && std::isnan(traj.first_seam_crossing)) {
        traj.first_seam_crossing = t - options.warmup;
      }
      if (t >= options.warmup - eps) {
        traj.points.push_back(
            {t - options.warmup, wrap_x(cum_x, geometry), y});
      }
      cum_x += vdt + sx * gauss(rng);
      y += wdt + sy * gauss(rng);
    }

    if (!traj.points.empty()) {
      traj.id = next_id++;
      out.push_back(std::move(traj));
    }
  }
  return out;
}

ObservedSample observe(const std::vector<Trajectory>& trajectories,
                       const CylinderGeometry& geometry,
                       const SimOptions& options, double border_margin) {
  geometry.validate();
  options.validate();
  if (!(border_margin >= 0.0) || border_margin >= geometry.observed_l) {
    throw std::invalid_argument(
        "observe: need 0 <= border_margin < observed_l");
  }

  const double l = geometry.observed_l;

  struct Raw {
    std::int64_t traj = -1;
    std::vector<Point> points;
  };
  std::vector<Raw> raws;
  for (const Trajectory& traj : trajectories) {
    Raw current;
    for (const Point& pt : traj.points) {
      if (pt.x >= -l) {
        if (current.points.empty()) current.traj = traj.id;
        current.points.push_back(pt);
      } else if (!current.points.empty()) {
        raws.push_back(std::move(current));
        current = Raw{};
      }
    }
    if (!current.points.empty()) raws.push_back(std::move(current));
  }

  std::sort(raws.begin(), raws.end(), [](const Raw& a, const Raw& b) {
    if (a.points.front().t != b.points.front().t) {
      return a.points.front().t < b.points.front().t;
    }
    return a.traj < b.traj;
  });

  ObservedSample sample;
  sample.T_S = options.duration;
  sample.delta_t = options.delta_t;
  for (std::size_t s = 0; s < raws.size(); ++s) {
    Segment seg;
    seg.id = static_cast<std::int64_t>(s);
    seg.points = std::move(raws[s].points);
    if (seg.points.back().x > -border_margin) {
      sample.outputs.push_back(
          {seg.points.back().t, seg.points.back().y, seg.id});
    }
    if (seg.points.front().x < -l + border_margin) {
      sample.inputs.push_back(
          {seg.points.front().t, seg.points.front().y, seg.id});
    }
    sample.true_links.push_back(raws[s].traj);
    sample.segments.push_back(std::move(seg));
  }

  auto by_time = [](const auto& a, const auto& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.segment_id < b.segment_id;
  };
  std::sort(sample.outputs.begin(), sample.outputs.end(), by_time);
  std::sort(sample.inputs.begin(), sample.inputs.end(), by_time);
  return sample;
}

Configuration true_configuration(const ObservedSample& sample) {
  if (sample.true_links.size() != sample.segments.size()) {
    throw std::runtime_error(
        "true_configuration: sample carries no ground-truth links");
  }

  const Index p = static_cast<Index>(sample.outputs.size());
  const Index q = static_cast<Index>(sample.inputs.size());
  std::map<std::int64_t, Index> out_of_seg, in_of_seg;
  for (Index o = 0; o < p; ++o) {
    out_of_seg[sample.outputs[static_cast<std::size_t>(o)].segment_id] = o;
  }
  for (Index i = 0; i < q; ++i) {
    in_of_seg[sample.inputs[static_cast<std::size_t>(i)].segment_id] = i;
  }

  // Segment ids ascend with first-appearance time, so per-trajectory id
  // order is chronological.
  std::map<std::int64_t, std::vector<std::int64_t>> by_traj;
  for (std::size_t s = 0; s < sample.segments.size(); ++s) {
    by_traj[sample.true_links[s]].push_back(sample.segments[s].id);
  }

  Configuration config;
  std::vector<char> out_used(static_cast<std::size_t>(p), 0);
  std::vector<char> in_used(static_cast<std::size_t>(q), 0);
  for (const auto& [traj, segs] : by_traj) {
    for (std::size_t k = 0; k + 1 < segs.size(); ++k) {
      auto o_it = out_of_seg.find(segs[k]);
      auto i_it = in_of_seg.find(segs[k + 1]);
      if (o_it == out_of_seg.end() || i_it == in_of_seg.end()) continue;
      const Index o = o_it->second;
      const Index i = i_it->second;
      if (sample.inputs[static_cast<std::size_t>(i)].t <=
          sample.outputs[static_cast<std::size_t>(o)].t) {
        continue;
      }
      config.matches.emplace_back(o, i);
      out_used[static_cast<std::size_t>(o)] = 1;
      in_used[static_cast<std::size_t>(i)] = 1;
    }
  }
  for (Index o = 0; o < p; ++o) {
    if (!out_used[static_cast<std::size_t>(o)]) {
      config.dead_outputs.push_back(o);
    }
  }
  for (Index i = 0; i < q; ++i) {
    if (!in_used[static_cast<std::size_t>(i)]) {
      config.spontaneous_inputs.push_back(i);
    }
  }
  canonicalize(config);
  return config;
}

double counted_arrival_rate(const std::vector<Trajectory>& trajectories,
                            const CylinderGeometry& geometry, double T_S) {
  if (!(T_S > 0.0)) {
    throw std::invalid_argument("counted_arrival_rate: T_S must be positive");
  }
  const double lu = geometry.hidden_lu();
  std::int64_t count = 0;
  for (const Trajectory& traj : trajectories) {
    if (traj.birth_x <= -lu) continue;
    const double crossing = traj.first_seam_crossing;
    if (std::isnan(crossing) || crossing < 0.0 || crossing > T_S) continue;
    ++count;
  }
  return static_cast<double>(count) / T_S;
}

double mean_alive_count(const std::vector<Trajectory>& trajectories,
                        double T_S, double delta_t) {
  if (!(T_S > 0.0) || !(delta_t > 0.0)) {
    throw std::invalid_argument("mean_alive_count: need T_S, delta_t > 0");
  }
  const double eps = 1e-9 * delta_t;
  double sum = 0.0;
  std::int64_t steps = 0;
  for (double t = 0.0; t <= T_S + eps; t += delta_t) {
    std::int64_t alive = 0;
    for (const Trajectory& traj : trajectories) {
      if (traj.birth_time <= t && t <= traj.death_time) ++alive;
    }
    sum += static_cast<double>(alive);
    ++steps;
  }
  return sum / static_cast<double>(steps);
}

}  // namespace cyltrack
