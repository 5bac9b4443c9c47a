#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cyltrack/quadrature.hpp"
#include "cyltrack/stats.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace cyltrack;

namespace {

// Reference values computed with 40+ digit arithmetic and frozen here.
constexpr double kPhiMinus3 = 0.0013498980316300945;
constexpr double kPhiMinus1 = 0.15865525393145705;
constexpr double kPhi1 = 0.8413447460685429;
constexpr double kPhi196 = 0.9750021048517796;
constexpr double kLogSf1 = -1.8410216450092635;
constexpr double kLogSf5 = -15.064998393988726;
constexpr double kLogSf10 = -53.23128515051247;
constexpr double kLogSf20 = -203.91715537109726;
constexpr double kLogSf40 = -804.6084420137538;
constexpr double kLogSf100 = -5005.524208694205;

constexpr double kIgPdf_1_1_1 = 0.3989422804014327;
constexpr double kIgPdf_2_15_32 = 0.23085331087409594;
constexpr double kIgPdf_07_15_32 = 0.6360300663956145;
constexpr double kIgCdf_1_1_1 = 0.6681020012231706;
constexpr double kIgCdf_05_1_1 = 0.3649755481729599;
constexpr double kIgCdf_3_1_1 = 0.9531879207427884;
constexpr double kIgCdf_2_15_32 = 0.7760816474391387;
constexpr double kIgCdf_02_09_4 = 0.00041921122005176642;
constexpr double kIgLap_03_12_25 = 0.7165313105737893;
constexpr double kIgMode_15_32 = 0.7789879681939359;

// The hidden-crossing death probability at the headline operating point
// (tau_d = 0.005, v_x = 0.6, sigma_x = 0.2, l_u = 35.2).
constexpr double kDeathProbHeadline = 0.25416575644118713;

DynamicsParams headline_params() {
  DynamicsParams p;
  p.v_x = 0.6;
  p.sigma_x = 0.2;
  p.sigma_y = 0.2;
  p.tau_d = 0.005;
  return p;
}

}  // namespace

TEST_CASE("normal cdf matches frozen references") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(-3.0) == doctest::Approx(kPhiMinus3).epsilon(1e-13));
  CHECK(normal_cdf(-1.0) == doctest::Approx(kPhiMinus1).epsilon(1e-13));
  CHECK(normal_cdf(1.0) == doctest::Approx(kPhi1).epsilon(1e-13));
  CHECK(normal_cdf(1.96) == doctest::Approx(kPhi196).epsilon(1e-13));
  CHECK(normal_cdf(-1.0) + normal_cdf(1.0) == doctest::Approx(1.0));
  CHECK(normal_cdf(-40.0) >= 0.0);
  CHECK(normal_cdf(40.0) == 1.0);
}

TEST_CASE("log survival function deep into the tail") {
  CHECK(log_normal_sf(1.0) == doctest::Approx(kLogSf1).epsilon(1e-12));
  CHECK(log_normal_sf(5.0) == doctest::Approx(kLogSf5).epsilon(1e-12));
  CHECK(log_normal_sf(10.0) == doctest::Approx(kLogSf10).epsilon(1e-12));
  CHECK(log_normal_sf(20.0) == doctest::Approx(kLogSf20).epsilon(1e-12));
  CHECK(log_normal_sf(40.0) == doctest::Approx(kLogSf40).epsilon(1e-9));
  CHECK(log_normal_sf(100.0) == doctest::Approx(kLogSf100).epsilon(1e-9));
  CHECK(log_normal_sf(0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  // Continuity across the internal branch switch.
  const double below = log_normal_sf(34.999);
  const double above = log_normal_sf(35.001);
  CHECK(std::abs(above - below) < 0.08);
  CHECK(below < above + 0.08);
}

TEST_CASE("normal quantile inverts the cdf") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(normal_quantile(0.975) ==
        doctest::Approx(1.9599639845400542).epsilon(1e-12));
  CHECK(normal_quantile(0.025) ==
        doctest::Approx(-1.9599639845400542).epsilon(1e-12));
  CHECK(normal_quantile(0.95) ==
        doctest::Approx(1.6448536269514727).epsilon(1e-12));
  CHECK(normal_quantile(1e-10) ==
        doctest::Approx(-6.361340902404056).epsilon(1e-10));
  for (double x = -6.0; x <= 6.0; x += 0.25) {
    // Rounding of cdf values near 1 is amplified by 1/phi(x) on the way
    // back, so the achievable roundtrip error grows in the upper tail.
    const double slack = x < 5.0 ? 1e-9 : 1e-7;
    CHECK(normal_quantile(normal_cdf(x)) ==
          doctest::Approx(x).epsilon(slack));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("inverse-Gaussian density") {
  CHECK(ig_pdf(1.0, 1.0, 1.0) == doctest::Approx(kIgPdf_1_1_1).epsilon(1e-13));
  CHECK(ig_pdf(2.0, 1.5, 3.2) ==
        doctest::Approx(kIgPdf_2_15_32).epsilon(1e-13));
  CHECK(ig_pdf(0.7, 1.5, 3.2) ==
        doctest::Approx(kIgPdf_07_15_32).epsilon(1e-13));
  CHECK(ig_pdf(0.0, 1.0, 1.0) == 0.0);
  CHECK(ig_pdf(-2.0, 1.0, 1.0) == 0.0);

  // Unit mass.
  const double mass = quad::integrate_half_line(
      [](double t) { return ig_pdf(t, 1.5, 3.2); }, 1e-10,
      {ig_mode(1.5, 3.2), 1.5, 6.0});
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("inverse-Gaussian cdf") {
  CHECK(ig_cdf(1.0, 1.0, 1.0) == doctest::Approx(kIgCdf_1_1_1).epsilon(1e-12));
  CHECK(ig_cdf(0.5, 1.0, 1.0) ==
        doctest::Approx(kIgCdf_05_1_1).epsilon(1e-12));
  CHECK(ig_cdf(3.0, 1.0, 1.0) == doctest::Approx(kIgCdf_3_1_1).epsilon(1e-12));
  CHECK(ig_cdf(2.0, 1.5, 3.2) ==
        doctest::Approx(kIgCdf_2_15_32).epsilon(1e-12));
  CHECK(ig_cdf(0.2, 0.9, 4.0) ==
        doctest::Approx(kIgCdf_02_09_4).epsilon(1e-10));
  CHECK(ig_cdf(0.0, 1.0, 1.0) == 0.0);
  CHECK(ig_cdf(1e6, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("huge shape parameters stay finite") {
    // l_u = 35.2, v = 0.6, sigma = 0.2: shape/mean ~ 528, where the naive
    // e^{2 lambda/mu} Phi(-z) product overflows.
    const double mu = 35.2 / 0.6;
    const double lambda = 30976.0;
    CHECK(ig_cdf(55.0, mu, lambda) ==
          doctest::Approx(0.07189211048526818).epsilon(1e-10));
    CHECK(ig_cdf(62.0, mu, lambda) ==
          doctest::Approx(0.9018300829562765).epsilon(1e-10));
    for (double x = 10.0; x < 120.0; x += 5.0) {
      const double c = ig_cdf(x, mu, lambda);
      CHECK(std::isfinite(c));
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
    }
  }

  SUBCASE("cdf integrates the density") {
    for (double x : {0.4, 1.0, 2.5}) {
      const double by_quad = quad::integrate(
          [](double t) { return ig_pdf(t, 1.5, 3.2); }, 0.0, x, 1e-11,
          {ig_mode(1.5, 3.2)});
      CHECK(ig_cdf(x, 1.5, 3.2) == doctest::Approx(by_quad).epsilon(1e-9));
    }
  }

  SUBCASE("monotone in x") {
    double prev = 0.0;
    for (double x = 0.1; x < 8.0; x += 0.1) {
      const double c = ig_cdf(x, 1.5, 3.2);
      CHECK(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("inverse-Gaussian mode maximizes the density") {
  CHECK(ig_mode(1.5, 3.2) == doctest::Approx(kIgMode_15_32).epsilon(1e-13));
  for (auto [mu, lambda] : {std::pair{1.0, 1.0}, {1.5, 3.2}, {0.3, 10.0},
                            {58.666666666666664, 30976.0}}) {
    const double m = ig_mode(mu, lambda);
    CHECK(m > 0.0);
    CHECK(m < mu);  // the IG is right-skewed
    const double h = 1e-5 * m;
    CHECK(ig_pdf(m, mu, lambda) >= ig_pdf(m - h, mu, lambda));
    CHECK(ig_pdf(m, mu, lambda) >= ig_pdf(m + h, mu, lambda));
  }
}

TEST_CASE("Laplace transform and sampler agree") {
  CHECK(ig_laplace(0.0, 1.2, 2.5) == 1.0);
  CHECK(ig_laplace(0.3, 1.2, 2.5) ==
        doctest::Approx(kIgLap_03_12_25).epsilon(1e-13));
  CHECK(ig_laplace(1e4, 1.2, 2.5) < 1e-10);

  std::mt19937_64 rng(2024);
  const double mu = 1.2, lambda = 2.5, s = 0.3;
  const int n = 300000;
  double sum_t = 0.0, sum_e = 0.0, sum_e2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = ig_sample(mu, lambda, rng);
    CHECK(t > 0.0);
    sum_t += t;
    const double e = std::exp(-s * t);
    sum_e += e;
    sum_e2 += e * e;
  }
  const double mean_t = sum_t / n;
  const double mean_e = sum_e / n;
  const double var_e = sum_e2 / n - mean_e * mean_e;
  // Mean within 5 standard errors of mu; transform within 5 SE of the
  // closed form.
  const double se_t = std::sqrt(mu * mu * mu / lambda / n);
  CHECK(std::abs(mean_t - mu) < 5.0 * se_t);
  CHECK(std::abs(mean_e - kIgLap_03_12_25) < 5.0 * std::sqrt(var_e / n));
}

TEST_CASE("sampler passes a KS test against the cdf") {
  std::mt19937_64 rng(77);
  const double mu = 2.0, lambda = 5.0;
  const int n = 20000;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    u[static_cast<std::size_t>(i)] = ig_cdf(ig_sample(mu, lambda, rng), mu,
                                            lambda);
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, u[static_cast<std::size_t>(i)] - lo,
                  hi - u[static_cast<std::size_t>(i)]});
  }
  CHECK(d < 1.62762 / std::sqrt(static_cast<double>(n)));  // 1% level
}

TEST_CASE("crossing law is the first-passage inverse Gaussian") {
  DynamicsParams p = headline_params();
  const auto [mu, lambda] = crossing_law(p, 35.2);
  CHECK(mu == doctest::Approx(35.2 / 0.6).epsilon(1e-15));
  CHECK(lambda == doctest::Approx(30976.0).epsilon(1e-12));
}

TEST_CASE("death probability: quadrature against the closed form") {
  // P(T_d < T_l) with T_d ~ Exp(tau_d) independent of T_l is one minus the
  // Laplace transform of the crossing law at s = tau_d.
  DynamicsParams p = headline_params();
  CHECK(death_probability(p, 35.2) ==
        doctest::Approx(kDeathProbHeadline).epsilon(1e-8));

  for (double tau_d : {1e-4, 0.004, 0.02, 0.3}) {
    for (double l_u : {5.0, 20.0, 35.2}) {
      for (double sigma : {0.1, 0.2, 0.6}) {
        DynamicsParams q = headline_params();
        q.tau_d = tau_d;
        q.sigma_x = sigma;
        const auto [mu, lambda] = crossing_law(q, l_u);
        const double expected = 1.0 - ig_laplace(tau_d, mu, lambda);
        CHECK(death_probability(q, l_u) ==
              doctest::Approx(expected).epsilon(1e-6));
      }
    }
  }

  SUBCASE("monotone in the death rate") {
    double prev = 0.0;
    for (double tau_d : {1e-4, 1e-3, 0.01, 0.1, 1.0}) {
      DynamicsParams q = headline_params();
      q.tau_d = tau_d;
      const double v = death_probability(q, 35.2);
      CHECK(v > prev);
      CHECK(v < 1.0);
      prev = v;
    }
  }
}

TEST_CASE("cost model event terms") {
  CylinderGeometry g = CylinderGeometry::from_ratio(50.0, 30.0, 0.42);
  DynamicsParams p = headline_params();
  p.tau_alpha = 0.015;

  CostModel model = make_cost_model(p, g);
  CHECK(model.beta == doctest::Approx(-std::log(0.015 / 30.0)).epsilon(1e-13));
  const auto [mu, lambda] = crossing_law(p, g.hidden_lu());
  CHECK(model.delta ==
        doctest::Approx(-std::log(1.0 - ig_laplace(p.tau_d, mu, lambda)))
            .epsilon(1e-6));
  CHECK(model.l_u == doctest::Approx(g.hidden_lu()));
  CHECK(model.height_H == 30.0);

  SUBCASE("zero rates are floored, not infinite") {
    DynamicsParams z = headline_params();
    z.tau_alpha = 0.0;
    CostModel m0 = make_cost_model(z, g);
    CHECK(std::isfinite(m0.beta));
    CHECK(m0.beta == doctest::Approx(-std::log(kMinRate / 30.0)).epsilon(1e-12));

    z.tau_d = 0.0;  // a flat estimate from a short movie
    CostModel md = make_cost_model(z, g);
    CHECK(std::isfinite(md.delta));
    CHECK(md.delta == doctest::Approx(-std::log(kMinDeathProb)).epsilon(1e-12));
  }
}

TEST_CASE("connection cost formula and the forbidden half-plane") {
  DynamicsParams p = headline_params();
  const double l_u = 35.2;
  OutputEvent o{10.0, 12.0, 0};
  InputEvent i{70.0, 13.0, 1};

  // Independent recomputation of the transition density cost.
  const double s = i.t - o.t;
  const double h = i.y - o.y;
  const double expected = std::log(2.0 * 3.14159265358979323846 * p.sigma_x *
                                   p.sigma_y) +
                          2.0 * std::log(s) - std::log(l_u) +
                          (p.v_x * s - l_u) * (p.v_x * s - l_u) /
                              (2.0 * p.sigma_x * p.sigma_x * s) +
                          (h - p.v_y * s) * (h - p.v_y * s) /
                              (2.0 * p.sigma_y * p.sigma_y * s) +
                          p.tau_d * s;
  CHECK(connection_cost(o, i, p, l_u) ==
        doctest::Approx(expected).epsilon(1e-12));

  InputEvent too_early{10.0, 13.0, 1};
  CHECK(std::isinf(connection_cost(o, too_early, p, l_u)));
  too_early.t = 9.0;
  CHECK(std::isinf(connection_cost(o, too_early, p, l_u)));

  // The cost is lowest near the expected crossing delay l_u / v_x.
  const double s_star = l_u / p.v_x;
  InputEvent at_star{o.t + s_star, o.y + p.v_y * s_star, 1};
  InputEvent late{o.t + 3.0 * s_star, o.y, 1};
  CHECK(connection_cost(o, at_star, p, l_u) <
        connection_cost(o, late, p, l_u));
}

TEST_CASE("log likelihood decomposes over events") {
  CylinderGeometry g = CylinderGeometry::from_ratio(50.0, 30.0, 0.42);
  DynamicsParams p = headline_params();
  p.tau_alpha = 0.02;
  CostModel model = make_cost_model(p, g);
  const double T_S = 300.0;

  std::vector<OutputEvent> outputs{{10.0, 5.0, 0}, {40.0, 20.0, 1}};
  std::vector<InputEvent> inputs{{65.0, 6.0, 2}, {100.0, 21.0, 3}};

  Configuration c;
  c.matches = {{0, 0}};
  c.dead_outputs = {1};
  c.spontaneous_inputs = {1};

  const double direct = -p.tau_alpha * T_S - model.beta - model.delta -
                        model.gamma(outputs[0], inputs[0]);
  CHECK(log_likelihood(c, outputs, inputs, model, T_S) ==
        doctest::Approx(direct).epsilon(1e-12));

  // Matching both pairs changes the likelihood by exactly the adjusted cost
  // of the second edge.
  Configuration c2;
  c2.matches = {{0, 0}, {1, 1}};
  const double delta_K =
      model.gamma(outputs[1], inputs[1]) - model.beta - model.delta;
  CHECK(log_likelihood(c2, outputs, inputs, model, T_S) ==
        doctest::Approx(direct - delta_K).epsilon(1e-12));

  // A backwards match makes the whole configuration invalid.
  std::vector<InputEvent> early{{5.0, 6.0, 2}, {100.0, 21.0, 3}};
  Configuration bad;
  bad.matches = {{0, 0}};
  bad.dead_outputs = {1};
  bad.spontaneous_inputs = {1};
  CHECK_THROWS_AS(log_likelihood(bad, outputs, early, model, T_S),
                  std::invalid_argument);
}
