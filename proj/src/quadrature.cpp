#include "cyltrack/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace cyltrack::quad {
namespace {

// (G7,K15) nodes and weights, positive half; the Gauss rule sits on the
// odd-indexed Kronrod abscissae.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
  double a, b;
  double value;
  double error;
};

bool operator<(const Interval& lhs, const Interval& rhs) {
  return lhs.error < rhs.error;
}

Interval gk15(const std::function<double(double)>& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double center = 0.5 * (a + b);

  const double fc = f(center);
  double kronrod = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * fsum;
    if (j % 2 == 1) {
      gauss += kWg[j / 2] * fsum;
    }
  }
  kronrod *= half;
  gauss *= half;

  Interval out;
  out.a = a;
  out.b = b;
  out.value = kronrod;
  out.error = std::abs(kronrod - gauss);
  return out;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, const std::vector<double>& breakpoints) {
  if (!(abs_tol > 0.0) || !std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw std::invalid_argument("integrate: bad interval or tolerance");
  }

  std::vector<double> cuts;
  cuts.push_back(a);
  for (double t : breakpoints) {
    if (t > a && t < b) cuts.push_back(t);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  std::priority_queue<Interval> heap;
  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k + 1] - cuts[k] <= 0.0) continue;
    Interval iv = gk15(f, cuts[k], cuts[k + 1]);
    total += iv.value;
    total_error += iv.error;
    heap.push(iv);
  }

  constexpr int kMaxIntervals = 2000;
  int used = static_cast<int>(heap.size());
  while (total_error > abs_tol && !heap.empty()) {
    if (used >= kMaxIntervals) {
      throw std::runtime_error(
          "integrate: failed to reach tolerance " + std::to_string(abs_tol) +
          " (error estimate " + std::to_string(total_error) + " after " +
          std::to_string(used) + " intervals)");
    }
    Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) {
      // Interval can no longer be split in floating point; accept it.
      continue;
    }
    Interval left = gk15(f, worst.a, mid);
    Interval right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++used;
  }

  if (!std::isfinite(total)) {
    throw std::runtime_error("integrate: non-finite result");
  }
  return total;
}

double integrate_half_line(const std::function<double(double)>& f,
                           double abs_tol,
                           const std::vector<double>& breakpoints) {
  auto g = [&f](double u) {
    const double w = 1.0 - u;
    const double t = u / w;
    if (!std::isfinite(t)) return 0.0;
    const double v = f(t);
    return v / (w * w);
  };
  std::vector<double> cuts;
  cuts.reserve(breakpoints.size());
  for (double t : breakpoints) {
    if (t > 0.0 && std::isfinite(t)) cuts.push_back(t / (1.0 + t));
  }
  return integrate(g, 0.0, 1.0, abs_tol, cuts);
}

}  // namespace cyltrack::quad
