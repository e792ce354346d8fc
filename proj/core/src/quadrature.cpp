#include "specexec/quadrature.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "specexec/errors.hpp"

namespace specexec {

namespace {

// Kronrod abscissae on [0, 1]; odd indices are the Gauss nodes.
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;

  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gauss_kronrod(const RealFunction& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = kKronrodWeights[7] * fc;
  double gauss = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return Panel{a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

void Quadrature::validate() const {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
  if (!(tail_quantile > 0.0 && tail_quantile < 1.0))
    throw std::invalid_argument("tail quantile must lie in (0, 1)");
  if (max_intervals < 1) throw std::invalid_argument("quadrature interval budget must be >= 1");
}

QuadratureResult integrate_with_error(const RealFunction& f, double lo, double hi,
                                      const Quadrature& q, std::span<const double> breakpoints) {
  q.validate();
  if (std::isnan(lo) || std::isnan(hi) || std::isinf(lo))
    throw std::invalid_argument("integration limits must be numbers with a finite lower limit");
  if (hi < lo) return {-integrate_with_error(f, hi, lo, q, breakpoints).value, 0.0, 0};
  if (hi == lo) return {};

  std::vector<double> edges{lo};
  for (double b : breakpoints)
    if (b > lo && b < hi) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::priority_queue<Panel> panels;
  double total = 0.0;
  double total_error = 0.0;
  auto push = [&](const RealFunction& g, double a, double b) {
    Panel p = gauss_kronrod(g, a, b);
    total += p.value;
    total_error += p.error;
    panels.push(p);
  };

  const bool improper = std::isinf(hi);
  double split = hi;
  if (improper) {
    split = edges.size() > 1 ? edges.back() : lo + std::max(1.0, std::abs(lo));
    if (edges.back() != split) edges.push_back(split);
  } else {
    edges.push_back(hi);
  }

  // The tail panel lives on w in (0, 1] with t = split / w.
  const RealFunction tail = [&f, split](double w) {
    const double t = split / w;
    if (!std::isfinite(t)) return 0.0;
    return f(t) * split / (w * w);
  };

  // Finite panels and tail panels share one budget but integrate different
  // functions, so they live in separate heaps.
  std::priority_queue<Panel> tail_panels;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) push(f, edges[i], edges[i + 1]);
  if (improper) {
    Panel p = gauss_kronrod(tail, 0.0, 1.0);
    total += p.value;
    total_error += p.error;
    tail_panels.push(p);
  }

  int count = static_cast<int>(panels.size() + tail_panels.size());
  while (total_error > std::max(q.abs_tol, q.rel_tol * std::abs(total))) {
    if (count >= q.max_intervals) {
      throw ConvergenceError("quadrature did not reach tolerance within " +
                             std::to_string(q.max_intervals) + " intervals (estimate " +
                             std::to_string(total) + ", error " + std::to_string(total_error) +
                             ")");
    }
    const bool refine_tail =
        !tail_panels.empty() && (panels.empty() || tail_panels.top().error > panels.top().error);
    auto& heap = refine_tail ? tail_panels : panels;
    const RealFunction& g = refine_tail ? tail : f;
    const Panel worst = heap.top();
    heap.pop();
    total -= worst.value;
    total_error -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gauss_kronrod(g, worst.a, mid);
    Panel right = gauss_kronrod(g, mid, worst.b);
    total += left.value + right.value;
    total_error += left.error + right.error;
    heap.push(left);
    heap.push(right);
    ++count;
    if (total_error < 0.0) total_error = 0.0;
  }

  // Re-sum to shed accumulated cancellation from the running total.
  double sum = 0.0;
  double err = 0.0;
  for (auto* heap : {&panels, &tail_panels}) {
    while (!heap->empty()) {
      sum += heap->top().value;
      err += heap->top().error;
      heap->pop();
    }
  }
  return {sum, err, count};
}

MinimizeResult golden_section_minimize(const RealFunction& f, double lo, double hi, double x_tol,
                                       int max_iter) {
  if (!(hi >= lo)) throw std::invalid_argument("golden-section bracket is empty");
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = lo;
  double b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  int evals = 2;
  for (int it = 0; it < max_iter && (b - a) > x_tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
    ++evals;
  }
  MinimizeResult best = f1 <= f2 ? MinimizeResult{x1, f1, evals} : MinimizeResult{x2, f2, evals};
  for (double end : {lo, hi}) {
    const double v = f(end);
    ++best.evaluations;
    if (v < best.value) {
      best.x = end;
      best.value = v;
    }
  }
  return best;
}

MinimizeResult scan_then_minimize(const RealFunction& f, double lo, double hi, int grid_points,
                                  double x_tol) {
  if (grid_points < 3) throw std::invalid_argument("scan needs at least 3 grid points");
  const double step = (hi - lo) / (grid_points - 1);
  int best = 0;
  double best_value = f(lo);
  for (int i = 1; i < grid_points; ++i) {
    const double v = f(lo + step * i);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  const double a = lo + step * std::max(0, best - 1);
  const double b = lo + step * std::min(grid_points - 1, best + 1);
  MinimizeResult refined = golden_section_minimize(f, a, b, x_tol);
  refined.evaluations += grid_points;
  if (best_value < refined.value) {
    refined.x = lo + step * best;
    refined.value = best_value;
  }
  return refined;
}

}  // namespace specexec
