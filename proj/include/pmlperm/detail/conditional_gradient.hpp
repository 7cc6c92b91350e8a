#pragma once

// Away-step conditional gradient (Frank-Wolfe) for maximising a concave
// function over a polytope given by a linear maximisation oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace pmlperm::detail {

struct CgOptions {
  double tol = 1e-8;
  std::size_t max_iter = 10000;
  std::size_t line_search_steps = 64;
};

struct CgResult {
  std::vector<double> x;
  double value = 0.0;
  double gap = 0.0;  // upper bound on (max - value) at the returned point
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after every accepted step
};

/// What the linear oracle returns: a maximiser of <g, s> over the polytope and
/// an upper bound on that maximum (equal to <g, s> for an exact oracle).
struct OracleAnswer {
  std::vector<double> vertex;
  double upper;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// f(x) -> double, grad(x, g&) fills the gradient, oracle(g) -> OracleAnswer.
/// x0 is treated as the first atom, so it need not be a vertex.
template <typename Value, typename Gradient, typename Oracle>
CgResult away_step_cg(std::vector<double> x0, Value&& f, Gradient&& grad,
                      Oracle&& oracle, const CgOptions& opt) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<double>> atoms{x0};
  std::vector<double> weights{1.0};

  CgResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  res.trace.push_back(res.value);

  std::vector<double> g(dim), trial(dim), gt(dim), dir(dim);
  auto slope = [&](double t) {
    for (std::size_t i = 0; i < dim; ++i)
      trial[i] = std::max(0.0, res.x[i] + t * dir[i]);
    grad(trial, gt);
    return dot(gt, dir);
  };

  for (;;) {
    grad(res.x, g);
    OracleAnswer fw = oracle(g);
    const double gx = dot(g, res.x);
    res.gap = std::max(0.0, fw.upper - gx);
    if (res.gap <= opt.tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.max_iter) break;

    // Away atom: the active atom with the smallest linear value.
    std::size_t away = 0;
    double away_val = dot(g, atoms[0]);
    for (std::size_t a = 1; a < atoms.size(); ++a) {
      const double v = dot(g, atoms[a]);
      if (v < away_val) {
        away_val = v;
        away = a;
      }
    }
    const double fw_gain = dot(g, fw.vertex) - gx;
    const double away_gain = gx - away_val;

    bool fw_step = fw_gain >= away_gain || atoms.size() == 1;
    double t_max;
    if (fw_step) {
      for (std::size_t i = 0; i < dim; ++i) dir[i] = fw.vertex[i] - res.x[i];
      t_max = 1.0;
    } else {
      for (std::size_t i = 0; i < dim; ++i) dir[i] = res.x[i] - atoms[away][i];
      t_max = weights[away] / (1.0 - weights[away]);
    }

    // Exact line search: bisection on the sign of the directional derivative
    // at interior points, then the endpoint is kept if it is at least as good
    // (derivatives at a face of the polytope may be infinite).
    double lo = 0.0, hi = t_max;
    for (std::size_t it = 0; it < opt.line_search_steps; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    auto point_at = [&](double t) {
      std::vector<double> p(dim);
      for (std::size_t i = 0; i < dim; ++i) p[i] = std::max(0.0, res.x[i] + t * dir[i]);
      return p;
    };
    double t = lo;
    std::vector<double> next = point_at(lo);
    double next_val = f(next);
    {
      std::vector<double> end = point_at(t_max);
      const double end_val = f(end);
      if (end_val >= next_val) {
        t = t_max;
        next = std::move(end);
        next_val = end_val;
      }
    }
    ++res.iterations;
    if (!(next_val >= res.value) || t == 0.0) break;  // stalled at round-off

    if (fw_step) {
      for (double& w : weights) w *= (1.0 - t);
      auto it = std::find(atoms.begin(), atoms.end(), fw.vertex);
      if (t >= 1.0) {
        atoms.assign(1, fw.vertex);
        weights.assign(1, 1.0);
      } else if (it == atoms.end()) {
        atoms.push_back(std::move(fw.vertex));
        weights.push_back(t);
      } else {
        weights[static_cast<std::size_t>(it - atoms.begin())] += t;
      }
    } else {
      for (double& w : weights) w *= (1.0 + t);
      weights[away] -= t;
      if (t >= t_max || weights[away] <= 0.0) {
        atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(away));
        weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(away));
      }
    }
    res.x = std::move(next);
    res.value = next_val;
    res.trace.push_back(res.value);
  }
  return res;
}

}  // namespace pmlperm::detail
