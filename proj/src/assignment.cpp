#include "pmlperm/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pmlperm/errors.hpp"

namespace pmlperm {

std::vector<std::size_t> max_weight_assignment(std::span<const double> weights,
                                               std::span<const char> allowed,
                                               std::size_t n) {
  if (weights.size() != n * n || allowed.size() != n * n) {
    throw DimensionError("max_weight_assignment: size mismatch");
  }
  if (n == 0) return {};

  // Minimise cost = -weight; forbidden cells get a penalty larger than the
  // spread of any assignment over allowed cells.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n * n; ++t) {
    if (!allowed[t]) continue;
    lo = std::min(lo, weights[t]);
    hi = std::max(hi, weights[t]);
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const double penalty = (hi - lo + 1.0) * static_cast<double>(n + 1);
  std::vector<double> cost(n * n);
  for (std::size_t t = 0; t < n * n; ++t)
    cost[t] = allowed[t] ? hi - weights[t] : penalty;

  // Jonker-style potentials formulation, 1-based with a dummy column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> col_of_row(n);
  for (std::size_t j = 1; j <= n; ++j) col_of_row[p[j] - 1] = j - 1;
  return col_of_row;
}

namespace {

// Kuhn's augmenting-path matching with one row and one column removed.
bool has_perfect_matching(std::span<const char> allowed, std::size_t n,
                          std::size_t skip_row, std::size_t skip_col) {
  std::vector<std::size_t> match_col(n, n);  // row matched to each column
  std::vector<char> seen(n);
  std::function<bool(std::size_t)> augment = [&](std::size_t r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (c == skip_col || !allowed[r * n + c] || seen[c]) continue;
      seen[c] = 1;
      if (match_col[c] == n || augment(match_col[c])) {
        match_col[c] = r;
        return true;
      }
    }
    return false;
  };
  for (std::size_t r = 0; r < n; ++r) {
    if (r == skip_row) continue;
    std::fill(seen.begin(), seen.end(), 0);
    if (!augment(r)) return false;
  }
  return true;
}

}  // namespace

std::vector<char> matchable_cells(std::span<const char> allowed, std::size_t n) {
  if (allowed.size() != n * n) throw DimensionError("matchable_cells: size mismatch");
  if (!has_perfect_matching(allowed, n, n, n)) return {};
  std::vector<char> out(n * n, 0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (allowed[r * n + c]) out[r * n + c] = has_perfect_matching(allowed, n, r, c);
  return out;
}

}  // namespace pmlperm
