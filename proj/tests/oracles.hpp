#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

/// Permanent by Laplace expansion along the first row (exponential, tiny n).
inline double laplace_permanent(const Dense& a) {
  const std::size_t n = a.size();
  if (n == 0) return 1.0;
  std::function<double(std::size_t, unsigned)> rec = [&](std::size_t row,
                                                         unsigned used) {
    if (row == n) return 1.0;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used & (1u << j)) continue;
      if (a[row][j] == 0.0) continue;
      s += a[row][j] * rec(row + 1, used | (1u << j));
    }
    return s;
  };
  return rec(0, 0u);
}

inline Dense random_dense(std::size_t n, std::mt19937_64& rng, double lo = 0.0,
                          double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Dense a(n, std::vector<double>(n));
  for (auto& row : a)
    for (double& v : row) v = u(rng);
  return a;
}

inline std::vector<double> flatten(const Dense& a) {
  std::vector<double> out;
  for (const auto& row : a) out.insert(out.end(), row.begin(), row.end());
  return out;
}

inline double log_factorial(std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 2; i <= n; ++i) s += std::log(static_cast<double>(i));
  return s;
}

/// sum_Q over the one-parameter family of 2x2 doubly stochastic matrices
/// [[t, 1-t], [1-t, t]]: maximum of f(t) on a uniform grid of the given size.
inline double grid_max_2x2(const std::function<double(double)>& f,
                           std::size_t points) {
  double best = -INFINITY;
  for (std::size_t i = 0; i <= points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points);
    best = std::max(best, f(t));
  }
  return best;
}

/// Probability of a profile by enumerating all sequences over the domain.
/// Profile represented as a sorted list of the non-zero symbol counts.
inline std::vector<int> count_profile(const std::vector<int>& seq,
                                      std::size_t domain) {
  std::vector<int> counts(domain, 0);
  for (int s : seq) ++counts[static_cast<std::size_t>(s)];
  std::vector<int> out;
  for (int c : counts)
    if (c > 0) out.push_back(c);
  std::sort(out.begin(), out.end());
  return out;
}

inline double enumerate_profile_probability(const std::vector<double>& q,
                                            const std::vector<int>& target,
                                            std::size_t n) {
  const std::size_t d = q.size();
  std::vector<int> seq(n, 0);
  double total = 0.0;
  for (;;) {
    if (count_profile(seq, d) == target) {
      double p = 1.0;
      for (int s : seq) p *= q[static_cast<std::size_t>(s)];
      total += p;
    }
    std::size_t pos = 0;
    while (pos < n && ++seq[pos] == static_cast<int>(d)) seq[pos++] = 0;
    if (pos == n) break;
  }
  return total;
}

/// All multisets of positive counts (as sorted vectors) that arise from
/// sequences of length n over at most d symbols.
inline std::vector<std::vector<int>> all_count_profiles(std::size_t n,
                                                        std::size_t d) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int, int)> rec = [&](int remaining, int max_part) {
    if (remaining == 0) {
      std::vector<int> v(cur.rbegin(), cur.rend());
      out.push_back(v);
      return;
    }
    if (cur.size() == d) return;
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
      cur.push_back(p);
      rec(remaining - p, p);
      cur.pop_back();
    }
  };
  rec(static_cast<int>(n), static_cast<int>(n));
  return out;
}

/// sum S_ij (m_j ln r_i - ln S_ij) + sum_i R_i ln R_i straight from the
/// definition; s is row-major with one column per entry of freq.
inline double log_g_direct(const std::vector<double>& levels,
                           const std::vector<std::size_t>& freq,
                           const std::vector<double>& s) {
  const std::size_t c = freq.size();
  double v = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double x = s[i * c + j];
      row += x;
      if (x > 0.0)
        v += x * (static_cast<double>(freq[j]) * std::log(levels[i]) - std::log(x));
    }
    if (row > 0.0) v += row * std::log(row);
  }
  return v;
}

/// Calls visit(units) for every way of writing total as an ordered sum of
/// parts non-negative integers.
inline void for_each_composition(int total, std::size_t parts,
                                 const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> cur(parts, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == parts) {
      cur[i] = left;
      visit(cur);
      return;
    }
    for (int t = 0; t <= left; ++t) {
      cur[i] = t;
      rec(i + 1, left - t);
    }
  };
  if (parts == 0) {
    if (total == 0) visit(cur);
    return;
  }
  rec(0, total);
}

/// Every non-negative integer table with the given row and column sums.
inline void for_each_table(const std::vector<int>& rows, const std::vector<int>& cols,
                           const std::function<void(const std::vector<int>&)>& visit) {
  const std::size_t l = rows.size(), c = cols.size();
  std::vector<int> t(l * c, 0), row_left(rows), col_left(cols);
  std::function<void(std::size_t)> rec = [&](std::size_t cell) {
    if (cell == l * c) {
      for (int v : row_left)
        if (v != 0) return;
      for (int v : col_left)
        if (v != 0) return;
      visit(t);
      return;
    }
    const std::size_t i = cell / c, j = cell % c;
    const bool last_col = j + 1 == c, last_row = i + 1 == l;
    int lo = 0, hi = std::min(row_left[i], col_left[j]);
    if (last_col) lo = row_left[i];
    if (last_row) lo = std::max(lo, col_left[j]);
    if (lo > hi) return;
    for (int v = lo; v <= hi; ++v) {
      t[cell] = v;
      row_left[i] -= v;
      col_left[j] -= v;
      rec(cell + 1);
      row_left[i] += v;
      col_left[j] += v;
    }
    t[cell] = 0;
  };
  rec(0);
}

}  // namespace oracle
