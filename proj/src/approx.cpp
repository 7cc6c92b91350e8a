#include "pmlperm/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <cstdint>

#include "pmlperm/assignment.hpp"
#include "pmlperm/detail/conditional_gradient.hpp"
#include "pmlperm/detail/dense_solve.hpp"
#include "pmlperm/detail/kahan.hpp"
#include "pmlperm/errors.hpp"

namespace pmlperm {

namespace {

constexpr double kLogFloor = 1e-300;

double xlogx_ratio(double q, double a) {
  // q log(a/q) with the 0 log(./0) = 0 convention.
  if (q == 0.0) return 0.0;
  if (a == 0.0) return -std::numeric_limits<double>::infinity();
  return q * (std::log(a) - std::log(q));
}

double one_minus_term(double q) {
  const double c = 1.0 - q;
  return c <= 0.0 ? 0.0 : c * std::log(c);
}

void require_same_square(const NonNegMatrix& a, const NonNegMatrix& q) {
  if (!a.is_square() || a.rows() != q.rows() || a.cols() != q.cols()) {
    throw DimensionError("matrices must be square and of the same shape");
  }
}

double scaling_residual(const NonNegMatrix& q) {
  double r = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    r = std::max(r, std::abs(q.row_sum(i) - 1.0));
    r = std::max(r, std::abs(q.col_sum(i) - 1.0));
  }
  return r;
}

}  // namespace

std::string to_string(ApproxMethod m) {
  switch (m) {
    case ApproxMethod::sinkhorn: return "sinkhorn";
    case ApproxMethod::scaled_sinkhorn: return "scaled_sinkhorn";
    case ApproxMethod::bethe: return "bethe";
  }
  return "unknown";
}

double functional_u(const NonNegMatrix& a, const NonNegMatrix& q) {
  require_same_square(a, q);
  detail::KahanSum<double> s;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double term = xlogx_ratio(q(i, j), a(i, j));
      if (std::isinf(term)) return term;
      s += term;
    }
  }
  return s.value();
}

double functional_v(const NonNegMatrix& q) {
  detail::KahanSum<double> s;
  for (double v : q.data()) {
    if (v > 1.0 + 1e-12) {
      throw InvalidArgument("functional_v: entry " + std::to_string(v) +
                            " exceeds 1");
    }
    s += one_minus_term(v);
  }
  return s.value();
}

DoublyStochasticWitness sinkhorn_scale(const NonNegMatrix& a, double tol,
                                       std::size_t max_iter) {
  if (!a.is_square()) throw DimensionError("sinkhorn_scale: matrix not square");
  if (!(tol > 0.0)) throw InvalidArgument("sinkhorn_scale: tol must be positive");
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    if (a.row_sum(i) <= 0.0 || a.col_sum(i) <= 0.0) {
      throw InvalidArgument("sinkhorn_scale: every row and column needs a "
                            "positive entry");
    }
  }

  std::vector<double> l(n, 1.0), r(n, 1.0);
  DoublyStochasticWitness w;
  auto build = [&] {
    std::vector<double> data(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) data[i * n + j] = l[i] * a(i, j) * r[j];
    return NonNegMatrix(n, n, std::move(data));
  };

  std::size_t it = 0;
  double residual = std::numeric_limits<double>::infinity();
  while (it < max_iter) {
    ++it;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * r[j];
      l[i] = 1.0 / s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += l[i] * a(i, j);
      r[j] = 1.0 / s;
    }
    // Columns are exact after the column sweep; rows carry the error.
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * r[j];
      residual = std::max(residual, std::abs(l[i] * s - 1.0));
    }
    if (residual <= tol) break;
  }
  w.q = build();
  w.row_scalers = std::move(l);
  w.col_scalers = std::move(r);
  w.iterations = it;
  w.residual = scaling_residual(w.q);
  return w;
}

ApproximationReport sinkhorn_permanent(const NonNegMatrix& a, double tol,
                                       std::size_t max_iter) {
  ApproximationReport rep;
  rep.method = ApproxMethod::sinkhorn;
  rep.witness = sinkhorn_scale(a, tol, max_iter);
  rep.log_value = functional_u(a, rep.witness.q);
  rep.iterations = rep.witness.iterations;
  rep.residual = rep.witness.residual;
  rep.converged = rep.residual <= tol;
  return rep;
}

ApproximationReport scaled_sinkhorn_permanent(const NonNegMatrix& a, double tol,
                                              std::size_t max_iter) {
  ApproximationReport rep = sinkhorn_permanent(a, tol, max_iter);
  rep.method = ApproxMethod::scaled_sinkhorn;
  rep.log_value -= static_cast<double>(a.rows());
  return rep;
}

namespace {

// Bethe objective restricted to the support of A, on row-major vectors.
struct BetheProblem {
  std::size_t n = 0;
  std::vector<char> support;
  std::vector<double> log_a;

  explicit BetheProblem(const NonNegMatrix& a) : n(a.rows()) {
    support.resize(n * n);
    log_a.assign(n * n, 0.0);
    for (std::size_t t = 0; t < n * n; ++t) {
      const double v = a.data()[t];
      support[t] = v > 0.0;
      if (support[t]) log_a[t] = std::log(v);
    }
  }

  // Extended precision so that accept/reject decisions near the optimum are
  // not decided by round-off.
  long double value_ext(const std::vector<double>& x) const {
    detail::KahanSum<long double> s;
    for (std::size_t t = 0; t < x.size(); ++t) {
      if (!support[t]) continue;
      const long double q = x[t];
      if (q > 0.0L) s += q * (static_cast<long double>(log_a[t]) - std::log(q));
      const long double c = 1.0L - q;
      if (c > 0.0L) s += c * std::log(c);
    }
    return s.value();
  }
  double value(const std::vector<double>& x) const {
    return static_cast<double>(value_ext(x));
  }

  void gradient(const std::vector<double>& x, std::vector<double>& g) const {
    for (std::size_t t = 0; t < x.size(); ++t) {
      g[t] = support[t] ? log_a[t] - std::log(std::max(x[t], kLogFloor)) -
                              std::log(std::max(1.0 - x[t], kLogFloor)) - 2.0
                        : 0.0;
    }
  }

  detail::OracleAnswer oracle(const std::vector<double>& g) const {
    const auto perm = max_weight_assignment(g, support, n);
    detail::OracleAnswer ans{std::vector<double>(n * n, 0.0), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      ans.vertex[i * n + perm[i]] = 1.0;
      ans.upper += g[i * n + perm[i]];
    }
    return ans;
  }

  double fw_gap(const std::vector<double>& x) const {
    std::vector<double> g(x.size());
    gradient(x, g);
    return std::max(0.0, oracle(g).upper - detail::dot(g, x));
  }

  // Maximum-weight permutation for log A, written into `vertex`. Returns an
  // upper bound on (max F - F(vertex)). Along Q - P the one-sided derivative
  // of F at the permutation P is
  //   sum_i c_i (sum_j pi_ij log(a_{i sigma(j)} / pi_ij) - log a_{i sigma(i)}),
  // with c_i in [0, 1] the mass leaving row i and pi_i its distribution. The
  // off-diagonal mass forms a circulation, so weighting by any positive y
  // leaves it unchanged and the derivative is at most
  //   sum_i max(0, log(sum_{j != i} M_ij y_j / y_i)),
  // M_ij = a_{i sigma(j)} / a_{i sigma(i)}. Concavity turns it into a bound.
  // y is refined by power iteration towards the Perron vector of M.
  double best_vertex(std::vector<double>& vertex) const {
    const auto perm = max_weight_assignment(log_a, support, n);
    vertex.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vertex[i * n + perm[i]] = 1.0;

    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && support[i * n + perm[j]])
          m[i * n + j] = std::exp(log_a[i * n + perm[j]] - log_a[i * n + perm[i]]);

    auto bound_for = [&](const std::vector<double>& y) {
      double b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += m[i * n + j] * y[j];
        if (s > 0.0) b += std::max(0.0, std::log(s / y[i]));
      }
      return b;
    };
    std::vector<double> y(n, 1.0), next(n);
    double best = bound_for(y);
    for (int it = 0; it < 500 && best > 0.0; ++it) {
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += m[i * n + j] * y[j];
        next[i] = s + 1e-300;
        norm = std::max(norm, next[i]);
      }
      for (std::size_t i = 0; i < n; ++i) y[i] = std::max(next[i] / norm, 1e-200);
      best = std::min(best, bound_for(y));
    }
    return best;
  }

  // Newton direction on the free entries (0 < x < 1) within the affine hull
  // of the row/column constraints. Empty when the system is degenerate.
  std::vector<double> newton_direction(const std::vector<double>& x) const {
    std::vector<std::size_t> free;
    for (std::size_t t = 0; t < x.size(); ++t)
      if (support[t] && x[t] > 0.0 && x[t] < 1.0) free.push_back(t);
    const std::size_t m = free.size();
    if (m == 0) return {};
    // One row/column constraint per connected component of the free entries
    // is redundant; drop the first column constraint of each component.
    std::vector<std::size_t> parent(2 * n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    std::vector<char> touched(2 * n, 0);
    for (std::size_t t : free) {
      touched[t / n] = touched[n + t % n] = 1;
      parent[find(t / n)] = find(n + t % n);
    }
    std::vector<std::size_t> cons_index(2 * n, SIZE_MAX);
    std::vector<char> root_seen(2 * n, 0);
    std::size_t ncons = 0;
    for (std::size_t v = 0; v < 2 * n; ++v) {
      if (!touched[v]) continue;
      const std::size_t r = find(v);
      if (v >= n && !root_seen[r]) {
        root_seen[r] = 1;
        continue;
      }
      cons_index[v] = ncons++;
    }

    const std::size_t dim = m + ncons;
    std::vector<double> kkt(dim * dim, 0.0), rhs(dim, 0.0);
    std::vector<double> g(x.size());
    gradient(x, g);
    for (std::size_t e = 0; e < m; ++e) {
      const std::size_t t = free[e];
      const double q = x[t];
      // Second derivative of the objective, shifted to stay definite.
      kkt[e * dim + e] = -1.0 / q + 1.0 / (1.0 - q) - 1e-10;
      rhs[e] = -g[t];
      for (std::size_t v : {t / n, n + t % n}) {
        if (cons_index[v] == SIZE_MAX) continue;
        const std::size_t c = m + cons_index[v];
        kkt[e * dim + c] = kkt[c * dim + e] = 1.0;
      }
    }
    if (!detail::solve_dense(kkt, rhs, dim, 1e-300)) return {};
    std::vector<double> dir(x.size(), 0.0);
    double curvature = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      const double q = x[free[e]];
      dir[free[e]] = rhs[e];
      curvature += rhs[e] * rhs[e] * (-1.0 / q + 1.0 / (1.0 - q));
    }
    // Ascent requires negative curvature along the step. Testing g.d instead
    // would be swamped by the normal component of g near the optimum.
    if (!(curvature < 0.0)) return {};
    return dir;
  }
};

}  // namespace

ApproximationReport bethe_permanent(const NonNegMatrix& a, double tol,
                                    std::size_t max_iter) {
  if (!a.is_square()) throw DimensionError("bethe_permanent: matrix not square");
  const std::size_t n = a.rows();

  // Doubly stochastic matrices vanish off the cells that lie on some perfect
  // matching, so the problem lives on that core. No matching: the polytope is
  // empty and the value is log 0.
  std::vector<char> support(n * n);
  for (std::size_t t = 0; t < n * n; ++t) support[t] = a.data()[t] > 0.0;
  const std::vector<char> core_mask = matchable_cells(support, n);
  if (core_mask.empty()) {
    ApproximationReport rep;
    rep.method = ApproxMethod::bethe;
    rep.log_value = -std::numeric_limits<double>::infinity();
    rep.converged = true;
    return rep;
  }
  std::vector<double> core_data(a.data().begin(), a.data().end());
  for (std::size_t t = 0; t < n * n; ++t)
    if (!core_mask[t]) core_data[t] = 0.0;
  const NonNegMatrix core(n, n, std::move(core_data));

  // A tight start keeps the normal component of the gradient out of the gap.
  ApproximationReport start = sinkhorn_permanent(core, 1e-14, kSinkhornMaxIter);
  const BetheProblem prob(core);

  std::vector<double> x(start.witness.q.data().begin(),
                        start.witness.q.data().end());
  long double fx = prob.value_ext(x);
  std::vector<double> trace{static_cast<double>(fx)};
  std::size_t iterations = 0;
  double gap = prob.fw_gap(x);

  // Phase 1: damped Newton steps inside the support, each accepted only if it
  // does not decrease the objective.
  while (gap > tol && iterations < max_iter) {
    const auto dir = prob.newton_direction(x);
    if (dir.empty()) break;
    double t_max = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (dir[i] < 0.0) t_max = std::min(t_max, -0.99 * x[i] / dir[i]);
      if (dir[i] > 0.0) t_max = std::min(t_max, 0.99 * (1.0 - x[i]) / dir[i]);
    }
    bool moved = false;
    for (double t = t_max; t > 1e-12; t *= 0.5) {
      std::vector<double> y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::max(0.0, x[i] + t * dir[i]);
      const long double fy = prob.value_ext(y);
      if (fy > fx || (fy == fx && prob.fw_gap(y) < gap)) {
        x = std::move(y);
        fx = fy;
        moved = true;
        break;
      }
    }
    ++iterations;
    if (!moved) break;
    trace.push_back(static_cast<double>(fx));
    gap = prob.fw_gap(x);
  }

  // The maximiser can be a permutation matrix, where the gradient blows up and
  // the Frank-Wolfe gap cannot shrink. Compare against the best vertex and
  // bound its suboptimality directly.
  bool converged = gap <= tol;
  auto try_vertex = [&] {
    if (converged) return;
    std::vector<double> vertex;
    const double vertex_gap = prob.best_vertex(vertex);
    const long double fv = prob.value_ext(vertex);
    // max F <= fv + vertex_gap, which also bounds an iterate lying just off
    // the vertex.
    const double cap = static_cast<double>(std::max(0.0L, fv + vertex_gap - fx));
    if (fv >= fx && vertex_gap < gap) {
      x = std::move(vertex);
      fx = fv;
      gap = vertex_gap;
      trace.push_back(static_cast<double>(fx));
    } else if (cap < gap) {
      gap = cap;
    }
    converged = gap <= tol;
  };
  try_vertex();

  // Phase 2: away-step conditional gradient, certifying or finishing the job.
  if (!converged && iterations < max_iter) {
    detail::CgOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter - iterations;
    detail::CgResult cg = detail::away_step_cg(
        std::move(x), [&](const std::vector<double>& v) { return prob.value(v); },
        [&](const std::vector<double>& v, std::vector<double>& g) { prob.gradient(v, g); },
        [&](const std::vector<double>& g) { return prob.oracle(g); }, opt);
    x = std::move(cg.x);
    fx = prob.value_ext(x);
    gap = cg.gap;
    converged = cg.converged;
    iterations += cg.iterations;
    trace.insert(trace.end(), cg.trace.begin() + 1, cg.trace.end());
  }

  try_vertex();

  ApproximationReport rep;
  rep.method = ApproxMethod::bethe;
  rep.log_value = static_cast<double>(fx);
  rep.witness = std::move(start.witness);
  rep.witness.q = NonNegMatrix(n, n, std::move(x));
  rep.witness.residual = scaling_residual(rep.witness.q);
  rep.iterations = iterations;
  rep.residual = gap;
  rep.converged = converged;
  rep.objective_trace = std::move(trace);
  return rep;
}

NonNegMatrix block_ones_matrix(std::size_t n, std::size_t k) {
  if (k == 0 || k > n) {
    throw InvalidArgument("block_ones_matrix: need 1 <= k <= n");
  }
  const std::size_t size = n / k;
  std::vector<NonNegMatrix> blocks(k, NonNegMatrix::ones(size));
  if (n % k != 0) blocks.push_back(NonNegMatrix::ones(n - k * size));
  return block_diagonal(blocks);
}

DistinctColumnMatrix k_distinct_column_matrix(std::size_t n, std::size_t k,
                                              std::uint64_t seed) {
  if (k == 0 || k > n) {
    throw InvalidArgument("k_distinct_column_matrix: need 1 <= k <= n");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Random composition of n into k positive parts via k-1 distinct cut points.
  std::vector<std::size_t> cuts(n - 1);
  std::iota(cuts.begin(), cuts.end(), std::size_t{1});
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(k - 1);
  std::sort(cuts.begin(), cuts.end());
  DistinctColumnMatrix out;
  std::size_t prev = 0;
  for (std::size_t c : cuts) {
    out.multiplicities.push_back(c - prev);
    prev = c;
  }
  out.multiplicities.push_back(n - prev);

  std::vector<std::vector<double>> columns(k, std::vector<double>(n));
  for (auto& col : columns)
    for (double& v : col) v = 1.0 - unif(rng);  // (0, 1]

  std::vector<double> data(n * n);
  std::size_t c = 0;
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t rep = 0; rep < out.multiplicities[j]; ++rep, ++c)
      for (std::size_t i = 0; i < n; ++i) data[i * n + c] = columns[j][i];
  out.matrix = NonNegMatrix(n, n, std::move(data));
  return out;
}

}  // namespace pmlperm
