#include "pmlperm/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pmlperm/detail/conditional_gradient.hpp"
#include "pmlperm/detail/dense_solve.hpp"
#include "pmlperm/detail/kahan.hpp"
#include "pmlperm/errors.hpp"

namespace pmlperm {

namespace {

constexpr double kTiny = 1e-300;
// Stand-in for m ln 0 in gradients; keeps products with zero finite.
constexpr double kLogZero = -1e30;

}  // namespace

double default_grid_eps(std::size_t n) {
  const double x = static_cast<double>(n);
  return std::log(x) / std::sqrt(x);
}

DiscretizationSet build_discretization(std::size_t n) {
  if (n < 2) throw InvalidArgument("build_discretization: n must be at least 2");
  return build_discretization(n, default_grid_eps(n));
}

DiscretizationSet build_discretization(std::size_t n, double eps) {
  if (n < 2) throw InvalidArgument("build_discretization: n must be at least 2");
  if (!(eps > 0.0 && eps <= 1.0))
    throw InvalidArgument("build_discretization: eps must lie in (0, 1]");
  const double nn = static_cast<double>(n);
  const double floor_value = 1.0 / (2.0 * nn * nn);
  DiscretizationSet r;
  r.eps = eps;
  r.n = n;
  const double log_ratio = std::log1p(eps);
  for (std::size_t i = 0;; ++i) {
    const double v = std::exp(-static_cast<double>(i) * log_ratio);
    r.values.push_back(v);
    if (v <= floor_value) break;
  }
  return r;
}

PseudoDistribution discretize(const PseudoDistribution& p, const DiscretizationSet& r) {
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    const double probe = p[x] * (1.0 + 1e-12);
    const auto it = std::find_if(r.values.begin(), r.values.end(),
                                 [&](double v) { return v <= probe; });
    if (it == r.values.end()) {
      throw InvalidArgument("discretize: probability " + std::to_string(p[x]) +
                            " lies below the smallest grid value");
    }
    out[x] = *it;
  }
  return PseudoDistribution(std::move(out));
}

AllocationMatrix::AllocationMatrix(std::vector<double> levels, Profile profile)
    : levels_(std::move(levels)), profile_(std::move(profile)) {
  entries_.assign(levels_.size() * cols(), 0.0);
}

AllocationMatrix::AllocationMatrix(std::vector<double> levels, Profile profile,
                                   std::vector<double> entries)
    : levels_(std::move(levels)), profile_(std::move(profile)),
      entries_(std::move(entries)) {
  if (entries_.size() != levels_.size() * cols())
    throw DimensionError("AllocationMatrix: entries do not match l x (k+1)");
  for (double v : entries_)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("AllocationMatrix: entries must be finite and >= 0");
  for (double v : levels_)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("AllocationMatrix: levels must be finite and >= 0");
}

double AllocationMatrix::row_sum(std::size_t i) const noexcept {
  detail::KahanSum<double> s;
  for (std::size_t j = 0; j < cols(); ++j) s += (*this)(i, j);
  return s.value();
}

double AllocationMatrix::col_sum(std::size_t j) const noexcept {
  detail::KahanSum<double> s;
  for (std::size_t i = 0; i < rows(); ++i) s += (*this)(i, j);
  return s.value();
}

double AllocationMatrix::mass() const noexcept {
  detail::KahanSum<double> s;
  for (std::size_t i = 0; i < rows(); ++i) s += levels_[i] * row_sum(i);
  return s.value();
}

double AllocationMatrix::total() const noexcept {
  detail::KahanSum<double> s;
  for (double v : entries_) s += v;
  return s.value();
}

bool AllocationMatrix::is_fractionally_feasible(double tol) const {
  for (std::size_t j = 1; j < cols(); ++j)
    if (std::abs(col_sum(j) - target(j)) > tol) return false;
  return mass() <= 1.0 + tol;
}

bool AllocationMatrix::is_integral(double tol) const {
  if (!is_fractionally_feasible(tol)) return false;
  for (std::size_t i = 0; i < rows(); ++i) {
    const double r = row_sum(i);
    if (std::abs(r - std::round(r)) > tol) return false;
  }
  return true;
}

AllocationMatrix AllocationMatrix::pruned() const {
  std::vector<double> lv, e;
  for (std::size_t i = 0; i < rows(); ++i) {
    if (row_sum(i) == 0.0) continue;
    lv.push_back(levels_[i]);
    for (std::size_t j = 0; j < cols(); ++j) e.push_back((*this)(i, j));
  }
  return AllocationMatrix(std::move(lv), profile_, std::move(e));
}

double log_g(const AllocationMatrix& s) {
  detail::KahanSum<double> total;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double r = s.levels()[i];
    const double log_r = r > 0.0 ? std::log(r) : -std::numeric_limits<double>::infinity();
    double row = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j) {
      const double v = s(i, j);
      if (v == 0.0) continue;
      row += v;
      const std::size_t m = s.freq(j);
      if (m > 0) {
        if (r == 0.0) return -std::numeric_limits<double>::infinity();
        total += v * static_cast<double>(m) * log_r;
      }
      total += -v * std::log(v);
    }
    if (row > 0.0) total += row * std::log(row);
  }
  return total.value();
}

namespace {

// Absolute rounding error to expect when log g is evaluated at s: a few ulps
// of the sum of the magnitudes of its terms.
double evaluation_floor(const AllocationMatrix& s) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double log_r = std::log(s.levels()[i]);
    const double row = s.row_sum(i);
    if (row <= 0.0) continue;
    total += row * std::abs(std::log(row));
    for (std::size_t j = 0; j < s.cols(); ++j) {
      const double v = s(i, j);
      if (v > 0.0)
        total += v * (std::abs(static_cast<double>(s.freq(j)) * log_r) + std::abs(std::log(v)));
    }
  }
  return 64.0 * std::numeric_limits<double>::epsilon() * total;
}

}  // namespace

double log_h(const AllocationMatrix& s) {
  double v = log_g(s);
  for (std::size_t j = 0; j < s.cols(); ++j) {
    const double phi = s.col_sum(j);
    if (phi > 0.0) v += phi * std::log(phi) - phi;
  }
  return v;
}

namespace {

void gradient_into(const AllocationMatrix& shape, const std::vector<double>& x,
                   std::vector<double>& g) {
  const std::size_t cols = shape.cols();
  g.resize(x.size());
  for (std::size_t i = 0; i < shape.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < cols; ++j) row += x[i * cols + j];
    const double r = shape.levels()[i];
    if (row == 0.0) {
      // Not differentiable here: spreading mass over an empty row gains
      // entropy at first order. Its best rate ln sum_j r^{m_j} bounds every
      // direction, so it is used for each entry of the row.
      double lse = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t m = shape.freq(j);
        lse += m == 0 ? 1.0 : std::pow(r, static_cast<double>(m));
      }
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] = std::log(lse);
      continue;
    }
    const double log_row = std::log(row);
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t m = shape.freq(j);
      double lin = 0.0;
      if (m > 0) lin = r > 0.0 ? static_cast<double>(m) * std::log(r) : kLogZero;
      g[i * cols + j] = lin + log_row - std::log(std::max(x[i * cols + j], kTiny));
    }
  }
}

}  // namespace

std::vector<double> log_g_gradient(const AllocationMatrix& s) {
  std::vector<double> g;
  gradient_into(s, s.entries(), g);
  return g;
}

namespace {

// Maximises <G, S> over the fractional set. For a multiplier lambda on the
// mass constraint every column j >= 1 sends its phi_j units to the level
// maximising G_ij - lambda r_i, and column 0 is bounded only when lambda r_i
// >= G_i0 everywhere. D(lambda) = lambda + sum_j phi_j max_i (G_ij - lambda
// r_i) bounds the maximum from above for every admissible lambda.
class LinearOracle {
 public:
  explicit LinearOracle(const AllocationMatrix& shape) : shape_(shape) {}

  detail::OracleAnswer operator()(const std::vector<double>& g) const {
    const std::size_t l = shape_.rows(), c = shape_.cols();
    const auto& r = shape_.levels();

    double lambda0 = 0.0;
    std::size_t unseen_level = 0;
    for (std::size_t i = 0; i < l; ++i) {
      if (r[i] <= 0.0) continue;
      const double v = g[i * c] / r[i];
      if (v > lambda0) {
        lambda0 = v;
        unseen_level = i;
      }
    }

    auto choose = [&](double lambda, std::vector<std::size_t>& pick) {
      double mass = 0.0;
      for (std::size_t j = 1; j < c; ++j) {
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < l; ++i) {
          const double v = g[i * c + j] - lambda * r[i];
          // Ties go to the cheaper (lower) level.
          if (v > best_v || (v == best_v && r[i] < r[best])) {
            best_v = v;
            best = i;
          }
        }
        pick[j] = best;
        mass += shape_.target(j) * r[best];
      }
      return mass;
    };
    auto dual = [&](double lambda) {
      double v = lambda;
      for (std::size_t j = 1; j < c; ++j) {
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < l; ++i)
          best_v = std::max(best_v, g[i * c + j] - lambda * r[i]);
        v += shape_.target(j) * best_v;
      }
      return v;
    };

    detail::OracleAnswer ans{std::vector<double>(l * c, 0.0), 0.0};
    std::vector<std::size_t> pick(c, 0);
    const double mass0 = choose(lambda0, pick);
    if (mass0 <= 1.0) {
      for (std::size_t j = 1; j < c; ++j) ans.vertex[pick[j] * c + j] = shape_.target(j);
      if (lambda0 > 0.0 && mass0 < 1.0)
        ans.vertex[unseen_level * c] = (1.0 - mass0) / r[unseen_level];
      ans.upper = dual(lambda0);
      return ans;
    }

    double lo = lambda0, hi = std::max(1.0, 2.0 * lambda0);
    std::vector<std::size_t> pick_hi(c, 0);
    double mass_hi = choose(hi, pick_hi);
    for (int it = 0; it < 2000 && mass_hi > 1.0; ++it) {
      lo = hi;
      hi *= 2.0;
      mass_hi = choose(hi, pick_hi);
    }
    if (mass_hi > 1.0)
      throw InvalidArgument("maximize_log_g: no feasible allocation on this grid");
    std::vector<std::size_t> pick_lo(c, 0);
    double mass_lo = choose(lo, pick_lo);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      std::vector<std::size_t> pm(c, 0);
      const double mm = choose(mid, pm);
      if (mm > 1.0) {
        lo = mid;
        pick_lo = pm;
        mass_lo = mm;
      } else {
        hi = mid;
        pick_hi = pm;
        mass_hi = mm;
      }
    }
    // Mix the two assignments so that the mass is exactly 1.
    const double t = mass_lo > mass_hi ? (1.0 - mass_hi) / (mass_lo - mass_hi) : 0.0;
    for (std::size_t j = 1; j < c; ++j) {
      ans.vertex[pick_lo[j] * c + j] += t * shape_.target(j);
      ans.vertex[pick_hi[j] * c + j] += (1.0 - t) * shape_.target(j);
    }
    ans.upper = std::min(dual(lo), dual(hi));
    return ans;
  }

 private:
  const AllocationMatrix& shape_;
};

// Dual objective pieces at y = (alpha_1..alpha_k, lambda).
struct DualEval {
  std::vector<double> lse;  // per level
  std::vector<double> prob; // l x (k+1) softmax weights, column 0 included
};

class DualProblem {
 public:
  DualProblem(const Profile& p, const DiscretizationSet& r) : p_(p), r_(r.values) {
    log_r_.reserve(r_.size());
    for (double v : r_) log_r_.push_back(std::log(v));
  }

  std::size_t levels() const { return r_.size(); }
  std::size_t k() const { return p_.k(); }
  double r(std::size_t i) const { return r_[i]; }
  double phi(std::size_t j) const { return static_cast<double>(p_.counts()[j]); }
  std::size_t n() const { return p_.n(); }

  void eval(const std::vector<double>& y, DualEval& out) const {
    const std::size_t l = levels(), kk = k(), c = kk + 1;
    out.lse.resize(l);
    out.prob.resize(l * c);
    std::vector<double> z(c);
    for (std::size_t i = 0; i < l; ++i) {
      z[0] = 0.0;
      double hi = 0.0;
      for (std::size_t j = 1; j < c; ++j) {
        z[j] = static_cast<double>(p_.freqs()[j - 1]) * log_r_[i] - y[j - 1];
        hi = std::max(hi, z[j]);
      }
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += std::exp(z[j] - hi);
      out.lse[i] = hi + std::log(s);
      for (std::size_t j = 0; j < c; ++j)
        out.prob[i * c + j] = std::exp(z[j] - out.lse[i]);
    }
  }

  // Objective at a dual point made feasible by raising lambda.
  double certified_value(const std::vector<double>& y) const {
    DualEval e;
    eval(y, e);
    double lambda = y[k()];
    for (std::size_t i = 0; i < levels(); ++i) lambda = std::max(lambda, e.lse[i] / r_[i]);
    double v = lambda;
    for (std::size_t j = 0; j < k(); ++j) v += static_cast<double>(p_.counts()[j]) * y[j];
    return v;
  }

 private:
  const Profile& p_;
  std::vector<double> r_;
  std::vector<double> log_r_;
};

struct IpmResult {
  std::vector<double> y;
  std::vector<double> mu;
  DualEval at;
  std::size_t iterations = 0;
};

IpmResult solve_dual(const DualProblem& dp, std::size_t max_iter) {
  const std::size_t l = dp.levels(), kk = dp.k(), c = kk + 1, dim = kk + 1;
  std::vector<double> b(dim, 1.0);  // (phi_1..phi_k, 1)
  double b_max = 1.0;
  for (std::size_t j = 0; j < kk; ++j) b_max = std::max(b_max, b[j] = dp.phi(j));
  IpmResult res;
  res.y.assign(dim, 0.0);
  dp.eval(res.y, res.at);
  double lambda = 0.0;
  for (std::size_t i = 0; i < l; ++i) lambda = std::max(lambda, res.at.lse[i] / dp.r(i));
  lambda += std::max(1.0, static_cast<double>(dp.n()));
  res.y[kk] = lambda;
  std::vector<double> s(l), mu(l);
  double mass = 0.0;
  for (std::size_t i = 0; i < l; ++i) {
    s[i] = lambda * dp.r(i) - res.at.lse[i];
    mass += dp.r(i) / s[i];
  }
  // Centred start (mu_i s_i equal) that meets the mass equation exactly.
  for (std::size_t i = 0; i < l; ++i) mu[i] = 1.0 / (mass * s[i]);

  auto residuals = [&](const std::vector<double>& y, const std::vector<double>& sv,
                       const std::vector<double>& mv, DualEval& e, std::vector<double>& rd,
                       std::vector<double>& rc) {
    dp.eval(y, e);
    rd.assign(dim, 0.0);
    for (std::size_t j = 0; j < kk; ++j) rd[j] = b[j];
    rd[kk] = 1.0;
    for (std::size_t i = 0; i < l; ++i) {
      for (std::size_t j = 0; j < kk; ++j) rd[j] -= mv[i] * e.prob[i * c + j + 1];
      rd[kk] -= mv[i] * dp.r(i);
    }
    rc.resize(l);
    for (std::size_t i = 0; i < l; ++i) rc[i] = e.lse[i] - y[kk] * dp.r(i) + sv[i];
  };
  auto norm2 = [](const std::vector<double>& v) {
    double s2 = 0.0;
    for (double x : v) s2 += x * x;
    return s2;
  };

  std::vector<double> rd, rc;
  double best_merit = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (; res.iterations < max_iter; ++res.iterations) {
    residuals(res.y, s, mu, res.at, rd, rc);
    double tau = 0.0;
    for (std::size_t i = 0; i < l; ++i) tau += mu[i] * s[i];
    tau /= static_cast<double>(l);
    double rd_max = 0.0, rc_max = 0.0;
    for (double v : rd) rd_max = std::max(rd_max, std::abs(v));
    for (double v : rc) rc_max = std::max(rc_max, std::abs(v));
    // rc and tau cannot drop much below the rounding error of lambda r_i.
    const double scale = std::max(1.0, std::abs(res.y[kk]));
    if (rd_max <= 1e-12 * b_max && rc_max <= 1e-14 * scale && tau <= 1e-15 * scale) break;
    const double merit_now = norm2(rd) + norm2(rc) + tau * tau;
    if (merit_now < 0.25 * best_merit) {
      best_merit = merit_now;
      stalled = 0;
    } else if (++stalled >= 10 && rd_max <= 1e-9 * b_max) {
      break;
    }

    double sigma = (rd_max < 1e-6 && rc_max < 1e-6) ? 0.01 : 0.2;
    // Complementarity far ahead of feasibility pins s and mu to the boundary
    // and blocks every step; recentre instead of pushing tau down further.
    if (tau < 1e-3 * rd_max / b_max) sigma = 1.0;
    std::vector<double> rmu(l);
    for (std::size_t i = 0; i < l; ++i) rmu[i] = mu[i] * s[i] - sigma * tau;

    std::vector<double> m(dim * dim, 0.0), rhs(dim, 0.0);
    for (std::size_t t = 0; t < dim; ++t) rhs[t] = -rd[t];
    std::vector<double> a(dim);
    for (std::size_t i = 0; i < l; ++i) {
      const double* p = &res.at.prob[i * c + 1];
      for (std::size_t j = 0; j < kk; ++j) {
        // p_j (1 - p_j) with 1 - p_j summed from the other columns, which
        // keeps its accuracy when p_j is close to 1.
        double rest = res.at.prob[i * c];
        for (std::size_t jj = 0; jj < kk; ++jj) {
          if (jj == j) continue;
          rest += p[jj];
          m[j * dim + jj] -= mu[i] * p[j] * p[jj];
        }
        m[j * dim + j] += mu[i] * p[j] * rest;
      }
      for (std::size_t j = 0; j < kk; ++j) a[j] = p[j];
      a[kk] = dp.r(i);
      const double w = mu[i] / s[i];
      const double f = (-rmu[i] + mu[i] * rc[i]) / s[i];
      for (std::size_t u = 0; u < dim; ++u) {
        rhs[u] += a[u] * f;
        for (std::size_t v = 0; v < dim; ++v) m[u * dim + v] += w * a[u] * a[v];
      }
    }
    std::vector<double> dy = rhs;
    {
      std::vector<double> mm = m;
      if (!detail::solve_spd(mm, dy, dim)) {
        double diag = 0.0;
        for (std::size_t u = 0; u < dim; ++u) diag = std::max(diag, m[u * dim + u]);
        mm = m;
        for (std::size_t u = 0; u < dim; ++u) mm[u * dim + u] += 1e-12 * (1.0 + diag);
        dy = rhs;
        if (!detail::solve_dense(mm, dy, dim, 0.0)) break;
      }
    }
    std::vector<double> ds(l), dmu(l);
    for (std::size_t i = 0; i < l; ++i) {
      double ad = dp.r(i) * dy[kk];
      for (std::size_t j = 0; j < kk; ++j) ad += res.at.prob[i * c + j + 1] * dy[j];
      ds[i] = -rc[i] + ad;
      dmu[i] = (-rmu[i] - mu[i] * ds[i]) / s[i];
    }
    double step = 1.0;
    for (std::size_t i = 0; i < l; ++i) {
      if (ds[i] < 0.0) step = std::min(step, -0.995 * s[i] / ds[i]);
      if (dmu[i] < 0.0) step = std::min(step, -0.995 * mu[i] / dmu[i]);
    }
    // alpha enters through exponentials; a column whose weight has all but
    // vanished gives a near-singular system and a huge, useless step.
    for (std::size_t j = 0; j < kk; ++j)
      if (std::abs(dy[j]) * step > 30.0) step = 30.0 / std::abs(dy[j]);
    const double merit0 = norm2(rd) + norm2(rc) + norm2(rmu);
    std::vector<double> y2(dim), s2(l), mu2(l), rd2, rc2, rmu2(l);
    DualEval e2;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      for (std::size_t u = 0; u < dim; ++u) y2[u] = res.y[u] + step * dy[u];
      for (std::size_t i = 0; i < l; ++i) {
        s2[i] = s[i] + step * ds[i];
        mu2[i] = mu[i] + step * dmu[i];
      }
      residuals(y2, s2, mu2, e2, rd2, rc2);
      for (std::size_t i = 0; i < l; ++i) rmu2[i] = mu2[i] * s2[i] - sigma * tau;
      const double merit = norm2(rd2) + norm2(rc2) + norm2(rmu2);
      if (merit <= (1.0 - 1e-4 * step) * merit0 || merit == 0.0) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    res.y = y2;
    s = s2;
    mu = mu2;
  }
  dp.eval(res.y, res.at);
  res.mu = mu;
  return res;
}

// Allocation with every column at the cheapest level: always feasible on a
// grid whose smallest value is at most 1/(2 n^2).
AllocationMatrix cheapest_allocation(const Profile& p, const std::vector<double>& levels) {
  AllocationMatrix s(levels, p);
  const std::size_t low = static_cast<std::size_t>(
      std::min_element(levels.begin(), levels.end()) - levels.begin());
  for (std::size_t j = 1; j < s.cols(); ++j) s.at(low, j) = s.target(j);
  return s;
}

// Strictly positive feasible point: a blend of the cheapest allocation with
// every column spread evenly over all levels, plus a little unseen mass.
AllocationMatrix interior_allocation(const Profile& p, const std::vector<double>& levels) {
  const AllocationMatrix cheap = cheapest_allocation(p, levels);
  AllocationMatrix spread(levels, p);
  const double l = static_cast<double>(levels.size());
  for (std::size_t i = 0; i < spread.rows(); ++i) {
    for (std::size_t j = 1; j < spread.cols(); ++j) spread.at(i, j) = spread.target(j) / l;
    spread.at(i, 0) = 1.0 / l;
  }
  const double mc = cheap.mass(), ms = spread.mass();
  const double theta = ms > mc ? std::min(1.0, 0.5 * (1.0 - mc) / (ms - mc)) : 1.0;
  std::vector<double> e(cheap.entries().size());
  for (std::size_t t = 0; t < e.size(); ++t)
    e[t] = theta * spread.entries()[t] + (1.0 - theta) * cheap.entries()[t];
  return AllocationMatrix(levels, p, std::move(e));
}

}  // namespace

ConvexSolution maximize_log_g(const Profile& p, const DiscretizationSet& r,
                              const ConvexOptions& opt) {
  if (p.empty()) throw InvalidArgument("maximize_log_g: empty profile");
  if (r.size() == 0) throw InvalidArgument("maximize_log_g: empty grid");
  if (!(opt.tol > 0.0)) throw InvalidArgument("maximize_log_g: tol must be positive");

  const std::size_t c = p.k() + 1;
  ConvexSolution out;
  AllocationMatrix start = cheapest_allocation(p, r.values);
  if (!start.is_fractionally_feasible(0.0))
    throw InvalidArgument("maximize_log_g: no feasible allocation on this grid");
  double dual_bound = std::numeric_limits<double>::infinity();

  if (opt.method == ConvexMethod::interior_point) {
    const DualProblem dp(p, r);
    const IpmResult ipm = solve_dual(dp, std::min<std::size_t>(opt.max_iter, 5000));
    out.iterations += ipm.iterations;
    dual_bound = dp.certified_value(ipm.y);

    std::vector<double> e(r.size() * c);
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) e[i * c + j] = ipm.mu[i] * ipm.at.prob[i * c + j];
    AllocationMatrix rec(r.values, p, std::move(e));
    for (std::size_t j = 1; j < c; ++j) {
      const double cs = rec.col_sum(j);
      if (cs > 0.0)
        for (std::size_t i = 0; i < rec.rows(); ++i) rec.at(i, j) *= rec.target(j) / cs;
    }
    const double excess = rec.mass() - 1.0;
    if (excess > 0.0) {
      double unseen = 0.0;
      for (std::size_t i = 0; i < rec.rows(); ++i) unseen += r[i] * rec(i, 0);
      const double f = unseen > 0.0 ? std::max(0.0, 1.0 - excess / unseen) : 0.0;
      for (std::size_t i = 0; i < rec.rows(); ++i) rec.at(i, 0) *= f;
    }
    // Whatever excess is left (column 0 too small to absorb it, or rounding)
    // goes by blending in a sliver of the cheapest allocation, which keeps
    // the column sums.
    for (int fix = 0; fix < 8 && rec.mass() > 1.0; ++fix) {
      const double mr = rec.mass(), mc = start.mass();
      const double theta = std::min(1.0, (mr - 1.0) / (mr - mc) * (1.0 + 1e-9) + 1e-16);
      for (std::size_t i = 0; i < rec.rows(); ++i)
        for (std::size_t j = 0; j < c; ++j)
          rec.at(i, j) = (1.0 - theta) * rec(i, j) + theta * start(i, j);
    }
    if (rec.is_fractionally_feasible(1e-12) && rec.mass() <= 1.0 &&
        log_g(rec) >= log_g(start))
      start = std::move(rec);
  } else {
    AllocationMatrix inner = interior_allocation(p, r.values);
    if (inner.is_fractionally_feasible(1e-12) && inner.mass() <= 1.0) start = std::move(inner);
  }

  const double start_value = log_g(start);
  out.s = start;
  out.log_g = start_value;
  // A feasible point's value is itself a lower bound on the maximum.
  out.upper_bound = std::max(dual_bound, start_value);
  out.gap = out.upper_bound - start_value;
  out.trace.push_back(start_value);
  if (out.gap <= std::max(opt.tol, evaluation_floor(start))) {
    out.converged = true;
    return out;
  }

  const AllocationMatrix& shape = start;
  detail::CgOptions cg_opt;
  cg_opt.tol = opt.tol;
  cg_opt.max_iter = opt.max_iter > out.iterations ? opt.max_iter - out.iterations : 0;
  const LinearOracle oracle(shape);
  auto f = [&](const std::vector<double>& x) {
    return log_g(AllocationMatrix(shape.levels(), p, x));
  };
  auto grad = [&](const std::vector<double>& x, std::vector<double>& g) {
    gradient_into(shape, x, g);
  };
  detail::CgResult cg = detail::away_step_cg(start.entries(), f, grad, oracle, cg_opt);
  out.iterations += cg.iterations;
  out.s = AllocationMatrix(shape.levels(), p, std::move(cg.x));
  out.log_g = cg.value;
  out.trace.insert(out.trace.end(), cg.trace.begin() + 1, cg.trace.end());
  out.upper_bound = std::max(std::min(dual_bound, cg.value + cg.gap), out.log_g);
  out.gap = out.upper_bound - out.log_g;
  out.converged = out.gap <= std::max(opt.tol, evaluation_floor(out.s));
  return out;
}

PseudoDistribution pseudo_distribution_of(const AllocationMatrix& s) {
  std::vector<double> probs;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double rs = s.row_sum(i);
    const double count = std::round(rs);
    if (std::abs(rs - count) > 1e-9) {
      throw InvalidArgument("pseudo_distribution_of: row " + std::to_string(i) +
                            " sums to the non-integer " + std::to_string(rs));
    }
    probs.insert(probs.end(), static_cast<std::size_t>(count), s.levels()[i]);
  }
  return PseudoDistribution(std::move(probs));
}

}  // namespace pmlperm
