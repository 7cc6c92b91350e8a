#include "pmlperm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <map>

#include "pmlperm/detail/kahan.hpp"
#include "pmlperm/detail/logsum.hpp"
#include "pmlperm/errors.hpp"

namespace pmlperm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_factorial(double n) { return std::lgamma(n + 1.0); }

// Visits every non-increasing sequence of `parts` positive integers summing
// to `total`.
void for_each_partition(std::size_t total, std::size_t parts,
                        const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> cur;
  auto rec = [&](auto&& self, std::size_t left, std::size_t slots, std::size_t cap) -> void {
    if (slots == 0) {
      if (left == 0) visit(cur);
      return;
    }
    if (left < slots) return;
    const std::size_t hi = std::min(cap, left - (slots - 1));
    for (std::size_t v = hi; v >= 1; --v) {
      if (v * slots < left) break;
      cur.push_back(v);
      self(self, left - v, slots - 1, v);
      cur.pop_back();
    }
  };
  rec(rec, total, parts, total);
}

}  // namespace

PmlResult approximate_pml(const Profile& p, const PmlOptions& opt) {
  if (p.empty()) throw InvalidArgument("approximate_pml: empty profile");
  const std::size_t n = std::max<std::size_t>(p.n(), 2);
  const double eps = opt.eps.value_or(default_grid_eps(n));
  const double gamma = opt.gamma.value_or(1.0 / std::sqrt(static_cast<double>(n)));
  if (!(gamma > 0.0 && gamma < 1.0))
    throw InvalidArgument("approximate_pml: gamma must lie in (0, 1)");
  const DiscretizationSet r = build_discretization(n, eps);

  const ConvexSolution sol = maximize_log_g(p, r, opt.convex);

  PmlResult res;
  res.params = {p.n(), eps, gamma, r.size(), p.k()};
  res.solver_log_g = sol.log_g;
  res.solver_upper_bound = sol.upper_bound;
  res.solver_gap = sol.gap;
  res.converged = sol.converged;
  res.trace = round_allocation(sol.s, gamma);
  res.distribution = pseudo_distribution_of(res.trace.final.pruned()).normalized();
  try {
    res.log_profile_probability = profile_probability(res.distribution, p, opt.exact_work);
  } catch (const SizeLimitError&) {
    res.log_profile_probability = profile_probability_lower_bound(res.distribution, p);
    res.probability_exact = false;
  }
  return res;
}

double profile_probability_lower_bound(const PseudoDistribution& q, const Profile& p) {
  if (q.size() < p.distinct())
    throw DimensionError("profile_probability_lower_bound: domain smaller than the "
                         "number of observed symbols");
  std::map<double, std::size_t, std::greater<>> level_map;
  for (double v : q.probs()) ++level_map[v];
  std::size_t positive = 0;
  for (const auto& [v, c] : level_map)
    if (v > 0.0) positive += c;
  if (positive < p.distinct()) return kNegInf;

  std::vector<double> rows, log_v;
  for (const auto& [v, c] : level_map) {
    rows.push_back(static_cast<double>(c));
    log_v.push_back(v > 0.0 ? std::log(v) : kNegInf);
  }
  std::vector<double> cols{static_cast<double>(q.size() - p.distinct())};
  std::vector<double> freq{0.0};
  for (std::size_t j = 0; j < p.k(); ++j) {
    cols.push_back(static_cast<double>(p.counts()[j]));
    freq.push_back(static_cast<double>(p.freqs()[j]));
  }
  const std::size_t L = rows.size(), C = cols.size();
  std::vector<double> a(L * C);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < C; ++j)
      a[i * C + j] = freq[j] == 0.0 ? 0.0 : (std::isfinite(log_v[i]) ? freq[j] * log_v[i] : kNegInf);

  // The maximiser of sum S (a - ln S) with these margins is
  // S_ij = exp(a_ij + u_i + w_j); log-domain Sinkhorn finds u and w.
  std::vector<double> u(L, 0.0), w(C, 0.0);
  for (std::size_t j = 0; j < C; ++j)
    if (cols[j] == 0.0) w[j] = kNegInf;
  auto entry = [&](std::size_t i, std::size_t j) {
    const double e = a[i * C + j] + u[i] + w[j];
    return e == kNegInf ? 0.0 : std::exp(e);
  };
  const double total = static_cast<double>(q.size());
  for (int it = 0; it < 100000; ++it) {
    for (std::size_t i = 0; i < L; ++i) {
      double lse = kNegInf;
      for (std::size_t j = 0; j < C; ++j) lse = detail::log_add(lse, a[i * C + j] + w[j]);
      u[i] = std::log(rows[i]) - lse;
    }
    double err = 0.0;
    for (std::size_t j = 0; j < C; ++j) {
      if (cols[j] == 0.0) continue;
      double lse = kNegInf;
      for (std::size_t i = 0; i < L; ++i) lse = detail::log_add(lse, a[i * C + j] + u[i]);
      w[j] = std::log(cols[j]) - lse;
    }
    for (std::size_t i = 0; i < L; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < C; ++j) s += entry(i, j);
      err = std::max(err, std::abs(s - rows[i]));
    }
    if (err <= 1e-12 * total) break;
  }

  // The margins are met up to the tolerance above; h is evaluated on the
  // column-exact iterate, which is feasible after rescaling rows.
  detail::KahanSum<double> h;
  for (std::size_t i = 0; i < L; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < C; ++j) row += entry(i, j);
    const double scale = row > 0.0 ? rows[i] / row : 0.0;
    for (std::size_t j = 0; j < C; ++j) {
      const double s = entry(i, j) * scale;
      if (s > 0.0) h += s * (a[i * C + j] - std::log(s));
    }
    h += rows[i] * std::log(rows[i]);
  }
  double v = h.value() + log_c_phi(p) - log_factorial(cols[0]);
  for (std::size_t j = 1; j < C; ++j) v -= log_factorial(cols[j]);
  for (std::size_t j = 0; j < C; ++j)
    if (cols[j] > 0.0) v += cols[j] * std::log(cols[j]) - cols[j];
  return v;
}

OracleResult exact_pml_oracle(const Profile& p, std::size_t max_support, double grid_step) {
  if (p.empty()) throw InvalidArgument("exact_pml_oracle: empty profile");
  if (p.n() > kOracleMaxSamples)
    throw SizeLimitError("exact_pml_oracle: n = " + std::to_string(p.n()) +
                         " exceeds the guard of " + std::to_string(kOracleMaxSamples));
  if (max_support == 0) max_support = std::min(2 * p.distinct(), kOracleMaxSupport);
  if (max_support > kOracleMaxSupport)
    throw SizeLimitError("exact_pml_oracle: support " + std::to_string(max_support) +
                         " exceeds the guard of " + std::to_string(kOracleMaxSupport));
  if (max_support < p.distinct())
    throw InvalidArgument("exact_pml_oracle: support smaller than the observed symbols");
  if (!(grid_step > 0.0 && grid_step <= 1.0))
    throw InvalidArgument("exact_pml_oracle: grid_step must lie in (0, 1]");
  const double units_d = std::round(1.0 / grid_step);
  if (std::abs(units_d * grid_step - 1.0) > 1e-9)
    throw InvalidArgument("exact_pml_oracle: 1 / grid_step must be an integer");
  const auto units = static_cast<std::size_t>(units_d);

  struct Best {
    std::vector<double> q;
    double lp = kNegInf;
    std::size_t count = 0;
  };
  auto search = [&](std::size_t support) {
    Best b;
    for_each_partition(units, support, [&](const std::vector<std::size_t>& parts) {
      std::vector<double> q(parts.size());
      for (std::size_t x = 0; x < parts.size(); ++x)
        q[x] = static_cast<double>(parts[x]) / units_d;
      const double lp = profile_probability(PseudoDistribution(q), p);
      ++b.count;
      if (lp > b.lp) {
        b.lp = lp;
        b.q = std::move(q);
      }
    });
    return b;
  };

  std::vector<std::future<Best>> jobs;
  for (std::size_t s = p.distinct(); s <= std::min(max_support, units); ++s)
    jobs.push_back(std::async(std::launch::async, search, s));
  OracleResult out;
  out.grid_step = grid_step;
  out.max_support = max_support;
  out.log_probability = kNegInf;
  for (auto& j : jobs) {
    Best b = j.get();
    out.candidates += b.count;
    if (b.lp > out.log_probability) {
      out.log_probability = b.lp;
      out.distribution = PseudoDistribution(std::move(b.q));
    }
  }
  return out;
}

std::string to_string(Property which) {
  switch (which) {
    case Property::entropy: return "entropy";
    case Property::support_size: return "support_size";
    case Property::support_coverage: return "support_coverage";
    case Property::distance_to_uniformity: return "distance_to_uniformity";
  }
  return "unknown";
}

Property property_from_string(const std::string& name) {
  for (Property p : {Property::entropy, Property::support_size, Property::support_coverage,
                     Property::distance_to_uniformity})
    if (to_string(p) == name) return p;
  throw InvalidArgument("unknown property '" + name + "'");
}

PropertyEstimate estimate_property(const PseudoDistribution& q, Property which,
                                   std::size_t m) {
  PropertyEstimate e;
  e.property = which;
  detail::KahanSum<double> acc;
  switch (which) {
    case Property::entropy:
      for (double v : q.probs())
        if (v > 0.0) acc += -v * std::log(v);
      e.value = std::max(0.0, acc.value());
      break;
    case Property::support_size:
      e.value = static_cast<double>(q.support_size());
      break;
    case Property::support_coverage:
      for (double v : q.probs())
        if (v > 0.0) acc += -std::expm1(static_cast<double>(m) * std::log1p(-v));
      e.value = acc.value();
      break;
    case Property::distance_to_uniformity: {
      const double k = static_cast<double>(q.support_size());
      for (double v : q.probs())
        if (v > 0.0) acc += std::abs(v - 1.0 / k);
      e.value = acc.value();
      break;
    }
  }
  return e;
}

PropertyEstimate estimate_property(const PmlResult& res, Property which) {
  return estimate_property(res.distribution, which, res.params.n);
}

std::vector<Profile> all_profiles(std::size_t n, std::size_t max_distinct) {
  std::vector<Profile> out;
  for (std::size_t parts = 1; parts <= std::min(n, max_distinct); ++parts) {
    for_each_partition(n, parts, [&](const std::vector<std::size_t>& f) {
      std::map<std::size_t, std::size_t> counts;
      for (std::size_t m : f) ++counts[m];
      std::vector<std::size_t> freqs, cnt;
      for (const auto& [m, c] : counts) {
        freqs.push_back(m);
        cnt.push_back(c);
      }
      out.emplace_back(std::move(freqs), std::move(cnt));
    });
  }
  return out;
}

}  // namespace pmlperm
