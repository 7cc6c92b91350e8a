#include "pmlperm/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <unordered_map>
#include <utility>

#include "pmlperm/detail/kahan.hpp"
#include "pmlperm/detail/logsum.hpp"
#include "pmlperm/errors.hpp"
#include "pmlperm/permanent.hpp"

namespace pmlperm {

namespace {

double log_factorial(std::size_t n) {
  return std::lgamma(static_cast<double>(n) + 1.0);
}

}  // namespace

Profile::Profile(std::vector<std::size_t> freqs, std::vector<std::size_t> counts) {
  if (freqs.size() != counts.size())
    throw DimensionError("Profile: freqs and counts differ in length");
  std::map<std::size_t, std::size_t> merged;
  for (std::size_t j = 0; j < freqs.size(); ++j) {
    if (freqs[j] == 0) throw InvalidArgument("Profile: frequencies must be positive");
    if (counts[j] == 0) throw InvalidArgument("Profile: counts must be positive");
    merged[freqs[j]] += counts[j];
  }
  for (const auto& [m, phi] : merged) {
    freqs_.push_back(m);
    counts_.push_back(phi);
    n_ += m * phi;
    distinct_ += phi;
  }
}

PseudoDistribution::PseudoDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  detail::KahanSum<double> total;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw InvalidArgument("PseudoDistribution: entries must be finite and >= 0");
    total += p;
  }
  if (total.value() > 1.0 + 1e-12)
    throw InvalidArgument("PseudoDistribution: total mass exceeds 1");
}

double PseudoDistribution::mass() const noexcept {
  detail::KahanSum<double> total;
  for (double p : probs_) total += p;
  return total.value();
}

std::size_t PseudoDistribution::support_size() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; }));
}

PseudoDistribution PseudoDistribution::normalized() const {
  const double m = mass();
  if (!(m > 0.0)) throw InvalidArgument("PseudoDistribution: zero mass");
  std::vector<double> out(probs_);
  for (double& p : out) p /= m;
  // Re-summing can land a hair above 1; pull the largest entry back.
  detail::KahanSum<double> s;
  for (double p : out) s += p;
  if (s.value() > 1.0) {
    auto it = std::max_element(out.begin(), out.end());
    *it -= s.value() - 1.0;
  }
  return PseudoDistribution(std::move(out));
}

Profile profile_of_sequence(std::span<const std::string> seq) {
  if (seq.empty()) throw InvalidArgument("profile_of_sequence: empty sequence");
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& s : seq) ++freq[s];
  std::map<std::size_t, std::size_t> buckets;
  for (const auto& [sym, f] : freq) ++buckets[f];
  std::vector<std::size_t> freqs, counts;
  for (const auto& [m, phi] : buckets) {
    freqs.push_back(m);
    counts.push_back(phi);
  }
  return Profile(std::move(freqs), std::move(counts));
}

Profile profile_of_string(std::string_view chars) {
  Sequence seq;
  seq.reserve(chars.size());
  for (char c : chars) seq.emplace_back(1, c);
  return profile_of_sequence(seq);
}

double log_c_phi(const Profile& p) {
  double v = log_factorial(p.n());
  for (std::size_t j = 0; j < p.k(); ++j)
    v -= static_cast<double>(p.counts()[j]) * log_factorial(p.freqs()[j]);
  return v;
}

NonNegMatrix profile_probability_matrix(const PseudoDistribution& q,
                                        const Profile& p, std::size_t phi0) {
  const std::size_t n = phi0 + p.distinct();
  if (q.size() != n) {
    throw DimensionError("profile_probability_matrix: domain has " +
                         std::to_string(q.size()) + " symbols, profile needs " +
                         std::to_string(n));
  }
  std::vector<std::size_t> col_freq;
  col_freq.reserve(n);
  col_freq.insert(col_freq.end(), phi0, 0);
  for (std::size_t j = 0; j < p.k(); ++j)
    col_freq.insert(col_freq.end(), p.counts()[j], p.freqs()[j]);

  std::vector<double> data(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      data[x * n + y] = col_freq[y] == 0
                            ? 1.0
                            : std::pow(q[x], static_cast<double>(col_freq[y]));
  return NonNegMatrix(n, n, std::move(data));
}

double profile_probability_exact(const PseudoDistribution& q, const Profile& p,
                                 std::size_t phi0) {
  const NonNegMatrix a = profile_probability_matrix(q, p, phi0);
  double v = log_c_phi(p) - log_factorial(phi0);
  for (std::size_t phi : p.counts()) v -= log_factorial(phi);
  return v + log_permanent(a);
}

double profile_probability_bruteforce(const PseudoDistribution& q,
                                      const Profile& p) {
  const std::size_t n = p.n();
  const std::size_t d = q.size();
  if (n > kBruteforceMaxSamples || d > kBruteforceMaxDomain) {
    throw SizeLimitError("profile_probability_bruteforce: n = " + std::to_string(n) +
                         ", |D| = " + std::to_string(d) + " exceeds the guard");
  }
  if (n == 0 || d == 0) return -std::numeric_limits<double>::infinity();

  std::vector<std::size_t> target;
  for (std::size_t j = 0; j < p.k(); ++j)
    target.insert(target.end(), p.counts()[j], p.freqs()[j]);

  std::vector<std::size_t> seq(n, 0), hist(d), sorted;
  detail::KahanSum<long double> total;
  for (;;) {
    std::fill(hist.begin(), hist.end(), 0);
    for (std::size_t s : seq) ++hist[s];
    sorted.clear();
    for (std::size_t c : hist)
      if (c > 0) sorted.push_back(c);
    std::sort(sorted.begin(), sorted.end());
    if (sorted == target) {
      long double prob = 1.0L;
      for (std::size_t s : seq) prob *= q[s];
      total += prob;
    }
    std::size_t pos = 0;
    while (pos < n && ++seq[pos] == d) seq[pos++] = 0;
    if (pos == n) break;
  }
  const long double v = total.value();
  return v > 0.0L ? static_cast<double>(std::log(v))
                  : -std::numeric_limits<double>::infinity();
}

double profile_probability(const PseudoDistribution& q, const Profile& p) {
  return profile_probability(q, p, std::numeric_limits<std::size_t>::max());
}

double profile_probability(const PseudoDistribution& q, const Profile& p,
                           std::size_t max_work) {
  if (q.size() < p.distinct()) {
    throw DimensionError("profile_probability: domain has " + std::to_string(q.size()) +
                         " symbols but the profile observed " +
                         std::to_string(p.distinct()));
  }
  // Levels: distinct probability values with their symbol counts.
  std::map<double, std::size_t, std::greater<>> level_map;
  for (double v : q.probs()) ++level_map[v];
  std::vector<double> log_r;
  std::vector<std::uint32_t> cap;
  double base = log_c_phi(p);
  for (const auto& [v, c] : level_map) {
    log_r.push_back(v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity());
    cap.push_back(static_cast<std::uint32_t>(c));
    base += log_factorial(c);
  }
  const std::size_t levels = log_r.size();

  // perm(A) / prod_j phi_j! = prod_i c_i! * sum_T prod_ij r_i^{m_j T_ij} / T_ij!
  // over tables T with row sums c_i and column sums phi_j. Columns are
  // processed one at a time; the state is the capacity left in each level.
  using State = std::vector<std::uint32_t>;
  std::map<State, double> cur{{cap, 0.0}};
  std::size_t work = 0;
  for (std::size_t j = 0; j < p.k(); ++j) {
    const double m = static_cast<double>(p.freqs()[j]);
    const auto phi = static_cast<std::uint32_t>(p.counts()[j]);
    std::map<State, double> next;
    for (const auto& [state, lw] : cur) {
      State left = state;
      // Depth-first over splits of phi among the levels.
      auto rec = [&](auto&& self, std::size_t i, std::uint32_t remaining,
                     double acc) -> void {
        if (++work > max_work)
          throw SizeLimitError("profile_probability: table enumeration exceeds " +
                               std::to_string(max_work) + " steps");
        if (i == levels) {
          if (remaining == 0) {
            auto [it, fresh] = next.try_emplace(left, acc);
            if (!fresh) it->second = detail::log_add(it->second, acc);
          }
          return;
        }
        std::uint32_t room = 0;
        for (std::size_t t = i; t < levels; ++t)
          if (std::isfinite(log_r[t])) room += left[t];
        if (room < remaining) return;
        const std::uint32_t hi = std::min(remaining, left[i]);
        for (std::uint32_t t = 0; t <= hi; ++t) {
          if (t > 0 && !std::isfinite(log_r[i])) break;
          const double term =
              t == 0 ? 0.0 : t * m * log_r[i] - log_factorial(t);
          left[i] -= t;
          self(self, i + 1, remaining - t, acc + term);
          left[i] += t;
        }
      };
      rec(rec, 0, phi, lw);
    }
    cur = std::move(next);
  }
  // Whatever capacity is left is filled by the unseen symbols (column 0).
  double total = -std::numeric_limits<double>::infinity();
  for (const auto& [state, lw] : cur) {
    double v = lw;
    for (std::uint32_t c : state) v -= log_factorial(c);
    total = detail::log_add(total, v);
  }
  return base + total;
}

std::string symbol_name(std::size_t index) {
  std::string out;
  ++index;
  while (index > 0) {
    --index;
    out.insert(out.begin(), static_cast<char>('a' + index % 26));
    index /= 26;
  }
  return out;
}

Sequence sample_sequence(const PseudoDistribution& q, std::size_t n,
                         std::uint64_t seed) {
  if (std::abs(q.mass() - 1.0) > 1e-9)
    throw InvalidArgument("sample_sequence: distribution does not sum to 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> draw(q.probs().begin(), q.probs().end());
  Sequence out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(symbol_name(draw(rng)));
  return out;
}

}  // namespace pmlperm
