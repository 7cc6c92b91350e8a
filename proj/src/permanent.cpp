#include "pmlperm/permanent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "pmlperm/assignment.hpp"
#include "pmlperm/detail/kahan.hpp"
#include "pmlperm/errors.hpp"

namespace pmlperm {

namespace {

void require_square(const NonNegMatrix& m, const char* who) {
  if (!m.is_square()) {
    throw DimensionError(std::string(who) + ": matrix is " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
}

void require_size(const NonNegMatrix& m, std::size_t limit, const char* who) {
  if (m.rows() > limit) {
    throw SizeLimitError(std::string(who) + ": n = " + std::to_string(m.rows()) +
                         " exceeds the limit " + std::to_string(limit));
  }
}

// Ryser in long double on a matrix already checked for shape and size.
long double ryser_unchecked(const NonNegMatrix& m) {
  const std::size_t n = m.rows();
  if (n == 0) return 1.0L;

  // perm(A) = (-1)^n sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij
  std::vector<long double> row_sums(n, 0.0L);
  detail::KahanSum<long double> total;
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::uint64_t gray = 0;
  for (std::uint64_t step = 1; step < subsets; ++step) {
    const auto col = static_cast<std::size_t>(std::countr_zero(step));
    const std::uint64_t bit = std::uint64_t{1} << col;
    gray ^= bit;
    const long double sign_in = (gray & bit) ? 1.0L : -1.0L;
    for (std::size_t i = 0; i < n; ++i) row_sums[i] += sign_in * m(i, col);

    long double prod = 1.0L;
    for (std::size_t i = 0; i < n && prod != 0.0L; ++i) prod *= row_sums[i];
    const bool odd = (std::popcount(gray) & 1) != 0;
    total.add(odd ? -prod : prod);
  }
  long double result = total.value();
  if (n % 2 == 1) result = -result;
  return result;
}

}  // namespace

double permanent_naive(const NonNegMatrix& m) {
  require_square(m, "permanent_naive");
  require_size(m, kNaivePermanentLimit, "permanent_naive");
  const std::size_t n = m.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  detail::KahanSum<long double> total;
  do {
    long double prod = 1.0L;
    for (std::size_t i = 0; i < n && prod != 0.0L; ++i) prod *= m(i, perm[i]);
    total.add(prod);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(total.value());
}

double permanent_ryser(const NonNegMatrix& m) {
  require_square(m, "permanent_ryser");
  require_size(m, kRyserPermanentLimit, "permanent_ryser");
  // Non-negative input: any negative result is cancellation noise.
  return std::max(0.0, static_cast<double>(ryser_unchecked(m)));
}

double log_permanent(const NonNegMatrix& m) {
  require_square(m, "log_permanent");
  require_size(m, kRyserPermanentLimit, "log_permanent");
  const std::size_t n = m.rows();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (n == 0) return 0.0;

  // Cells on no perfect matching contribute nothing; dropping them gives
  // total support, so the balancing below converges.
  std::vector<char> allowed(n * n);
  for (std::size_t t = 0; t < n * n; ++t) allowed[t] = m.data()[t] > 0.0;
  const std::vector<char> core = matchable_cells(allowed, n);
  if (core.empty()) return kNegInf;

  std::vector<double> log_a(n * n, kNegInf);
  for (std::size_t t = 0; t < n * n; ++t)
    if (core[t]) log_a[t] = std::log(m.data()[t]);

  // perm(A) = perm(diag(e^u) A diag(e^v)) e^{-sum u - sum v} for any u, v.
  // Balancing towards doubly stochastic keeps Ryser's alternating sum from
  // cancelling: the balanced permanent is at least n!/n^n.
  std::vector<double> u(n, 0.0), v(n, 0.0);
  auto lse = [](auto&& term, std::size_t len) {
    double hi = kNegInf;
    for (std::size_t t = 0; t < len; ++t) hi = std::max(hi, term(t));
    double s = 0.0;
    for (std::size_t t = 0; t < len; ++t) s += std::exp(term(t) - hi);
    return hi + std::log(s);
  };
  for (int sweep = 0; sweep < 500; ++sweep) {
    for (std::size_t i = 0; i < n; ++i)
      u[i] = -lse([&](std::size_t j) { return log_a[i * n + j] + v[j]; }, n);
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = lse([&](std::size_t i) { return log_a[i * n + j] + u[i]; }, n);
      worst = std::max(worst, std::abs(std::expm1(c + v[j])));
      v[j] = -c;
    }
    if (worst < 1e-9) break;
  }
  std::vector<double> scaled(n * n, 0.0);
  double log_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) log_scale -= u[i] + v[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (core[i * n + j]) scaled[i * n + j] = std::exp(log_a[i * n + j] + u[i] + v[j]);
  const long double p = ryser_unchecked(NonNegMatrix(n, n, std::move(scaled)));
  if (!(p > 0.0L)) return kNegInf;
  return static_cast<double>(std::log(p)) + log_scale;
}

bool is_doubly_stochastic(const NonNegMatrix& m, double tol) {
  if (!m.is_square()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row_sum(i) - 1.0) > tol) return false;
    if (std::abs(m.col_sum(i) - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace pmlperm
