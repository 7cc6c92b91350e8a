#include "pmlperm/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pmlperm/detail/kahan.hpp"
#include "pmlperm/errors.hpp"

namespace pmlperm {

namespace {

// Relative size of the rounding noise a floor should see through.
constexpr double kNoise = 1e-12;

// floor(x), except that x within rounding noise below an integer is that
// integer. Without it 2.9999999999999996 would shed a whole unit.
double floor_noise(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= kNoise * std::max(1.0, std::abs(x)) ? r : std::floor(x);
}

bool near_integer(double x, double r) {
  return std::abs(x - r) <= kIntegralityTol * std::max(1.0, std::abs(x));
}

void check_same_shape(const AllocationMatrix& b, const AllocationMatrix& c) {
  if (b.rows() != c.rows() || b.cols() != c.cols())
    throw InvalidArgument("create_new_probability_values: b and c differ in shape");
  if (b.levels() != c.levels() || !(b.profile() == c.profile()))
    throw InvalidArgument("create_new_probability_values: b and c differ in levels or profile");
}

void check_feasible(const AllocationMatrix& s) {
  constexpr double tol = 1e-8;
  for (std::size_t j = 1; j < s.cols(); ++j) {
    const double phi = s.target(j);
    if (std::abs(s.col_sum(j) - phi) > tol * std::max(1.0, phi))
      throw InvalidArgument("round_allocation: column " + std::to_string(j) +
                            " does not sum to its profile count");
  }
  if (s.mass() > 1.0 + tol)
    throw InvalidArgument("round_allocation: probability mass exceeds 1");
}

// Moves a row sum lying within tolerance of an integer onto it through the
// row's largest entry.
void snap_row(AllocationMatrix& s, std::size_t i) {
  const double r = s.row_sum(i);
  const double target = std::round(r);
  if (r == target || !near_integer(r, target)) return;
  std::size_t big = 0;
  for (std::size_t j = 1; j < s.cols(); ++j)
    if (s(i, j) > s(i, big)) big = j;
  s.at(i, big) = std::max(0.0, s(i, big) + (target - r));
}

}  // namespace

double StructuredRounding::row_sum(std::size_t i) const noexcept {
  detail::KahanSum<double> acc;
  for (std::size_t j = 0; j < size; ++j) acc += (*this)(i, j);
  return acc.value();
}

double StructuredRounding::col_sum(std::size_t j) const noexcept {
  detail::KahanSum<double> acc;
  for (std::size_t i = 0; i < size; ++i) acc += (*this)(i, j);
  return acc.value();
}

StructuredRounding structured_rounding(const std::vector<double>& x,
                                       const std::vector<double>& w,
                                       std::size_t a) {
  if (x.size() != w.size())
    throw InvalidArgument("structured_rounding: x and w differ in length");
  for (double v : x)
    if (!(v >= 0.0 && v < 1.0))
      throw InvalidArgument("structured_rounding: entries of x must lie in [0, 1)");
  detail::KahanSum<double> total;
  for (double v : x) total += v;
  const double ad = static_cast<double>(a);
  if (std::abs(total.value() - ad) > kIntegralityTol * std::max(1.0, ad))
    throw InvalidArgument("structured_rounding: sum of x is not a");

  StructuredRounding out;
  out.size = x.size();
  out.z.assign(x.size() * x.size(), 0.0);
  if (a == 0) return out;

  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] > 0.0) order.push_back(j);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t p, std::size_t q) { return w[p] > w[q]; });

  const std::size_t b = order.size();
  std::vector<double> xs(b);
  for (std::size_t p = 0; p < b; ++p) xs[p] = x[order[p]];
  // A positive residual goes to the smallest entry and a negative one to the
  // largest, so every entry stays inside (0, 1).
  const double residual = ad - total.value();
  const auto fix = residual > 0.0 ? std::min_element(xs.begin(), xs.end())
                                  : std::max_element(xs.begin(), xs.end());
  *fix += residual;

  std::vector<double> cum(b);
  detail::KahanSum<double> run;
  for (std::size_t p = 0; p < b; ++p) {
    run += xs[p];
    cum[p] = run.value();
  }

  // sp[i] is the first position whose prefix sum exceeds i; sp[a] closes
  // the last unit at the final position.
  std::vector<std::size_t> sp(a + 1, b - 1);
  std::size_t p = 0;
  for (std::size_t i = 0; i < a; ++i) {
    while (p < b && !(cum[p] > static_cast<double>(i))) ++p;
    sp[i] = std::min(p, b - 1);
  }

  std::vector<double> zs(b * b, 0.0);
  for (std::size_t i = 0; i < a; ++i) {
    const std::size_t row = sp[i], next = sp[i + 1];
    double used = cum[row] - static_cast<double>(i);
    zs[row * b + row] = used;
    for (std::size_t q = row + 1; q < next; ++q) {
      zs[row * b + q] = xs[q];
      used += xs[q];
    }
    if (next > row) zs[row * b + next] = std::max(0.0, 1.0 - used);
  }

  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j)
      out.z[order[i] * out.size + order[j]] = zs[i * b + j];
  out.s.reserve(a);
  for (std::size_t i = 0; i < a; ++i) out.s.push_back(order[sp[i]]);
  return out;
}

AllocationMatrix create_new_probability_values(const AllocationMatrix& b,
                                               const AllocationMatrix& c) {
  check_same_shape(b, c);
  const std::size_t t = b.rows(), cols = b.cols();
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (c(i, j) - b(i, j) > 1e-12 * std::max(1.0, b(i, j)))
        throw InvalidArgument("create_new_probability_values: c exceeds b");

  std::vector<double> levels = b.levels();
  levels.resize(t + cols, 0.0);
  std::vector<double> entries(c.entries());
  entries.resize((t + cols) * cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    detail::KahanSum<double> res, weighted;
    for (std::size_t i = 0; i < t; ++i) {
      const double d = std::max(0.0, b(i, j) - c(i, j));
      res += d;
      weighted += d * b.levels()[i];
    }
    if (res.value() > 0.0) {
      levels[t + j] = weighted.value() / res.value();
      entries[(t + j) * cols + j] = res.value();
    }
  }
  return AllocationMatrix(std::move(levels), b.profile(), std::move(entries));
}

RoundingTrace round_allocation(const AllocationMatrix& s, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw InvalidArgument("round_allocation: gamma must lie in (0, 1)");
  check_feasible(s);

  RoundingTrace tr;
  tr.gamma = gamma;
  const std::size_t l = s.rows(), cols = s.cols(), k = cols - 1;

  // Step 0: an integral unseen column keeps the new rows integral.
  tr.input = s;
  const double c0 = s.col_sum(0);
  if (c0 > 0.0) {
    const double scale = std::min(1.0, floor_noise(c0) / c0);
    for (std::size_t i = 0; i < l; ++i) tr.input.at(i, 0) *= scale;
  }
  const AllocationMatrix& in = tr.input;

  // Step 1.
  AllocationMatrix a(in.levels(), in.profile());
  for (std::size_t j = 0; j < cols; ++j) {
    detail::KahanSum<double> low;
    for (std::size_t i = 0; i < l; ++i)
      if (in.levels()[i] <= gamma) low += in(i, j);
    const double factor =
        low.value() > 0.0 ? floor_noise(low.value()) / low.value() : 0.0;
    for (std::size_t i = 0; i < l; ++i)
      a.at(i, j) = in.levels()[i] > gamma ? floor_noise(in(i, j)) : in(i, j) * factor;
  }
  tr.stage1 = create_new_probability_values(in, a);

  // Step 2.
  const AllocationMatrix& s1 = tr.stage1;
  AllocationMatrix a1 = s1;
  for (std::size_t i = 0; i < s1.rows(); ++i) {
    if (s1.levels()[i] > gamma) continue;
    const double r = s1.row_sum(i);
    const double factor = r > 0.0 ? floor_noise(r) / r : 0.0;
    for (std::size_t j = 0; j < cols; ++j) a1.at(i, j) = s1(i, j) * factor;
  }
  tr.stage2 = create_new_probability_values(s1, a1);

  // Step 3.
  const AllocationMatrix& s2 = tr.stage2;
  const std::size_t base = l + cols;
  std::vector<double> x(cols, 0.0), w(cols, 0.0), whole(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    const double v = s2(base + j, j);
    w[j] = s2.levels()[base + j];
    whole[j] = floor_noise(v);
    x[j] = std::max(0.0, v - whole[j]);
  }
  detail::KahanSum<double> xsum;
  for (double v : x) xsum += v;
  const auto units = static_cast<std::size_t>(std::llround(xsum.value()));
  const StructuredRounding sr = structured_rounding(x, w, units);

  std::vector<double> levels(s2.levels());
  for (double& v : levels) v /= 1.0 + gamma;
  std::vector<double> entries(s2.entries());
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t jj = 0; jj < cols; ++jj)
      entries[(base + j) * cols + jj] = (j == jj ? whole[j] : 0.0) + sr(j, jj);
  tr.final = AllocationMatrix(std::move(levels), s2.profile(), std::move(entries));
  for (std::size_t i = 0; i < tr.final.rows(); ++i) snap_row(tr.final, i);

  tr.input_log_g = log_g(s);
  const double g1 = log_g(tr.stage1), g2 = log_g(tr.stage2);
  tr.final_log_g = log_g(tr.final);
  tr.log_g_drops = {tr.input_log_g - g1, g1 - g2, g2 - tr.final_log_g};

  const double n = static_cast<double>(s.profile().n());
  tr.delta = std::max({s.total(), static_cast<double>(l * k), 2.0});
  tr.loss_scale = (1.0 / gamma + static_cast<double>(l + k) + gamma * n) * std::log(tr.delta);
  tr.measured_constant = tr.total_drop() / tr.loss_scale;
  return tr;
}

}  // namespace pmlperm
