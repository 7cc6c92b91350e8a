#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pmlperm/profile.hpp"

namespace pmlperm {

/// Geometric probability grid r_i = (1 + eps)^{1-i}, i = 1..l, truncated at
/// the first value <= 1/(2 n^2).
struct DiscretizationSet {
  std::vector<double> values;  // strictly decreasing, values[0] == 1
  double eps = 0.0;
  std::size_t n = 0;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const noexcept { return values[i]; }
};

/// ln(n) / sqrt(n).
double default_grid_eps(std::size_t n);

/// Throws InvalidArgument for n < 2 or eps outside (0, 1].
DiscretizationSet build_discretization(std::size_t n);
DiscretizationSet build_discretization(std::size_t n, double eps);

/// Rounds every positive probability down to the nearest grid value. A value
/// within relative 1e-12 above a grid point maps to that point.
PseudoDistribution discretize(const PseudoDistribution& p, const DiscretizationSet& r);

/// Non-negative l x (k+1) matrix: row i is the probability level r_i, column
/// 0 the unseen frequency m_0 = 0, column j >= 1 the profile frequency m_j.
class AllocationMatrix {
 public:
  AllocationMatrix() = default;
  AllocationMatrix(std::vector<double> levels, Profile profile);
  AllocationMatrix(std::vector<double> levels, Profile profile,
                   std::vector<double> entries);

  std::size_t rows() const noexcept { return levels_.size(); }
  std::size_t cols() const noexcept { return profile_.k() + 1; }
  const std::vector<double>& levels() const noexcept { return levels_; }
  const Profile& profile() const noexcept { return profile_; }
  const std::vector<double>& entries() const noexcept { return entries_; }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    return entries_[i * cols() + j];
  }
  double& at(std::size_t i, std::size_t j) noexcept { return entries_[i * cols() + j]; }

  /// Frequency of column j: 0 for the unseen column, m_j otherwise.
  std::size_t freq(std::size_t j) const noexcept {
    return j == 0 ? 0 : profile_.freqs()[j - 1];
  }
  /// Required column sum phi_j for j >= 1.
  double target(std::size_t j) const noexcept {
    return static_cast<double>(profile_.counts()[j - 1]);
  }

  double row_sum(std::size_t i) const noexcept;
  double col_sum(std::size_t j) const noexcept;
  /// sum_i r_i * row_sum(i).
  double mass() const noexcept;
  double total() const noexcept;

  /// Column sums equal phi_j (j >= 1) and the mass is at most 1, within tol.
  bool is_fractionally_feasible(double tol = 1e-9) const;
  /// Additionally every row sum is within tol of a non-negative integer.
  bool is_integral(double tol = 1e-9) const;

  /// Removes rows whose sum is zero.
  AllocationMatrix pruned() const;

 private:
  std::vector<double> levels_;
  Profile profile_;
  std::vector<double> entries_;
};

/// sum_ij S_ij (m_j ln r_i - ln S_ij) + sum_i R_i ln R_i, R_i the row sums,
/// with 0 ln 0 = 0 and r^0 = 1.
double log_g(const AllocationMatrix& s);

/// log_g plus sum_{j=0..k} (phi_j ln phi_j - phi_j), phi_j the column sums.
double log_h(const AllocationMatrix& s);

/// G_ij = m_j ln r_i + ln(R_i / S_ij), entries clamped to 1e-300 inside the
/// logarithm. On an empty row every entry gets ln sum_j r_i^{m_j}, the
/// largest directional rate there, so <G, Y - S> still bounds the increase.
std::vector<double> log_g_gradient(const AllocationMatrix& s);

enum class ConvexMethod { interior_point, conditional_gradient };

struct ConvexOptions {
  double tol = 1e-8;
  std::size_t max_iter = 100000;
  ConvexMethod method = ConvexMethod::interior_point;
};

struct ConvexSolution {
  AllocationMatrix s;
  double log_g = 0.0;
  double gap = 0.0;  // certified upper bound on (max log_g - log_g)
  double upper_bound = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // log_g of every feasible iterate
};

/// Maximises log_g over the fractional set: column sums phi_j for j >= 1 and
/// sum_i r_i R_i <= 1. The default method solves the dual
///   min lambda + sum_j phi_j alpha_j
///   s.t. ln(1 + sum_j r_i^{m_j} e^{-alpha_j}) <= lambda r_i  for every level
/// by a primal-dual interior-point method, recovers S, and finishes with
/// conditional-gradient steps until the duality gap is at most tol.
ConvexSolution maximize_log_g(const Profile& p, const DiscretizationSet& r,
                              const ConvexOptions& opt = {});

/// Pseudo-distribution with round(R_i) symbols at probability r_i. Throws
/// InvalidArgument when a row sum is further than 1e-9 from an integer.
PseudoDistribution pseudo_distribution_of(const AllocationMatrix& s);

}  // namespace pmlperm
