#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "pmlperm/convex.hpp"

namespace pmlperm {

/// Final row sums within this distance (relative to max(1, sum)) of an
/// integer are moved onto it.
inline constexpr double kIntegralityTol = 1e-9;

struct StructuredRounding {
  std::size_t size = 0;        // length of x
  std::vector<double> z;       // size x size, row-major, original indices
  std::vector<std::size_t> s;  // the a rows of z carrying a unit each

  double operator()(std::size_t i, std::size_t j) const noexcept {
    return z[i * size + j];
  }
  double row_sum(std::size_t i) const noexcept;
  double col_sum(std::size_t j) const noexcept;
};

/// Splits fractional masses x_j in [0, 1) with integral total a into a unit
/// rows. Indices are processed in order of non-increasing w (ties by index),
/// so mass only moves to rows of weight at least its own. Zero entries are
/// skipped and a floating residual in sum x is absorbed by the smallest
/// entry when positive, the largest when negative. Throws InvalidArgument when an entry is outside [0, 1), the
/// lengths differ, or |sum x - a| > 1e-9.
StructuredRounding structured_rounding(const std::vector<double>& x,
                                       const std::vector<double>& w,
                                       std::size_t a);

/// Keeps c in the first t rows and appends one row per column j, placed on
/// the diagonal entry j, that carries the column's residual sum_i (b - c)_ij
/// at the residual-weighted mean level. A column without residual gets a
/// zero row at level 0. b and c must share levels and profile, and c <= b
/// entrywise (up to 1e-12 relative); otherwise InvalidArgument.
AllocationMatrix create_new_probability_values(const AllocationMatrix& b,
                                               const AllocationMatrix& c);

struct RoundingTrace {
  AllocationMatrix input;   // argument with its unseen column floored
  AllocationMatrix stage1;  // t + (k+1) rows
  AllocationMatrix stage2;  // t + 2(k+1) rows
  AllocationMatrix final;   // integral rows, levels divided by (1 + gamma)
  double gamma = 0.0;
  std::array<double, 3> log_g_drops{};  // per stage, the first includes the floor
  double input_log_g = 0.0;             // log_g of the argument
  double final_log_g = 0.0;
  double delta = 0.0;                   // max(total entries, t k), at least 2
  double loss_scale = 0.0;              // (1/gamma + t + k + gamma n) ln delta
  double measured_constant = 0.0;       // total drop / loss_scale

  double total_drop() const noexcept {
    return log_g_drops[0] + log_g_drops[1] + log_g_drops[2];
  }
};

/// Rounds a fractional allocation to one with integral row sums:
///  0. scales the unseen column so its sum is an integer;
///  1. floors rows above gamma entrywise, scales rows at or below gamma per
///     column so the low block's column sums are floored, and moves the
///     removed mass into new rows;
///  2. scales every row at or below gamma so its sum is floored, moving the
///     removed mass into a second set of new rows, one per column;
///  3. distributes the fractional diagonal parts of those rows with
///     structured_rounding and divides every level by (1 + gamma).
/// Throws InvalidArgument when s is not fractionally feasible (1e-8) or
/// gamma is outside (0, 1).
RoundingTrace round_allocation(const AllocationMatrix& s, double gamma);

}  // namespace pmlperm
