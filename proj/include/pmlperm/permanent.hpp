#pragma once

#include <cstddef>

#include "pmlperm/matrix.hpp"

namespace pmlperm {

inline constexpr std::size_t kNaivePermanentLimit = 10;
inline constexpr std::size_t kRyserPermanentLimit = 24;

/// Sum over all n! permutations. Throws SizeLimitError for n > 10.
double permanent_naive(const NonNegMatrix& m);

/// Ryser's formula with Gray-code subset order. Throws SizeLimitError for n > 24.
double permanent_ryser(const NonNegMatrix& m);

/// Natural log of the permanent; -inf when it vanishes. Rows are rescaled by
/// their maxima before Ryser so large or tiny entries do not overflow.
double log_permanent(const NonNegMatrix& m);

/// Every row and column sum lies in [1 - tol, 1 + tol]. False for non-square.
bool is_doubly_stochastic(const NonNegMatrix& m, double tol);

}  // namespace pmlperm
