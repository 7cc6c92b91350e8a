#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pmlperm/matrix.hpp"

namespace pmlperm {

/// sum Q log(A/Q), with 0 log(./0) = 0; -inf if Q > 0 where A = 0.
double functional_u(const NonNegMatrix& a, const NonNegMatrix& q);

/// sum (1 - Q) log(1 - Q), with 0 log 0 = 0. Entries must lie in [0, 1].
double functional_v(const NonNegMatrix& q);

/// Diagonal scaling q = diag(row_scalers) * a * diag(col_scalers).
struct DoublyStochasticWitness {
  NonNegMatrix q;
  std::vector<double> row_scalers;
  std::vector<double> col_scalers;
  std::size_t iterations = 0;
  double residual = 0.0;  // max |row or column sum - 1|
};

enum class ApproxMethod { sinkhorn, scaled_sinkhorn, bethe };

std::string to_string(ApproxMethod m);

struct ApproximationReport {
  ApproxMethod method = ApproxMethod::sinkhorn;
  double log_value = 0.0;
  DoublyStochasticWitness witness;
  bool converged = false;
  std::size_t iterations = 0;
  // Sinkhorn: scaling residual. Bethe: conditional-gradient duality gap.
  double residual = 0.0;
  std::vector<double> objective_trace;  // Bethe only
};

inline constexpr double kSinkhornTol = 1e-10;
inline constexpr std::size_t kSinkhornMaxIter = 100000;
inline constexpr double kBetheTol = 1e-8;
inline constexpr std::size_t kBetheMaxIter = 10000;

/// Alternating row/column normalisation. Requires every row and column to have
/// a positive entry. Stops at max_iter with a residual above tol when the
/// matrix lacks total support; the caller sees that through the residual.
DoublyStochasticWitness sinkhorn_scale(const NonNegMatrix& a,
                                       double tol = kSinkhornTol,
                                       std::size_t max_iter = kSinkhornMaxIter);

/// log of max_Q exp(U(A, Q)) over doubly stochastic Q.
ApproximationReport sinkhorn_permanent(const NonNegMatrix& a,
                                       double tol = kSinkhornTol,
                                       std::size_t max_iter = kSinkhornMaxIter);

/// Sinkhorn value times e^{-N}: a lower bound on the permanent.
ApproximationReport scaled_sinkhorn_permanent(
    const NonNegMatrix& a, double tol = kSinkhornTol,
    std::size_t max_iter = kSinkhornMaxIter);

/// log of max_Q exp(U(A, Q) + V(Q)), maximised by away-step conditional
/// gradient from the Sinkhorn witness. `residual` is the certified gap.
ApproximationReport bethe_permanent(const NonNegMatrix& a, double tol = kBetheTol,
                                    std::size_t max_iter = kBetheMaxIter);

/// Block-diagonal matrix of k all-ones blocks of size floor(n/k), plus one
/// all-ones block for the remainder when k does not divide n.
NonNegMatrix block_ones_matrix(std::size_t n, std::size_t k);

struct DistinctColumnMatrix {
  NonNegMatrix matrix;
  std::vector<std::size_t> multiplicities;  // copies of each distinct column
};

/// n x n matrix with exactly k distinct random positive columns (entries in
/// (0, 1]) replicated with random multiplicities summing to n.
DistinctColumnMatrix k_distinct_column_matrix(std::size_t n, std::size_t k,
                                              std::uint64_t seed);

}  // namespace pmlperm
