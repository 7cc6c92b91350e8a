#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pmlperm/convex.hpp"
#include "pmlperm/profile.hpp"
#include "pmlperm/rounding.hpp"

namespace pmlperm {

/// Step budget for the exact grouped profile probability inside
/// approximate_pml; beyond it the certified lower bound is reported.
inline constexpr std::size_t kExactProbabilityWork = 20'000'000;

struct PmlOptions {
  std::optional<double> eps;    // grid ratio, default ln n / sqrt n
  std::optional<double> gamma;  // rounding threshold, default 1 / sqrt n
  ConvexOptions convex;
  std::size_t exact_work = kExactProbabilityWork;
};

struct PmlParams {
  std::size_t n = 0;  // sample size; the grid is built for max(n, 2)
  double eps = 0.0;
  double gamma = 0.0;
  std::size_t levels = 0;  // grid size l
  std::size_t k = 0;
};

struct PmlResult {
  PseudoDistribution distribution;  // sums to 1
  double log_profile_probability = 0.0;
  bool probability_exact = true;    // false: a certified lower bound
  RoundingTrace trace;
  double solver_log_g = 0.0;
  double solver_upper_bound = 0.0;
  double solver_gap = 0.0;
  bool converged = false;           // the convex solve certified its gap
  PmlParams params;
};

/// Grid, convex solve, rounding, then the normalized pseudo-distribution of
/// the rounded allocation. Throws InvalidArgument for an empty profile or
/// out-of-range eps or gamma.
PmlResult approximate_pml(const Profile& p, const PmlOptions& opt = {});

/// Lower bound on log P(q, p): the largest h over fractional level-by-
/// frequency allocations whose row sums are the level multiplicities and
/// whose column sums are the profile counts, plus the combinatorial terms.
/// Cheap for any domain size.
double profile_probability_lower_bound(const PseudoDistribution& q, const Profile& p);

inline constexpr std::size_t kOracleMaxSupport = 8;
inline constexpr std::size_t kOracleMaxSamples = 12;

struct OracleResult {
  PseudoDistribution distribution;
  double log_probability = 0.0;
  double grid_step = 0.0;
  std::size_t max_support = 0;
  std::size_t candidates = 0;  // distributions evaluated
};

/// Best profile probability over distributions with support 1..max_support
/// whose probabilities are positive multiples of grid_step. max_support 0
/// means min(2 * distinct, kOracleMaxSupport). Support sizes run
/// concurrently. Throws SizeLimitError when n or max_support exceeds its
/// guard, InvalidArgument when 1 / grid_step is not an integer.
OracleResult exact_pml_oracle(const Profile& p, std::size_t max_support = 0,
                              double grid_step = 0.02);

enum class Property { entropy, support_size, support_coverage, distance_to_uniformity };

std::string to_string(Property which);
/// Throws InvalidArgument for an unknown name.
Property property_from_string(const std::string& name);

struct PropertyEstimate {
  Property property = Property::entropy;
  double value = 0.0;
};

/// Plug-in value on q: entropy -sum p ln p; support size |{p > 0}|;
/// support coverage sum (1 - (1 - p)^m); distance to uniformity
/// sum |p - 1/K| over the K-symbol support.
PropertyEstimate estimate_property(const PseudoDistribution& q, Property which,
                                   std::size_t m = 0);

/// As above on the PML distribution, with coverage over m = n draws.
PropertyEstimate estimate_property(const PmlResult& res, Property which);

/// Every profile of a sample of size n with at most max_distinct distinct
/// symbols, one per partition of n.
std::vector<Profile> all_profiles(std::size_t n, std::size_t max_distinct);

}  // namespace pmlperm
