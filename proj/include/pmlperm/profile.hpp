#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmlperm/matrix.hpp"

namespace pmlperm {

/// Distinct non-zero symbol frequencies m_1 < ... < m_k of a sample, and how
/// many symbols phi_j share each of them.
class Profile {
 public:
  Profile() = default;
  /// Sorts by frequency and merges repeated frequencies. Throws
  /// InvalidArgument on zero frequencies or counts, DimensionError on a
  /// length mismatch.
  Profile(std::vector<std::size_t> freqs, std::vector<std::size_t> counts);

  const std::vector<std::size_t>& freqs() const noexcept { return freqs_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  std::size_t k() const noexcept { return freqs_.size(); }
  std::size_t n() const noexcept { return n_; }
  /// Number of observed distinct symbols, sum of counts.
  std::size_t distinct() const noexcept { return distinct_; }
  bool empty() const noexcept { return freqs_.empty(); }

  friend bool operator==(const Profile&, const Profile&) = default;

 private:
  std::vector<std::size_t> freqs_;
  std::vector<std::size_t> counts_;
  std::size_t n_ = 0;
  std::size_t distinct_ = 0;
};

/// Non-negative weights over an explicit finite domain with total mass <= 1.
class PseudoDistribution {
 public:
  PseudoDistribution() = default;
  explicit PseudoDistribution(std::vector<double> probs);

  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  double mass() const noexcept;
  std::size_t support_size() const noexcept;

  /// Divides by the mass. Throws InvalidArgument when the mass is zero.
  PseudoDistribution normalized() const;

  friend bool operator==(const PseudoDistribution&,
                         const PseudoDistribution&) = default;

 private:
  std::vector<double> probs_;
};

using Sequence = std::vector<std::string>;

Profile profile_of_sequence(std::span<const std::string> seq);

/// Every character is a symbol: "abbc" has profile {1: 2, 2: 1}.
Profile profile_of_string(std::string_view chars);

/// log( n! / prod_j (m_j!)^{phi_j} ).
double log_c_phi(const Profile& p);

/// N x N matrix with phi0 all-ones columns (frequency 0, with 0^0 = 1)
/// followed by phi_j copies of (q_x^{m_j})_x for ascending m_j.
/// Requires q.size() == phi0 + p.distinct().
NonNegMatrix profile_probability_matrix(const PseudoDistribution& q,
                                        const Profile& p, std::size_t phi0);

/// Log probability that n draws from q produce profile p, through the
/// permanent of the profile probability matrix. N must not exceed 24.
double profile_probability_exact(const PseudoDistribution& q, const Profile& p,
                                 std::size_t phi0);

inline constexpr std::size_t kBruteforceMaxSamples = 8;
inline constexpr std::size_t kBruteforceMaxDomain = 5;

/// Log probability by enumerating all |D|^n sequences (n <= 8, |D| <= 5).
double profile_probability_bruteforce(const PseudoDistribution& q,
                                      const Profile& p);

/// Exact log profile probability for a domain of any size, with every
/// symbol of q not observed counted as unseen. Symbols sharing a probability
/// are grouped and the permanent becomes a sum over level/frequency
/// contingency tables. Throws DimensionError when q has fewer symbols than
/// the profile observed.
double profile_probability(const PseudoDistribution& q, const Profile& p);

/// As above, but throws SizeLimitError once the table enumeration takes more
/// than max_work steps.
double profile_probability(const PseudoDistribution& q, const Profile& p,
                           std::size_t max_work);

/// Spreadsheet-style names: 0 -> "a", 25 -> "z", 26 -> "aa".
std::string symbol_name(std::size_t index);

/// n i.i.d. draws from q, reproducible from seed. Requires sum q = 1 within
/// 1e-9.
Sequence sample_sequence(const PseudoDistribution& q, std::size_t n,
                         std::uint64_t seed);

}  // namespace pmlperm
