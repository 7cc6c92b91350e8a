#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pmlperm {

/// Maximum-weight perfect matching on an n x n bipartite graph (Hungarian
/// method, O(n^3)). `weights` is row-major; cells with allowed[i*n+j] == 0 are
/// never used unless no perfect matching on the allowed cells exists, in which
/// case they are used as rarely as possible. Returns the column for each row.
std::vector<std::size_t> max_weight_assignment(std::span<const double> weights,
                                               std::span<const char> allowed,
                                               std::size_t n);

/// Marks the allowed cells that lie on at least one perfect matching that uses
/// allowed cells only. Returns an empty vector when no such matching exists.
std::vector<char> matchable_cells(std::span<const char> allowed, std::size_t n);

}  // namespace pmlperm
