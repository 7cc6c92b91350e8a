#pragma once

#include <json.hpp>

#include "pmlperm/approx.hpp"
#include "pmlperm/estimator.hpp"
#include "pmlperm/matrix.hpp"
#include "pmlperm/profile.hpp"
#include "pmlperm/rounding.hpp"

namespace pmlperm {

using Json = nlohmann::ordered_json;

/// {"freqs":[...],"counts":[...]}
Json to_json(const Profile& p);
/// Throws InvalidArgument unless j has unsigned integer arrays "freqs" and
/// "counts".
Profile profile_from_json(const Json& j);

Json to_json(const PseudoDistribution& q);
/// A bare array or an object with a "distribution" array.
PseudoDistribution distribution_from_json(const Json& j);

/// Array of rows.
Json to_json(const NonNegMatrix& m);
/// A bare array of equal-length rows or an object with a "matrix" member.
NonNegMatrix matrix_from_json(const Json& j);

/// {"levels":[...],"rows":[[...],...]} with all-zero rows dropped.
Json to_json(const AllocationMatrix& s);

Json to_json(const RoundingTrace& tr);

/// {"distribution","log_profile_probability","probability_exact",
///  "solver":{...},"params":{...}} and "trace" when with_trace is set.
Json to_json(const PmlResult& r, bool with_trace = false);

Json to_json(const OracleResult& r);

/// Non-finite values become null, as JSON has no infinities.
Json finite_or_null(double v);

}  // namespace pmlperm
