#include "pmlperm/serialize.hpp"

#include <cmath>
#include <string>

#include "pmlperm/errors.hpp"

namespace pmlperm {

namespace {

std::vector<std::size_t> index_array(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array())
    throw InvalidArgument(std::string("profile JSON needs an array \"") + key + "\"");
  std::vector<std::size_t> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_unsigned())
      throw InvalidArgument(std::string("profile JSON: \"") + key +
                            "\" must hold non-negative integers");
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

std::vector<double> number_array(const Json& j, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw InvalidArgument(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json to_json(const Profile& p) { return {{"freqs", p.freqs()}, {"counts", p.counts()}}; }

Profile profile_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("profile JSON must be an object");
  Profile p(index_array(j, "freqs"), index_array(j, "counts"));
  if (p.empty()) throw InvalidArgument("profile JSON is empty");
  return p;
}

Json to_json(const PseudoDistribution& q) { return q.probs(); }

PseudoDistribution distribution_from_json(const Json& j) {
  if (j.is_object()) {
    if (!j.contains("distribution"))
      throw InvalidArgument("distribution JSON needs a \"distribution\" array");
    return PseudoDistribution(number_array(j["distribution"], "distribution"));
  }
  return PseudoDistribution(number_array(j, "distribution"));
}

Json to_json(const NonNegMatrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

NonNegMatrix matrix_from_json(const Json& j) {
  const Json& rows = j.is_object() && j.contains("matrix") ? j["matrix"] : j;
  if (!rows.is_array() || rows.empty())
    throw InvalidArgument("matrix JSON must be a non-empty array of rows");
  const std::size_t n = rows.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (const auto& row : rows) {
    auto v = number_array(row, "matrix row");
    if (data.empty()) cols = v.size();
    if (v.size() != cols || cols == 0)
      throw InvalidArgument("matrix JSON rows must be non-empty and of equal length");
    data.insert(data.end(), v.begin(), v.end());
  }
  return NonNegMatrix(n, cols, std::move(data));
}

Json to_json(const AllocationMatrix& s) {
  const AllocationMatrix p = s.pruned();
  Json rows = Json::array();
  for (std::size_t i = 0; i < p.rows(); ++i) {
    std::vector<double> r(p.cols());
    for (std::size_t j = 0; j < p.cols(); ++j) r[j] = p(i, j);
    rows.push_back(std::move(r));
  }
  return {{"levels", p.levels()}, {"rows", std::move(rows)}};
}

Json to_json(const RoundingTrace& tr) {
  return {{"gamma", tr.gamma},
          {"input", to_json(tr.input)},
          {"stage1", to_json(tr.stage1)},
          {"stage2", to_json(tr.stage2)},
          {"final", to_json(tr.final)},
          {"log_g_drops", tr.log_g_drops},
          {"input_log_g", tr.input_log_g},
          {"final_log_g", tr.final_log_g},
          {"delta", tr.delta},
          {"loss_scale", tr.loss_scale},
          {"measured_constant", tr.measured_constant}};
}

Json to_json(const PmlResult& r, bool with_trace) {
  Json j = {{"distribution", to_json(r.distribution)},
            {"log_profile_probability", finite_or_null(r.log_profile_probability)},
            {"probability_exact", r.probability_exact},
            {"solver",
             {{"log_g", r.solver_log_g},
              {"upper_bound", r.solver_upper_bound},
              {"gap", r.solver_gap},
              {"converged", r.converged}}},
            {"params",
             {{"n", r.params.n},
              {"eps", r.params.eps},
              {"gamma", r.params.gamma},
              {"levels", r.params.levels},
              {"k", r.params.k}}}};
  if (with_trace) j["trace"] = to_json(r.trace);
  return j;
}

Json to_json(const OracleResult& r) {
  return {{"distribution", to_json(r.distribution)},
          {"log_profile_probability", finite_or_null(r.log_probability)},
          {"grid_step", r.grid_step},
          {"max_support", r.max_support},
          {"candidates", r.candidates}};
}

}  // namespace pmlperm
