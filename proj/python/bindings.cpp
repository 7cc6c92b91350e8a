#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pmlperm/approx.hpp"
#include "pmlperm/cli.hpp"
#include "pmlperm/errors.hpp"
#include "pmlperm/estimator.hpp"
#include "pmlperm/permanent.hpp"
#include "pmlperm/profile.hpp"
#include "pmlperm/serialize.hpp"

namespace py = pybind11;
using namespace pmlperm;

namespace {

using DenseArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

NonNegMatrix to_matrix(const DenseArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return NonNegMatrix(rows, cols, std::vector<double>(a.data(), a.data() + a.size()));
}

PmlOptions pml_options(std::optional<double> eps, std::optional<double> gamma,
                       std::optional<double> tol, std::optional<std::size_t> max_iter) {
  PmlOptions opt;
  opt.eps = eps;
  opt.gamma = gamma;
  if (tol) opt.convex.tol = *tol;
  if (max_iter) opt.convex.max_iter = *max_iter;
  return opt;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Permanent approximations and approximate profile maximum likelihood";

  auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<SizeLimitError>(m, "SizeLimitError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());

  m.def("permanent", [](const DenseArray& a) { return permanent_ryser(to_matrix(a)); },
        py::arg("a"), "Exact permanent by Ryser's formula (N <= 24).");
  m.def("log_permanent", [](const DenseArray& a) { return log_permanent(to_matrix(a)); },
        py::arg("a"));
  m.def("log_sinkhorn", [](const DenseArray& a) { return sinkhorn_permanent(to_matrix(a)).log_value; },
        py::arg("a"));
  m.def("log_scaled_sinkhorn",
        [](const DenseArray& a) { return scaled_sinkhorn_permanent(to_matrix(a)).log_value; },
        py::arg("a"));
  m.def("log_bethe", [](const DenseArray& a) { return bethe_permanent(to_matrix(a)).log_value; },
        py::arg("a"));

  py::class_<Profile>(m, "Profile")
      .def(py::init<std::vector<std::size_t>, std::vector<std::size_t>>(), py::arg("freqs"),
           py::arg("counts"))
      .def_property_readonly("freqs", &Profile::freqs)
      .def_property_readonly("counts", &Profile::counts)
      .def_property_readonly("n", &Profile::n)
      .def_property_readonly("k", &Profile::k)
      .def_property_readonly("distinct", &Profile::distinct)
      .def("__eq__", [](const Profile& a, const Profile& b) { return a == b; })
      .def("__repr__", [](const Profile& p) { return "Profile(" + to_json(p).dump() + ")"; });

  m.def("profile_of_sequence",
        [](const std::vector<std::string>& seq) { return profile_of_sequence(seq); },
        py::arg("tokens"));
  m.def("profile_of_string", [](const std::string& s) { return profile_of_string(s); },
        py::arg("chars"));
  m.def("all_profiles", &all_profiles, py::arg("n"), py::arg("max_distinct"));

  m.def(
      "profile_probability",
      [](const std::vector<double>& q, const Profile& p) {
        return profile_probability(PseudoDistribution(q), p);
      },
      py::arg("q"), py::arg("profile"), "Natural log of the probability of the profile under q.");

  py::class_<PmlResult>(m, "PmlResult")
      .def_property_readonly("distribution",
                             [](const PmlResult& r) { return r.distribution.probs(); })
      .def_readonly("log_profile_probability", &PmlResult::log_profile_probability)
      .def_readonly("probability_exact", &PmlResult::probability_exact)
      .def_readonly("converged", &PmlResult::converged)
      .def_readonly("solver_log_g", &PmlResult::solver_log_g)
      .def_readonly("solver_gap", &PmlResult::solver_gap)
      .def_property_readonly("params",
                             [](const PmlResult& r) {
                               py::dict d;
                               d["n"] = r.params.n;
                               d["eps"] = r.params.eps;
                               d["gamma"] = r.params.gamma;
                               d["levels"] = r.params.levels;
                               d["k"] = r.params.k;
                               return d;
                             })
      .def_property_readonly("rounding_constant",
                             [](const PmlResult& r) { return r.trace.measured_constant; })
      .def(
          "to_json", [](const PmlResult& r, bool trace) { return to_json(r, trace).dump(); },
          py::arg("trace") = false);

  m.def(
      "approximate_pml",
      [](const Profile& p, std::optional<double> eps, std::optional<double> gamma,
         std::optional<double> tol, std::optional<std::size_t> max_iter) {
        py::gil_scoped_release release;
        return approximate_pml(p, pml_options(eps, gamma, tol, max_iter));
      },
      py::arg("profile"), py::kw_only(), py::arg("eps") = py::none(),
      py::arg("gamma") = py::none(), py::arg("tol") = py::none(),
      py::arg("max_iter") = py::none());

  m.def(
      "exact_pml_oracle",
      [](const Profile& p, std::size_t max_support, double grid_step) {
        OracleResult r;
        {
          py::gil_scoped_release release;
          r = exact_pml_oracle(p, max_support, grid_step);
        }
        return py::make_tuple(r.distribution.probs(), r.log_probability);
      },
      py::arg("profile"), py::arg("max_support") = 0, py::arg("grid_step") = 0.02);

  m.def(
      "estimate_property",
      [](const std::vector<double>& q, const std::string& which, std::size_t m) {
        return estimate_property(PseudoDistribution(q), property_from_string(which), m).value;
      },
      py::arg("distribution"), py::arg("property"), py::arg("m") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a command line; returns (exit code, stdout, stderr).");
}
