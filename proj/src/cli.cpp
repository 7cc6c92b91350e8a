#include "pmlperm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "pmlperm/approx.hpp"
#include "pmlperm/errors.hpp"
#include "pmlperm/estimator.hpp"
#include "pmlperm/permanent.hpp"
#include "pmlperm/profile.hpp"
#include "pmlperm/serialize.hpp"

namespace pmlperm::cli {

namespace {

struct Config {
  std::string input;
  std::string out_path;
  std::string format = "json";
  std::optional<double> eps;
  std::optional<double> gamma;
  std::optional<double> tol;
  std::optional<std::size_t> max_iter;
  std::optional<std::uint64_t> seed;
  std::size_t n = 0;
  bool trace = false;
  std::size_t max_support = 0;
  double grid_step = 0.02;
  std::string bench_task = "all";
  std::size_t bench_max = 16;
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_input(path));
  } catch (const Json::exception& e) {
    throw InvalidArgument("malformed JSON in '" + path + "': " + e.what());
  }
}

Sequence read_sequence(const std::string& path) {
  std::istringstream in(read_input(path));
  Sequence seq;
  std::string tok;
  while (in >> tok) seq.push_back(tok);
  if (seq.empty()) throw InvalidArgument("'" + path + "' holds no tokens");
  return seq;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

void write_output(const Config& c, const std::string& text, std::ostream& out) {
  if (c.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out_path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + c.out_path + "'");
  f << text;
}

int cmd_profile(const Config& c, std::ostream& out) {
  const Profile p = profile_of_sequence(read_sequence(c.input));
  if (c.format == "csv") {
    std::string s = "frequency,count\n";
    for (std::size_t j = 0; j < p.k(); ++j)
      s += std::to_string(p.freqs()[j]) + "," + std::to_string(p.counts()[j]) + "\n";
    write_output(c, s, out);
  } else {
    write_output(c, to_json(p).dump() + "\n", out);
  }
  return kExitOk;
}

int cmd_pml(const Config& c, std::ostream& out, std::ostream& err) {
  const Profile p = profile_from_json(read_json(c.input));
  PmlOptions opt;
  opt.eps = c.eps;
  opt.gamma = c.gamma;
  if (c.tol) opt.convex.tol = *c.tol;
  if (c.max_iter) opt.convex.max_iter = *c.max_iter;
  const PmlResult r = approximate_pml(p, opt);

  const std::array props{Property::entropy, Property::support_size,
                         Property::support_coverage, Property::distance_to_uniformity};
  if (c.format == "csv") {
    std::string s =
        "n,eps,gamma,levels,k,solver_log_g,solver_gap,converged,log_profile_probability,"
        "probability_exact,domain";
    for (Property w : props) s += "," + to_string(w);
    s += "\n" + std::to_string(r.params.n) + "," + csv_number(r.params.eps) + "," +
         csv_number(r.params.gamma) + "," + std::to_string(r.params.levels) + "," +
         std::to_string(r.params.k) + "," + csv_number(r.solver_log_g) + "," +
         csv_number(r.solver_gap) + "," + (r.converged ? "1" : "0") + "," +
         csv_number(r.log_profile_probability) + "," + (r.probability_exact ? "1" : "0") + "," +
         std::to_string(r.distribution.size());
    for (Property w : props) s += "," + csv_number(estimate_property(r, w).value);
    write_output(c, s + "\n", out);
  } else {
    Json j = to_json(r, c.trace);
    for (Property w : props) j["properties"][to_string(w)] = estimate_property(r, w).value;
    write_output(c, json_text(j), out);
  }
  if (!r.converged) {
    err << "warning: convex solve stopped with gap " << r.solver_gap << "\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

struct PermRow {
  std::size_t n = 0;
  double exact = 0.0;
  bool has_exact = false;
  ApproximationReport sinkhorn, scaled, bethe;
};

PermRow compare_one(const NonNegMatrix& a, const Config& c) {
  if (!a.is_square()) throw DimensionError("perm-compare: matrix is not square");
  PermRow r;
  r.n = a.rows();
  if (r.n <= kRyserPermanentLimit) {
    r.exact = log_permanent(a);
    r.has_exact = true;
  }
  const std::size_t sk_iter = c.max_iter.value_or(kSinkhornMaxIter);
  r.sinkhorn = sinkhorn_permanent(a, kSinkhornTol, sk_iter);
  r.scaled = scaled_sinkhorn_permanent(a, kSinkhornTol, sk_iter);
  r.bethe = bethe_permanent(a, c.tol.value_or(kBetheTol), c.max_iter.value_or(kBetheMaxIter));
  return r;
}

int cmd_perm_compare(const Config& c, std::ostream& out, std::ostream& err) {
  const Json j = read_json(c.input);
  std::vector<NonNegMatrix> mats;
  if (j.is_object() && j.contains("matrices")) {
    for (const auto& m : j["matrices"]) mats.push_back(matrix_from_json(m));
  } else {
    mats.push_back(matrix_from_json(j));
  }
  if (mats.empty()) throw InvalidArgument("perm-compare: no matrices");

  // Each worker owns whole matrices; rows are written in input order.
  std::vector<PermRow> rows(mats.size());
  std::vector<std::exception_ptr> errors(mats.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next++) < mats.size();) {
      try {
        rows[i] = compare_one(mats[i], c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(mats.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  bool converged = true;
  std::string s;
  Json arr = Json::array();
  if (c.format == "csv")
    s = "N,log_perm_exact,log_sinkhorn,log_scaled_sinkhorn,log_bethe,"
        "log_ratio_perm_bethe,log_ratio_bethe_scaled_sinkhorn\n";
  for (const auto& r : rows) {
    converged = converged && r.bethe.converged && r.sinkhorn.converged;
    const double exact = r.has_exact ? r.exact : std::nan("");
    const double gap = r.has_exact ? r.exact - r.bethe.log_value : std::nan("");
    const double low = r.bethe.log_value - r.scaled.log_value;
    if (c.format == "csv") {
      s += std::to_string(r.n) + "," + csv_number(exact) + "," + csv_number(r.sinkhorn.log_value) +
           "," + csv_number(r.scaled.log_value) + "," + csv_number(r.bethe.log_value) + "," +
           csv_number(gap) + "," + csv_number(low) + "\n";
    } else {
      arr.push_back({{"N", r.n},
                     {"log_perm_exact", finite_or_null(exact)},
                     {"log_sinkhorn", finite_or_null(r.sinkhorn.log_value)},
                     {"log_scaled_sinkhorn", finite_or_null(r.scaled.log_value)},
                     {"log_bethe", finite_or_null(r.bethe.log_value)},
                     {"log_ratio_perm_bethe", finite_or_null(gap)},
                     {"log_ratio_bethe_scaled_sinkhorn", finite_or_null(low)},
                     {"bethe_gap", r.bethe.residual},
                     {"converged", r.bethe.converged && r.sinkhorn.converged}});
    }
  }
  if (c.format == "csv")
    write_output(c, s, out);
  else
    write_output(c, json_text(arr.size() == 1 ? arr[0] : arr), out);
  if (!converged) {
    err << "warning: an approximation stopped short of its tolerance\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_sample(const Config& c, std::ostream& out) {
  if (c.n == 0) throw InvalidArgument("sample: --n must be positive");
  const PseudoDistribution q = distribution_from_json(read_json(c.input));
  std::string s;
  for (const auto& tok : sample_sequence(q, c.n, *c.seed)) s += tok + "\n";
  write_output(c, s, out);
  return kExitOk;
}

int cmd_oracle(const Config& c, std::ostream& out) {
  const Profile p = profile_from_json(read_json(c.input));
  const OracleResult r = exact_pml_oracle(p, c.max_support, c.grid_step);
  if (c.format == "csv") {
    write_output(c,
                 "log_profile_probability,grid_step,max_support,candidates,domain\n" +
                     csv_number(r.log_probability) + "," + csv_number(r.grid_step) + "," +
                     std::to_string(r.max_support) + "," + std::to_string(r.candidates) + "," +
                     std::to_string(r.distribution.size()) + "\n",
                 out);
  } else {
    write_output(c, json_text(to_json(r)), out);
  }
  return kExitOk;
}

// Timings of the exact permanent, the Bethe approximation and the full PML
// pipeline on seeded random inputs of growing size.
int cmd_bench(const Config& c, std::ostream& out) {
  const std::uint64_t seed = c.seed.value_or(1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto seconds = [](auto&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const double v = f();
    return std::pair{std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), v};
  };
  std::string s = "task,size,seconds,value\n";
  auto row = [&](const char* task, std::size_t size, std::pair<double, double> tv) {
    s += std::string(task) + "," + std::to_string(size) + "," + csv_number(tv.first) + "," +
         csv_number(tv.second) + "\n";
  };
  const bool all = c.bench_task == "all";
  if (all || c.bench_task == "perm") {
    for (std::size_t n = 2; n <= std::min(c.bench_max, kRyserPermanentLimit); n += 2) {
      std::vector<double> d(n * n);
      for (double& v : d) v = u(rng);
      const NonNegMatrix a(n, n, std::move(d));
      row("log_permanent", n, seconds([&] { return log_permanent(a); }));
      row("bethe", n, seconds([&] { return bethe_permanent(a).log_value; }));
      row("scaled_sinkhorn", n, seconds([&] { return scaled_sinkhorn_permanent(a).log_value; }));
    }
  }
  if (all || c.bench_task == "pml") {
    for (std::size_t n = 10; n <= 10 * c.bench_max; n *= 2) {
      std::vector<double> q(n / 2);
      double tot = 0.0;
      for (double& v : q) tot += (v = u(rng) + 0.1);
      for (double& v : q) v /= tot;
      const Profile p = profile_of_sequence(sample_sequence(PseudoDistribution(q), n, rng()));
      row("approximate_pml", n,
          seconds([&] { return approximate_pml(p).log_profile_probability; }));
    }
  }
  write_output(c, s, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Permanent approximations and approximate profile maximum likelihood", "pmlperm"};
  app.require_subcommand(1);
  Config c;

  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    sub->add_option("--out", c.out_path, "Write the result to PATH instead of stdout");
  };
  auto add_input = [&](CLI::App* sub, const char* what) {
    sub->add_option("input", c.input, what)->required();
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--tol", c.tol, "Solver tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", c.max_iter, "Solver iteration cap")->check(CLI::PositiveNumber);
  };

  auto* profile = app.add_subcommand("profile", "Profile of a whitespace-separated token file");
  add_input(profile, "Token file, '-' for stdin");
  add_format(profile);

  auto* pml = app.add_subcommand("pml", "Approximate PML distribution of a profile");
  add_input(pml, "Profile JSON file");
  pml->add_option("--eps", c.eps, "Grid ratio")->check(CLI::PositiveNumber);
  pml->add_option("--gamma", c.gamma, "Rounding threshold in (0, 1)");
  pml->add_flag("--trace", c.trace, "Include the rounding stages");
  add_solver(pml);
  add_format(pml);

  auto* perm = app.add_subcommand("perm-compare", "Exact and approximate log-permanents");
  add_input(perm, "Matrix JSON file: rows, {\"matrix\": rows} or {\"matrices\": [...]}");
  add_solver(perm);
  add_format(perm);

  auto* sample = app.add_subcommand("sample", "Seeded i.i.d. sample from a distribution");
  add_input(sample, "Distribution JSON file");
  sample->add_option("--n", c.n, "Sample size")->required();
  sample->add_option("--seed", c.seed, "RNG seed")->required();
  sample->add_option("--out", c.out_path, "Write the tokens to PATH instead of stdout");

  auto* oracle = app.add_subcommand("oracle-pml", "Exhaustive grid search for the PML");
  add_input(oracle, "Profile JSON file");
  oracle->add_option("--max-support", c.max_support, "Largest support tried (0: automatic)");
  oracle->add_option("--grid-step", c.grid_step, "Probability grid step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_format(oracle);

  auto* bench = app.add_subcommand("bench", "Timing sweep, CSV");
  bench->add_option("--task", c.bench_task, "Which sweep")
      ->check(CLI::IsMember({"all", "perm", "pml"}))
      ->capture_default_str();
  bench->add_option("--max-n", c.bench_max, "Largest matrix size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--seed", c.seed, "RNG seed");
  bench->add_option("--out", c.out_path, "Write the CSV to PATH instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (profile->parsed()) return cmd_profile(c, out);
    if (pml->parsed()) return cmd_pml(c, out, err);
    if (perm->parsed()) return cmd_perm_compare(c, out, err);
    if (sample->parsed()) return cmd_sample(c, out);
    if (oracle->parsed()) return cmd_oracle(c, out);
    if (bench->parsed()) return cmd_bench(c, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace pmlperm::cli
