#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "generators.hpp"
#include "pmlperm/convex.hpp"
#include "pmlperm/errors.hpp"
#include "pmlperm/profile.hpp"
#include "pmlperm/rounding.hpp"
#include "rounding_checks.hpp"

using namespace pmlperm;

namespace {

std::string joined(const std::vector<std::string>& bad) {
  std::string s;
  for (const auto& b : bad) s += b + "; ";
  return s;
}

}  // namespace

TEST_CASE("structured rounding on hand examples") {
  SUBCASE("two halves") {
    const auto sr = structured_rounding({0.5, 0.5}, {1.0, 1.0}, 1);
    REQUIRE(sr.s.size() == 1);
    CHECK(sr.s[0] == 0);
    CHECK(sr(0, 0) == doctest::Approx(0.5));
    CHECK(sr(0, 1) == doctest::Approx(0.5));
    CHECK(sr.row_sum(1) == 0.0);
  }
  SUBCASE("three entries, two units") {
    const auto sr = structured_rounding({0.5, 0.7, 0.8}, {3.0, 2.0, 1.0}, 2);
    REQUIRE(sr.s.size() == 2);
    CHECK(sr.s[0] == 0);
    CHECK(sr.s[1] == 1);
    CHECK(sr(0, 0) == doctest::Approx(0.5));
    CHECK(sr(0, 1) == doctest::Approx(0.5));
    CHECK(sr(0, 2) == 0.0);
    CHECK(sr(1, 0) == 0.0);
    CHECK(sr(1, 1) == doctest::Approx(0.2));
    CHECK(sr(1, 2) == doctest::Approx(0.8));
    CHECK(sr.row_sum(2) == 0.0);
  }
  SUBCASE("weights decide the order and indices come back unchanged") {
    const auto sr = structured_rounding({0.5, 0.5}, {0.1, 0.9}, 1);
    REQUIRE(sr.s.size() == 1);
    CHECK(sr.s[0] == 1);
    CHECK(sr(1, 0) == doctest::Approx(0.5));
    CHECK(sr(1, 1) == doctest::Approx(0.5));
    CHECK(sr.row_sum(0) == 0.0);
  }
  SUBCASE("zeros are skipped") {
    const auto sr = structured_rounding({0.0, 0.25, 0.0, 0.75}, {4.0, 3.0, 2.0, 1.0}, 1);
    REQUIRE(sr.s.size() == 1);
    CHECK(sr.s[0] == 1);
    CHECK(sr(1, 3) == doctest::Approx(0.75));
    CHECK(sr.col_sum(0) == 0.0);
    CHECK(sr.col_sum(2) == 0.0);
  }
  SUBCASE("an exact unit boundary leaves no spill") {
    const auto sr = structured_rounding({0.5, 0.5, 0.4, 0.6}, {4.0, 3.0, 2.0, 1.0}, 2);
    REQUIRE(sr.s.size() == 2);
    CHECK(sr.s[0] == 0);
    CHECK(sr.s[1] == 2);
    CHECK(sr(0, 2) == 0.0);
    CHECK(sr.row_sum(0) == doctest::Approx(1.0));
    CHECK(sr.row_sum(2) == doctest::Approx(1.0));
  }
  SUBCASE("nothing to place") {
    const auto sr = structured_rounding({0.0, 0.0}, {1.0, 2.0}, 0);
    CHECK(sr.s.empty());
    CHECK(sr.row_sum(0) == 0.0);
    CHECK(sr.row_sum(1) == 0.0);
  }
  SUBCASE("small floating residual is repaired") {
    const auto sr = structured_rounding({0.3, 0.3, 0.4 + 1e-12}, {3.0, 2.0, 1.0}, 1);
    CHECK(sr.row_sum(0) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("structured rounding rejects invalid input") {
  CHECK_THROWS_AS(structured_rounding({0.5, 0.5}, {1.0}, 1), InvalidArgument);
  CHECK_THROWS_AS(structured_rounding({1.0, 0.0}, {1.0, 1.0}, 1), InvalidArgument);
  CHECK_THROWS_AS(structured_rounding({-0.1, 0.5}, {1.0, 1.0}, 0), InvalidArgument);
  CHECK_THROWS_AS(structured_rounding({0.5, 0.4}, {1.0, 1.0}, 1), InvalidArgument);
  CHECK_THROWS_AS(structured_rounding({0.5, 0.5}, {1.0, 1.0}, 2), InvalidArgument);
}

TEST_CASE("structured rounding guarantees on random input") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(2, 12);
  for (int t = 0; t < 1000; ++t) {
    std::size_t a = 0;
    const std::vector<double> x = testgen::random_fractions(rng, len(rng), a);
    std::vector<double> w(x.size()), m(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      w[j] = t % 3 == 0 ? std::floor(4.0 * u(rng)) / 4.0 + 0.01 : u(rng) + 1e-6;
      m[j] = std::floor(6.0 * u(rng));
    }
    const auto sr = structured_rounding(x, w, a);
    const auto bad = rcheck::check_structured(x, w, m, sr);
    CAPTURE(t);
    const std::string msg = joined(bad);
    CAPTURE(msg);
    CHECK(bad.empty());
    CHECK(sr.s.size() == a);
  }
}

TEST_CASE("new probability values on hand examples") {
  const Profile p({1}, {2});
  SUBCASE("residual of two units at the mean level") {
    const AllocationMatrix b({0.2, 0.4}, p, {0, 1, 0, 1});
    const AllocationMatrix c({0.2, 0.4}, p);
    const AllocationMatrix out = create_new_probability_values(b, c);
    REQUIRE(out.rows() == 4);
    CHECK(out(3, 1) == doctest::Approx(2.0));
    CHECK(out.levels()[3] == doctest::Approx(0.3));
    CHECK(out.row_sum(2) == 0.0);
    CHECK(out.levels()[2] == 0.0);
    CHECK(out.row_sum(0) == 0.0);
    CHECK(out.row_sum(1) == 0.0);
    CHECK(rcheck::check_create(b, c, out).empty());
  }
  SUBCASE("nothing removed gives zero rows") {
    const AllocationMatrix b({0.2, 0.4}, p, {0.5, 1.5, 0, 0.5});
    const AllocationMatrix out = create_new_probability_values(b, b);
    REQUIRE(out.rows() == 4);
    CHECK(out.row_sum(2) == 0.0);
    CHECK(out.row_sum(3) == 0.0);
    CHECK(out.levels()[2] == 0.0);
    CHECK(out.levels()[3] == 0.0);
    const AllocationMatrix kept = out.pruned();
    CHECK(kept.levels() == b.levels());
    CHECK(kept.entries() == b.entries());
  }
  SUBCASE("unseen column residual") {
    const AllocationMatrix b({0.5, 0.1}, p, {1, 1, 1, 1});
    const AllocationMatrix c({0.5, 0.1}, p, {0.5, 1, 0.5, 1});
    const AllocationMatrix out = create_new_probability_values(b, c);
    CHECK(out(2, 0) == doctest::Approx(1.0));
    CHECK(out.levels()[2] == doctest::Approx(0.3));
    CHECK(out.row_sum(3) == 0.0);
  }
}

TEST_CASE("new probability values reject invalid input") {
  const Profile p({1}, {2});
  const AllocationMatrix b({0.2, 0.4}, p, {0, 1, 0, 1});
  CHECK_THROWS_AS(create_new_probability_values(b, AllocationMatrix({0.2, 0.4}, p, {0, 1.5, 0, 0.5})),
                  InvalidArgument);
  CHECK_THROWS_AS(create_new_probability_values(b, AllocationMatrix({0.2}, p)), InvalidArgument);
  CHECK_THROWS_AS(create_new_probability_values(b, AllocationMatrix({0.2, 0.3}, p)),
                  InvalidArgument);
  CHECK_THROWS_AS(create_new_probability_values(b, AllocationMatrix({0.2, 0.4}, Profile({2}, {1}))),
                  InvalidArgument);
}

TEST_CASE("new probability values guarantees on random input") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> kk(1, 4), ll(1, 6);
  for (int t = 0; t < 1000; ++t) {
    const Profile p = testgen::random_profile(rng, kk(rng), 8, 4);
    const std::vector<double> lv = testgen::random_levels(rng, ll(rng), p.distinct());
    const AllocationMatrix b = testgen::random_feasible(p, lv, rng);
    std::vector<double> ce(b.entries());
    for (double& v : ce) {
      const double r = u(rng);
      v = r < 0.25 ? v : r < 0.4 ? 0.0 : v * u(rng);
    }
    const AllocationMatrix c(lv, p, ce);
    const AllocationMatrix out = create_new_probability_values(b, c);
    const auto bad = rcheck::check_create(b, c, out);
    CAPTURE(t);
    const std::string msg = joined(bad);
    CAPTURE(msg);
    CHECK(bad.empty());
  }
}

TEST_CASE("rounding an integral allocation only rescales the levels") {
  const Profile p({1, 2}, {1, 1});
  const AllocationMatrix s({0.5, 0.25}, p, {0, 0, 1, 1, 1, 0});
  const double gamma = 0.2;
  const RoundingTrace tr = round_allocation(s, gamma);
  CHECK(rcheck::check_rounding(tr).empty());
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(tr.final.levels()[i] == doctest::Approx(s.levels()[i] / 1.2));
    for (std::size_t j = 0; j < 3; ++j) CHECK(tr.final(i, j) == s(i, j));
  }
  for (std::size_t i = 2; i < tr.final.rows(); ++i) CHECK(tr.final.row_sum(i) == 0.0);
  CHECK(tr.log_g_drops[0] == doctest::Approx(0.0));
  CHECK(tr.log_g_drops[1] == doctest::Approx(0.0));
  CHECK(tr.log_g_drops[2] == doctest::Approx(3.0 * std::log(1.2)));
  CHECK(tr.final.pruned().rows() == 2);
}

TEST_CASE("rounding a fractional low row through the structured step") {
  // One low row of sum 1.6 split over two frequencies; a second low row
  // completes the column counts.
  const Profile p({1, 2}, {1, 1});
  const AllocationMatrix s({0.1, 0.05}, p, {0, 0.6, 1.0, 0, 0.4, 0});
  const RoundingTrace tr = round_allocation(s, 0.5);
  CHECK(rcheck::check_rounding(tr).empty());
  // Step one keeps everything: the low block's columns are already integral.
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(tr.stage1(i, j) == doctest::Approx(s(i, j)));
  // Step two floors the row sums to 1 and 0.
  CHECK(tr.stage2.row_sum(0) == doctest::Approx(1.0));
  CHECK(tr.stage2(0, 1) == doctest::Approx(0.375));
  CHECK(tr.stage2(0, 2) == doctest::Approx(0.625));
  CHECK(tr.stage2.row_sum(1) == 0.0);
  const std::size_t base = 2 + 3;
  CHECK(tr.stage2(base + 1, 1) == doctest::Approx(0.625));
  CHECK(tr.stage2.levels()[base + 1] == doctest::Approx(0.068));
  CHECK(tr.stage2(base + 2, 2) == doctest::Approx(0.375));
  CHECK(tr.stage2.levels()[base + 2] == doctest::Approx(0.1));
  // Step three gathers both fractions into the row of the higher level.
  CHECK(tr.final.row_sum(base + 2) == doctest::Approx(1.0));
  CHECK(tr.final(base + 2, 1) == doctest::Approx(0.625));
  CHECK(tr.final(base + 2, 2) == doctest::Approx(0.375));
  CHECK(tr.final.row_sum(base + 1) == 0.0);
  const PseudoDistribution q = pseudo_distribution_of(tr.final.pruned());
  CHECK(q.size() == 2);
  CHECK(q.mass() <= 1.0);
}

TEST_CASE("rounding floors the unseen column first") {
  const Profile p({1}, {1});
  const AllocationMatrix s({0.5, 0.25}, p, {0.5, 1, 1.0, 0});
  const RoundingTrace tr = round_allocation(s, 0.3);
  CHECK(tr.input.col_sum(0) == doctest::Approx(1.0));
  CHECK(tr.input(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(tr.input(1, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(rcheck::check_rounding(tr).empty());
}

TEST_CASE("rounding rejects invalid input") {
  const Profile p({1}, {1});
  const AllocationMatrix s({0.5, 0.25}, p, {0, 1, 0, 0});
  CHECK_THROWS_AS(round_allocation(s, 0.0), InvalidArgument);
  CHECK_THROWS_AS(round_allocation(s, 1.0), InvalidArgument);
  CHECK_THROWS_AS(round_allocation(s, std::nan("")), InvalidArgument);
  CHECK_THROWS_AS(round_allocation(AllocationMatrix({0.5, 0.25}, p, {0, 0.5, 0, 0}), 0.5),
                  InvalidArgument);
  CHECK_THROWS_AS(round_allocation(AllocationMatrix({0.5, 0.25}, p, {2, 1, 0, 0}), 0.5),
                  InvalidArgument);
}

TEST_CASE("rounding guarantees on random fractional allocations") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> kk(1, 4), ll(1, 8);
  for (int t = 0; t < 1000; ++t) {
    const Profile p = testgen::random_profile(rng, kk(rng), 6, 4);
    const std::vector<double> lv =
        t % 2 == 0 ? build_discretization(std::max<std::size_t>(p.n(), 2)).values
                   : testgen::random_levels(rng, ll(rng), p.distinct());
    const AllocationMatrix s = testgen::random_feasible(p, lv, rng);
    const double gamma = t % 4 == 0 ? 1.0 / std::sqrt(static_cast<double>(p.n()) + 1.0)
                                    : 0.02 + 0.96 * u(rng);
    const RoundingTrace tr = round_allocation(s, gamma);
    const auto bad = rcheck::check_rounding(tr);
    CAPTURE(t);
    const std::string msg = joined(bad);
    CAPTURE(msg);
    CHECK(bad.empty());
    CHECK(std::isfinite(tr.final_log_g));
    CHECK(std::isfinite(tr.measured_constant));
    CHECK_NOTHROW(pseudo_distribution_of(tr.final.pruned()));
  }
}

TEST_CASE("rounding solver optima keeps the loss within a small constant") {
  std::mt19937_64 rng(14);
  double worst = 0.0;
  for (int t = 0; t < 60; ++t) {
    const Profile p = testgen::random_profile(rng, 1 + t % 4, 6, 3);
    const std::size_t n = std::max<std::size_t>(p.n(), 2);
    const ConvexSolution sol = maximize_log_g(p, build_discretization(n));
    const RoundingTrace tr = round_allocation(sol.s, 1.0 / std::sqrt(static_cast<double>(n)));
    CAPTURE(t);
    CHECK(rcheck::check_rounding(tr).empty());
    CHECK(tr.input_log_g == doctest::Approx(sol.log_g));
    CHECK(tr.final_log_g <= sol.upper_bound + 1e-9);
    worst = std::max(worst, tr.measured_constant);
  }
  CHECK(worst <= 10.0);
}

TEST_CASE("loss scale follows its definition") {
  const Profile p({1, 2}, {2, 1});
  const DiscretizationSet r = build_discretization(4);
  const ConvexSolution sol = maximize_log_g(p, r);
  const double gamma = 0.5;
  const RoundingTrace tr = round_allocation(sol.s, gamma);
  const double l = static_cast<double>(r.size()), k = 2.0;
  const double delta = std::max({sol.s.total(), l * k, 2.0});
  CHECK(tr.delta == doctest::Approx(delta));
  CHECK(tr.loss_scale == doctest::Approx((2.0 + l + k + 0.5 * 4.0) * std::log(delta)));
  CHECK(tr.measured_constant == doctest::Approx(tr.total_drop() / tr.loss_scale));
  CHECK(tr.total_drop() == doctest::Approx(tr.input_log_g - tr.final_log_g));
}
