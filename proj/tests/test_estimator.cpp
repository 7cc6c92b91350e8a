#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pmlperm/errors.hpp"
#include "pmlperm/estimator.hpp"

using namespace pmlperm;

namespace {

std::vector<int> sorted_freqs(const Profile& p) {
  std::vector<int> out;
  for (std::size_t j = 0; j < p.k(); ++j)
    for (std::size_t c = 0; c < p.counts()[j]; ++c) out.push_back(static_cast<int>(p.freqs()[j]));
  return out;
}

double enumerated_log_probability(const PseudoDistribution& q, const Profile& p) {
  return std::log(oracle::enumerate_profile_probability(q.probs(), sorted_freqs(p), p.n()));
}

}  // namespace

TEST_CASE("all_profiles lists every partition once") {
  for (std::size_t n = 1; n <= 9; ++n)
    for (std::size_t d = 1; d <= 5; ++d) {
      const auto ps = all_profiles(n, d);
      const auto ref = oracle::all_count_profiles(n, d);
      REQUIRE(ps.size() == ref.size());
      std::vector<std::vector<int>> got;
      for (const auto& p : ps) {
        CHECK(p.n() == n);
        CHECK(p.distinct() <= d);
        got.push_back(sorted_freqs(p));
      }
      std::sort(got.begin(), got.end());
      auto want = ref;
      std::sort(want.begin(), want.end());
      CHECK(got == want);
    }
}

TEST_CASE("approximate PML on a single observation") {
  const auto r = approximate_pml(profile_of_string("a"));
  CHECK(r.log_profile_probability == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.probability_exact);
  CHECK(r.params.n == 1);
  CHECK(r.distribution.mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("approximate PML output is a distribution on shrunken grid values") {
  for (const char* s : {"ab", "aab", "abbc", "aaabbc", "abcdefgh", "aaaaabbbcd"}) {
    const Profile p = profile_of_string(s);
    const auto r = approximate_pml(p);
    CAPTURE(s);
    CHECK(r.converged);
    CHECK(std::abs(r.distribution.mass() - 1.0) <= 1e-12);
    CHECK(r.distribution.support_size() == r.distribution.size());
    CHECK(std::isfinite(r.log_profile_probability));
    CHECK(r.log_profile_probability <= 1e-12);
    CHECK(r.params.gamma == doctest::Approx(1.0 / std::sqrt(static_cast<double>(p.n()))));
    CHECK(r.params.k == p.k());
    const double floor_level = r.trace.final.levels()[r.params.levels - 1];
    for (double v : r.distribution.probs()) CHECK(v >= floor_level * (1.0 - 1e-12));
    if (std::pow(static_cast<double>(r.distribution.size()), static_cast<double>(p.n())) < 2e6)
      CHECK(r.log_profile_probability ==
            doctest::Approx(enumerated_log_probability(r.distribution, p)).epsilon(1e-9));
  }
}

TEST_CASE("approximate PML on two singletons beats the two-symbol uniform") {
  const auto r = approximate_pml(Profile({1}, {2}));
  CHECK(r.log_profile_probability >= std::log(0.5));
}

TEST_CASE("approximate PML honours overrides and rejects bad ones") {
  const Profile p = profile_of_string("aabbbc");
  PmlOptions opt;
  opt.eps = 0.5;
  opt.gamma = 0.3;
  const auto r = approximate_pml(p, opt);
  CHECK(r.params.eps == 0.5);
  CHECK(r.params.gamma == 0.3);
  CHECK(r.trace.gamma == 0.3);
  CHECK_THROWS_AS(approximate_pml(Profile{}), InvalidArgument);
  opt.gamma = 0.0;
  CHECK_THROWS_AS(approximate_pml(p, opt), InvalidArgument);
  opt.gamma = 1.0;
  CHECK_THROWS_AS(approximate_pml(p, opt), InvalidArgument);
  opt.gamma.reset();
  opt.eps = 0.0;
  CHECK_THROWS_AS(approximate_pml(p, opt), InvalidArgument);
}

TEST_CASE("approximate PML is deterministic") {
  const Profile p = profile_of_string("aaabbcdde");
  const auto a = approximate_pml(p), b = approximate_pml(p);
  CHECK(a.distribution == b.distribution);
  CHECK(a.log_profile_probability == b.log_profile_probability);
}

TEST_CASE("exact work budget falls back to the lower bound") {
  const Profile p = profile_of_string("aaabbccdefg");
  const PseudoDistribution q({0.3, 0.2, 0.2, 0.1, 0.1, 0.05, 0.05});
  CHECK_THROWS_AS(profile_probability(q, p, 3), SizeLimitError);
  CHECK(profile_probability(q, p, 1'000'000) == profile_probability(q, p));

  PmlOptions opt;
  opt.exact_work = 1;
  const auto lo = approximate_pml(p, opt);
  const auto ex = approximate_pml(p);
  CHECK_FALSE(lo.probability_exact);
  CHECK(ex.probability_exact);
  CHECK(lo.distribution == ex.distribution);
  CHECK(lo.log_profile_probability <= ex.log_profile_probability + 1e-9);
  CHECK(std::isfinite(lo.log_profile_probability));
}

TEST_CASE("profile probability lower bound never exceeds the exact value") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double worst = -1.0;
  for (int t = 0; t < 1500; ++t) {
    const std::size_t n = 1 + rng() % 10;
    const auto ps = all_profiles(n, 6);
    const Profile& p = ps[rng() % ps.size()];
    std::vector<double> q(p.distinct() + rng() % 4);
    for (std::size_t x = 0; x < q.size(); ++x) q[x] = (x > 0 && rng() % 4 == 0) ? q[x - 1] : u(rng);
    double s = 0.0;
    for (double v : q) s += v;
    const double mass = rng() % 2 ? 1.0 : 0.7;
    for (double& v : q) v *= mass / s;
    const PseudoDistribution qd(q);
    const double exact = profile_probability(qd, p);
    const double lb = profile_probability_lower_bound(qd, p);
    CHECK(lb <= exact + 1e-9);
    worst = std::max(worst, lb - exact);
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("profile probability lower bound on degenerate inputs") {
  const Profile p = profile_of_string("abc");
  CHECK_THROWS_AS(profile_probability_lower_bound(PseudoDistribution({0.5, 0.5}), p),
                  DimensionError);
  CHECK(profile_probability_lower_bound(PseudoDistribution({0.5, 0.5, 0.0}), p) ==
        -std::numeric_limits<double>::infinity());
  const Profile single = profile_of_string("ab");
  const PseudoDistribution half({0.5, 0.5});
  CHECK(profile_probability_lower_bound(half, single) <= std::log(0.5));
}

TEST_CASE("oracle on hand examples") {
  SUBCASE("one symbol seen twice is a point mass") {
    const auto o = exact_pml_oracle(Profile({2}, {1}));
    CHECK(o.log_probability == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(o.distribution.support_size() == 1);
  }
  SUBCASE("two singletons over support four") {
    const auto o = exact_pml_oracle(Profile({1}, {2}), 4, 0.05);
    CHECK(o.max_support == 4);
    CHECK(o.log_probability == doctest::Approx(std::log(0.75)).epsilon(1e-12));
    CHECK(o.distribution.probs() == std::vector<double>{0.25, 0.25, 0.25, 0.25});
    // 0.25 is off the 0.02 grid; the best grid point sits just below.
    const auto fine = exact_pml_oracle(Profile({1}, {2}), 4);
    CHECK(fine.log_probability < std::log(0.75));
    CHECK(fine.log_probability > std::log(0.75) - 1e-3);
  }
  SUBCASE("two singletons over support two") {
    const auto o = exact_pml_oracle(Profile({1}, {2}), 2);
    CHECK(o.log_probability == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  }
  SUBCASE("two pairs") {
    const Profile p = profile_of_string("aabb");
    const auto o = exact_pml_oracle(p, 4);
    CHECK(o.log_probability >= std::log(0.375) - 1e-12);
    CHECK(o.log_probability ==
          doctest::Approx(enumerated_log_probability(o.distribution, p)).epsilon(1e-10));
    const auto two = exact_pml_oracle(p, 2);
    CHECK(two.log_probability == doctest::Approx(std::log(0.375)).epsilon(1e-12));
    CHECK(o.log_probability >= two.log_probability);
  }
}

TEST_CASE("oracle value is attained by its argmax and dominates every grid point") {
  const Profile p = profile_of_string("aab");
  const auto o = exact_pml_oracle(p, 3, 0.05);
  CHECK(o.log_probability ==
        doctest::Approx(enumerated_log_probability(o.distribution, p)).epsilon(1e-10));
  std::size_t seen = 0;
  for (int a = 1; a <= 20; ++a)
    for (int b = 0; b <= 20 - a; ++b) {
      const int c = 20 - a - b;
      std::vector<double> q{a / 20.0, b / 20.0, c / 20.0};
      ++seen;
      CHECK(enumerated_log_probability(PseudoDistribution(q), p) <= o.log_probability + 1e-10);
    }
  CHECK(seen > o.candidates);
}

TEST_CASE("oracle guards") {
  CHECK_THROWS_AS(exact_pml_oracle(Profile{}), InvalidArgument);
  CHECK_THROWS_AS(exact_pml_oracle(Profile({13}, {1})), SizeLimitError);
  CHECK_THROWS_AS(exact_pml_oracle(Profile({1}, {2}), 9), SizeLimitError);
  CHECK_THROWS_AS(exact_pml_oracle(Profile({1}, {3}), 2), InvalidArgument);
  CHECK_THROWS_AS(exact_pml_oracle(Profile({1}, {2}), 4, 0.03), InvalidArgument);
  CHECK(exact_pml_oracle(Profile({1}, {3})).max_support == 6);
  CHECK(exact_pml_oracle(Profile({1}, {5})).max_support == 8);
}

TEST_CASE("approximate PML against the oracle on short samples") {
  const Profile p = profile_of_string("aab");
  const auto r = approximate_pml(p);
  const auto o = exact_pml_oracle(p);
  CHECK(r.log_profile_probability >= std::log(0.25) + o.log_probability);
  for (std::size_t n = 1; n <= 4; ++n)
    for (const auto& q : all_profiles(n, 3)) {
      const auto a = approximate_pml(q);
      CHECK(a.log_profile_probability >= std::log(0.1) + exact_pml_oracle(q).log_probability);
    }
}

TEST_CASE("normalizing a pseudo-distribution never lowers the profile probability") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 300; ++t) {
    const auto ps = all_profiles(1 + rng() % 6, 4);
    const Profile& p = ps[rng() % ps.size()];
    std::vector<double> q(p.distinct() + rng() % 3);
    double s = 0.0;
    for (double& v : q) s += (v = u(rng));
    const double mass = 0.2 + 0.8 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (double& v : q) v *= mass / s;
    const PseudoDistribution pseudo(q);
    CHECK(profile_probability(pseudo.normalized(), p) >= profile_probability(pseudo, p) - 1e-12);
  }
}

TEST_CASE("plug-in properties") {
  const PseudoDistribution uniform4({0.25, 0.25, 0.25, 0.25});
  CHECK(estimate_property(uniform4, Property::entropy).value ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(estimate_property(uniform4, Property::distance_to_uniformity).value == 0.0);

  const PseudoDistribution point({1.0, 0.0});
  CHECK(estimate_property(point, Property::entropy).value == 0.0);
  CHECK(estimate_property(point, Property::support_size).value == 1.0);
  CHECK(estimate_property(point, Property::distance_to_uniformity).value == 0.0);

  const PseudoDistribution half({0.5, 0.5});
  CHECK(estimate_property(half, Property::support_coverage, 2).value ==
        doctest::Approx(1.5).epsilon(1e-15));

  const PseudoDistribution skew({0.7, 0.2, 0.1});
  CHECK(estimate_property(skew, Property::distance_to_uniformity).value ==
        doctest::Approx(2.0 * (0.7 - 1.0 / 3.0)).epsilon(1e-14));

  const auto r = approximate_pml(profile_of_string("aabcd"));
  CHECK(estimate_property(r, Property::support_coverage).value ==
        doctest::Approx(estimate_property(r.distribution, Property::support_coverage, 5).value));
  for (Property w : {Property::entropy, Property::support_size, Property::support_coverage,
                     Property::distance_to_uniformity}) {
    CHECK(property_from_string(to_string(w)) == w);
    const double v = estimate_property(r, w).value;
    CHECK(v >= 0.0);
    if (w == Property::support_size) CHECK(v == std::round(v));
    if (w == Property::distance_to_uniformity) CHECK(v <= 2.0);
  }
  CHECK_THROWS_AS(property_from_string("variance"), InvalidArgument);
}
