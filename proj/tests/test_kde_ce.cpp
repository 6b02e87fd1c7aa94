#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "detcal/error.hpp"
#include "detcal/kde_ce.hpp"
#include "oracle.hpp"

using namespace detcal;

namespace {

KdeConfig with_bandwidth(double b) {
  KdeConfig cfg;
  cfg.bandwidth = b;
  return cfg;
}

double central_difference(std::vector<CalibrationSample> samples, std::size_t i,
                          const KdeConfig &cfg, double h) {
  const double s = samples[i].score;
  samples[i].score = s + h;
  const double up = estimate_ce(samples, cfg).value;
  samples[i].score = s - h;
  const double down = estimate_ce(samples, cfg).value;
  return (up - down) / (2.0 * h);
}

} // namespace

TEST_CASE("beta kernel closed forms") {
  CHECK(beta_kernel(0.5, 0.5, 0.5) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(beta_kernel(0.5, 0.5, 1.0) == doctest::Approx(4.0 / std::numbers::pi).epsilon(1e-14));
  CHECK(beta_kernel(1e-9, 0.5, 0.5) < 1e-8);
  CHECK(beta_kernel(0.0, 0.5, 0.5) == 0.0);
  // The kernel integrates to 1 over its evaluation argument.
  double integral = 0.0;
  const int steps = 20000;
  for (int i = 0; i < steps; ++i)
    integral += beta_kernel((i + 0.5) / steps, 0.3, 0.05) / steps;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(beta_kernel(0.5, 0.5, 0.0), ValidationError);
  CHECK_THROWS_AS(beta_kernel(0.5, 0.5, -1.0), ValidationError);
}

TEST_CASE("beta kernel agrees with the Boost density") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  for (int i = 0; i < 200; ++i) {
    const double e = unit(rng), c = unit(rng), b = std::exp(unit(rng) * -6.0);
    const double ref = static_cast<double>(oracle::kernel(e, c, b));
    CHECK(beta_kernel(e, c, b) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("default bandwidth grid") {
  const auto grid = default_bandwidth_grid();
  REQUIRE(grid.size() == 32);
  CHECK(grid.front() == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(0.5).epsilon(1e-12));
  for (std::size_t i = 1; i < grid.size(); ++i)
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(std::pow(500.0, 1.0 / 31.0)).epsilon(1e-12));
}

TEST_CASE("leave-one-out bandwidth selection") {
  SUBCASE("a single candidate is returned") {
    const std::vector<double> scores{0.1, 0.4, 0.8};
    const std::vector<double> grid{0.1};
    CHECK(loo_mle_bandwidth(scores, grid) == 0.1);
  }
  SUBCASE("duplicate scores prefer the narrow kernel") {
    const std::vector<double> scores{0.5, 0.5};
    const std::vector<double> grid{0.01, 0.5};
    CHECK(oracle::loo_log_likelihood(scores, 0.01) > oracle::loo_log_likelihood(scores, 0.5));
    CHECK(loo_mle_bandwidth(scores, grid) == 0.01);
  }
  SUBCASE("log-likelihood agrees with the brute-force objective") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> scores(50);
    for (auto &s : scores)
      s = unit(rng);
    for (double b : {1e-3, 0.02, 0.1, 0.5})
      CHECK(loo_log_likelihood(scores, b) ==
            doctest::Approx(oracle::loo_log_likelihood(scores, b)).epsilon(1e-11));
  }
  SUBCASE("1000 uniform scores: argmax of the exhaustive objective") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> scores(1000);
    for (auto &s : scores)
      s = unit(rng);
    const auto grid = default_bandwidth_grid();
    double best = grid.front(), best_ll = -INFINITY;
    for (double b : grid) {
      const double ll = oracle::loo_log_likelihood(scores, b);
      if (ll > best_ll) {
        best_ll = ll;
        best = b;
      }
    }
    CHECK(loo_mle_bandwidth(scores, grid) == best);
  }
  SUBCASE("grid order does not matter") {
    const std::vector<double> scores{0.2, 0.25, 0.7, 0.72, 0.9};
    std::vector<double> grid = default_bandwidth_grid();
    const double forward = loo_mle_bandwidth(scores, grid);
    std::reverse(grid.begin(), grid.end());
    CHECK(loo_mle_bandwidth(scores, grid) == forward);
  }
  SUBCASE("errors") {
    const std::vector<double> one{0.5};
    const std::vector<double> two{0.3, 0.6};
    const std::vector<double> grid{0.1};
    const std::vector<double> bad{0.1, 0.0};
    const std::vector<double> empty;
    CHECK_THROWS_AS(loo_mle_bandwidth(one, grid), ValidationError);
    CHECK_THROWS_AS(loo_mle_bandwidth(two, bad), ValidationError);
    CHECK_THROWS_AS(loo_mle_bandwidth(two, empty), ValidationError);
  }
}

TEST_CASE("conditional expectation") {
  const auto cfg = with_bandwidth(0.1);
  SUBCASE("constant correctness") {
    const std::vector<CalibrationSample> s{{0.1, 0.3}, {0.5, 0.3}, {0.9, 0.3}};
    for (double q : {0.0, 0.2, 0.5, 1.0})
      CHECK(conditional_expectation(s, q, cfg) == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("single sample") {
    const std::vector<CalibrationSample> s{{0.2, 1.0}};
    for (double q : {0.01, 0.5, 0.99})
      CHECK(conditional_expectation(s, q, cfg) == 1.0);
  }
  SUBCASE("hand-picked samples against direct summation") {
    const std::vector<CalibrationSample> s{
        {0.12, 0.0}, {0.35, 1.0}, {0.5, 0.4}, {0.81, 1.0}, {0.93, 0.7}};
    for (double b : {0.02, 0.1, 0.4})
      for (double q : {0.05, 0.3, 0.6, 0.97})
        CHECK(std::fabs(conditional_expectation(s, q, with_bandwidth(b)) -
                        oracle::conditional_expectation(s, q, b)) <= 1e-12);
  }
  SUBCASE("far query with a tiny bandwidth stays finite") {
    const std::vector<CalibrationSample> s{{0.9, 1.0}, {0.95, 0.0}};
    const double r = conditional_expectation(s, 0.001, with_bandwidth(1e-3));
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(conditional_expectation({}, 0.5, cfg), ValidationError);
    const std::vector<CalibrationSample> s{{0.2, 1.0}};
    CHECK_THROWS_AS(conditional_expectation(s, 1.5, cfg), ValidationError);
  }
}

TEST_CASE("estimate_ce hand values") {
  const std::vector<CalibrationSample> pair{{0.5, 1.0}, {0.5, 0.0}};
  for (double b : {1e-3, 0.1, 0.5, 3.0})
    CHECK(estimate_ce(pair, with_bandwidth(b)).value == 0.5);

  for (double c : {0.2, 0.5, 0.77}) {
    std::vector<CalibrationSample> calibrated(17, CalibrationSample{c, c});
    CHECK(estimate_ce(calibrated, with_bandwidth(0.07)).value == 0.0);
  }
}

TEST_CASE("estimate_ce matches the double-loop oracle") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> size(2, 10);
  for (int trial = 0; trial < 50; ++trial) {
    const auto samples = oracle::random_samples(rng, size(rng), trial % 2 == 0);
    for (double b : {0.005, 0.05, 0.3}) {
      const double got = estimate_ce(samples, with_bandwidth(b)).value;
      CHECK(std::fabs(got - oracle::estimate_ce(samples, b)) <= 1e-12);
    }
  }
}

TEST_CASE("estimate_ce validation and subsampling") {
  CHECK_THROWS_AS(estimate_ce(std::vector<CalibrationSample>{{0.5, 1.0}}, with_bandwidth(0.1)),
                  ValidationError);
  const std::vector<CalibrationSample> pair{{0.5, 1.0}, {0.5, 0.0}};
  CHECK_THROWS_AS(estimate_ce(pair, with_bandwidth(0.0)), ValidationError);
  auto bad = with_bandwidth(0.1);
  bad.clamp_eps = 0.2;
  CHECK_THROWS_AS(estimate_ce(pair, bad), ValidationError);
  CHECK_THROWS_AS(estimate_ce(std::vector<CalibrationSample>{{0.5, 1.0}, {1.5, 0.0}},
                              with_bandwidth(0.1)),
                  ValidationError);
  CHECK_THROWS_AS(estimate_ce(std::vector<CalibrationSample>{{0.5, 1.0}, {0.5, -0.1}},
                              with_bandwidth(0.1)),
                  ValidationError);

  std::mt19937_64 rng(4);
  const auto samples = oracle::random_samples(rng, 300, true);
  auto cfg = with_bandwidth(0.05);
  cfg.max_samples = 40;
  cfg.seed = 9;
  const auto est = estimate_ce(samples, cfg);
  CHECK(est.subsampled);
  CHECK(est.samples == 40);
  std::vector<CalibrationSample> subset;
  for (auto i : subsample_indices(samples.size(), 40, 9))
    subset.push_back(samples[i]);
  CHECK(std::fabs(est.value - oracle::estimate_ce(subset, 0.05)) <= 1e-12);
  CHECK(estimate_ce(samples, cfg).value == est.value);

  cfg.max_samples = 1000;
  const auto full = estimate_ce(samples, cfg);
  CHECK_FALSE(full.subsampled);
  CHECK(full.samples == 300);
}

TEST_CASE("estimate_ce invariants") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    auto samples = oracle::random_samples(rng, 150, trial % 2 == 1);
    auto cfg = with_bandwidth(0.04);
    const double ref = estimate_ce(samples, cfg).value;
    CHECK(ref >= 0.0);
    CHECK(ref <= 1.0);

    std::shuffle(samples.begin(), samples.end(), rng);
    CHECK(estimate_ce(samples, cfg).value == ref);

    cfg.threads = 4;
    CHECK(estimate_ce(samples, cfg).value == ref);
  }
}

TEST_CASE("scores outside the clamp range behave like the clamp value") {
  const std::vector<CalibrationSample> raw{{0.0, 0.0}, {1e-6, 1.0}, {0.4, 1.0}, {1.0, 1.0}};
  const std::vector<CalibrationSample> clamped{
      {1e-4, 0.0}, {1e-4, 1.0}, {0.4, 1.0}, {1.0 - 1e-4, 1.0}};
  CHECK(estimate_ce(raw, with_bandwidth(0.1)).value ==
        estimate_ce(clamped, with_bandwidth(0.1)).value);
}

TEST_CASE("gradient hand values") {
  const std::vector<CalibrationSample> pair{{0.5, 1.0}, {0.5, 0.0}};
  const auto g = estimate_ce_gradient(pair, with_bandwidth(0.2));
  CHECK(g.value == 0.5);
  REQUIRE(g.gradient.size() == 2);
  CHECK(g.gradient[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.gradient[1] == doctest::Approx(-0.5).epsilon(1e-12));

  std::vector<CalibrationSample> calibrated(9, CalibrationSample{0.35, 0.35});
  const auto zero = estimate_ce_gradient(calibrated, with_bandwidth(0.1));
  CHECK(zero.value == 0.0);
  for (double d : zero.gradient)
    CHECK(d == 0.0);
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(8);
  int checked = 0;
  while (checked < 12) {
    const bool binary = checked % 2 == 0;
    const auto samples = oracle::random_samples(rng, 24, binary);
    const double b = checked % 3 == 0 ? 0.03 : 0.12;
    if (!oracle::away_from_kinks(samples, b, 1e-3))
      continue;
    ++checked;
    const auto cfg = with_bandwidth(b);
    const auto g = estimate_ce_gradient(samples, cfg);
    CHECK(g.value == estimate_ce(samples, cfg).value);
    std::vector<double> fd(samples.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      fd[i] = central_difference(samples, i, cfg, 1e-6);
      scale = std::max(scale, std::fabs(fd[i]));
    }
    for (std::size_t i = 0; i < samples.size(); ++i)
      CHECK(std::fabs(g.gradient[i] - fd[i]) <= 1e-4 * std::max(std::fabs(fd[i]), 1e-2 * scale));
  }
}

TEST_CASE("gradient bookkeeping") {
  std::mt19937_64 rng(17);
  auto samples = oracle::random_samples(rng, 40, true);
  const auto cfg = with_bandwidth(0.08);
  const auto g = estimate_ce_gradient(samples, cfg);

  SUBCASE("entries follow the input order") {
    std::vector<std::size_t> perm(samples.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<CalibrationSample> shuffled;
    for (auto i : perm)
      shuffled.push_back(samples[i]);
    const auto h = estimate_ce_gradient(shuffled, cfg);
    CHECK(h.value == g.value);
    for (std::size_t j = 0; j < perm.size(); ++j)
      CHECK(h.gradient[j] == g.gradient[perm[j]]);
  }
  SUBCASE("threads do not change the result beyond rounding") {
    auto par = cfg;
    par.threads = 3;
    const auto h = estimate_ce_gradient(samples, par);
    CHECK(h.value == g.value);
    for (std::size_t i = 0; i < samples.size(); ++i)
      CHECK(h.gradient[i] == doctest::Approx(g.gradient[i]).epsilon(1e-12));
  }
  SUBCASE("clamped scores get no gradient") {
    samples[0].score = 1.0;
    samples[1].score = 0.0;
    const auto h = estimate_ce_gradient(samples, cfg);
    CHECK(h.gradient[0] == 0.0);
    CHECK(h.gradient[1] == 0.0);
  }
  SUBCASE("subsampled-away samples get no gradient") {
    auto sub = cfg;
    sub.max_samples = 10;
    const auto h = estimate_ce_gradient(samples, sub);
    CHECK(h.subsampled);
    const auto kept = subsample_indices(samples.size(), 10, sub.seed);
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (std::find(kept.begin(), kept.end(), i) == kept.end()) {
        CHECK(h.gradient[i] == 0.0);
        ++zeros;
      }
    CHECK(zeros == 30);
  }
}

TEST_CASE("subsample indices") {
  const auto a = subsample_indices(100, 30, 5);
  CHECK(a.size() == 30);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
  CHECK(a.back() < 100);
  CHECK(a == subsample_indices(100, 30, 5));
  CHECK(a != subsample_indices(100, 30, 6));
  CHECK(subsample_indices(10, 10, 1).size() == 10);
  CHECK_THROWS_AS(subsample_indices(5, 6, 1), ValidationError);

  // Every index is equally likely to be drawn.
  std::vector<int> hits(20, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed)
    for (auto i : subsample_indices(20, 5, seed))
      ++hits[i];
  for (int h : hits)
    CHECK(std::abs(h - 1000) < 150);
}
