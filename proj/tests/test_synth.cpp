#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "detcal/binned.hpp"
#include "detcal/error.hpp"
#include "detcal/synth.hpp"

using namespace detcal;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct MonteCarlo {
  double mean;
  double standard_error;
};

// E|s1 - s2| for u ~ U(0,1), by plain sampling.
MonteCarlo monte_carlo_truth(double t1, double t2, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = unit(rng);
    if (u <= 0.0)
      continue;
    const double s1 = logistic(logit(u) / t1);
    const double s2 = logistic(logit(s1) / t2);
    const double d = std::fabs(s1 - s2);
    sum += d;
    sq += d * d;
  }
  const double mean = sum / n;
  return {mean, std::sqrt((sq / n - mean * mean) / n)};
}

} // namespace

TEST_CASE("temperature scaling") {
  CHECK(temperature_scale(0.3, 1.0) == doctest::Approx(0.3).epsilon(1e-15));
  for (double t : {0.2, 0.6, 3.0})
    CHECK(temperature_scale(0.5, t) == 0.5);
  CHECK(temperature_scale(0.8, 0.5) == doctest::Approx(0.64 / 0.68).epsilon(1e-14));
  CHECK(temperature_scale(1e-300, 0.5) >= 0.0);
  CHECK_THROWS_AS(temperature_scale(0.0, 0.6), ValidationError);
  CHECK_THROWS_AS(temperature_scale(1.0, 0.6), ValidationError);
  CHECK_THROWS_AS(temperature_scale(0.5, 0.0), ValidationError);
}

TEST_CASE("generated data") {
  SynthConfig cfg;
  cfg.n = 5000;
  cfg.seed = 12;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  REQUIRE(a.size() == 5000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].score == b[i].score);
    REQUIRE(a[i].correctness == b[i].correctness);
    CHECK(a[i].score > 0.0);
    CHECK(a[i].score < 1.0);
    CHECK((a[i].correctness == 0.0 || a[i].correctness == 1.0));
  }
  cfg.seed = 13;
  CHECK(generate(cfg)[0].score != a[0].score);

  SUBCASE("labels follow the undistorted score") {
    // E[z | s2] = logistic(t2 * logit(s2)); compare mean z with mean s1.
    double z = 0.0, s1 = 0.0;
    for (const auto &x : a) {
      z += x.correctness;
      s1 += logistic(cfg.t2 * logit(x.score));
    }
    const double n = static_cast<double>(a.size());
    CHECK(std::fabs(z / n - s1 / n) < 4.0 * std::sqrt(0.25 / n));
  }
  SUBCASE("continuous variant shares the scores") {
    cfg.seed = 12;
    const auto c = generate_continuous(cfg);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(c[i].score == a[i].score);
      REQUIRE(c[i].correctness >= 0.0);
      REQUIRE(c[i].correctness <= 1.0);
      diff += c[i].correctness - logistic(cfg.t2 * logit(c[i].score));
    }
    CHECK(std::fabs(diff / static_cast<double>(a.size())) < 0.01);
  }
  SUBCASE("validation") {
    SynthConfig bad;
    bad.n = 0;
    CHECK_THROWS_AS(generate(bad), ValidationError);
    bad = SynthConfig{};
    bad.t1 = -1.0;
    CHECK_THROWS_AS(generate(bad), ValidationError);
  }
}

TEST_CASE("ground truth calibration error") {
  CHECK(ground_truth_ce(0.6, 1.0) == 0.0);
  CHECK(ground_truth_ce(0.6, 0.6) == doctest::Approx(0.0607).epsilon(0.002 / 0.0607));
  CHECK(ground_truth_ce(0.6, 0.6) == ground_truth_ce(0.6, 0.6));
  for (auto [t1, t2] : {std::pair{0.6, 0.6}, std::pair{1.0, 0.5}, std::pair{2.0, 1.5},
                        std::pair{0.3, 0.8}}) {
    const auto mc = monte_carlo_truth(t1, t2, 400000, 77);
    CHECK(std::fabs(ground_truth_ce(t1, t2) - mc.mean) <= 3.0 * mc.standard_error);
  }
  CHECK_THROWS_AS(ground_truth_ce(0.0, 0.6), ValidationError);
}

TEST_CASE("estimator names") {
  CHECK(parse_estimator("kde_threshold") == Estimator::KdeThreshold);
  CHECK(parse_estimator("laece") == Estimator::Laece);
  CHECK(std::string(to_string(Estimator::Dece)) == "dece");
  CHECK(parse_estimators("").empty());
  CHECK(parse_estimators("dece,kde_identity") ==
        std::vector<Estimator>{Estimator::Dece, Estimator::KdeIdentity});
  CHECK(parse_estimators("dece,dece").size() == 1);
  CHECK_THROWS_AS(parse_estimator("ece"), ValidationError);
  CHECK_THROWS_AS(parse_estimators("dece,,laece"), ValidationError);
}

// Mean D-ECE over the default five seeds should fall at every step of the
// sample-size grid. Registered as its own ctest entry.
TEST_CASE("D-ECE curve shape over sample sizes") {
  ConvergenceConfig cfg;
  cfg.ns = {100, 500, 1000, 3000, 5000, 8000, 10000};
  cfg.seeds = {0, 1, 2, 3, 4};
  cfg.estimators = {Estimator::Dece};
  const auto rows = convergence_experiment(cfg);
  std::vector<double> means;
  for (const auto &r : rows)
    if (r.estimator == "dece")
      means.push_back(r.mean);
  REQUIRE(means.size() == cfg.ns.size());
  for (std::size_t i = 1; i < means.size(); ++i)
    CHECK(means[i] < means[i - 1]);
}

TEST_CASE("convergence experiment") {
  SUBCASE("no estimators leaves only the ground truth") {
    ConvergenceConfig cfg;
    cfg.ns = {100};
    cfg.seeds = {1, 2};
    const auto rows = convergence_experiment(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].estimator == "ground_truth");
    CHECK(rows[0].mean == ground_truth_ce(0.6, 0.6));
    CHECK(rows[0].ci95 == 0.0);
  }
  SUBCASE("a single seed has a zero-width interval") {
    ConvergenceConfig cfg;
    cfg.ns = {300};
    cfg.seeds = {5};
    cfg.estimators = {Estimator::KdeThreshold, Estimator::Dece, Estimator::Laece,
                      Estimator::KdeIdentity};
    const auto rows = convergence_experiment(cfg);
    REQUIRE(rows.size() == 5);
    for (const auto &r : rows) {
      CHECK(r.ci95 == 0.0);
      CHECK(r.mean >= 0.0);
      CHECK(r.mean <= 1.0);
    }
    SynthConfig sc;
    sc.n = 300;
    sc.seed = 5;
    CHECK(rows[2].estimator == "dece");
    CHECK(rows[2].mean == d_ece(generate(sc), BinningConfig{20}));
  }
  SUBCASE("csv output") {
    std::vector<ConvergenceRow> rows{{100, "ground_truth", 0.25, 0.0, 0.0, {}},
                                     {100, "dece", 0.5, 0.125, 0.0, {}}};
    std::ostringstream out;
    write_convergence_csv(out, rows);
    CHECK(out.str() == "n,estimator,mean,ci95\n100,ground_truth,0.25,0\n100,dece,0.5,0.125\n");
  }
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 0.0, 123456.789})
    CHECK(std::stod(format_double(v)) == v);
}
