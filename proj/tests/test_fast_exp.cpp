#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "detcal/detail/fast_exp.hpp"

using detcal::detail::fast_exp_nonpositive;

TEST_CASE("polynomial exp against std::exp") {
  CHECK(fast_exp_nonpositive(0.0) == 1.0);
  CHECK(fast_exp_nonpositive(-std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> wide(-708.0, 0.0);
  std::uniform_real_distribution<double> narrow(-1.0, 0.0);
  double worst = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double x = i % 2 ? wide(rng) : narrow(rng);
    const double ref = std::exp(x);
    worst = std::max(worst, std::fabs(fast_exp_nonpositive(x) - ref) / ref);
  }
  CHECK(worst < 4e-16);

  SUBCASE("underflow is exactly zero") {
    CHECK(fast_exp_nonpositive(-708.5) == 0.0);
    CHECK(fast_exp_nonpositive(-1e300) == 0.0);
    CHECK(fast_exp_nonpositive(-std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(fast_exp_nonpositive(-708.0) > 0.0);
  }
}
