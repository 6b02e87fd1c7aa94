#pragma once

#include <span>
#include <vector>

#include "detcal/kde_ce.hpp"
#include "detcal/matching.hpp"

namespace detcal {

/// M equal-width bins on [0,1]: [m/M, (m+1)/M), the last bin closed.
struct BinningConfig {
  int num_bins = 20;

  void validate() const;
  int bin_of(double score) const noexcept;
};

inline constexpr int kDeceBins = 20;
inline constexpr int kLaeceBins = 25;

/// Detection ECE: sum_m |D_m|/|D| * |precision(m) - confidence(m)|.
/// Correctness must be binary.
double d_ece(std::span<const CalibrationSample> samples, const BinningConfig &cfg);

/// Localization-aware ECE, averaged over classes that have samples:
///   sum_m |D_m^k|/|D^k| * |precision^k(m) * IoU^k(m) - confidence^k(m)|
/// where precision is the matched fraction and IoU the mean similarity of
/// the matched samples in the bin. Only classes listed in `categories` are
/// considered; an empty list means every class present.
double la_ece(std::span<const MatchedSample> samples, std::span<const CategoryId> categories,
              const BinningConfig &cfg);

/// Mean |s - y| with binary y (stored in correctness).
double d_cls(std::span<const CalibrationSample> samples);

/// Mean |L - s|.
double d_det(std::span<const MatchedSample> samples);

struct TemperatureSearch {
  double lower = 0.05;
  double upper = 20.0;
  double tolerance = 1e-4;
  double clamp_eps = kDefaultClamp;
};

/// Binary negative log-likelihood of logistic(logit(s)/t) against y.
double temperature_nll(std::span<const CalibrationSample> samples, double temperature,
                       double clamp_eps = kDefaultClamp);

/// Golden-section minimizer of temperature_nll over [lower, upper].
/// Both label values must be present.
double fit_temperature(std::span<const CalibrationSample> samples,
                       const TemperatureSearch &search = {});

} // namespace detcal
