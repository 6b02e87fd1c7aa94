#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace detcal {

/// (confidence, correctness) pair: s in [0,1], z = psi(L) in [0,1].
struct CalibrationSample {
  double score = 0.0;
  double correctness = 0.0;
};

inline constexpr double kDefaultClamp = 1e-4;

struct KdeConfig {
  double bandwidth = 0.1;
  /// Scores are clamped to [clamp_eps, 1 - clamp_eps] before any kernel
  /// evaluation.
  double clamp_eps = kDefaultClamp;
  /// When set and exceeded, estimates run on a seeded uniform subsample
  /// drawn without replacement.
  std::optional<std::size_t> max_samples;
  std::uint64_t seed = 0;
  /// 1 runs the deterministic sequential path; 0 uses all hardware threads.
  unsigned threads = 1;

  void validate() const;
};

double clamp_score(double s, double eps) noexcept;

/// Log-density at `s_eval` of Beta(s_center/b + 1, (1 - s_center)/b + 1).
double log_beta_kernel(double s_eval, double s_center, double bandwidth);
double beta_kernel(double s_eval, double s_center, double bandwidth);

/// 32 log-spaced bandwidths in [1e-3, 0.5].
std::vector<double> default_bandwidth_grid();

/// Leave-one-out log-likelihood sum_v log( 1/(w-1) sum_{u!=v} k(s_v, s_u) ).
/// Scores are clamped with `eps` first.
double loo_log_likelihood(std::span<const double> scores, double bandwidth,
                          double eps = kDefaultClamp, unsigned threads = 1);

/// Grid element maximizing loo_log_likelihood; ties go to the smaller
/// bandwidth.
double loo_mle_bandwidth(std::span<const double> scores, std::span<const double> grid,
                         double eps = kDefaultClamp, unsigned threads = 1);

/// LOO-MLE over the default grid using the samples' scores.
double select_bandwidth(std::span<const CalibrationSample> samples, double eps = kDefaultClamp,
                        unsigned threads = 1);

/// Kernel-weighted mean of correctness at `s_query` (no sample left out).
double conditional_expectation(std::span<const CalibrationSample> samples, double s_query,
                               const KdeConfig &cfg);

struct CeEstimate {
  double value = 0.0;
  std::size_t samples = 0; ///< number of samples the estimate used
  bool subsampled = false;
};

/// Leave-one-out KDE calibration error
///   (1/w) sum_v | sum_{u!=v} k(s_v,s_u) z_u / sum_{u!=v} k(s_v,s_u) - s_v |.
/// Requires w >= 2. The result does not depend on sample order.
CeEstimate estimate_ce(std::span<const CalibrationSample> samples, const KdeConfig &cfg);

struct CeGradient {
  double value = 0.0;
  /// d CE / d score for every input sample (input order). Entries for
  /// samples left out by subsampling, or clamped away, are 0.
  std::vector<double> gradient;
  std::size_t samples = 0;
  bool subsampled = false;
};

/// estimate_ce plus its analytic gradient with respect to every score,
/// holding correctness values and the bandwidth fixed. At kinks of the
/// absolute value the subgradient uses sign(0) = 0.
CeGradient estimate_ce_gradient(std::span<const CalibrationSample> samples,
                                const KdeConfig &cfg);

/// k distinct indices in [0, n), ascending, drawn uniformly by a seeded
/// partial Fisher-Yates shuffle.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

} // namespace detcal
