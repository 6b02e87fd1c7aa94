#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "detcal/kde_ce.hpp"

namespace detcal {

/// logistic(logit(s) / t). Requires s in (0, 1) and t > 0.
double temperature_scale(double s, double t);

struct SynthConfig {
  std::size_t n = 10000;
  double t1 = 0.6;
  double t2 = 0.6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Synthetic miscalibration benchmark.
///
/// u_i ~ U(0,1) (stream 0), s1_i = temperature_scale(u_i, t1), a label
/// z_i ~ Bernoulli(s1_i) (stream 1), and the reported score
/// s2_i = temperature_scale(s1_i, t2). The labels are calibrated for s1, so
/// E[z | s2] = logistic(t2 * logit(s2)).
std::vector<CalibrationSample> generate(const SynthConfig &cfg);

/// Same scores as `generate`, with continuous correctness instead of a
/// label: L_i is uniform on [s1_i - m_i, s1_i + m_i], m_i = min(s1_i, 1 - s1_i)
/// (stream 2). E[L | s2] = s1 as well, so the ground truth is unchanged,
/// while L carries noise like a real IoU.
std::vector<CalibrationSample> generate_continuous(const SynthConfig &cfg);

/// True calibration error E|s1(u) - s2(u)| for u ~ U(0,1), by adaptive
/// tanh-sinh quadrature split at u = 1/2.
double ground_truth_ce(double t1, double t2);

enum class Estimator { KdeThreshold, KdeIdentity, Dece, Laece };

const char *to_string(Estimator e) noexcept;
/// Accepts kde_threshold, kde_identity, dece, laece.
Estimator parse_estimator(std::string_view name);
/// Comma-separated list; empty string gives an empty list.
std::vector<Estimator> parse_estimators(std::string_view list);

struct ConvergenceRow {
  std::size_t n = 0;
  std::string estimator; ///< estimator name or "ground_truth"
  double mean = 0.0;
  double ci95 = 0.0;            ///< normal-approximation half-width over seeds
  double mean_abs_error = 0.0;  ///< mean |estimate - ground truth| over seeds
  std::vector<double> values;   ///< per-seed estimates
};

struct ConvergenceConfig {
  std::vector<std::size_t> ns;
  std::vector<std::uint64_t> seeds;
  std::vector<Estimator> estimators;
  double t1 = 0.6;
  double t2 = 0.6;
  unsigned threads = 1;
};

/// For every n and seed, generates a dataset and evaluates each estimator.
/// KDE estimators use a leave-one-out MLE bandwidth per dataset; D-ECE uses
/// 20 bins and LaECE 25 bins on the continuous-correctness variant. Rows
/// are ordered by n, then the ground-truth row, then estimators in the
/// requested order.
std::vector<ConvergenceRow> convergence_experiment(const ConvergenceConfig &cfg);

/// CSV with header `n,estimator,mean,ci95`.
void write_convergence_csv(std::ostream &out, const std::vector<ConvergenceRow> &rows);
void write_convergence_json(std::ostream &out, const std::vector<ConvergenceRow> &rows,
                            const ConvergenceConfig &cfg);

/// Shortest round-trip decimal form, locale independent.
std::string format_double(double v);

} // namespace detcal
