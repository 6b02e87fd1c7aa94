#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "detcal/kde_ce.hpp"
#include "detcal/links.hpp"
#include "detcal/matching.hpp"

namespace detcal {

struct BandwidthPolicy {
  bool automatic = true; ///< leave-one-out MLE over the default grid
  double value = 0.1;    ///< used when not automatic
  bool shared = false;   ///< one automatic bandwidth pooled over all classes

  std::string describe() const;
};

struct ReportConfig {
  /// Link for the CE_link entry. The CE@tau family always uses
  /// threshold:tau.
  LinkSpec link = LinkSpec::threshold(0.5);
  double score_threshold = 0.5;
  BandwidthPolicy bandwidth;
  int dece_bins = 20;
  int laece_bins = 25;
  Similarity similarity = Similarity::IoU;
  double clamp_eps = kDefaultClamp;
  std::optional<std::size_t> max_samples;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<std::set<CategoryId>> categories;
  /// Fixed timestamp for reproducible output; current UTC time otherwise.
  std::optional<std::string> timestamp;
};

/// The ten COCO matching thresholds .50:.05:.95.
std::vector<double> coco_iou_thresholds();

struct Fingerprint {
  std::string link;
  double gamma = 0.0;
  std::vector<double> taus;
  int bins = 0; ///< 0 for kernel estimates
  std::string bandwidth;
  std::size_t samples = 0;
  std::size_t classes = 0;

  /// Canonical string; equal ids mean equal computations.
  std::string id() const;
  friend bool operator==(const Fingerprint &, const Fingerprint &) = default;
};

struct MetricEntry {
  std::string name;
  std::optional<double> value; ///< empty when the metric is absent
  std::string absent_reason;
  Fingerprint fingerprint;

  friend bool operator==(const MetricEntry &, const MetricEntry &) = default;
};

struct SkippedClass {
  CategoryId category_id = 0;
  std::size_t samples = 0;
  friend bool operator==(const SkippedClass &, const SkippedClass &) = default;
};

struct CalibrationReport {
  std::vector<MetricEntry> metrics;
  std::vector<CategoryId> categories; ///< classes with at least 2 samples
  std::vector<SkippedClass> skipped;  ///< classes with fewer than 2 samples
  std::size_t sample_count = 0;       ///< detections surviving the score threshold
  std::string timestamp;

  const MetricEntry *find(std::string_view name) const;
  friend bool operator==(const CalibrationReport &, const CalibrationReport &) = default;
};

/// Computes CE@tau for every COCO threshold and their mean CE, CE50, CE75,
/// CE_S/M/L, D-ECE50, D-ECE, LaECE and CE_link. Every estimate is computed
/// per class and averaged without weights over classes with at least two
/// samples; a metric with no such class is absent, never 0.
CalibrationReport evaluate_report(const std::vector<Detection> &dets,
                                  const std::vector<GroundTruthBox> &gts,
                                  const ReportConfig &cfg);

struct SweepRow {
  double gamma = 0.0;
  std::size_t samples = 0;
  std::optional<double> ce;
};

std::vector<SweepRow> sweep_gamma(const std::vector<Detection> &dets,
                                  const std::vector<GroundTruthBox> &gts,
                                  const std::vector<double> &gammas, const ReportConfig &cfg);

/// Canonical JSON: sorted keys, metrics in evaluation order.
std::string report_to_json(const CalibrationReport &report);
CalibrationReport report_from_json(const std::string &text);
/// One metric per row with flattened fingerprint columns.
void write_report_csv(std::ostream &out, const CalibrationReport &report);

std::string sweep_to_json(const std::vector<SweepRow> &rows);
void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows);

} // namespace detcal
