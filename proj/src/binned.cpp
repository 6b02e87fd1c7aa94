#include "detcal/binned.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "detcal/error.hpp"
#include "detcal/synth.hpp"

namespace detcal {

void BinningConfig::validate() const {
  if (num_bins < 1)
    throw ValidationError("number of bins must be at least 1, got " + std::to_string(num_bins));
}

int BinningConfig::bin_of(double score) const noexcept {
  const auto m = static_cast<int>(std::floor(score * num_bins));
  return std::clamp(m, 0, num_bins - 1);
}

namespace {

void require_binary(double z, std::size_t index, const char *what) {
  if (z != 0.0 && z != 1.0) {
    std::ostringstream msg;
    msg << what << " requires binary correctness; sample " << index << " has " << z;
    throw ValidationError(msg.str());
  }
}

void require_score(double s, std::size_t index) {
  if (!(s >= 0.0 && s <= 1.0)) {
    std::ostringstream msg;
    msg << "score of sample " << index << " must lie in [0, 1], got " << s;
    throw ValidationError(msg.str());
  }
}

struct BinStats {
  std::size_t count = 0;
  double score_sum = 0.0;
  double correct_sum = 0.0;
  std::size_t matched = 0;
  double matched_similarity_sum = 0.0;
};

double la_ece_one_class(const std::vector<const MatchedSample *> &members,
                        const BinningConfig &cfg) {
  std::vector<BinStats> bins(static_cast<std::size_t>(cfg.num_bins));
  for (const auto *s : members) {
    auto &b = bins[static_cast<std::size_t>(cfg.bin_of(s->score))];
    ++b.count;
    b.score_sum += s->score;
    if (s->matched) {
      ++b.matched;
      b.matched_similarity_sum += s->similarity;
    }
  }
  const auto total = static_cast<double>(members.size());
  double err = 0.0;
  for (const auto &b : bins) {
    if (b.count == 0)
      continue;
    const double n = static_cast<double>(b.count);
    const double precision = static_cast<double>(b.matched) / n;
    const double mean_iou =
        b.matched == 0 ? 0.0 : b.matched_similarity_sum / static_cast<double>(b.matched);
    err += n / total * std::fabs(precision * mean_iou - b.score_sum / n);
  }
  return err;
}

} // namespace

double d_ece(std::span<const CalibrationSample> samples, const BinningConfig &cfg) {
  cfg.validate();
  if (samples.empty())
    throw ValidationError("D-ECE needs at least one sample");
  std::vector<BinStats> bins(static_cast<std::size_t>(cfg.num_bins));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_score(samples[i].score, i);
    require_binary(samples[i].correctness, i, "D-ECE");
    auto &b = bins[static_cast<std::size_t>(cfg.bin_of(samples[i].score))];
    ++b.count;
    b.score_sum += samples[i].score;
    b.correct_sum += samples[i].correctness;
  }
  const auto total = static_cast<double>(samples.size());
  double err = 0.0;
  for (const auto &b : bins) {
    if (b.count == 0)
      continue;
    const double n = static_cast<double>(b.count);
    err += n / total * std::fabs(b.correct_sum / n - b.score_sum / n);
  }
  return err;
}

double la_ece(std::span<const MatchedSample> samples, std::span<const CategoryId> categories,
              const BinningConfig &cfg) {
  cfg.validate();
  if (samples.empty())
    throw ValidationError("LaECE needs at least one sample");
  const std::set<CategoryId> allowed(categories.begin(), categories.end());
  std::map<CategoryId, std::vector<const MatchedSample *>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_score(samples[i].score, i);
    if (!allowed.empty() && !allowed.contains(samples[i].category_id))
      continue;
    by_class[samples[i].category_id].push_back(&samples[i]);
  }
  if (by_class.empty())
    throw ValidationError("LaECE: no samples belong to the requested categories");
  double sum = 0.0;
  for (const auto &[k, members] : by_class)
    sum += la_ece_one_class(members, cfg);
  return sum / static_cast<double>(by_class.size());
}

double d_cls(std::span<const CalibrationSample> samples) {
  if (samples.empty())
    throw ValidationError("d_cls needs at least one sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_score(samples[i].score, i);
    require_binary(samples[i].correctness, i, "d_cls");
    sum += std::fabs(samples[i].score - samples[i].correctness);
  }
  return sum / static_cast<double>(samples.size());
}

double d_det(std::span<const MatchedSample> samples) {
  if (samples.empty())
    throw ValidationError("d_det needs at least one sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_score(samples[i].score, i);
    sum += std::fabs(samples[i].similarity - samples[i].score);
  }
  return sum / static_cast<double>(samples.size());
}

double temperature_nll(std::span<const CalibrationSample> samples, double temperature,
                       double clamp_eps) {
  double nll = 0.0;
  for (const auto &s : samples) {
    const double p = temperature_scale(clamp_score(s.score, clamp_eps), temperature);
    // log p and log(1-p) from the logit keep precision for sharp scores.
    const double logit = std::log(p) - std::log1p(-p);
    nll += s.correctness != 0.0 ? std::log1p(std::exp(-logit)) : std::log1p(std::exp(logit));
  }
  return nll;
}

double fit_temperature(std::span<const CalibrationSample> samples,
                       const TemperatureSearch &search) {
  if (samples.empty())
    throw ValidationError("temperature fit needs samples");
  if (!(search.lower > 0.0 && search.lower < search.upper && search.tolerance > 0.0))
    throw ValidationError("invalid temperature search range");
  bool has_pos = false;
  bool has_neg = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_score(samples[i].score, i);
    require_binary(samples[i].correctness, i, "temperature fit");
    (samples[i].correctness == 1.0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg)
    throw ValidationError("temperature fit needs both label values; all labels are identical");

  auto nll = [&](double t) { return temperature_nll(samples, t, search.clamp_eps); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = search.lower;
  double b = search.upper;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = nll(c);
  double fd = nll(d);
  while (b - a > search.tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = nll(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = nll(d);
    }
  }
  return fc <= fd ? c : d;
}

} // namespace detcal
