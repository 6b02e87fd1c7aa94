#include "detcal/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>

#include "detcal/binned.hpp"
#include "detcal/error.hpp"
#include "detcal/synth.hpp"

namespace detcal {

using nlohmann::json;

std::string BandwidthPolicy::describe() const {
  if (!automatic)
    return "fixed:" + format_double(value);
  return shared ? "auto-loo-shared" : "auto-loo";
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> taus;
  for (int i = 0; i < 10; ++i)
    taus.push_back(static_cast<double>(50 + 5 * i) / 100.0);
  return taus;
}

std::string Fingerprint::id() const {
  std::ostringstream out;
  out << "link=" << link << ";gamma=" << format_double(gamma) << ";tau=";
  for (std::size_t i = 0; i < taus.size(); ++i)
    out << (i ? "|" : "") << format_double(taus[i]);
  out << ";bins=" << bins << ";bandwidth=" << bandwidth << ";samples=" << samples
      << ";classes=" << classes;
  return out.str();
}

const MetricEntry *CalibrationReport::find(std::string_view name) const {
  for (const auto &m : metrics)
    if (m.name == name)
      return &m;
  return nullptr;
}

namespace {

constexpr std::size_t kMinClassSamples = 2;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::map<CategoryId, std::vector<MatchedSample>> by_class(const std::vector<MatchedSample> &s) {
  std::map<CategoryId, std::vector<MatchedSample>> out;
  for (const auto &x : s)
    out[x.category_id].push_back(x);
  return out;
}

std::vector<CalibrationSample> to_calibration(const std::vector<MatchedSample> &s) {
  std::vector<CalibrationSample> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = {s[i].score, s[i].correctness};
  return out;
}

/// Value of one per-class-averaged estimate together with what it used.
struct Aggregate {
  std::optional<double> value;
  std::size_t samples = 0;
  std::size_t classes = 0;
};

class Evaluator {
public:
  Evaluator(const std::vector<Detection> &dets, const std::vector<GroundTruthBox> &gts,
            const ReportConfig &cfg)
      : dets_(dets), gts_(gts), cfg_(cfg) {}

  std::vector<MatchedSample> match(double tau, const LinkSpec &link) const {
    MatchConfig mc;
    mc.match_iou = tau;
    mc.score_threshold = cfg_.score_threshold;
    mc.link = link;
    mc.similarity = cfg_.similarity;
    mc.categories = cfg_.categories;
    return match_detections(dets_, gts_, mc);
  }

  /// Per-class metric averaged over classes with enough samples.
  Aggregate per_class(const std::vector<MatchedSample> &samples,
                      const std::function<double(const std::vector<MatchedSample> &)> &metric) {
    Aggregate agg;
    double sum = 0.0;
    for (const auto &[k, members] : by_class(samples)) {
      if (members.size() < kMinClassSamples)
        continue;
      sum += metric(members);
      agg.samples += members.size();
      ++agg.classes;
    }
    if (agg.classes > 0)
      agg.value = sum / static_cast<double>(agg.classes);
    return agg;
  }

  Aggregate kde(const std::vector<MatchedSample> &samples) {
    std::optional<double> shared_bw;
    if (cfg_.bandwidth.automatic && cfg_.bandwidth.shared) {
      std::vector<MatchedSample> pooled;
      for (const auto &[k, members] : by_class(samples))
        if (members.size() >= kMinClassSamples)
          pooled.insert(pooled.end(), members.begin(), members.end());
      if (pooled.size() >= kMinClassSamples)
        shared_bw = bandwidth_for(to_calibration(pooled));
    }
    return per_class(samples, [&](const std::vector<MatchedSample> &members) {
      const auto cs = to_calibration(members);
      KdeConfig kc;
      kc.clamp_eps = cfg_.clamp_eps;
      kc.max_samples = cfg_.max_samples;
      kc.seed = cfg_.seed;
      kc.threads = cfg_.threads;
      kc.bandwidth = shared_bw ? *shared_bw : bandwidth_for(cs);
      return estimate_ce(cs, kc).value;
    });
  }

  Aggregate dece(const std::vector<MatchedSample> &samples) {
    return per_class(samples, [&](const std::vector<MatchedSample> &members) {
      return d_ece(to_calibration(members), BinningConfig{cfg_.dece_bins});
    });
  }

  Aggregate laece(const std::vector<MatchedSample> &samples) {
    std::vector<MatchedSample> kept;
    std::vector<CategoryId> classes;
    for (const auto &[k, members] : by_class(samples)) {
      if (members.size() < kMinClassSamples)
        continue;
      kept.insert(kept.end(), members.begin(), members.end());
      classes.push_back(k);
    }
    Aggregate agg;
    if (kept.empty())
      return agg;
    agg.value = la_ece(kept, classes, BinningConfig{cfg_.laece_bins});
    agg.samples = kept.size();
    agg.classes = classes.size();
    return agg;
  }

private:
  double bandwidth_for(const std::vector<CalibrationSample> &cs) {
    if (!cfg_.bandwidth.automatic)
      return cfg_.bandwidth.value;
    std::vector<double> key(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i)
      key[i] = clamp_score(cs[i].score, cfg_.clamp_eps);
    std::sort(key.begin(), key.end());
    if (auto it = cache_.find(key); it != cache_.end())
      return it->second;
    const double bw = select_bandwidth(cs, cfg_.clamp_eps, cfg_.threads);
    cache_.emplace(std::move(key), bw);
    return bw;
  }

  const std::vector<Detection> &dets_;
  const std::vector<GroundTruthBox> &gts_;
  const ReportConfig &cfg_;
  // Bandwidth selection depends on the score multiset only.
  std::map<std::vector<double>, double> cache_;
};

std::string tau_label(double tau) {
  return std::to_string(static_cast<int>(std::lround(tau * 100.0)));
}

} // namespace

CalibrationReport evaluate_report(const std::vector<Detection> &dets,
                                  const std::vector<GroundTruthBox> &gts,
                                  const ReportConfig &cfg) {
  BinningConfig{cfg.dece_bins}.validate();
  BinningConfig{cfg.laece_bins}.validate();
  if (!cfg.bandwidth.automatic && !(cfg.bandwidth.value > 0.0))
    throw ValidationError("bandwidth must be positive");

  Evaluator ev(dets, gts, cfg);
  CalibrationReport report;
  report.timestamp = cfg.timestamp ? *cfg.timestamp : utc_now();

  const auto taus = coco_iou_thresholds();
  const std::string bw = cfg.bandwidth.describe();
  const std::string threshold_link = "threshold:tau";

  auto entry = [&](std::string name, const Aggregate &agg, std::vector<double> entry_taus,
                   std::string link, int bins, std::string bandwidth) {
    MetricEntry m;
    m.name = std::move(name);
    m.value = agg.value;
    if (!agg.value)
      m.absent_reason = "no class has at least 2 samples";
    m.fingerprint = {std::move(link), cfg.score_threshold, std::move(entry_taus), bins,
                     std::move(bandwidth), agg.samples, agg.classes};
    return m;
  };
  auto mean_of = [](const std::vector<Aggregate> &parts) {
    Aggregate out;
    double sum = 0.0;
    for (const auto &p : parts) {
      if (!p.value)
        return Aggregate{};
      sum += *p.value;
    }
    out.samples = parts.front().samples;
    out.classes = parts.front().classes;
    out.value = sum / static_cast<double>(parts.size());
    return out;
  };

  std::vector<std::vector<MatchedSample>> matched;
  for (double tau : taus)
    matched.push_back(ev.match(tau, LinkSpec::threshold(tau)));

  const auto &at50 = matched.front();
  report.sample_count = at50.size();
  for (const auto &[k, members] : by_class(at50)) {
    if (members.size() >= kMinClassSamples)
      report.categories.push_back(k);
    else
      report.skipped.push_back({k, members.size()});
  }

  std::vector<Aggregate> ce_tau;
  std::vector<Aggregate> dece_tau;
  std::map<SizeClass, std::vector<Aggregate>> ce_size;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    ce_tau.push_back(ev.kde(matched[i]));
    dece_tau.push_back(ev.dece(matched[i]));
    for (auto &[size, part] : partition_by_size(matched[i]))
      ce_size[size].push_back(ev.kde(part));
  }

  report.metrics.push_back(entry("CE", mean_of(ce_tau), taus, threshold_link, 0, bw));
  for (std::size_t i = 0; i < taus.size(); ++i)
    report.metrics.push_back(
        entry("CE@" + tau_label(taus[i]), ce_tau[i], {taus[i]}, threshold_link, 0, bw));
  report.metrics.push_back(entry("CE50", ce_tau[0], {taus[0]}, threshold_link, 0, bw));
  report.metrics.push_back(entry("CE75", ce_tau[5], {taus[5]}, threshold_link, 0, bw));
  const std::map<SizeClass, std::string> size_names{
      {SizeClass::Small, "CE_S"}, {SizeClass::Medium, "CE_M"}, {SizeClass::Large, "CE_L"}};
  for (auto size : kSizeClasses)
    report.metrics.push_back(
        entry(size_names.at(size), mean_of(ce_size[size]), taus, threshold_link, 0, bw));
  report.metrics.push_back(
      entry("D-ECE", mean_of(dece_tau), taus, threshold_link, cfg.dece_bins, "none"));
  report.metrics.push_back(
      entry("D-ECE50", dece_tau[0], {taus[0]}, threshold_link, cfg.dece_bins, "none"));

  const auto identity = ev.match(0.5, LinkSpec::identity());
  report.metrics.push_back(
      entry("LaECE", ev.laece(identity), {0.5}, "identity", cfg.laece_bins, "none"));

  const auto link_cfg = MatchConfig::for_link(cfg.link, cfg.score_threshold);
  report.metrics.push_back(entry("CE_link", ev.kde(ev.match(link_cfg.match_iou, cfg.link)),
                                 {link_cfg.match_iou}, cfg.link.to_string(), 0, bw));

  for (auto &m : report.metrics)
    if (m.value && !(*m.value >= 0.0 && *m.value <= 1.0))
      throw ValidationError("metric " + m.name + " left [0, 1]: " + format_double(*m.value));
  return report;
}

std::vector<SweepRow> sweep_gamma(const std::vector<Detection> &dets,
                                  const std::vector<GroundTruthBox> &gts,
                                  const std::vector<double> &gammas, const ReportConfig &cfg) {
  if (gammas.empty())
    throw ValidationError("--gammas: at least one score threshold is required");
  std::vector<SweepRow> rows;
  for (double g : gammas) {
    ReportConfig c = cfg;
    c.score_threshold = g;
    const auto report = evaluate_report(dets, gts, c);
    rows.push_back({g, report.sample_count, report.find("CE")->value});
  }
  return rows;
}

namespace {

json fingerprint_json(const Fingerprint &f) {
  return {{"link", f.link},         {"gamma", f.gamma},     {"tau", f.taus},
          {"bins", f.bins},         {"bandwidth", f.bandwidth}, {"samples", f.samples},
          {"classes", f.classes},   {"id", f.id()}};
}

Fingerprint fingerprint_from(const json &j) {
  Fingerprint f;
  f.link = j.at("link").get<std::string>();
  f.gamma = j.at("gamma").get<double>();
  f.taus = j.at("tau").get<std::vector<double>>();
  f.bins = j.at("bins").get<int>();
  f.bandwidth = j.at("bandwidth").get<std::string>();
  f.samples = j.at("samples").get<std::size_t>();
  f.classes = j.at("classes").get<std::size_t>();
  return f;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

} // namespace

std::string report_to_json(const CalibrationReport &report) {
  json j;
  j["timestamp"] = report.timestamp;
  j["sample_count"] = report.sample_count;
  j["categories"] = report.categories;
  j["skipped_classes"] = json::array();
  for (const auto &s : report.skipped)
    j["skipped_classes"].push_back(
        {{"category_id", s.category_id}, {"samples", s.samples},
         {"reason", "fewer than 2 samples"}});
  j["metrics"] = json::array();
  for (const auto &m : report.metrics) {
    json e{{"name", m.name}, {"fingerprint", fingerprint_json(m.fingerprint)}};
    e["value"] = m.value ? json(*m.value) : json(nullptr);
    if (!m.value)
      e["absent_reason"] = m.absent_reason;
    j["metrics"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

CalibrationReport report_from_json(const std::string &text) {
  CalibrationReport r;
  try {
    const auto j = json::parse(text);
    r.timestamp = j.at("timestamp").get<std::string>();
    r.sample_count = j.at("sample_count").get<std::size_t>();
    r.categories = j.at("categories").get<std::vector<CategoryId>>();
    for (const auto &s : j.at("skipped_classes"))
      r.skipped.push_back({s.at("category_id").get<CategoryId>(), s.at("samples").get<std::size_t>()});
    for (const auto &e : j.at("metrics")) {
      MetricEntry m;
      m.name = e.at("name").get<std::string>();
      if (!e.at("value").is_null())
        m.value = e.at("value").get<double>();
      else
        m.absent_reason = e.value("absent_reason", std::string{});
      m.fingerprint = fingerprint_from(e.at("fingerprint"));
      r.metrics.push_back(std::move(m));
    }
  } catch (const json::exception &e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

void write_report_csv(std::ostream &out, const CalibrationReport &report) {
  out << "name,value,absent_reason,link,gamma,tau,bins,bandwidth,samples,classes\n";
  for (const auto &m : report.metrics) {
    const auto &f = m.fingerprint;
    std::string taus;
    for (std::size_t i = 0; i < f.taus.size(); ++i)
      taus += (i ? ";" : "") + format_double(f.taus[i]);
    out << csv_field(m.name) << ',' << (m.value ? format_double(*m.value) : "") << ','
        << csv_field(m.absent_reason) << ',' << csv_field(f.link) << ','
        << format_double(f.gamma) << ',' << taus << ',' << f.bins << ','
        << csv_field(f.bandwidth) << ',' << f.samples << ',' << f.classes << '\n';
  }
}

std::string sweep_to_json(const std::vector<SweepRow> &rows) {
  json j = json::array();
  for (const auto &r : rows)
    j.push_back({{"gamma", r.gamma},
                 {"samples", r.samples},
                 {"ce", r.ce ? json(*r.ce) : json(nullptr)}});
  return j.dump(2) + "\n";
}

void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows) {
  out << "gamma,samples,ce\n";
  for (const auto &r : rows)
    out << format_double(r.gamma) << ',' << r.samples << ',' << (r.ce ? format_double(*r.ce) : "")
        << '\n';
}

} // namespace detcal
