#include "detcal/synth.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <json.hpp>
#include <ostream>

#include "detcal/binned.hpp"
#include "detcal/error.hpp"
#include "detcal/parallel.hpp"
#include "detcal/rng.hpp"

namespace detcal {

double temperature_scale(double s, double t) {
  if (!(s > 0.0 && s < 1.0))
    throw ValidationError("temperature scaling needs a score strictly inside (0, 1), got " +
                          format_double(s));
  if (!(t > 0.0) || !std::isfinite(t))
    throw ValidationError("temperature must be positive, got " + format_double(t));
  if (t == 1.0)
    return s;
  const double x = (std::log(s) - std::log1p(-s)) / t;
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void SynthConfig::validate() const {
  if (n < 2)
    throw ValidationError("synthetic sample count must be at least 2");
  if (!(t1 > 0.0) || !(t2 > 0.0))
    throw ValidationError("temperatures must be positive");
}

namespace {

// Scaled scores can round to exactly 0 or 1 for extreme draws; keep them
// inside the open interval so they remain valid scaling inputs.
double interior(double s) {
  constexpr double tiny = std::numeric_limits<double>::min();
  return std::clamp(s, tiny, std::nextafter(1.0, 0.0));
}

} // namespace

std::vector<CalibrationSample> generate(const SynthConfig &cfg) {
  cfg.validate();
  const UniformStream scores(cfg.seed, streams::kScores);
  const UniformStream labels(cfg.seed, streams::kLabels);
  std::vector<CalibrationSample> out(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const double s1 = interior(temperature_scale(scores(i), cfg.t1));
    out[i].correctness = labels(i) < s1 ? 1.0 : 0.0;
    out[i].score = interior(temperature_scale(s1, cfg.t2));
  }
  return out;
}

std::vector<CalibrationSample> generate_continuous(const SynthConfig &cfg) {
  cfg.validate();
  const UniformStream scores(cfg.seed, streams::kScores);
  const UniformStream noise(cfg.seed, streams::kCorrectness);
  std::vector<CalibrationSample> out(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const double s1 = interior(temperature_scale(scores(i), cfg.t1));
    const double half_width = std::min(s1, 1.0 - s1);
    out[i].correctness = std::clamp(s1 + half_width * (2.0 * noise(i) - 1.0), 0.0, 1.0);
    out[i].score = interior(temperature_scale(s1, cfg.t2));
  }
  return out;
}

double ground_truth_ce(double t1, double t2) {
  if (!(t1 > 0.0) || !(t2 > 0.0))
    throw ValidationError("temperatures must be positive");
  auto gap = [&](double u) {
    if (u <= 0.0 || u >= 1.0)
      return 0.0;
    const double s1 = interior(temperature_scale(u, t1));
    return std::fabs(s1 - temperature_scale(s1, t2));
  };
  // |s1 - s2| has its only interior kink at u = 1/2; the endpoints carry
  // power-law behaviour u^(1/t1), which tanh-sinh absorbs.
  boost::math::quadrature::tanh_sinh<double> quad;
  constexpr double tol = 1e-12;
  return quad.integrate(gap, 0.0, 0.5, tol) + quad.integrate(gap, 0.5, 1.0, tol);
}

const char *to_string(Estimator e) noexcept {
  switch (e) {
  case Estimator::KdeThreshold:
    return "kde_threshold";
  case Estimator::KdeIdentity:
    return "kde_identity";
  case Estimator::Dece:
    return "dece";
  case Estimator::Laece:
    return "laece";
  }
  return "kde_threshold";
}

Estimator parse_estimator(std::string_view name) {
  for (auto e : {Estimator::KdeThreshold, Estimator::KdeIdentity, Estimator::Dece,
                 Estimator::Laece})
    if (name == to_string(e))
      return e;
  throw ValidationError("unknown estimator '" + std::string(name) +
                        "' (expected kde_threshold, kde_identity, dece or laece)");
}

std::vector<Estimator> parse_estimators(std::string_view list) {
  std::vector<Estimator> out;
  std::size_t start = 0;
  while (start <= list.size() && !list.empty()) {
    const auto pos = list.find(',', start);
    const auto item = list.substr(start, pos == std::string_view::npos ? pos : pos - start);
    if (item.empty())
      throw ValidationError("empty entry in estimator list");
    const auto e = parse_estimator(item);
    if (std::find(out.begin(), out.end(), e) == out.end())
      out.push_back(e);
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

namespace {

double evaluate_estimator(Estimator e, const std::vector<CalibrationSample> &binary,
                          const std::vector<CalibrationSample> &continuous, double bandwidth) {
  switch (e) {
  case Estimator::KdeThreshold: {
    KdeConfig kde;
    kde.bandwidth = bandwidth;
    return estimate_ce(binary, kde).value;
  }
  case Estimator::KdeIdentity: {
    KdeConfig kde;
    kde.bandwidth = bandwidth;
    return estimate_ce(continuous, kde).value;
  }
  case Estimator::Dece:
    return d_ece(binary, BinningConfig{kDeceBins});
  case Estimator::Laece: {
    std::vector<MatchedSample> matched(continuous.size());
    for (std::size_t i = 0; i < continuous.size(); ++i) {
      matched[i].score = continuous[i].score;
      matched[i].similarity = continuous[i].correctness;
      matched[i].correctness = continuous[i].correctness;
      matched[i].matched = true;
    }
    return la_ece(matched, {}, BinningConfig{kLaeceBins});
  }
  }
  return 0.0;
}

bool needs_bandwidth(const std::vector<Estimator> &es) {
  return std::any_of(es.begin(), es.end(), [](Estimator e) {
    return e == Estimator::KdeThreshold || e == Estimator::KdeIdentity;
  });
}

void summarize(ConvergenceRow &row, double truth) {
  const auto k = static_cast<double>(row.values.size());
  double sum = 0.0;
  double abs_err = 0.0;
  for (double v : row.values) {
    sum += v;
    abs_err += std::fabs(v - truth);
  }
  row.mean = sum / k;
  row.mean_abs_error = abs_err / k;
  if (row.values.size() < 2) {
    row.ci95 = 0.0;
    return;
  }
  double ss = 0.0;
  for (double v : row.values)
    ss += (v - row.mean) * (v - row.mean);
  row.ci95 = 1.96 * std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
}

} // namespace

std::vector<ConvergenceRow> convergence_experiment(const ConvergenceConfig &cfg) {
  if (cfg.ns.empty())
    throw ValidationError("convergence experiment needs at least one sample size");
  if (cfg.seeds.empty())
    throw ValidationError("convergence experiment needs at least one seed");
  for (auto n : cfg.ns)
    if (n < 2)
      throw ValidationError("sample sizes must be at least 2");
  const double truth = ground_truth_ce(cfg.t1, cfg.t2);
  const std::size_t n_est = cfg.estimators.size();
  const std::size_t n_seeds = cfg.seeds.size();

  // values[n index][estimator][seed]
  std::vector<std::vector<std::vector<double>>> values(
      cfg.ns.size(), std::vector<std::vector<double>>(n_est, std::vector<double>(n_seeds)));

  if (n_est > 0) {
    const std::size_t jobs = cfg.ns.size() * n_seeds;
    parallel_for(jobs, cfg.threads, [&](std::size_t begin, std::size_t end, unsigned) {
      for (std::size_t job = begin; job < end; ++job) {
        const std::size_t ni = job / n_seeds;
        const std::size_t si = job % n_seeds;
        const SynthConfig sc{cfg.ns[ni], cfg.t1, cfg.t2, cfg.seeds[si]};
        const auto binary = generate(sc);
        const auto continuous = generate_continuous(sc);
        // Both variants share their scores, so one bandwidth serves both.
        const double bw = needs_bandwidth(cfg.estimators) ? select_bandwidth(binary) : 0.0;
        for (std::size_t ei = 0; ei < n_est; ++ei)
          values[ni][ei][si] = evaluate_estimator(cfg.estimators[ei], binary, continuous, bw);
      }
    });
  }

  std::vector<ConvergenceRow> rows;
  for (std::size_t ni = 0; ni < cfg.ns.size(); ++ni) {
    ConvergenceRow gt;
    gt.n = cfg.ns[ni];
    gt.estimator = "ground_truth";
    gt.mean = truth;
    gt.values.assign(1, truth);
    rows.push_back(std::move(gt));
    for (std::size_t ei = 0; ei < n_est; ++ei) {
      ConvergenceRow row;
      row.n = cfg.ns[ni];
      row.estimator = to_string(cfg.estimators[ei]);
      row.values = values[ni][ei];
      summarize(row, truth);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_convergence_csv(std::ostream &out, const std::vector<ConvergenceRow> &rows) {
  out << "n,estimator,mean,ci95\n";
  for (const auto &r : rows)
    out << r.n << ',' << r.estimator << ',' << format_double(r.mean) << ','
        << format_double(r.ci95) << '\n';
}

void write_convergence_json(std::ostream &out, const std::vector<ConvergenceRow> &rows,
                            const ConvergenceConfig &cfg) {
  nlohmann::json j;
  j["t1"] = cfg.t1;
  j["t2"] = cfg.t2;
  j["seeds"] = cfg.seeds;
  j["rows"] = nlohmann::json::array();
  for (const auto &r : rows) {
    j["rows"].push_back({{"n", r.n},
                         {"estimator", r.estimator},
                         {"mean", r.mean},
                         {"ci95", r.ci95},
                         {"mean_abs_error", r.mean_abs_error},
                         {"values", r.values}});
  }
  out << j.dump(2) << '\n';
}

} // namespace detcal
