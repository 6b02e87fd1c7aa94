#include "detcal/kde_ce.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "detcal/error.hpp"
#include "detcal/parallel.hpp"
#include "detcal/rng.hpp"
#include "kernel_rows.hpp"

namespace detcal {

using detail::KernelTable;

void KdeConfig::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw ValidationError("bandwidth must be positive, got " + std::to_string(bandwidth));
  if (!(clamp_eps > 0.0 && clamp_eps < 0.1))
    throw ValidationError("score clamp must lie in (0, 0.1), got " + std::to_string(clamp_eps));
  if (max_samples && *max_samples < 2)
    throw ValidationError("max_samples must be at least 2");
}

double clamp_score(double s, double eps) noexcept { return std::clamp(s, eps, 1.0 - eps); }

double log_beta_kernel(double s_eval, double s_center, double bandwidth) {
  if (!(bandwidth > 0.0))
    throw ValidationError("bandwidth must be positive, got " + std::to_string(bandwidth));
  if (!(s_eval >= 0.0 && s_eval <= 1.0 && s_center >= 0.0 && s_center <= 1.0))
    throw ValidationError("beta kernel arguments must lie in [0, 1]");
  const double a = s_center / bandwidth + 1.0;
  const double b = (1.0 - s_center) / bandwidth + 1.0;
  const double log_norm = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double left = a - 1.0 == 0.0 ? 0.0 : (a - 1.0) * std::log(s_eval);
  const double right = b - 1.0 == 0.0 ? 0.0 : (b - 1.0) * std::log1p(-s_eval);
  return left + right - log_norm;
}

double beta_kernel(double s_eval, double s_center, double bandwidth) {
  return std::exp(log_beta_kernel(s_eval, s_center, bandwidth));
}

std::vector<double> default_bandwidth_grid() {
  constexpr std::size_t count = 32;
  const double lo = std::log(1e-3);
  const double hi = std::log(0.5);
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
  grid.front() = 1e-3;
  grid.back() = 0.5;
  return grid;
}

namespace {

void check_unit_interval(double value, const char *what, std::size_t index) {
  if (!(value >= 0.0 && value <= 1.0)) {
    std::ostringstream msg;
    msg << what << " of sample " << index << " must lie in [0, 1], got " << value;
    throw ValidationError(msg.str());
  }
}

void validate_samples(std::span<const CalibrationSample> samples, std::size_t min_count) {
  if (samples.size() < min_count) {
    std::ostringstream msg;
    msg << "need at least " << min_count << " samples, got " << samples.size();
    throw ValidationError(msg.str());
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    check_unit_interval(samples[i].score, "score", i);
    check_unit_interval(samples[i].correctness, "correctness", i);
  }
}

/// Clamped, optionally subsampled samples in canonical (score, correctness)
/// order. Canonical order makes every sum independent of the caller's order.
struct Prepared {
  std::vector<double> score;
  std::vector<double> correctness;
  std::vector<std::size_t> origin;
  bool subsampled = false;
};

Prepared prepare(std::span<const CalibrationSample> samples, const KdeConfig &cfg) {
  std::vector<std::size_t> chosen;
  Prepared p;
  if (cfg.max_samples && samples.size() > *cfg.max_samples) {
    chosen = subsample_indices(samples.size(), *cfg.max_samples, cfg.seed);
    p.subsampled = true;
  } else {
    chosen.resize(samples.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  }
  auto key = [&](std::size_t i) {
    return std::pair{clamp_score(samples[i].score, cfg.clamp_eps), samples[i].correctness};
  };
  std::stable_sort(chosen.begin(), chosen.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  p.origin = std::move(chosen);
  p.score.reserve(p.origin.size());
  p.correctness.reserve(p.origin.size());
  for (std::size_t i : p.origin) {
    p.score.push_back(clamp_score(samples[i].score, cfg.clamp_eps));
    p.correctness.push_back(samples[i].correctness);
  }
  return p;
}

std::vector<double> sorted_clamped(std::span<const double> scores, double eps) {
  std::vector<double> s(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    check_unit_interval(scores[i], "score", i);
    s[i] = clamp_score(scores[i], eps);
  }
  std::sort(s.begin(), s.end());
  return s;
}

double loo_log_likelihood_sorted(const std::vector<double> &s, double bandwidth,
                                 unsigned threads) {
  const KernelTable table(s, bandwidth);
  const std::size_t n = s.size();
  std::vector<double> terms(n);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end, unsigned) {
    std::vector<double> w(n);
    for (std::size_t v = begin; v < end; ++v) {
      terms[v] = table.offset[v] + detail::row_log_mass(table, table.slope[v], v, w);
    }
  });
  double total = 0.0;
  for (double t : terms)
    total += t;
  return total - static_cast<double>(n) * std::log(static_cast<double>(n - 1));
}

} // namespace

double loo_log_likelihood(std::span<const double> scores, double bandwidth, double eps,
                          unsigned threads) {
  if (scores.size() < 2)
    throw ValidationError("leave-one-out likelihood needs at least 2 scores");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw ValidationError("bandwidth must be positive, got " + std::to_string(bandwidth));
  return loo_log_likelihood_sorted(sorted_clamped(scores, eps), bandwidth, threads);
}

double loo_mle_bandwidth(std::span<const double> scores, std::span<const double> grid,
                         double eps, unsigned threads) {
  if (scores.size() < 2)
    throw ValidationError("bandwidth selection needs at least 2 scores, got " +
                          std::to_string(scores.size()));
  if (grid.empty())
    throw ValidationError("bandwidth grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
      throw ValidationError("bandwidth grid entry " + std::to_string(i) +
                            " is not positive: " + std::to_string(grid[i]));

  std::vector<double> candidates(grid.begin(), grid.end());
  std::sort(candidates.begin(), candidates.end());
  const auto s = sorted_clamped(scores, eps);

  double best_bw = candidates.front();
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double b : candidates) {
    const double ll = loo_log_likelihood_sorted(s, b, threads);
    if (ll > best_ll) {
      best_ll = ll;
      best_bw = b;
    }
  }
  return best_bw;
}

double select_bandwidth(std::span<const CalibrationSample> samples, double eps,
                        unsigned threads) {
  std::vector<double> scores(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    scores[i] = samples[i].score;
  const auto grid = default_bandwidth_grid();
  return loo_mle_bandwidth(scores, grid, eps, threads);
}

double conditional_expectation(std::span<const CalibrationSample> samples, double s_query,
                               const KdeConfig &cfg) {
  cfg.validate();
  validate_samples(samples, 1);
  check_unit_interval(s_query, "query score", 0);
  KdeConfig full = cfg;
  full.max_samples.reset();
  const auto p = prepare(samples, full);
  const KernelTable table(p.score, cfg.bandwidth);

  const double q = clamp_score(s_query, cfg.clamp_eps);
  const double slope = (std::log(q) - std::log1p(-q)) / cfg.bandwidth;
  std::vector<double> w(p.score.size());
  const auto row = detail::row_totals(table, slope, detail::kNoSkip, p.correctness, 0.0, w);
  if (!(row.weight > 0.0))
    throw ValidationError("kernel weights vanish at the query score");
  return row.gap / row.weight;
}

CeEstimate estimate_ce(std::span<const CalibrationSample> samples, const KdeConfig &cfg) {
  cfg.validate();
  validate_samples(samples, 2);
  const auto p = prepare(samples, cfg);
  const KernelTable table(p.score, cfg.bandwidth);
  const std::size_t n = p.score.size();

  std::vector<double> gap(n);
  parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end, unsigned) {
    std::vector<double> w(n);
    for (std::size_t v = begin; v < end; ++v) {
      const auto row = detail::row_totals(table, table.slope[v], v, p.correctness, p.score[v], w);
      gap[v] = std::fabs(row.gap / row.weight);
    }
  });
  double total = 0.0;
  for (double g : gap)
    total += g;
  return {total / static_cast<double>(n), n, p.subsampled};
}

CeGradient estimate_ce_gradient(std::span<const CalibrationSample> samples,
                                const KdeConfig &cfg) {
  cfg.validate();
  validate_samples(samples, 2);
  const auto p = prepare(samples, cfg);
  const KernelTable table(p.score, cfg.bandwidth);
  const std::size_t n = p.score.size();
  const double inv_b = 1.0 / cfg.bandwidth;

  // d/ds_u of -ln B(s_u/b + 1, (1 - s_u)/b + 1) is -(psi(a_u) - psi(b_u))/b.
  std::vector<double> digamma_gap(n);
  for (std::size_t u = 0; u < n; ++u) {
    const double s = p.score[u];
    digamma_gap[u] = boost::math::digamma(s * inv_b + 1.0) -
                     boost::math::digamma((1.0 - s) * inv_b + 1.0);
  }

  const unsigned chunks = chunk_count(n, cfg.threads);
  std::vector<double> gap(n);
  std::vector<double> own(n);
  std::vector<std::vector<double>> center_terms(chunks, std::vector<double>(n, 0.0));

  parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end, unsigned worker) {
    std::vector<double> w(n);
    auto &col = center_terms[worker];
    const double *s = p.score.data();
    const double *z = p.correctness.data();
    for (std::size_t v = begin; v < end; ++v) {
      const auto row = detail::row_totals(table, table.slope[v], v, p.correctness, s[v], w);
      const double denom = row.weight;
      const double err = row.gap / denom;
      gap[v] = std::fabs(err);
      const double sign = err > 0.0 ? 1.0 : (err < 0.0 ? -1.0 : 0.0);
      if (sign == 0.0)
        continue;

      // t_u = (k_vu / D_v) (z_u - r_v), the sensitivity of r_v to log k_vu.
      const double sv = s[v];
      const double inv_sv = 1.0 / sv;
      const double inv_1msv = 1.0 / (1.0 - sv);
      const double logit_v = table.slope[v] * cfg.bandwidth;
      const double inv_denom = 1.0 / denom;
      double eval_sum = 0.0;
      for (std::size_t u = 0; u < n; ++u) {
        const double t = w[u] * inv_denom * ((z[u] - sv) - err);
        const double d_eval = (s[u] * inv_sv - (1.0 - s[u]) * inv_1msv) * inv_b;
        const double d_center = (logit_v - digamma_gap[u]) * inv_b;
        eval_sum += t * d_eval;
        col[u] += sign * t * d_center;
      }
      own[v] = sign * (eval_sum - 1.0);
    }
  });

  double total = 0.0;
  for (double g : gap)
    total += g;

  CeGradient out;
  out.value = total / static_cast<double>(n);
  out.samples = n;
  out.subsampled = p.subsampled;
  out.gradient.assign(samples.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t v = 0; v < n; ++v) {
    double g = own[v];
    for (const auto &col : center_terms)
      g += col[v];
    const double raw = samples[p.origin[v]].score;
    const bool inside = raw >= cfg.clamp_eps && raw <= 1.0 - cfg.clamp_eps;
    out.gradient[p.origin[v]] = inside ? g * inv_n : 0.0;
  }
  return out;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n)
    throw ValidationError("cannot draw " + std::to_string(k) + " of " + std::to_string(n) +
                          " samples without replacement");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const UniformStream uniform(seed, streams::kSubsample);
  for (std::size_t i = 0; i < k; ++i) {
    const auto span = static_cast<double>(n - i);
    auto j = i + static_cast<std::size_t>(uniform(i) * span);
    j = std::min(j, n - 1);
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

} // namespace detcal
