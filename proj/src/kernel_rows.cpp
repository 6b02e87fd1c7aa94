#include "kernel_rows.hpp"

#include <cmath>
#include <limits>

#include "detcal/detail/fast_exp.hpp"

namespace detcal::detail {

namespace {

constexpr std::size_t kLanes = 8;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_beta_function(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double combine(const double (&acc)[kLanes]) noexcept {
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// Fills x with the row's log weights (skip set to -inf) and returns their max.
double fill_log_row(const KernelTable &table, double slope, std::size_t skip,
                    double *x) noexcept {
  const std::size_t n = table.size();
  const double *s = table.score.data();
  const double *c = table.neg_log_norm.data();
  for (std::size_t u = 0; u < n; ++u)
    x[u] = std::fma(slope, s[u], c[u]);
  if (skip < n)
    x[skip] = kNegInf;

  // Kept apart from the fill loop: GCC only vectorizes the reduction alone.
  double lane_max[kLanes];
  for (auto &m : lane_max)
    m = kNegInf;
  const std::size_t body = n - n % kLanes;
  for (std::size_t u = 0; u < body; u += kLanes)
    for (std::size_t l = 0; l < kLanes; ++l)
      lane_max[l] = x[u + l] > lane_max[l] ? x[u + l] : lane_max[l];
  double shift = kNegInf;
  for (double m : lane_max)
    shift = m > shift ? m : shift;
  for (std::size_t u = body; u < n; ++u)
    shift = x[u] > shift ? x[u] : shift;
  return shift;
}

} // namespace

KernelTable::KernelTable(std::span<const double> clamped_scores, double b)
    : bandwidth(b), score(clamped_scores.begin(), clamped_scores.end()) {
  const std::size_t n = score.size();
  neg_log_norm.resize(n);
  slope.resize(n);
  offset.resize(n);
  for (std::size_t u = 0; u < n; ++u) {
    const double s = score[u];
    neg_log_norm[u] = -log_beta_function(s / b + 1.0, (1.0 - s) / b + 1.0);
    const double log_s = std::log(s);
    const double log_1ms = std::log1p(-s);
    slope[u] = (log_s - log_1ms) / b;
    offset[u] = log_1ms / b;
  }
}

RowTotals row_totals(const KernelTable &table, double slope, std::size_t skip,
                     std::span<const double> z, double center, std::span<double> w) noexcept {
  const std::size_t n = table.size();
  double *x = w.data();
  RowTotals out;
  out.shift = fill_log_row(table, slope, skip, x);
  const double shift = out.shift;

  double acc_w[kLanes] = {};
  double acc_g[kLanes] = {};
  const std::size_t body = n - n % kLanes;
  if (z.empty()) {
    for (std::size_t u = 0; u < body; u += kLanes)
      for (std::size_t l = 0; l < kLanes; ++l) {
        const double e = fast_exp_nonpositive(x[u + l] - shift);
        x[u + l] = e;
        acc_w[l] += e;
      }
  } else {
    const double *pz = z.data();
    for (std::size_t u = 0; u < body; u += kLanes)
      for (std::size_t l = 0; l < kLanes; ++l) {
        const double e = fast_exp_nonpositive(x[u + l] - shift);
        x[u + l] = e;
        acc_w[l] += e;
        acc_g[l] += e * (pz[u + l] - center);
      }
  }
  out.weight = combine(acc_w);
  out.gap = combine(acc_g);
  for (std::size_t u = body; u < n; ++u) {
    const double e = fast_exp_nonpositive(x[u] - shift);
    x[u] = e;
    out.weight += e;
    if (!z.empty())
      out.gap += e * (z[u] - center);
  }
  return out;
}

double row_log_mass(const KernelTable &table, double slope, std::size_t skip,
                    std::span<double> scratch) noexcept {
  const auto totals = row_totals(table, slope, skip, {}, 0.0, scratch);
  return totals.shift + std::log(totals.weight);
}

} // namespace detcal::detail
