#pragma once

// Row kernels for the O(w^2) Beta-kernel sums. Internal to the library.

#include <cstddef>
#include <span>
#include <vector>

namespace detcal::detail {

/// Per-sample terms of the Beta kernel with fixed bandwidth b:
///   log k(s_v; s_u) = slope_v * s_u + neg_log_norm_u + offset_v
/// with slope_v = logit(s_v)/b, offset_v = ln(1 - s_v)/b and
/// neg_log_norm_u = -ln B(s_u/b + 1, (1 - s_u)/b + 1).
/// offset_v is constant along a row and cancels in every ratio.
struct KernelTable {
  double bandwidth = 0.0;
  std::vector<double> score;
  std::vector<double> neg_log_norm;
  std::vector<double> slope;
  std::vector<double> offset;

  KernelTable(std::span<const double> clamped_scores, double bandwidth);
  std::size_t size() const noexcept { return score.size(); }
};

inline constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

/// Row sums of shifted weights w_u = exp(x_u - shift), shift = max x_u.
struct RowTotals {
  double shift = 0.0;
  double weight = 0.0; // sum_u w_u
  double gap = 0.0;    // sum_u w_u (z_u - center)
};

/// Writes w[u] = exp(x_u - shift) for the row with the given slope, with
/// w[skip] = 0 (skip may be kNoSkip), and returns the totals. `w` must hold
/// table.size() entries; `z` may be empty, in which case gap is 0.
RowTotals row_totals(const KernelTable &table, double slope, std::size_t skip,
                     std::span<const double> z, double center, std::span<double> w) noexcept;

/// log sum_{u != skip} exp(x_u), i.e. the row's log kernel mass minus offset_v.
/// `scratch` must hold table.size() entries.
double row_log_mass(const KernelTable &table, double slope, std::size_t skip,
                    std::span<double> scratch) noexcept;

} // namespace detcal::detail
