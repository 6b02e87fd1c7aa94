#pragma once

#include <string>
#include <string_view>

namespace detcal {

/// Link function mapping a box similarity L in [0,1] to a correctness value
/// z in [0,1]. Identity, Threshold(beta), Ramp(alpha, beta) and Hinge, the
/// last being exactly Ramp(0.5, 1).
class LinkSpec {
public:
  enum class Kind { Identity, Threshold, Ramp, Hinge };

  static LinkSpec identity() noexcept;
  /// Requires 0 < beta <= 1.
  static LinkSpec threshold(double beta);
  /// Requires 0 <= alpha < beta <= 1.
  static LinkSpec ramp(double alpha, double beta);
  static LinkSpec hinge() noexcept;

  /// Parses `identity`, `threshold:<b>`, `ramp:<a>:<b>` or `hinge`.
  static LinkSpec parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  /// True when the link produces z in {0, 1} only.
  bool is_binary() const noexcept { return kind_ == Kind::Threshold; }

  /// z = psi(L). L outside [0,1] is clamped.
  double apply(double similarity) const noexcept;

  /// Inverse of parse; round-trips through parse.
  std::string to_string() const;

  friend bool operator==(const LinkSpec &, const LinkSpec &) = default;

private:
  LinkSpec(Kind kind, double alpha, double beta) noexcept
      : kind_(kind), alpha_(alpha), beta_(beta) {}

  Kind kind_;
  double alpha_;
  double beta_;
};

} // namespace detcal
