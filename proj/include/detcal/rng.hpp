#pragma once

#include <array>
#include <cstdint>

namespace detcal {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Every output block is a pure function of (key, counter), so draws can be
/// addressed by index and consumed from any thread in any order.
class Philox4x32 {
public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(Key key) noexcept : key_(key) {}

  Block operator()(Block counter) const noexcept;

private:
  Key key_;
};

/// Independent stream of uniforms addressed by sample index.
///
/// The 64-bit seed is the Philox key; the counter is
/// (index_lo, index_hi, stream, 0). Distinct `stream` values never share a
/// counter, so e.g. score draws and label draws are independent.
class UniformStream {
public:
  UniformStream(std::uint64_t seed, std::uint32_t stream) noexcept;

  /// Uniform double in the open interval (0, 1), 53-bit resolution.
  double operator()(std::uint64_t index) const noexcept;

private:
  Philox4x32 gen_;
  std::uint32_t stream_;
};

/// Named stream ids used throughout the library.
namespace streams {
inline constexpr std::uint32_t kScores = 0;
inline constexpr std::uint32_t kLabels = 1;
inline constexpr std::uint32_t kCorrectness = 2;
inline constexpr std::uint32_t kSubsample = 3;
} // namespace streams

} // namespace detcal
