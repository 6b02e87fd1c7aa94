#include "detcal/links.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include "detcal/error.hpp"

namespace detcal {

namespace {

double parse_number(std::string_view field, std::string_view whole) {
  double value = 0.0;
  const auto *first = field.data();
  const auto *last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    throw ValidationError("invalid number '" + std::string(field) + "' in link spec '" +
                          std::string(whole) + "'");
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

} // namespace

LinkSpec LinkSpec::identity() noexcept { return {Kind::Identity, 0.0, 0.0}; }

LinkSpec LinkSpec::threshold(double beta) {
  if (!(beta > 0.0 && beta <= 1.0))
    throw ValidationError("threshold link requires 0 < beta <= 1, got " + format_number(beta));
  return {Kind::Threshold, beta, beta};
}

LinkSpec LinkSpec::ramp(double alpha, double beta) {
  if (!(alpha >= 0.0 && beta <= 1.0 && alpha < beta))
    throw ValidationError("ramp link requires 0 <= alpha < beta <= 1, got alpha=" +
                          format_number(alpha) + " beta=" + format_number(beta));
  return {Kind::Ramp, alpha, beta};
}

LinkSpec LinkSpec::hinge() noexcept { return {Kind::Hinge, 0.5, 1.0}; }

LinkSpec LinkSpec::parse(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                     : pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  const auto &name = parts.front();
  if (name == "identity" && parts.size() == 1)
    return identity();
  if (name == "hinge" && parts.size() == 1)
    return hinge();
  if (name == "threshold" && parts.size() == 2)
    return threshold(parse_number(parts[1], text));
  if (name == "ramp" && parts.size() == 3)
    return ramp(parse_number(parts[1], text), parse_number(parts[2], text));
  throw ValidationError("unknown link spec '" + std::string(text) +
                        "' (expected identity, threshold:<b>, ramp:<a>:<b> or hinge)");
}

double LinkSpec::apply(double similarity) const noexcept {
  const double l = std::clamp(similarity, 0.0, 1.0);
  switch (kind_) {
  case Kind::Identity:
    return l;
  case Kind::Threshold:
    return l >= beta_ ? 1.0 : 0.0;
  case Kind::Ramp:
  case Kind::Hinge:
    if (l <= alpha_)
      return 0.0;
    if (l >= beta_)
      return 1.0;
    return (l - alpha_) / (beta_ - alpha_);
  }
  return l;
}

std::string LinkSpec::to_string() const {
  switch (kind_) {
  case Kind::Identity:
    return "identity";
  case Kind::Threshold:
    return "threshold:" + format_number(beta_);
  case Kind::Ramp:
    return "ramp:" + format_number(alpha_) + ":" + format_number(beta_);
  case Kind::Hinge:
    return "hinge";
  }
  return "identity";
}

} // namespace detcal
