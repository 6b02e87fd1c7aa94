#include "detcal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "detcal/error.hpp"

namespace detcal {

bool is_valid(const Box &b) noexcept {
  return std::isfinite(b.x_min) && std::isfinite(b.y_min) && std::isfinite(b.x_max) &&
         std::isfinite(b.y_max) && b.x_max >= b.x_min && b.y_max >= b.y_min;
}

Box Box::from_corners(double x_min, double y_min, double x_max, double y_max) {
  Box b{x_min, y_min, x_max, y_max};
  if (!is_valid(b)) {
    std::ostringstream msg;
    msg << "invalid box (" << x_min << ", " << y_min << ", " << x_max << ", " << y_max << ")";
    throw ValidationError(msg.str());
  }
  return b;
}

Box Box::from_xywh(double x, double y, double width, double height) {
  if (!(width >= 0.0) || !(height >= 0.0)) {
    std::ostringstream msg;
    msg << "negative box extent (width " << width << ", height " << height << ")";
    throw ValidationError(msg.str());
  }
  return from_corners(x, y, x + width, y + height);
}

double area(const Box &b) noexcept { return (b.x_max - b.x_min) * (b.y_max - b.y_min); }

double intersection_area(const Box &a, const Box &b) noexcept {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0)
    return 0.0;
  return w * h;
}

double iou(const Box &a, const Box &b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0)
    return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double dice(const Box &a, const Box &b) noexcept {
  const double total = area(a) + area(b);
  if (total <= 0.0)
    return 0.0;
  return std::clamp(2.0 * intersection_area(a, b) / total, 0.0, 1.0);
}

} // namespace detcal
