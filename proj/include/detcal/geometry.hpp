#pragma once

namespace detcal {

/// Axis-aligned box in continuous pixel coordinates, corner form.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  /// Validated construction; throws ValidationError on non-finite
  /// coordinates or inverted corners.
  static Box from_corners(double x_min, double y_min, double x_max, double y_max);
  /// COCO `[x, y, width, height]` form.
  static Box from_xywh(double x, double y, double width, double height);

  friend bool operator==(const Box &, const Box &) = default;
};

bool is_valid(const Box &b) noexcept;

/// Degenerate boxes have area 0.
double area(const Box &b) noexcept;
double intersection_area(const Box &a, const Box &b) noexcept;

/// Intersection over union; 0 when the union is empty.
double iou(const Box &a, const Box &b) noexcept;
/// Dice coefficient 2|A∩B| / (|A|+|B|); 0 when both areas are 0.
double dice(const Box &a, const Box &b) noexcept;

} // namespace detcal
