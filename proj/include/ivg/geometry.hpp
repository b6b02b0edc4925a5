#pragma once

#include <array>
#include <string>
#include <string_view>

namespace ivg {

// Axis-aligned box in normalized image coordinates: (x_min, y_min) is the
// upper-left corner, (x_max, y_max) the bottom-right one.
class BBox {
 public:
  // Throws MalformedBoxError unless 0 <= min < max <= 1 on both axes.
  BBox(double x_min, double y_min, double x_max, double y_max);

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }

  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min_ + x_max_); }
  double center_y() const { return 0.5 * (y_min_ + y_max_); }

  std::array<double, 4> coords() const { return {x_min_, y_min_, x_max_, y_max_}; }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x_min_;
  double y_min_;
  double x_max_;
  double y_max_;
};

// Intersection over union; 0 for disjoint boxes, exactly 1 for equal ones.
double iou(const BBox& a, const BBox& b);

// Image quarters. A center lying exactly on a midline belongs to the
// left/top side.
enum class Quadrant { kTopLeft = 0, kTopRight = 1, kBottomLeft = 2, kBottomRight = 3 };

inline constexpr std::array<Quadrant, 4> kAllQuadrants = {
    Quadrant::kTopLeft, Quadrant::kTopRight, Quadrant::kBottomLeft, Quadrant::kBottomRight};

Quadrant quadrant_of(const BBox& box);
std::string_view to_string(Quadrant q);  // "top left", ...
bool parse_quadrant(std::string_view text, Quadrant& out);

}  // namespace ivg
