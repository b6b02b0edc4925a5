#include "ivg/geometry.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ivg/error.hpp"

namespace ivg {

BBox::BBox(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  const bool ok = x_min >= 0.0 && y_min >= 0.0 && x_max <= 1.0 && y_max <= 1.0 &&
                  x_min < x_max && y_min < y_max;
  if (!ok) {
    throw MalformedBoxError(
        fmt::format("invalid box ({}, {}, {}, {}): need 0 <= min < max <= 1", x_min, y_min,
                    x_max, y_max));
  }
}

double iou(const BBox& a, const BBox& b) {
  if (a == b) return 1.0;
  const double iw = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double ih = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Quadrant quadrant_of(const BBox& box) {
  const bool right = box.center_x() > 0.5;
  const bool bottom = box.center_y() > 0.5;
  return static_cast<Quadrant>((bottom ? 2 : 0) + (right ? 1 : 0));
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::kTopLeft: return "top left";
    case Quadrant::kTopRight: return "top right";
    case Quadrant::kBottomLeft: return "bottom left";
    case Quadrant::kBottomRight: return "bottom right";
  }
  return "top left";
}

bool parse_quadrant(std::string_view text, Quadrant& out) {
  for (Quadrant q : kAllQuadrants) {
    if (text == to_string(q)) {
      out = q;
      return true;
    }
  }
  return false;
}

const char* to_string(PolicyErrorKind kind) {
  switch (kind) {
    case PolicyErrorKind::kTimeout: return "timeout";
    case PolicyErrorKind::kMalformedResponse: return "malformed_response";
    case PolicyErrorKind::kTransport: return "transport";
    case PolicyErrorKind::kInternal: return "policy_internal";
  }
  return "policy_internal";
}

}  // namespace ivg
