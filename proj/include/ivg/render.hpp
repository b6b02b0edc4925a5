#pragma once

#include <span>
#include <string>
#include <string_view>

#include "ivg/geometry.hpp"
#include "ivg/scene.hpp"

namespace ivg {

struct Overlay {
  BBox box;
  std::string label;
};

// Normalized coordinate -> pixel, rounded to nearest.
int to_pixel(double fraction, int extent);

// Returns the encoded image ("svg" or "png") as a byte string. Output is a
// pure function of the inputs. Throws ValidationError for other formats.
std::string render_scene(const Scene& scene, std::string_view format,
                         std::span<const Overlay> overlays = {});

}  // namespace ivg
