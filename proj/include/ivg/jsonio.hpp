#pragma once

#include <json.hpp>

namespace ivg {

// Insertion-ordered so serialized files keep a fixed, documented key order.
using Json = nlohmann::ordered_json;

inline constexpr const char* kWireVersion = "ivg/1";

}  // namespace ivg
