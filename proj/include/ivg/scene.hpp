#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/jsonio.hpp"

#include "ivg/error.hpp"
#include "ivg/geometry.hpp"

namespace ivg {

using ObjectId = int;

enum class SizeClass { kSmall = 0, kMedium = 1, kLarge = 2 };

std::string_view to_string(SizeClass s);
std::optional<SizeClass> parse_size(std::string_view word);

// Attribute vocabulary. Every entry is a single lowercase word so that
// template questions and descriptions stay parseable.
struct AttrVocab {
  std::vector<std::string> categories{"ball", "cube", "cup", "book", "bottle", "box", "plate", "toy"};
  std::vector<std::string> colors{"red", "blue", "green", "yellow", "white", "black"};

  // Throws ValidationError on empty lists, duplicates, or reserved words.
  void validate() const;

  bool has_category(std::string_view w) const;
  bool has_color(std::string_view w) const;

  friend bool operator==(const AttrVocab&, const AttrVocab&) = default;
};

struct SceneObject {
  ObjectId id = 0;
  BBox bbox{0.0, 0.0, 1.0, 1.0};
  std::string category;
  std::string color;
  SizeClass size = SizeClass::kSmall;

  Quadrant quadrant() const { return quadrant_of(bbox); }
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

// Two objects with equal signatures cannot be told apart by any template
// question.
struct Signature {
  SizeClass size;
  std::string color;
  std::string category;
  Quadrant quadrant;
  friend auto operator<=>(const Signature&, const Signature&) = default;
};

Signature signature_of(const SceneObject& o);

struct Scene {
  std::string scene_id;
  int pixel_width = 512;
  int pixel_height = 512;
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;

  const SceneObject* find(ObjectId id) const;
  const SceneObject& at(ObjectId id) const;  // throws NotFoundError

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct SceneConfig {
  int n_objects = 6;
  double max_overlap = 0.3;
  AttrVocab vocab;
  int pixel_width = 512;
  int pixel_height = 512;

  void validate() const;
};

inline constexpr int kPlacementRetries = 1000;

// Deterministic in (seed, config). Throws ValidationError for a bad config
// and InfeasibleError when rejection sampling exhausts its retry budget.
Scene generate_scene(std::uint64_t seed, const SceneConfig& config);

// Adds k-1 clones of one object (same category, color, size and quadrant)
// so that k objects become indistinguishable. Throws InfeasibleError when no
// object admits k clones under the overlap bound.
Scene inject_ambiguity(const Scene& scene, int k, std::uint64_t rng_seed,
                       double max_overlap = 0.3);

// Re-checks every Scene invariant. Throws ValidationError.
void validate_scene(const Scene& scene, double max_overlap = 1.0);

// "a {size} {color} {category} in the {quadrant}" for one object.
std::string describe_object(const SceneObject& o);
// One sentence per object, id order.
std::string describe_scene(const Scene& scene);

void to_json(Json& j, const SceneObject& o);
void from_json(const Json& j, SceneObject& o);
void to_json(Json& j, const Scene& s);
void from_json(const Json& j, Scene& s);

// One scene per line.
std::string serialize_scene(const Scene& scene);
void write_scenes_jsonl(std::ostream& out, const std::vector<Scene>& scenes);
std::vector<Scene> read_scenes_jsonl(std::istream& in);
std::vector<Scene> load_scenes(const std::string& path);

}  // namespace ivg

// BBox has no default state, so it needs a serializer that returns by value.
template <>
struct nlohmann::adl_serializer<ivg::BBox> {
  template <typename BasicJson>
  static ivg::BBox from_json(const BasicJson& j) {
    if (!j.is_array() || j.size() != 4) {
      throw ivg::MalformedBoxError("bbox must be an array of 4 numbers");
    }
    return ivg::BBox(j[0].template get<double>(), j[1].template get<double>(),
                     j[2].template get<double>(), j[3].template get<double>());
  }
  template <typename BasicJson>
  static void to_json(BasicJson& j, const ivg::BBox& b) {
    j = BasicJson::array({b.x_min(), b.y_min(), b.x_max(), b.y_max()});
  }
};
