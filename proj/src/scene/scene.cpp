#include "ivg/scene.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/rng.hpp"

namespace ivg {

namespace {

// Side-length ranges (fraction of the image) per size class.
struct SideRange {
  double lo;
  double hi;
};

constexpr SideRange kSideRanges[3] = {{0.08, 0.14}, {0.15, 0.22}, {0.23, 0.32}};

// Words the question grammar treats as keywords; attribute values may not
// collide with them.
const std::set<std::string, std::less<>> kReservedWords = {
    "small", "medium", "large", "top",  "bottom", "left", "right", "one",  "the",
    "a",     "in",     "is",    "it",   "what",   "where", "color", "kind", "size",
    "type",  "yes",    "no",    "of",   "object", "there"};

bool contains(const std::vector<std::string>& v, std::string_view w) {
  return std::find(v.begin(), v.end(), w) != v.end();
}

void check_word_list(const std::vector<std::string>& words, const char* what) {
  if (words.empty()) throw ValidationError(fmt::format("vocab: {} list is empty", what));
  std::set<std::string> seen;
  for (const auto& w : words) {
    if (w.empty() || w.find_first_of(" \t\n.,?!") != std::string::npos) {
      throw ValidationError(fmt::format("vocab: {} entry '{}' is not a single word", what, w));
    }
    if (std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isupper(c); })) {
      throw ValidationError(fmt::format("vocab: {} entry '{}' must be lowercase", what, w));
    }
    if (kReservedWords.count(w) != 0) {
      throw ValidationError(fmt::format("vocab: {} entry '{}' is a reserved word", what, w));
    }
    if (!seen.insert(w).second) {
      throw ValidationError(fmt::format("vocab: duplicate {} entry '{}'", what, w));
    }
  }
}

BBox random_box(Rng& rng, SizeClass size) {
  const SideRange r = kSideRanges[static_cast<int>(size)];
  const double w = rng.uniform(r.lo, r.hi);
  const double h = rng.uniform(r.lo, r.hi);
  const double x = rng.uniform(0.0, 1.0 - w);
  const double y = rng.uniform(0.0, 1.0 - h);
  return BBox(x, y, x + w, y + h);
}

// Box of the given size class whose center falls in quadrant q.
BBox random_box_in(Rng& rng, SizeClass size, Quadrant q) {
  const SideRange r = kSideRanges[static_cast<int>(size)];
  const double w = rng.uniform(r.lo, r.hi);
  const double h = rng.uniform(r.lo, r.hi);
  const bool right = q == Quadrant::kTopRight || q == Quadrant::kBottomRight;
  const bool bottom = q == Quadrant::kBottomLeft || q == Quadrant::kBottomRight;
  const double cx = right ? rng.uniform(0.5, 1.0 - 0.5 * w) : rng.uniform(0.5 * w, 0.5);
  const double cy = bottom ? rng.uniform(0.5, 1.0 - 0.5 * h) : rng.uniform(0.5 * h, 0.5);
  const double x = std::clamp(cx - 0.5 * w, 0.0, 1.0 - w);
  const double y = std::clamp(cy - 0.5 * h, 0.0, 1.0 - h);
  return BBox(x, y, x + w, y + h);
}

bool fits(const BBox& box, const std::vector<SceneObject>& placed, double max_overlap) {
  return std::all_of(placed.begin(), placed.end(), [&](const SceneObject& o) {
    return iou(box, o.bbox) <= max_overlap;
  });
}

}  // namespace

std::string_view to_string(SizeClass s) {
  switch (s) {
    case SizeClass::kSmall: return "small";
    case SizeClass::kMedium: return "medium";
    case SizeClass::kLarge: return "large";
  }
  return "small";
}

std::optional<SizeClass> parse_size(std::string_view word) {
  if (word == "small") return SizeClass::kSmall;
  if (word == "medium") return SizeClass::kMedium;
  if (word == "large") return SizeClass::kLarge;
  return std::nullopt;
}

void AttrVocab::validate() const {
  check_word_list(categories, "category");
  check_word_list(colors, "color");
  for (const auto& c : colors) {
    if (contains(categories, c)) {
      throw ValidationError(fmt::format("vocab: '{}' is both a color and a category", c));
    }
  }
}

bool AttrVocab::has_category(std::string_view w) const { return contains(categories, w); }
bool AttrVocab::has_color(std::string_view w) const { return contains(colors, w); }

Signature signature_of(const SceneObject& o) {
  return Signature{o.size, o.color, o.category, o.quadrant()};
}

const SceneObject* Scene::find(ObjectId id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

const SceneObject& Scene::at(ObjectId id) const {
  const SceneObject* o = find(id);
  if (o == nullptr) {
    throw NotFoundError(fmt::format("scene {} has no object {}", scene_id, id));
  }
  return *o;
}

void SceneConfig::validate() const {
  if (n_objects < 2 || n_objects > 20) {
    throw ValidationError(fmt::format("scene config: n_objects = {} outside [2, 20]", n_objects));
  }
  if (!(max_overlap >= 0.0 && max_overlap < 1.0)) {
    throw ValidationError(fmt::format("scene config: max_overlap = {} outside [0, 1)", max_overlap));
  }
  if (pixel_width <= 0 || pixel_height <= 0) {
    throw ValidationError("scene config: pixel dimensions must be positive");
  }
  vocab.validate();
}

Scene generate_scene(std::uint64_t seed, const SceneConfig& config) {
  config.validate();
  Rng rng(seed);
  Scene scene;
  scene.scene_id = fmt::format("scene-{:016x}", seed);
  scene.pixel_width = config.pixel_width;
  scene.pixel_height = config.pixel_height;
  scene.seed = seed;

  std::set<Signature> used;
  for (int id = 0; id < config.n_objects; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      SceneObject o;
      o.id = id;
      o.category = config.vocab.categories[rng.below(config.vocab.categories.size())];
      o.color = config.vocab.colors[rng.below(config.vocab.colors.size())];
      o.size = static_cast<SizeClass>(rng.below(3));
      o.bbox = random_box(rng, o.size);
      if (!fits(o.bbox, scene.objects, config.max_overlap)) continue;
      if (!used.insert(signature_of(o)).second) continue;
      scene.objects.push_back(std::move(o));
      placed = true;
    }
    if (!placed) {
      throw InfeasibleError(fmt::format(
          "placement infeasible: object {} of {} not placed after {} retries "
          "(seed={}, n_objects={}, max_overlap={})",
          id, config.n_objects, kPlacementRetries, seed, config.n_objects, config.max_overlap));
    }
  }
  return scene;
}

Scene inject_ambiguity(const Scene& scene, int k, std::uint64_t rng_seed, double max_overlap) {
  if (k < 2) throw ValidationError(fmt::format("inject_ambiguity: k = {} must be >= 2", k));
  if (scene.objects.empty()) throw ValidationError("inject_ambiguity: empty scene");
  Rng rng(rng_seed);

  std::vector<std::size_t> order(scene.objects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  ObjectId next_id = 0;
  for (const auto& o : scene.objects) next_id = std::max(next_id, o.id + 1);

  for (std::size_t idx : order) {
    const SceneObject& tmpl = scene.objects[idx];
    const Quadrant q = tmpl.quadrant();
    Scene out = scene;
    bool ok = true;
    for (int c = 0; c < k - 1 && ok; ++c) {
      ok = false;
      for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
        SceneObject clone = tmpl;
        clone.id = next_id + c;
        clone.bbox = random_box_in(rng, tmpl.size, q);
        if (clone.quadrant() != q) continue;
        if (!fits(clone.bbox, out.objects, max_overlap)) continue;
        out.objects.push_back(std::move(clone));
        ok = true;
        break;
      }
    }
    if (ok) return out;
  }
  throw InfeasibleError(fmt::format(
      "inject_ambiguity infeasible: no object of scene {} admits {} indistinguishable copies "
      "(max_overlap={})",
      scene.scene_id, k, max_overlap));
}

void validate_scene(const Scene& scene, double max_overlap) {
  if (scene.objects.size() < 2) {
    throw ValidationError(fmt::format("scene {}: needs at least 2 objects", scene.scene_id));
  }
  if (scene.pixel_width <= 0 || scene.pixel_height <= 0) {
    throw ValidationError(fmt::format("scene {}: non-positive pixel size", scene.scene_id));
  }
  std::set<ObjectId> ids;
  for (const auto& o : scene.objects) {
    if (o.id < 0 || !ids.insert(o.id).second) {
      throw ValidationError(fmt::format("scene {}: bad or duplicate object id {}", scene.scene_id, o.id));
    }
    if (o.category.empty() || o.color.empty()) {
      throw ValidationError(fmt::format("scene {}: object {} lacks attributes", scene.scene_id, o.id));
    }
  }
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.objects.size(); ++j) {
      const double v = iou(scene.objects[i].bbox, scene.objects[j].bbox);
      if (v > max_overlap) {
        throw ValidationError(fmt::format("scene {}: objects {} and {} overlap with IoU {} > {}",
                                          scene.scene_id, scene.objects[i].id,
                                          scene.objects[j].id, v, max_overlap));
      }
    }
  }
}

std::string describe_object(const SceneObject& o) {
  return fmt::format("a {} {} {} in the {}", to_string(o.size), o.color, o.category,
                     to_string(o.quadrant()));
}

std::string describe_scene(const Scene& scene) {
  std::vector<const SceneObject*> sorted;
  for (const auto& o : scene.objects) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(),
            [](const SceneObject* a, const SceneObject* b) { return a->id < b->id; });
  std::string text;
  for (const SceneObject* o : sorted) {
    if (!text.empty()) text += ' ';
    text += describe_object(*o);
    text += '.';
  }
  return text;
}

void to_json(Json& j, const SceneObject& o) {
  j = Json::object();
  j["id"] = o.id;
  j["bbox"] = o.bbox;
  j["category"] = o.category;
  j["color"] = o.color;
  j["size"] = to_string(o.size);
}

void from_json(const Json& j, SceneObject& o) {
  o.id = j.at("id").get<int>();
  o.bbox = j.at("bbox").get<BBox>();
  o.category = j.at("category").get<std::string>();
  o.color = j.at("color").get<std::string>();
  const auto size = parse_size(j.at("size").get<std::string>());
  if (!size) throw ValidationError("unknown size '" + j.at("size").get<std::string>() + "'");
  o.size = *size;
}

void to_json(Json& j, const Scene& s) {
  j = Json::object();
  j["scene_id"] = s.scene_id;
  j["pixel_width"] = s.pixel_width;
  j["pixel_height"] = s.pixel_height;
  j["seed"] = s.seed;
  j["objects"] = s.objects;
}

void from_json(const Json& j, Scene& s) {
  s.scene_id = j.at("scene_id").get<std::string>();
  s.pixel_width = j.at("pixel_width").get<int>();
  s.pixel_height = j.at("pixel_height").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.objects = j.at("objects").get<std::vector<SceneObject>>();
}

std::string serialize_scene(const Scene& scene) { return Json(scene).dump(); }

void write_scenes_jsonl(std::ostream& out, const std::vector<Scene>& scenes) {
  for (const auto& s : scenes) out << serialize_scene(s) << '\n';
}

std::vector<Scene> read_scenes_jsonl(std::istream& in) {
  std::vector<Scene> scenes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      scenes.push_back(Json::parse(line).get<Scene>());
    } catch (const Json::exception& e) {
      throw ValidationError(fmt::format("scenes line {}: {}", line_no, e.what()));
    }
  }
  return scenes;
}

std::vector<Scene> load_scenes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open scenes file " + path);
  return read_scenes_jsonl(in);
}

}  // namespace ivg
