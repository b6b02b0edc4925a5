#include "ivg/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "ivg/error.hpp"

namespace ivg {

namespace {

namespace pt = boost::property_tree;

template <typename T>
void read(const pt::ptree& section, const std::string& name, const std::string& key, T& out) {
  const auto value = section.get_optional<std::string>(key);
  if (!value) return;
  try {
    out = section.get<T>(key);
  } catch (const pt::ptree_bad_data&) {
    throw ValidationError(fmt::format("config [{}] {} = '{}' is not a valid value", name, key, *value));
  }
}

void read_string(const pt::ptree& section, const std::string& key, std::string& out) {
  if (const auto v = section.get_optional<std::string>(key)) out = *v;
}

void check_keys(const pt::ptree& section, const std::string& name, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : section) {
    if (!allowed.count(key)) throw ValidationError(fmt::format("config [{}]: unknown key '{}'", name, key));
  }
}

}  // namespace

Config parse_config(std::string_view ini_text) {
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(fmt::format("config: {}", e.what()));
  }

  static const std::map<std::string, std::set<std::string>> kKeys = {
      {"scenes", {"n", "n_objects", "max_overlap", "pixel_width", "pixel_height", "ambiguity_k"}},
      {"policies", {"questioner", "guesser", "oracle", "noise", "ambiguity_level", "max_turns", "timeout_ms"}},
      {"evolve", {"round", "episodes", "workers", "polisher", "polish_retries", "polish_prompts"}},
      {"eval", {"n", "pool_size", "threshold", "workers"}},
      {"serve", {"host", "port", "ledger", "static_dir", "items"}},
  };
  for (const auto& [name, section] : tree) {
    const auto it = kKeys.find(name);
    if (it == kKeys.end()) throw ValidationError(fmt::format("config: unknown section [{}]", name));
    if (!section.data().empty()) throw ValidationError(fmt::format("config: '{}' outside any section", name));
    check_keys(section, name, it->second);
  }

  Config c;
  const pt::ptree empty;
  auto section = [&](const char* name) -> const pt::ptree& {
    const auto child = tree.get_child_optional(name);
    return child ? *child : empty;
  };

  const auto& s = section("scenes");
  read(s, "scenes", "n", c.scenes.n);
  read(s, "scenes", "n_objects", c.scenes.n_objects);
  read(s, "scenes", "max_overlap", c.scenes.max_overlap);
  read(s, "scenes", "pixel_width", c.scenes.pixel_width);
  read(s, "scenes", "pixel_height", c.scenes.pixel_height);
  read(s, "scenes", "ambiguity_k", c.scenes.ambiguity_k);

  const auto& p = section("policies");
  read_string(p, "questioner", c.policies.questioner);
  read_string(p, "guesser", c.policies.guesser);
  read_string(p, "oracle", c.policies.oracle);
  read(p, "policies", "noise", c.policies.noise);
  read(p, "policies", "ambiguity_level", c.policies.ambiguity_level);
  read(p, "policies", "max_turns", c.policies.max_turns);
  read(p, "policies", "timeout_ms", c.policies.timeout_ms);

  const auto& e = section("evolve");
  read(e, "evolve", "round", c.evolve.round);
  read(e, "evolve", "episodes", c.evolve.episodes);
  read(e, "evolve", "workers", c.evolve.workers);
  read_string(e, "polisher", c.evolve.polisher);
  read(e, "evolve", "polish_retries", c.evolve.polish_retries);
  read_string(e, "polish_prompts", c.evolve.polish_prompts);

  const auto& v = section("eval");
  read(v, "eval", "n", c.eval.n);
  read(v, "eval", "pool_size", c.eval.pool_size);
  read(v, "eval", "threshold", c.eval.threshold);
  read(v, "eval", "workers", c.eval.workers);

  const auto& sv = section("serve");
  read_string(sv, "host", c.serve.host);
  read(sv, "serve", "port", c.serve.port);
  read_string(sv, "ledger", c.serve.ledger);
  read_string(sv, "static_dir", c.serve.static_dir);
  read_string(sv, "items", c.serve.items);

  validate_config(c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError(fmt::format("config file {} not found", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const Config& c) {
  auto require = [](bool ok, std::string_view what) {
    if (!ok) throw ValidationError(fmt::format("config: {}", what));
  };
  require(c.scenes.n >= 1, "[scenes] n must be >= 1");
  require(c.scenes.n_objects >= 2 && c.scenes.n_objects <= 20, "[scenes] n_objects must be in 2..20");
  require(c.scenes.max_overlap >= 0.0 && c.scenes.max_overlap < 1.0, "[scenes] max_overlap must be in [0, 1)");
  require(c.scenes.pixel_width > 0 && c.scenes.pixel_height > 0, "[scenes] pixel sizes must be positive");
  require(c.scenes.ambiguity_k == 0 || c.scenes.ambiguity_k >= 2, "[scenes] ambiguity_k must be 0 or >= 2");
  require(c.policies.noise >= 0.0 && c.policies.noise <= 1.0, "[policies] noise must be in [0, 1]");
  require(c.policies.ambiguity_level >= 0.0 && c.policies.ambiguity_level <= 1.0,
          "[policies] ambiguity_level must be in [0, 1]");
  require(c.policies.max_turns >= 0, "[policies] max_turns must be >= 0");
  require(c.policies.timeout_ms > 0, "[policies] timeout_ms must be positive");
  require(c.evolve.round >= 0, "[evolve] round must be >= 0");
  require(c.evolve.episodes >= 1, "[evolve] episodes must be >= 1");
  require(c.evolve.workers >= 1, "[evolve] workers must be >= 1");
  require(c.evolve.polish_retries >= 0, "[evolve] polish_retries must be >= 0");
  require(c.eval.n >= 1, "[eval] n must be >= 1");
  require(c.eval.pool_size >= 2, "[eval] pool_size must be >= 2");
  require(c.eval.threshold > 0.0 && c.eval.threshold < 1.0, "[eval] threshold must be in (0, 1)");
  require(c.eval.workers >= 1, "[eval] workers must be >= 1");
  require(c.serve.port >= 0 && c.serve.port <= 65535, "[serve] port must be in 0..65535");
}

SceneConfig scene_config(const Config& config) {
  SceneConfig s;
  s.n_objects = config.scenes.n_objects;
  s.max_overlap = config.scenes.max_overlap;
  s.pixel_width = config.scenes.pixel_width;
  s.pixel_height = config.scenes.pixel_height;
  return s;
}

}  // namespace ivg
