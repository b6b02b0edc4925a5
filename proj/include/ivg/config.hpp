#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ivg/scene.hpp"

namespace ivg {

// Settings read from an INI file with sections [scenes], [policies],
// [evolve], [eval] and [serve]. Every field has the default shown here;
// config/ivg.example.ini spells them out.
struct Config {
  struct Scenes {
    int n = 100;
    int n_objects = 6;
    double max_overlap = 0.3;
    int pixel_width = 512;
    int pixel_height = 512;
    // Clones per injected indistinguishable group; 0 disables injection.
    int ambiguity_k = 0;
  } scenes;

  struct Policies {
    // Binding ids: "reference", "adversarial" or an http(s) URL. Empty
    // means unbound.
    std::string questioner;
    std::string guesser;
    std::string oracle;
    double noise = 0.0;
    double ambiguity_level = 1.0;
    int max_turns = 5;
    int timeout_ms = 30000;
  } policies;

  struct Evolve {
    int round = 0;
    int episodes = 1000;
    int workers = 1;
    std::string polisher = "mock";  // "mock" or an http(s) URL
    int polish_retries = 3;
    std::string polish_prompts = "config/polish_prompts.json";
  } evolve;

  struct Eval {
    int n = 200;
    int pool_size = 11;
    double threshold = 0.5;
    int workers = 1;
  } eval;

  struct Serve {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string ledger = "hri_ledger.jsonl";
    std::string static_dir;
    // Bench items (scene plus target per line) offered to sessions.
    std::string items;
  } serve;
};

// Throws ValidationError for unknown sections or keys, unparseable values
// or out-of-range settings; NotFoundError when the file is missing.
Config load_config(const std::filesystem::path& path);
Config parse_config(std::string_view ini_text);
void validate_config(const Config& config);

SceneConfig scene_config(const Config& config);

}  // namespace ivg
