#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/dialogue.hpp"
#include "ivg/external_policy.hpp"
#include "ivg/jsonio.hpp"
#include "ivg/policy.hpp"
#include "ivg/reference_policies.hpp"
#include "ivg/scene.hpp"

namespace ivg {

// Strict self-play filter: a record is kept iff iou > kKeepThreshold.
inline constexpr double kKeepThreshold = 0.5;

enum class Variant { kRaw, kEnriched, kSimplified };

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view text);

struct Provenance {
  PolicyIds policies;
  std::uint64_t master_seed = 0;
  std::uint64_t episode_seed = 0;
  std::optional<std::string> polisher;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct DatasetRecord {
  std::string record_id;              // "r<round>-<episode:06>", variants add ":<variant>"
  int round = 0;
  Variant variant = Variant::kRaw;
  std::optional<std::string> parent;  // raw record id for polished variants
  std::string scene_ref;
  ObjectId target = 0;
  BBox target_box{0.0, 0.0, 1.0, 1.0};
  BBox guessed_box{0.0, 0.0, 1.0, 1.0};
  double iou = 0.0;
  int turn_count = 0;
  StopReason stopped_reason = StopReason::kBudgetExhausted;
  Dialogue dialogue;  // E, Q/A pairs and the final guess turn
  Provenance provenance;

  const std::string& expression() const { return dialogue.expression(); }
  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

void to_json(Json& j, const DatasetRecord& r);
void from_json(const Json& j, DatasetRecord& r);

std::string record_id_for(int round, std::size_t episode);
std::string variant_id(const std::string& raw_id, Variant v);

// --- Manifest ---------------------------------------------------------------

struct InputRef {
  std::string ref;
  std::string kind;  // "generated", "seed", "auxiliary"
  double weight = 1.0;
  friend bool operator==(const InputRef&, const InputRef&) = default;
};

// Default training weight for an input kind: generated data 1.0, seed and
// auxiliary data 0.1. Recorded only, never applied.
double default_weight(std::string_view kind);

struct RoundCounts {
  std::size_t run = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;  // finished below the IoU threshold
  std::size_t errored = 0;  // aborted by a policy error
  friend bool operator==(const RoundCounts&, const RoundCounts&) = default;
};

struct EpisodeError {
  std::size_t episode = 0;
  std::string scene_ref;
  std::string reason;
  std::string message;
  friend bool operator==(const EpisodeError&, const EpisodeError&) = default;
};

struct PolishCounts {
  std::size_t polished = 0;
  std::size_t unpolished = 0;
  friend bool operator==(const PolishCounts&, const PolishCounts&) = default;
};

struct RoundManifest {
  int round = 0;
  std::uint64_t master_seed = 0;
  std::vector<InputRef> inputs;
  RoundCounts counts;
  PolicyIds policies;
  std::string records_file;
  std::vector<EpisodeError> errors;
  std::optional<std::string> polisher;
  std::optional<PolishCounts> polish;
  std::optional<std::uint64_t> selection_seed;
  std::map<std::string, Variant> assignment;  // raw record id -> training variant
  bool sealed = false;
  friend bool operator==(const RoundManifest&, const RoundManifest&) = default;
};

void to_json(Json& j, const RoundManifest& m);
void from_json(const Json& j, RoundManifest& m);

std::string manifest_file_name(int round);
std::string records_file_name(int round);

// --- Persistence ------------------------------------------------------------

// Sorts by record_id and writes JSONL. Throws StateError if a record's IoU,
// recomputed from its stored boxes, is not above the threshold.
void write_records(const std::filesystem::path& path, std::vector<DatasetRecord> records);
std::vector<DatasetRecord> read_records(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const RoundManifest& manifest);
RoundManifest read_manifest(const std::filesystem::path& path);

// --- Self-play round --------------------------------------------------------

struct PolicySet {
  std::shared_ptr<const QuestionerPolicy> questioner;
  std::shared_ptr<const GuesserPolicy> guesser;
  std::shared_ptr<const OraclePolicy> oracle;
};

PolicySet reference_policies(const ReferenceConfig& config = {});

struct RoundConfig {
  int round = 0;
  std::size_t n_episodes = 0;
  std::uint64_t master_seed = 0;
  int workers = 1;
  int max_turns = kDefaultMaxTurns;
  std::vector<InputRef> inputs;
};

struct RoundResult {
  std::vector<DatasetRecord> records;  // kept only, sorted by record_id
  RoundManifest manifest;              // unsealed
};

// Episode i plays scene i mod |scenes| with seed stable_hash(master_seed, i)
// and a target drawn from that seed. Output does not depend on `workers`.
RoundResult generate_round(const std::vector<Scene>& scenes, const PolicySet& policies,
                           const RoundConfig& config);

// The scene and target that episode i of a round uses.
struct EpisodePlan {
  std::size_t scene_index = 0;
  ObjectId target = 0;
  std::uint64_t seed = 0;
};
EpisodePlan plan_episode(const std::vector<Scene>& scenes, std::uint64_t master_seed, std::size_t i);

// --- Polishing --------------------------------------------------------------

struct PolishResult {
  std::vector<std::string> key_points;
  std::vector<std::string> scenarios;
  std::size_t chosen_scenario = 0;
  std::vector<Turn> enriched;
  std::vector<Turn> simplified;
  friend bool operator==(const PolishResult&, const PolishResult&) = default;
};

void to_json(Json& j, const PolishResult& p);
void from_json(const Json& j, PolishResult& p);

// Four-step rewrite of a dialogue (key points, scenarios, enrichment under
// a drawn scenario, simplification). Implementations must be pure given
// (dialogue, caption, seed).
class Polisher {
 public:
  virtual ~Polisher() = default;
  virtual std::string id() const = 0;
  virtual PolishResult polish(const std::vector<Turn>& dialogue, std::string_view caption,
                              std::uint64_t seed) const = 0;
};

inline const std::vector<std::string>& polish_stopwords() {
  static const std::vector<std::string> words = {"a",  "an",    "the",    "is",   "it",
                                                 "of", "there", "please", "that", "this"};
  return words;
}

// Drops stopwords and collapses whitespace.
std::string simplify_text(std::string_view text);

class MockPolisher : public Polisher {
 public:
  explicit MockPolisher(AttrVocab vocab = {}) : vocab_(std::move(vocab)) {}
  std::string id() const override { return "mock"; }
  PolishResult polish(const std::vector<Turn>& dialogue, std::string_view caption,
                      std::uint64_t seed) const override;

 private:
  AttrVocab vocab_;
};

struct PolishPrompts {
  std::string key_points;
  std::string scenarios;
  std::string enrich;
  std::string simplify;
};

PolishPrompts load_polish_prompts(const std::filesystem::path& path);

// LLM polisher behind HTTP POST /polish. The request carries the caption,
// dialogue, seed and the four step prompts; the response mirrors
// PolishResult.
class HttpPolisher : public Polisher {
 public:
  HttpPolisher(Endpoint endpoint, PolishPrompts prompts)
      : endpoint_(std::move(endpoint)), prompts_(std::move(prompts)) {}
  std::string id() const override { return endpoint_.url; }
  PolishResult polish(const std::vector<Turn>& dialogue, std::string_view caption,
                      std::uint64_t seed) const override;

 private:
  Endpoint endpoint_;
  PolishPrompts prompts_;
};

// Structural and grounding checks on a polisher's output. Returns a list of
// problems; empty means valid. Attribute words in the variants must appear
// in the caption or the raw dialogue.
std::vector<std::string> validate_polish(const std::vector<Turn>& raw, const PolishResult& result,
                                         std::string_view caption, const AttrVocab& vocab = {});

struct PolishConfig {
  int retries = 3;
  AttrVocab vocab;
  // Seed the per-record polish seeds derive from; the record's master seed
  // when unset.
  std::optional<std::uint64_t> seed;
};

struct PolishOutcome {
  std::optional<PolishResult> result;  // unset: the record stays raw-only
  int attempts = 0;
  std::string failure;
};

// Throws ValidationError when the record has no Q/A pair. Transport and
// timeout failures are retried; validation failures are not.
PolishOutcome polish_dialogue(const DatasetRecord& record, std::string_view caption,
                              const Polisher& polisher, const PolishConfig& config = {});

// Seed for polishing one record.
std::uint64_t polish_seed(std::uint64_t master_seed, const std::string& record_id);

// Adds the enriched and simplified variants next to each raw record
// (replacing older variants) and records the polish counts in the manifest.
// Records without a question, or whose polish failed, stay raw-only and
// count as unpolished. Throws StateError on a sealed manifest.
void polish_round(std::vector<DatasetRecord>& records, RoundManifest& manifest,
                  const std::map<std::string, Scene>& scenes, const Polisher& polisher,
                  std::uint64_t seed, const PolishConfig& config = {}, int workers = 1);

// Object the reference Guesser grounds a dialogue to (final guess turn and
// anything after it ignored).
ObjectId reground(const Scene& scene, const std::vector<Turn>& turns,
                  const ReferenceConfig& config = {});

// --- Selection and merging --------------------------------------------------

// Per raw record: enriched or simplified by a seeded fair coin when both
// variants exist, raw otherwise.
std::map<std::string, Variant> select_training_variant(const std::vector<DatasetRecord>& records,
                                                       std::uint64_t seed);

// Stores the assignment in the manifest and seals it.
void seal_round(RoundManifest& manifest, const std::vector<DatasetRecord>& records, std::uint64_t seed);

struct IndexEntry {
  int round = 0;
  std::string file;
  std::uint64_t offset = 0;
  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

struct MergedIndex {
  std::vector<int> rounds;
  RoundCounts counts;
  std::vector<InputRef> inputs;
  std::map<std::string, IndexEntry> entries;

  std::vector<std::string> ids_in_round(int round) const;
  // Reads one record back through its index entry, relative to `base`.
  DatasetRecord load(const std::filesystem::path& base, const std::string& record_id) const;
};

void to_json(Json& j, const MergedIndex& m);
void from_json(const Json& j, MergedIndex& m);

// Merges sealed round manifests found at the given paths. Record files are
// resolved next to their manifest. Throws StateError for unsealed
// manifests, CollisionError for repeated rounds or record ids.
MergedIndex merge_rounds(const std::vector<std::filesystem::path>& manifest_paths);

}  // namespace ivg
