#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/bench.hpp"
#include "ivg/jsonio.hpp"
#include "ivg/policy.hpp"
#include "ivg/scene.hpp"

namespace ivg::hri {

// --- Bench items ------------------------------------------------------------

// One curated example: a scene, the object the human should describe, and
// the initial instruction shown with it.
struct BenchEntry {
  std::string item_id;
  Scene scene;
  ObjectId target = 0;
  std::string instruction;
};

void to_json(Json& j, const BenchEntry& e);
void from_json(const Json& j, BenchEntry& e);

// One entry per line. A missing instruction is filled with the reference
// Oracle's description. Throws CollisionError on a repeated item_id.
std::vector<BenchEntry> read_bench_items(const std::filesystem::path& path);
void write_bench_items(const std::filesystem::path& path, const std::vector<BenchEntry>& items);

// Items built from a scene source, targets drawn as in self-play.
std::vector<BenchEntry> make_bench_items(const std::vector<Scene>& scenes, std::size_t n,
                                         std::uint64_t seed);

// --- Judgments --------------------------------------------------------------

enum class Verdict { kNone, kBest, kTie, kWorst };

std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view text);  // "", "best", "tie", "worst"

inline const std::vector<std::string>& slot_labels() {
  static const std::vector<std::string> labels = {"A", "B", "C"};
  return labels;
}

// Derived partial order as one level per slot, 0 = best. Equal levels are
// ties. Accepted combinations for three slots:
//   tie + tie (+ tie)   all equal
//   tie + tie + worst   the tied pair above the worst
//   tie + tie + best    the best above the tied pair
//   best + worst (+ tie) best above the middle above the worst
// For two slots: tie + tie, or best + worst. Throws ValidationError quoting
// the rule a combination breaks.
std::vector<int> derive_order(const std::vector<Verdict>& verdicts);

// "A = B > C" style rendering in label order.
std::string format_order(const std::vector<int>& levels);

// --- Ledger -----------------------------------------------------------------

struct SlotRecord {
  std::string label;
  std::string binding;
  Verdict verdict = Verdict::kNone;
  int level = 0;
  std::optional<BBox> guess;
  double iou = 0.0;
  std::vector<Turn> turns;
};

struct LedgerEntry {
  std::string session_id;
  std::string item_id;
  std::uint64_t seed = 0;
  std::vector<std::string> permutation;  // binding id per slot, label order
  std::vector<SlotRecord> slots;
  std::string order;  // format_order of the levels
  std::string comment;
};

void to_json(Json& j, const LedgerEntry& e);
void from_json(const Json& j, LedgerEntry& e);

// Append-only JSONL ledger. Every append is flushed before returning.
class Ledger {
 public:
  Ledger() = default;  // in memory only
  // Loads existing entries, then appends to the same file.
  explicit Ledger(std::filesystem::path path);

  void append(const LedgerEntry& entry);
  std::vector<LedgerEntry> entries() const;

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<LedgerEntry> entries_;
  mutable std::mutex mutex_;
};

std::vector<LedgerEntry> read_ledger(const std::filesystem::path& path);

// --- Aggregation ------------------------------------------------------------

struct Tally {
  std::size_t better = 0;
  std::size_t tie = 0;
  std::size_t worse = 0;

  std::size_t total() const { return better + tie + worse; }
  // {better, tie, worse} as fractions of the total; all zero when empty.
  std::array<double, 3> fractions() const;
  friend bool operator==(const Tally&, const Tally&) = default;
};

struct Aggregate {
  std::map<std::string, Tally> per_binding;
  // Keyed by (binding, opponent), seen from the first binding.
  std::map<std::pair<std::string, std::string>, Tally> pairwise;
  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

// Expands every entry's order into pairwise outcomes between de-blinded
// bindings. When `bindings` is non-empty only pairs within it count.
Aggregate aggregate_scores(const std::vector<LedgerEntry>& entries,
                           const std::vector<std::string>& bindings = {});

Json to_json_value(const Aggregate& aggregate);

// --- Sessions ---------------------------------------------------------------

enum class SessionStatus { kActive, kGuessed, kScored };
enum class SlotStatus { kAwaitingAnswer, kGuessed, kFailed };

std::string_view to_string(SessionStatus s);
std::string_view to_string(SlotStatus s);

struct ServiceConfig {
  int max_turns = 5;
  BindingOptions bindings;
};

// Session table plus ledger. Thread-safe; posts to a slot that is already
// being processed are rejected with ConflictError, never queued.
class HriService {
 public:
  HriService(std::vector<BenchEntry> items, ServiceConfig config = {},
             std::shared_ptr<Ledger> ledger = std::make_shared<Ledger>());

  const std::vector<BenchEntry>& items() const { return items_; }
  const BenchEntry& item(const std::string& item_id) const;  // NotFoundError

  // Returns the blinded session view. Throws NotFoundError for an unknown
  // item or binding, ValidationError for a binding count outside 1..3.
  Json create_session(const std::string& item_id, const std::vector<std::string>& bindings,
                      std::uint64_t seed);

  // Blinded until the session is scored; then the reveal is included.
  Json session_view(const std::string& session_id) const;

  // Human answer for one slot. Returns that slot's view: the next question
  // or the final guess. Throws StateError when the session is not active,
  // ConflictError when the slot is not awaiting an answer, ValidationError
  // for a blank answer.
  Json post_answer(const std::string& session_id, const std::string& label, const std::string& text);

  // Throws StateError unless every slot has finished and the session has
  // at least two slots; ValidationError for an invalid combination.
  LedgerEntry submit_scores(const std::string& session_id,
                            const std::map<std::string, Verdict>& verdicts,
                            const std::string& comment = {});

  Aggregate aggregate(const std::vector<std::string>& bindings = {}) const;
  const Ledger& ledger() const { return *ledger_; }

 private:
  struct Slot;
  struct Session;

  std::shared_ptr<Session> find(const std::string& session_id) const;
  void advance(const Session& session, Slot& slot) const;
  Json slot_view(const Session& session, const Slot& slot) const;
  Json view_locked(const Session& session) const;

  std::vector<BenchEntry> items_;
  std::map<std::string, std::size_t> item_index_;
  ServiceConfig config_;
  std::shared_ptr<Ledger> ledger_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  mutable std::mutex mutex_;
};

// Deterministic slot order for `count` bindings: a seeded permutation of
// 0..count-1, position = slot.
std::vector<std::size_t> slot_permutation(std::size_t count, std::uint64_t seed);

}  // namespace ivg::hri
