#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/evolve.hpp"
#include "ivg/jsonio.hpp"
#include "ivg/metrics.hpp"
#include "ivg/policy.hpp"
#include "ivg/reference_policies.hpp"
#include "ivg/rng.hpp"
#include "ivg/scene.hpp"

namespace ivg {

// --- Bindings ---------------------------------------------------------------

// A binding id names a policy implementation: "reference", "adversarial"
// or the base URL of a remote policy speaking the /act protocol.
struct Bindings {
  std::string questioner;
  std::string guesser;
  std::string oracle;
  friend bool operator==(const Bindings&, const Bindings&) = default;
};

struct BindingOptions {
  ReferenceConfig reference;
  std::chrono::milliseconds timeout{30000};
};

bool is_known_binding(std::string_view id);

// Each throws ValidationError naming the role when `id` is empty, and
// NotFoundError for an id that is neither built in nor a URL.
std::shared_ptr<const QuestionerPolicy> make_questioner(std::string_view id, const BindingOptions& opts = {});
std::shared_ptr<const GuesserPolicy> make_guesser(std::string_view id, const BindingOptions& opts = {});
std::shared_ptr<const OraclePolicy> make_oracle(std::string_view id, const BindingOptions& opts = {});
PolicySet make_policies(const Bindings& bindings, const BindingOptions& opts = {});

// --- Results ----------------------------------------------------------------

enum class BenchTask { kMtVqg, kMtVqa, kMtVg, kIvg };

std::string_view to_string(BenchTask task);  // "mt-vqg", "mt-vqa", "mt-vg", "ivg"
std::optional<BenchTask> parse_bench_task(std::string_view text);

enum class ItemStatus { kSuccess, kFailure, kSkipped };

std::string_view to_string(ItemStatus status);

struct BenchItem {
  std::string id;
  ItemStatus status = ItemStatus::kSuccess;
  std::string reason;  // set for failures and skips
  Json detail = Json::object();
};

struct BenchResult {
  BenchTask task = BenchTask::kIvg;
  Bindings bindings;  // roles the task does not use stay empty
  std::uint64_t seed = 0;
  MetricReport report;
  std::vector<BenchItem> items;
  double wall_seconds = 0.0;  // kept out of the JSON form

  std::size_t count(ItemStatus status) const;
};

// Deterministic JSON form: version, task, bindings, seed, counts, report,
// items. Wall-clock time is excluded so reruns are byte-identical.
Json to_json_value(const BenchResult& result);
std::string format_bench(const BenchResult& result);

// --- Tasks ------------------------------------------------------------------

struct EvalOptions {
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t pool_size = 11;
  double threshold = kSuccessThreshold;
  int max_turns = kDefaultMaxTurns;
  std::string corpus;
};

using SceneIndex = std::map<std::string, Scene>;

SceneIndex index_scenes(const std::vector<Scene>& scenes);

// Guesser grounds each record's full transcript (E and every Q/A pair).
// Throws ValidationError for an empty dataset.
BenchResult eval_mt_vg(const std::vector<DatasetRecord>& records, const SceneIndex& scenes,
                       const GuesserPolicy& guesser, const EvalOptions& opts = {});

// Oracle answers every recorded question given the preceding history.
BenchResult eval_mt_vqa(const std::vector<DatasetRecord>& records, const SceneIndex& scenes,
                        const OraclePolicy& oracle, const EvalOptions& opts = {});

// Questioner asks the next question at every recorded question turn.
BenchResult eval_mt_vqg(const std::vector<DatasetRecord>& records, const SceneIndex& scenes,
                        const QuestionerPolicy& questioner, const EvalOptions& opts = {});

// n fresh self-play episodes planned as in generate_round.
BenchResult eval_ivg(const std::vector<Scene>& scenes, const PolicySet& policies, std::size_t n,
                     const EvalOptions& opts = {});

// --- Multi-choice pools -------------------------------------------------------

// Identity of an answer for deduplication: its sorted metric tokens.
std::vector<std::string> token_multiset(std::string_view text);

struct ChoicePool {
  std::vector<std::string> candidates;
  std::size_t truth_index = 0;
};

// Truth plus pool_size - 1 distractors: same-kind texts first, then any
// other text, each deduplicated against the truth and each other, in a
// seeded order. The truth lands at a seeded position. Returns nullopt when
// there are not enough distinct distractors.
std::optional<ChoicePool> build_choice_pool(const std::string& truth,
                                            const std::vector<std::string>& same_kind,
                                            const std::vector<std::string>& other_kinds,
                                            std::size_t pool_size, Rng& rng);

// Throws ValidationError unless the truth is present exactly once by token
// multiset.
void check_choice_pool(const ChoicePool& pool);

// --- Cross-validation -----------------------------------------------------------

struct CrossValidationRow {
  Bindings bindings;
  double sr = 0.0;
};

// All-reference row, then one row per role with that role replaced by the
// adversarial constant policy.
std::vector<CrossValidationRow> cross_validate(const std::vector<Scene>& scenes, std::size_t n,
                                               const EvalOptions& opts,
                                               const BindingOptions& bindings = {});

}  // namespace ivg
