#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ivg/belief.hpp"
#include "ivg/geometry.hpp"
#include "ivg/jsonio.hpp"
#include "ivg/policy.hpp"
#include "ivg/prompts.hpp"
#include "ivg/scene.hpp"

namespace ivg {

inline constexpr int kDefaultMaxTurns = 5;
inline constexpr double kDefaultStopEpsilon = 1e-9;

// Initial expression plus the alternating question/answer history. turns[0]
// is always the Oracle's initial expression E.
struct Dialogue {
  std::string scene_ref;
  std::optional<ObjectId> target_ref;  // never shown to Questioner or Guesser
  std::vector<Turn> turns;

  const std::string& expression() const { return turns.front().text; }
  bool has_guess() const;
  int question_count() const;

  // Appends a turn, numbering it by position.
  void push(Role speaker, std::string text);

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

// Stop iff exactly one object keeps weight >= (1 - epsilon) * max, or the
// question budget is spent. Throws DegenerateBeliefError on an all-zero
// belief.
StopDecision should_stop(const Belief& belief, int turns_used, int max_turns,
                         double epsilon = kDefaultStopEpsilon);

// Returns a copy with the correction appended as an Oracle turn after the
// final guess. Throws ValidationError when `correction` is blank or the
// dialogue has no guess yet.
Dialogue append_correction(const Dialogue& dialogue, std::string_view correction);

struct EpisodeConfig {
  int max_turns = kDefaultMaxTurns;
  std::uint64_t seed = 0;
};

struct PolicyIds {
  std::string questioner;
  std::string guesser;
  std::string oracle;
  friend bool operator==(const PolicyIds&, const PolicyIds&) = default;
};

struct EpisodeRecord {
  Dialogue dialogue;
  BBox guessed_box{0.0, 0.0, 1.0, 1.0};
  BBox target_box{0.0, 0.0, 1.0, 1.0};
  double iou = 0.0;
  StopReason stopped_reason = StopReason::kBudgetExhausted;
  int turn_count = 0;  // questions asked
  std::uint64_t seed = 0;
  PolicyIds policies;
  std::optional<Belief> final_belief;
};

struct EpisodeFailure {
  std::string scene_ref;
  ObjectId target = 0;
  std::uint64_t seed = 0;
  std::string reason;  // error kind, e.g. "timeout", "degenerate_belief"
  std::string message;
  PolicyIds policies;
};

using EpisodeOutcome = std::variant<EpisodeRecord, EpisodeFailure>;

// One self-play episode: Oracle gives E, then (stop check, question,
// answer) rounds until the stop check fires or max_turns questions were
// asked, then the Guesser emits exactly one box. Never throws for policy
// failures; they come back as EpisodeFailure. Throws NotFoundError for an
// unknown target.
EpisodeOutcome run_episode(const Scene& scene, ObjectId target, const QuestionerPolicy& questioner,
                           const GuesserPolicy& guesser, const OraclePolicy& oracle,
                           const EpisodeConfig& config);

// Asks the guesser for a new box after a correction; appends the guess turn.
GuessResult reguess(const Scene& scene, Dialogue& dialogue, const GuesserPolicy& guesser,
                    const EpisodeConfig& config);

void to_json(Json& j, const Turn& t);
void from_json(const Json& j, Turn& t);
void to_json(Json& j, const Dialogue& d);
void from_json(const Json& j, Dialogue& d);
void to_json(Json& j, const Belief& b);
void from_json(const Json& j, Belief& b);
void to_json(Json& j, const PolicyIds& p);
void from_json(const Json& j, PolicyIds& p);
void to_json(Json& j, const EpisodeRecord& r);
void from_json(const Json& j, EpisodeRecord& r);
void to_json(Json& j, const EpisodeFailure& f);

}  // namespace ivg
