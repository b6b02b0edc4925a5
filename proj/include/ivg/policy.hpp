#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/belief.hpp"
#include "ivg/geometry.hpp"
#include "ivg/scene.hpp"

namespace ivg {

enum class Role { kQuestioner, kGuesser, kOracle };

std::string_view to_string(Role role);  // "questioner", "guesser", "oracle"
std::optional<Role> parse_role(std::string_view text);

struct Turn {
  Role speaker = Role::kOracle;
  std::string text;
  int index = 0;  // position in the dialogue, 0 = initial expression
  friend bool operator==(const Turn&, const Turn&) = default;
};

enum class StopReason { kBeliefSingleton, kBudgetExhausted, kExternal };

std::string_view to_string(StopReason reason);
std::optional<StopReason> parse_stop_reason(std::string_view text);

struct StopDecision {
  bool stop = false;
  std::optional<StopReason> reason;  // set iff stop
};

// What a policy gets to see. Only observations built for the Oracle carry
// the target id; the other factories have no parameter for it.
struct PolicyObservation {
  Role role;
  std::string_view prompt;
  const Scene& scene;
  std::optional<ObjectId> target;
  std::vector<Turn> history;
  int questions_asked = 0;
  int max_turns = 0;
  std::uint64_t seed = 0;
};

PolicyObservation observe_as_questioner(const Scene& scene, std::vector<Turn> history,
                                        int questions_asked, int max_turns, std::uint64_t seed);
PolicyObservation observe_as_guesser(const Scene& scene, std::vector<Turn> history,
                                     int questions_asked, int max_turns, std::uint64_t seed,
                                     std::string_view prompt);
PolicyObservation observe_as_oracle(const Scene& scene, ObjectId target,
                                    std::vector<Turn> history, int questions_asked,
                                    int max_turns, std::uint64_t seed);

struct GuessResult {
  BBox box;
  std::optional<Belief> belief;  // reference guessers expose their state
};

// Policies are called concurrently from many episodes and must not keep
// per-episode state. Failures are reported by throwing PolicyError (or any
// ivg::Error); the engine turns them into aborted-episode records.
class QuestionerPolicy {
 public:
  virtual ~QuestionerPolicy() = default;
  virtual std::string id() const = 0;
  virtual std::string ask(const PolicyObservation& obs) const = 0;
};

class GuesserPolicy {
 public:
  virtual ~GuesserPolicy() = default;
  virtual std::string id() const = 0;
  virtual StopDecision decide_stop(const PolicyObservation& obs) const = 0;
  virtual GuessResult guess(const PolicyObservation& obs) const = 0;
};

class OraclePolicy {
 public:
  virtual ~OraclePolicy() = default;
  virtual std::string id() const = 0;
  // Initial expression E for the target.
  virtual std::string describe(const PolicyObservation& obs) const = 0;
  // Answer to the question in the last history turn.
  virtual std::string answer(const PolicyObservation& obs) const = 0;
};

}  // namespace ivg
