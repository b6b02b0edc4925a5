#include "ivg/policy.hpp"

#include "ivg/prompts.hpp"

namespace ivg {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kQuestioner: return "questioner";
    case Role::kGuesser: return "guesser";
    case Role::kOracle: return "oracle";
  }
  return "oracle";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "questioner") return Role::kQuestioner;
  if (text == "guesser") return Role::kGuesser;
  if (text == "oracle") return Role::kOracle;
  return std::nullopt;
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kBeliefSingleton: return "belief_singleton";
    case StopReason::kBudgetExhausted: return "budget_exhausted";
    case StopReason::kExternal: return "external";
  }
  return "external";
}

std::optional<StopReason> parse_stop_reason(std::string_view text) {
  if (text == "belief_singleton") return StopReason::kBeliefSingleton;
  if (text == "budget_exhausted") return StopReason::kBudgetExhausted;
  if (text == "external") return StopReason::kExternal;
  return std::nullopt;
}

PolicyObservation observe_as_questioner(const Scene& scene, std::vector<Turn> history,
                                        int questions_asked, int max_turns, std::uint64_t seed) {
  return PolicyObservation{Role::kQuestioner, PromptRegistry::kAsking, scene, std::nullopt,
                           std::move(history), questions_asked, max_turns, seed};
}

PolicyObservation observe_as_guesser(const Scene& scene, std::vector<Turn> history,
                                     int questions_asked, int max_turns, std::uint64_t seed,
                                     std::string_view prompt) {
  return PolicyObservation{Role::kGuesser, prompt, scene, std::nullopt,
                           std::move(history), questions_asked, max_turns, seed};
}

PolicyObservation observe_as_oracle(const Scene& scene, ObjectId target,
                                    std::vector<Turn> history, int questions_asked,
                                    int max_turns, std::uint64_t seed) {
  return PolicyObservation{Role::kOracle, PromptRegistry::kAnswering, scene, target,
                           std::move(history), questions_asked, max_turns, seed};
}

}  // namespace ivg
