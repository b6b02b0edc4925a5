#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/belief.hpp"
#include "ivg/dialogue.hpp"
#include "ivg/language.hpp"
#include "ivg/policy.hpp"
#include "ivg/scene.hpp"

namespace ivg {

struct ReferenceConfig {
  AttrVocab vocab;
  double noise = 0.0;  // likelihood of an inconsistent answer; 0 = hard filter
  double stop_epsilon = kDefaultStopEpsilon;
  double ambiguity_level = 1.0;
};

// --- Oracle ---------------------------------------------------------------

// Full attribute tuple plus quadrant at level 0. Otherwise, with probability
// `ambiguity_level`, a seeded pick among the partial descriptions that match
// at least two objects; a color-only description when none does.
std::string oracle_initial_description(const Scene& scene, ObjectId target,
                                       double ambiguity_level, std::uint64_t seed);

// Truthful answer, or kDontUnderstand for questions outside the grammar.
std::string oracle_answer(const Scene& scene, ObjectId target, std::string_view question,
                          const AttrVocab& vocab);

// --- Questioner -----------------------------------------------------------

// Expected information gain in bits under the hard answer partition.
double information_gain(const Belief& belief, const Scene& scene, const Question& q);

// Highest-gain unasked template question, ties broken by kind then payload.
// Falls back to the confirm question on the argmax object when nothing has
// positive gain. Throws ValidationError for a singleton belief.
Question questioner_select(const Belief& belief, const Scene& scene,
                           const std::vector<Question>& asked);

// --- Guesser --------------------------------------------------------------

// Multiplies each weight by 1 (consistent) or `noise` (inconsistent).
// Unparseable questions or answers leave the belief unchanged. Throws
// DegenerateBeliefError when every weight drops to zero.
Belief guesser_update(const Belief& belief, const Scene& scene, std::string_view question,
                      std::string_view answer, const AttrVocab& vocab, double noise = 0.0);

Belief apply_description(const Belief& belief, const Scene& scene, const Description& d,
                         double noise = 0.0);

// Box of the argmax object (lowest id on ties).
BBox guesser_guess(const Belief& belief, const Scene& scene);

// Rebuilds the Guesser belief from a transcript: E, Q/A pairs, and any
// corrections following a guess turn.
Belief replay_belief(const Scene& scene, const std::vector<Turn>& history,
                     const ReferenceConfig& config);

std::vector<Question> asked_questions(const std::vector<Turn>& history, const AttrVocab& vocab);

// --- Multi-choice ranking -------------------------------------------------

// Token-level F1 over multisets of split_words tokens.
double token_f1(std::string_view candidate, std::string_view truth);

// Candidate indices from best to worst by F1 against `truth`; ties keep
// input order.
std::vector<std::size_t> rank_candidates(std::string_view truth,
                                         const std::vector<std::string>& candidates);

// Ranks against the truthful Oracle's answer to `question`.
std::vector<std::size_t> rank_candidates(std::string_view question, const Scene& scene,
                                         ObjectId target,
                                         const std::vector<std::string>& candidates,
                                         const AttrVocab& vocab = {});

// --- Policy objects -------------------------------------------------------

class ReferenceQuestioner : public QuestionerPolicy {
 public:
  explicit ReferenceQuestioner(ReferenceConfig config = {}) : config_(std::move(config)) {}
  std::string id() const override { return "reference"; }
  std::string ask(const PolicyObservation& obs) const override;

 private:
  ReferenceConfig config_;
};

class ReferenceGuesser : public GuesserPolicy {
 public:
  explicit ReferenceGuesser(ReferenceConfig config = {}) : config_(std::move(config)) {}
  std::string id() const override { return "reference"; }
  StopDecision decide_stop(const PolicyObservation& obs) const override;
  GuessResult guess(const PolicyObservation& obs) const override;

 private:
  ReferenceConfig config_;
};

class ReferenceOracle : public OraclePolicy {
 public:
  explicit ReferenceOracle(ReferenceConfig config = {}) : config_(std::move(config)) {}
  std::string id() const override { return "reference"; }
  std::string describe(const PolicyObservation& obs) const override;
  std::string answer(const PolicyObservation& obs) const override;

 private:
  ReferenceConfig config_;
};

// Adversarial constant policies used for cross-validation floors.
class ConstantQuestioner : public QuestionerPolicy {
 public:
  explicit ConstantQuestioner(std::string text = "what is it?") : text_(std::move(text)) {}
  std::string id() const override { return "adversarial"; }
  std::string ask(const PolicyObservation&) const override { return text_; }

 private:
  std::string text_;
};

class ConstantGuesser : public GuesserPolicy {
 public:
  explicit ConstantGuesser(BBox box = BBox(0.0, 0.0, 0.01, 0.01)) : box_(box) {}
  std::string id() const override { return "adversarial"; }
  StopDecision decide_stop(const PolicyObservation&) const override {
    return {true, StopReason::kExternal};
  }
  GuessResult guess(const PolicyObservation&) const override { return {box_, std::nullopt}; }

 private:
  BBox box_;
};

class ConstantOracle : public OraclePolicy {
 public:
  explicit ConstantOracle(std::string text = std::string(kDontUnderstand)) : text_(std::move(text)) {}
  std::string id() const override { return "adversarial"; }
  std::string describe(const PolicyObservation&) const override { return text_; }
  std::string answer(const PolicyObservation&) const override { return text_; }

 private:
  std::string text_;
};

}  // namespace ivg
