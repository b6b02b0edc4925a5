#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/geometry.hpp"
#include "ivg/scene.hpp"

namespace ivg {

// Closed template grammar shared by the reference Questioner, Oracle and
// Guesser. Parsing is keyword based so that polished (enriched or
// simplified) surface forms still map back to the same question.

inline constexpr std::string_view kDontUnderstand = "I don't understand";

// A partial attribute description of an object: "the red one",
// "the small red ball in the top left", "the one in the top left".
struct Description {
  std::optional<SizeClass> size;
  std::optional<std::string> color;
  std::optional<std::string> category;
  std::optional<Quadrant> quadrant;

  bool empty() const { return !size && !color && !category && !quadrant; }
  bool matches(const SceneObject& o) const;
  friend bool operator==(const Description&, const Description&) = default;
};

Description full_description(const SceneObject& o);
std::string render_description(const Description& d);
// Collects every attribute word it recognizes; unknown words are ignored.
Description parse_description(std::string_view text, const AttrVocab& vocab);
Description parse_description(const std::vector<std::string>& words, const AttrVocab& vocab);

// Kind order doubles as the tie-break order for question selection.
enum class QuestionKind { kColor = 0, kCategory = 1, kSize = 2, kQuadrant = 3, kConfirm = 4 };

std::string_view to_string(QuestionKind kind);

struct Question {
  QuestionKind kind = QuestionKind::kColor;
  // kQuadrant only: empty asks "where is it?", set asks a yes/no question.
  std::optional<Quadrant> quadrant;
  // kConfirm only.
  Description target;

  static Question color() { return {QuestionKind::kColor, std::nullopt, {}}; }
  static Question category() { return {QuestionKind::kCategory, std::nullopt, {}}; }
  static Question size() { return {QuestionKind::kSize, std::nullopt, {}}; }
  static Question where() { return {QuestionKind::kQuadrant, std::nullopt, {}}; }
  static Question in_quadrant(Quadrant q) { return {QuestionKind::kQuadrant, q, {}}; }
  static Question confirm(Description d) { return {QuestionKind::kConfirm, std::nullopt, std::move(d)}; }

  bool is_yes_no() const;
  std::string payload() const;
  std::string surface() const;

  friend bool operator==(const Question&, const Question&) = default;
};

// Orders by kind, then payload.
bool question_order_less(const Question& a, const Question& b);

std::optional<Question> parse_question(std::string_view text, const AttrVocab& vocab);

// Canonical answer value the truthful Oracle gives about `o`: an attribute
// value, a quadrant name, or "yes"/"no".
std::string answer_key(const Question& q, const SceneObject& o);

// Canonical value extracted from a free-form answer, if any.
std::optional<std::string> parse_answer(const Question& q, std::string_view text,
                                        const AttrVocab& vocab);

// Every template question for a scene: the three attribute questions,
// "where is it?", four quadrant yes/no questions and one confirm question
// per distinct object signature. Sorted by question_order_less.
std::vector<Question> template_questions(const Scene& scene);

// Post-hoc correction after a guess: "no, the other one", "yes",
// "no, the blue one".
struct Correction {
  bool rejects_guess = false;
  bool confirms_guess = false;
  Description description;
};

Correction parse_correction(std::string_view text, const AttrVocab& vocab);

// Phrases the grammar can produce; used to seed the closed vocabulary.
std::vector<std::string> grammar_phrases();

}  // namespace ivg
