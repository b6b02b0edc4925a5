#include "ivg/language.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "ivg/tokenizer.hpp"

namespace ivg {

namespace {

bool has_word(const std::vector<std::string>& words, std::string_view w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

// Words up to and including the first '?', or everything when there is none.
std::vector<std::string> first_question(std::string_view text) {
  auto words = split_words(text);
  const auto q = std::find(words.begin(), words.end(), "?");
  if (q != words.end()) words.erase(q + 1, words.end());
  return words;
}

std::optional<Quadrant> find_quadrant(const std::vector<std::string>& words) {
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    Quadrant q;
    if (parse_quadrant(words[i] + " " + words[i + 1], q)) return q;
  }
  return std::nullopt;
}

}  // namespace

bool Description::matches(const SceneObject& o) const {
  if (size && *size != o.size) return false;
  if (color && *color != o.color) return false;
  if (category && *category != o.category) return false;
  if (quadrant && *quadrant != o.quadrant()) return false;
  return true;
}

Description full_description(const SceneObject& o) {
  return Description{o.size, o.color, o.category, o.quadrant()};
}

std::string render_description(const Description& d) {
  std::string out = "the";
  if (d.size) out += fmt::format(" {}", to_string(*d.size));
  if (d.color) out += fmt::format(" {}", *d.color);
  out += d.category ? fmt::format(" {}", *d.category) : std::string(" one");
  if (d.quadrant) out += fmt::format(" in the {}", to_string(*d.quadrant));
  return out;
}

Description parse_description(const std::vector<std::string>& words, const AttrVocab& vocab) {
  Description d;
  for (const auto& w : words) {
    if (!d.size) d.size = parse_size(w);
    if (!d.color && vocab.has_color(w)) d.color = w;
    if (!d.category && vocab.has_category(w)) d.category = w;
  }
  d.quadrant = find_quadrant(words);
  return d;
}

Description parse_description(std::string_view text, const AttrVocab& vocab) {
  return parse_description(split_words(text), vocab);
}

std::string_view to_string(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::kColor: return "color";
    case QuestionKind::kCategory: return "category";
    case QuestionKind::kSize: return "size";
    case QuestionKind::kQuadrant: return "quadrant";
    case QuestionKind::kConfirm: return "confirm";
  }
  return "color";
}

bool Question::is_yes_no() const {
  return kind == QuestionKind::kConfirm || (kind == QuestionKind::kQuadrant && quadrant);
}

std::string Question::payload() const {
  switch (kind) {
    case QuestionKind::kQuadrant: return quadrant ? std::string(to_string(*quadrant)) : "";
    case QuestionKind::kConfirm: return render_description(target);
    default: return "";
  }
}

std::string Question::surface() const {
  switch (kind) {
    case QuestionKind::kColor: return "what color is it?";
    case QuestionKind::kCategory: return "what kind of object is it?";
    case QuestionKind::kSize: return "what size is it?";
    case QuestionKind::kQuadrant:
      return quadrant ? fmt::format("is it in the {}?", to_string(*quadrant)) : "where is it?";
    case QuestionKind::kConfirm: return fmt::format("is it {}?", render_description(target));
  }
  return "";
}

bool question_order_less(const Question& a, const Question& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  return a.payload() < b.payload();
}

std::optional<Question> parse_question(std::string_view text, const AttrVocab& vocab) {
  const auto words = first_question(text);
  if (words.empty()) return std::nullopt;
  if (has_word(words, "where")) return Question::where();
  if (has_word(words, "color") || has_word(words, "colour")) return Question::color();
  if (has_word(words, "kind") || has_word(words, "type") || has_word(words, "category")) {
    return Question::category();
  }
  if (has_word(words, "size") || has_word(words, "big")) return Question::size();
  Description d = parse_description(words, vocab);
  if (d.empty()) return std::nullopt;
  if (!d.size && !d.color && !d.category) return Question::in_quadrant(*d.quadrant);
  return Question::confirm(std::move(d));
}

std::string answer_key(const Question& q, const SceneObject& o) {
  switch (q.kind) {
    case QuestionKind::kColor: return o.color;
    case QuestionKind::kCategory: return o.category;
    case QuestionKind::kSize: return std::string(to_string(o.size));
    case QuestionKind::kQuadrant:
      if (!q.quadrant) return std::string(to_string(o.quadrant()));
      return *q.quadrant == o.quadrant() ? "yes" : "no";
    case QuestionKind::kConfirm: return q.target.matches(o) ? "yes" : "no";
  }
  return "";
}

std::optional<std::string> parse_answer(const Question& q, std::string_view text,
                                        const AttrVocab& vocab) {
  const auto words = split_words(text);
  if (words.empty()) return std::nullopt;
  if (q.is_yes_no()) {
    static const std::set<std::string, std::less<>> yes = {"yes", "yeah", "yep", "correct"};
    static const std::set<std::string, std::less<>> no = {"no", "nope", "not", "wrong"};
    if (yes.count(words.front()) != 0) return "yes";
    if (no.count(words.front()) != 0) return "no";
    return std::nullopt;
  }
  switch (q.kind) {
    case QuestionKind::kColor:
      for (const auto& w : words) if (vocab.has_color(w)) return w;
      return std::nullopt;
    case QuestionKind::kCategory:
      for (const auto& w : words) if (vocab.has_category(w)) return w;
      return std::nullopt;
    case QuestionKind::kSize:
      for (const auto& w : words) if (auto s = parse_size(w)) return std::string(to_string(*s));
      return std::nullopt;
    case QuestionKind::kQuadrant:
      if (auto quad = find_quadrant(words)) return std::string(to_string(*quad));
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

std::vector<Question> template_questions(const Scene& scene) {
  std::vector<Question> qs = {Question::color(), Question::category(), Question::size(),
                              Question::where()};
  for (Quadrant q : kAllQuadrants) qs.push_back(Question::in_quadrant(q));
  std::set<std::string> seen;
  for (const auto& o : scene.objects) {
    Question c = Question::confirm(full_description(o));
    if (seen.insert(c.payload()).second) qs.push_back(std::move(c));
  }
  std::stable_sort(qs.begin(), qs.end(), question_order_less);
  return qs;
}

Correction parse_correction(std::string_view text, const AttrVocab& vocab) {
  Correction c;
  const auto words = split_words(text);
  if (!words.empty()) {
    c.rejects_guess = words.front() == "no" || words.front() == "nope" || words.front() == "wrong";
    c.confirms_guess = words.front() == "yes" || words.front() == "correct";
  }
  c.description = parse_description(words, vocab);
  return c;
}

std::vector<std::string> grammar_phrases() {
  std::vector<std::string> out = {
      "what color is it?",  "what kind of object is it?", "what size is it?", "where is it?",
      "is it in the top left?", "is it the one in the top left?", std::string(kDontUnderstand),
      "yes", "no", "no, the other one.", "there is a small red ball."};
  return out;
}

}  // namespace ivg
