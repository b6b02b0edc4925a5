#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/evolve.hpp"
#include "ivg/language.hpp"
#include "ivg/rng.hpp"
#include "ivg/tokenizer.hpp"

namespace ivg {

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> caption_sentences(std::string_view caption) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= caption.size()) {
    const auto dot = caption.find('.', start);
    const auto piece = trim(caption.substr(start, dot == std::string_view::npos ? std::string_view::npos
                                                                                 : dot - start));
    if (!piece.empty()) out.push_back(piece);
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

std::string strip_question_mark(std::string_view s) {
  std::string out = trim(s);
  while (!out.empty() && (out.back() == '?' || out.back() == '.')) out.pop_back();
  return out;
}

bool is_stopword(std::string_view word) {
  const auto& stop = polish_stopwords();
  return std::find(stop.begin(), stop.end(), word) != stop.end();
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::set<std::string> attribute_words(const AttrVocab& vocab) {
  std::set<std::string> words(vocab.categories.begin(), vocab.categories.end());
  words.insert(vocab.colors.begin(), vocab.colors.end());
  for (auto s : {SizeClass::kSmall, SizeClass::kMedium, SizeClass::kLarge}) words.emplace(to_string(s));
  for (const char* w : {"top", "bottom", "left", "right"}) words.emplace(w);
  return words;
}

std::vector<Turn> turns_from_json(const Json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw MalformedResponseError(fmt::format("missing required field '{}'", field));
  }
  std::vector<Turn> out;
  int index = 0;
  for (const auto& t : j[field]) {
    Turn turn;
    try {
      from_json(t, turn);
    } catch (const std::exception& e) {
      throw MalformedResponseError(fmt::format("field '{}': {}", field, e.what()));
    }
    turn.index = index++;
    out.push_back(std::move(turn));
  }
  return out;
}

}  // namespace

void to_json(Json& j, const PolishResult& p) {
  j = Json::object();
  j["key_points"] = p.key_points;
  j["scenarios"] = p.scenarios;
  j["chosen_scenario"] = p.chosen_scenario;
  j["enriched"] = p.enriched;
  j["simplified"] = p.simplified;
}

void from_json(const Json& j, PolishResult& p) {
  if (!j.is_object()) throw MalformedResponseError("polish response is not a JSON object");
  for (const char* f : {"key_points", "scenarios"}) {
    if (!j.contains(f) || !j[f].is_array() ||
        !std::all_of(j[f].begin(), j[f].end(), [](const Json& x) { return x.is_string(); })) {
      throw MalformedResponseError(fmt::format("field '{}' must be an array of strings", f));
    }
  }
  if (!j.contains("chosen_scenario") || !j["chosen_scenario"].is_number_unsigned()) {
    throw MalformedResponseError("field 'chosen_scenario' must be a non-negative integer");
  }
  p.key_points = j["key_points"].get<std::vector<std::string>>();
  p.scenarios = j["scenarios"].get<std::vector<std::string>>();
  p.chosen_scenario = j["chosen_scenario"].get<std::size_t>();
  p.enriched = turns_from_json(j, "enriched");
  p.simplified = turns_from_json(j, "simplified");
}

std::string simplify_text(std::string_view text) {
  std::vector<std::string> kept;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) break;
    std::string token(text.substr(start, i - start));
    std::string tail;
    while (!token.empty() && std::string_view(".,?!").find(token.back()) != std::string_view::npos) {
      tail.insert(tail.begin(), token.back());
      token.pop_back();
    }
    if (!token.empty() && is_stopword(lower(token))) {
      // Keep the punctuation on the previous word.
      if (!tail.empty() && !kept.empty()) kept.back() += tail;
      continue;
    }
    kept.push_back(token + tail);
  }
  std::string out;
  for (const auto& w : kept) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

PolishResult MockPolisher::polish(const std::vector<Turn>& dialogue, std::string_view caption,
                                  std::uint64_t seed) const {
  PolishResult r;
  for (std::size_t i = 0; i + 1 < dialogue.size(); ++i) {
    if (dialogue[i].speaker == Role::kQuestioner && dialogue[i + 1].speaker == Role::kOracle) {
      r.key_points.push_back(fmt::format("{}: {}", strip_question_mark(dialogue[i].text),
                                         strip_question_mark(dialogue[i + 1].text)));
    }
  }

  const auto sentences = caption_sentences(caption);
  const Description first =
      sentences.empty() ? Description{} : parse_description(sentences.front(), vocab_);
  const std::string category = first.category.value_or("object");
  const std::string color = first.color.value_or("colored");
  const std::string size = first.size ? std::string(to_string(*first.size)) : "nearby";
  r.scenarios = {
      fmt::format("tidying the table and putting away the {}", category),
      fmt::format("cooking and asking for something {}", color),
      fmt::format("packing a bag and picking the {} item", size),
  };

  Rng rng(seed);
  r.chosen_scenario = rng.below(r.scenarios.size());

  r.enriched = dialogue;
  r.simplified = dialogue;
  for (std::size_t i = 0; i < dialogue.size(); ++i) {
    if (dialogue[i].speaker == Role::kGuesser) continue;
    if (dialogue[i].speaker == Role::kQuestioner && !sentences.empty()) {
      r.enriched[i].text = fmt::format("{} there is {}.", trim(dialogue[i].text),
                                       sentences[rng.below(sentences.size())]);
    }
    r.simplified[i].text = simplify_text(dialogue[i].text);
  }
  return r;
}

PolishPrompts load_polish_prompts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError(fmt::format("polish prompt file {} not found", path.string()));
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
  PolishPrompts p;
  auto field = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string() || blank(j[key].get<std::string>())) {
      throw ValidationError(fmt::format("{}: missing prompt '{}'", path.string(), key));
    }
    return j[key].get<std::string>();
  };
  p.key_points = field("key_points");
  p.scenarios = field("scenarios");
  p.enrich = field("enrich");
  p.simplify = field("simplify");
  return p;
}

PolishResult HttpPolisher::polish(const std::vector<Turn>& dialogue, std::string_view caption,
                                  std::uint64_t seed) const {
  Json turns = Json::array();
  for (const auto& t : dialogue) turns.push_back(Json{{"speaker", to_string(t.speaker)}, {"text", t.text}});
  Json body = Json::object();
  body["version"] = kWireVersion;
  body["caption"] = caption;
  body["dialogue"] = std::move(turns);
  body["seed"] = seed;
  body["prompts"] = Json{{"key_points", prompts_.key_points},
                         {"scenarios", prompts_.scenarios},
                         {"enrich", prompts_.enrich},
                         {"simplify", prompts_.simplify}};
  return post_json(endpoint_, "/polish", body).get<PolishResult>();
}

std::vector<std::string> validate_polish(const std::vector<Turn>& raw, const PolishResult& result,
                                         std::string_view caption, const AttrVocab& vocab) {
  std::vector<std::string> problems;
  if (result.key_points.empty()) problems.emplace_back("no key points");
  if (result.scenarios.empty()) problems.emplace_back("no scenarios");
  if (result.chosen_scenario >= result.scenarios.size()) problems.emplace_back("chosen scenario out of range");

  std::set<std::string> grounded;
  for (auto& w : split_words(caption)) grounded.insert(std::move(w));
  for (const auto& t : raw) {
    for (auto& w : split_words(t.text)) grounded.insert(std::move(w));
  }
  const auto attrs = attribute_words(vocab);

  auto check = [&](const std::vector<Turn>& variant, std::string_view name) {
    if (variant.size() != raw.size()) {
      problems.push_back(fmt::format("{}: {} turns, raw has {}", name, variant.size(), raw.size()));
      return;
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (variant[i].speaker != raw[i].speaker) {
        problems.push_back(fmt::format("{}: speaker of turn {} changed", name, i));
      }
      if (blank(variant[i].text)) problems.push_back(fmt::format("{}: turn {} is empty", name, i));
      if (raw[i].speaker == Role::kGuesser && variant[i].text != raw[i].text) {
        problems.push_back(fmt::format("{}: guess turn {} changed", name, i));
      }
      for (const auto& w : split_words(variant[i].text)) {
        if (attrs.count(w) && !grounded.count(w)) {
          problems.push_back(fmt::format("{}: turn {} mentions '{}' which is not in the caption or dialogue",
                                         name, i, w));
        }
      }
    }
  };
  check(result.enriched, "enriched");
  check(result.simplified, "simplified");
  return problems;
}

std::uint64_t polish_seed(std::uint64_t master_seed, const std::string& record_id) {
  return stable_hash(master_seed, std::string_view(record_id));
}

PolishOutcome polish_dialogue(const DatasetRecord& record, std::string_view caption,
                              const Polisher& polisher, const PolishConfig& config) {
  const auto& turns = record.dialogue.turns;
  const bool has_pair = std::any_of(turns.begin(), turns.end(),
                                    [](const Turn& t) { return t.speaker == Role::kQuestioner; });
  if (!has_pair) {
    throw ValidationError(fmt::format("record {} has no question/answer pair to polish", record.record_id));
  }
  const std::uint64_t seed =
      polish_seed(config.seed.value_or(record.provenance.master_seed), record.record_id);

  PolishOutcome out;
  const int max_attempts = 1 + std::max(0, config.retries);
  for (out.attempts = 1; out.attempts <= max_attempts; ++out.attempts) {
    try {
      PolishResult r = polisher.polish(turns, caption, seed);
      const auto problems = validate_polish(turns, r, caption, config.vocab);
      if (!problems.empty()) {
        out.failure = "rejected: " + problems.front();
        return out;
      }
      for (std::size_t i = 0; i < r.enriched.size(); ++i) {
        r.enriched[i].index = static_cast<int>(i);
        r.simplified[i].index = static_cast<int>(i);
      }
      out.result = std::move(r);
      return out;
    } catch (const TransportError& e) {
      out.failure = e.what();
    } catch (const TimeoutError& e) {
      out.failure = e.what();
    } catch (const MalformedResponseError& e) {
      out.failure = std::string("rejected: ") + e.what();
      return out;
    }
  }
  out.attempts = max_attempts;
  return out;
}

ObjectId reground(const Scene& scene, const std::vector<Turn>& turns, const ReferenceConfig& config) {
  std::vector<Turn> prefix;
  for (const auto& t : turns) {
    if (t.speaker == Role::kGuesser) break;
    prefix.push_back(t);
  }
  return replay_belief(scene, prefix, config).argmax();
}

}  // namespace ivg
