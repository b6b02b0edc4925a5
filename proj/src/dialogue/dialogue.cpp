#include "ivg/dialogue.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/tokenizer.hpp"

namespace ivg {

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string require_text(std::string text, std::string_view what) {
  if (blank(text)) throw MalformedResponseError(fmt::format("{} returned empty text", what));
  return text;
}

}  // namespace

bool Dialogue::has_guess() const {
  return std::any_of(turns.begin(), turns.end(),
                     [](const Turn& t) { return t.speaker == Role::kGuesser; });
}

int Dialogue::question_count() const {
  return static_cast<int>(std::count_if(turns.begin(), turns.end(), [](const Turn& t) {
    return t.speaker == Role::kQuestioner;
  }));
}

void Dialogue::push(Role speaker, std::string text) {
  turns.push_back(Turn{speaker, std::move(text), static_cast<int>(turns.size())});
}

StopDecision should_stop(const Belief& belief, int turns_used, int max_turns, double epsilon) {
  if (belief.degenerate()) throw DegenerateBeliefError("should_stop: all-zero belief");
  double max_w = 0.0;
  for (const auto& [id, w] : belief.weights()) max_w = std::max(max_w, w);
  const double cut = (1.0 - epsilon) * max_w;
  const auto leaders = std::count_if(belief.weights().begin(), belief.weights().end(),
                                     [cut](const auto& kv) { return kv.second >= cut; });
  if (leaders == 1) return {true, StopReason::kBeliefSingleton};
  if (turns_used >= max_turns) return {true, StopReason::kBudgetExhausted};
  return {false, std::nullopt};
}

Dialogue append_correction(const Dialogue& dialogue, std::string_view correction) {
  if (blank(correction)) throw ValidationError("append_correction: empty correction");
  if (!dialogue.has_guess()) {
    throw ValidationError("append_correction: dialogue has no final guess yet");
  }
  Dialogue out = dialogue;
  out.push(Role::kOracle, std::string(correction));
  return out;
}

EpisodeOutcome run_episode(const Scene& scene, ObjectId target, const QuestionerPolicy& questioner,
                           const GuesserPolicy& guesser, const OraclePolicy& oracle,
                           const EpisodeConfig& config) {
  const SceneObject& target_obj = scene.at(target);
  const PolicyIds ids{questioner.id(), guesser.id(), oracle.id()};
  const int max_turns = std::max(0, config.max_turns);

  auto failure = [&](std::string reason, std::string message) -> EpisodeOutcome {
    return EpisodeFailure{scene.scene_id, target, config.seed, std::move(reason),
                          std::move(message), ids};
  };

  try {
    Dialogue d{scene.scene_id, target, {}};
    d.push(Role::kOracle,
           require_text(oracle.describe(observe_as_oracle(scene, target, {}, 0, max_turns,
                                                          config.seed)),
                        "oracle"));

    int asked = 0;
    StopDecision stop;
    while (true) {
      if (asked >= max_turns) {
        stop = {true, StopReason::kBudgetExhausted};
        break;
      }
      stop = guesser.decide_stop(observe_as_guesser(scene, d.turns, asked, max_turns, config.seed,
                                                    PromptRegistry::kStopping));
      if (stop.stop) {
        if (!stop.reason) stop.reason = StopReason::kExternal;
        break;
      }
      d.push(Role::kQuestioner,
             require_text(questioner.ask(observe_as_questioner(scene, d.turns, asked, max_turns,
                                                               config.seed)),
                          "questioner"));
      d.push(Role::kOracle,
             require_text(oracle.answer(observe_as_oracle(scene, target, d.turns, asked,
                                                          max_turns, config.seed)),
                          "oracle"));
      ++asked;
    }

    GuessResult g = guesser.guess(observe_as_guesser(scene, d.turns, asked, max_turns,
                                                     config.seed, PromptRegistry::kLocating));
    d.push(Role::kGuesser, box_to_text(g.box));

    EpisodeRecord r{std::move(d), g.box, target_obj.bbox, iou(g.box, target_obj.bbox),
                    *stop.reason, asked, config.seed, ids, std::move(g.belief)};
    return r;
  } catch (const PolicyError& e) {
    return failure(to_string(e.kind()), e.what());
  } catch (const DegenerateBeliefError& e) {
    return failure("degenerate_belief", e.what());
  } catch (const MalformedBoxError& e) {
    return failure("malformed_box", e.what());
  } catch (const std::exception& e) {
    return failure("policy_internal", e.what());
  }
}

GuessResult reguess(const Scene& scene, Dialogue& dialogue, const GuesserPolicy& guesser,
                    const EpisodeConfig& config) {
  GuessResult g = guesser.guess(observe_as_guesser(scene, dialogue.turns,
                                                   dialogue.question_count(), config.max_turns,
                                                   config.seed, PromptRegistry::kLocating));
  dialogue.push(Role::kGuesser, box_to_text(g.box));
  return g;
}

void to_json(Json& j, const Turn& t) {
  j = Json::object();
  j["speaker"] = to_string(t.speaker);
  j["text"] = t.text;
  j["index"] = t.index;
}

void from_json(const Json& j, Turn& t) {
  const auto role = parse_role(j.at("speaker").get<std::string>());
  if (!role) throw ValidationError("unknown speaker '" + j.at("speaker").get<std::string>() + "'");
  t.speaker = *role;
  t.text = j.at("text").get<std::string>();
  t.index = j.value("index", 0);
}

void to_json(Json& j, const Dialogue& d) {
  j = Json::object();
  j["scene_ref"] = d.scene_ref;
  j["target_ref"] = d.target_ref ? Json(*d.target_ref) : Json(nullptr);
  j["expression"] = d.turns.empty() ? std::string() : d.expression();
  j["turns"] = d.turns;
}

void from_json(const Json& j, Dialogue& d) {
  d.scene_ref = j.at("scene_ref").get<std::string>();
  d.target_ref.reset();
  if (j.contains("target_ref") && !j["target_ref"].is_null()) {
    d.target_ref = j["target_ref"].get<ObjectId>();
  }
  d.turns = j.at("turns").get<std::vector<Turn>>();
  if (d.turns.empty() || d.turns.front().speaker != Role::kOracle || blank(d.turns.front().text)) {
    throw ValidationError("dialogue must start with a non-empty Oracle expression");
  }
}

void to_json(Json& j, const Belief& b) {
  j = Json::array();
  for (const auto& [id, w] : b.weights()) j.push_back(Json{{"id", id}, {"weight", w}});
}

void from_json(const Json& j, Belief& b) {
  std::map<ObjectId, double> w;
  for (const auto& e : j) w[e.at("id").get<ObjectId>()] = e.at("weight").get<double>();
  b = Belief(std::move(w));
}

void to_json(Json& j, const PolicyIds& p) {
  j = Json::object();
  j["questioner"] = p.questioner;
  j["guesser"] = p.guesser;
  j["oracle"] = p.oracle;
}

void from_json(const Json& j, PolicyIds& p) {
  p.questioner = j.at("questioner").get<std::string>();
  p.guesser = j.at("guesser").get<std::string>();
  p.oracle = j.at("oracle").get<std::string>();
}

void to_json(Json& j, const EpisodeRecord& r) {
  j = Json::object();
  j["dialogue"] = r.dialogue;
  j["guessed_box"] = r.guessed_box;
  const auto bins = box_to_bins(r.guessed_box);
  j["guessed_bins"] = Json::array({bins[0], bins[1], bins[2], bins[3]});
  j["target_box"] = r.target_box;
  j["iou"] = r.iou;
  j["stopped_reason"] = to_string(r.stopped_reason);
  j["turn_count"] = r.turn_count;
  j["seed"] = r.seed;
  j["policies"] = r.policies;
  if (r.final_belief) j["final_belief"] = *r.final_belief;
}

void from_json(const Json& j, EpisodeRecord& r) {
  r.dialogue = j.at("dialogue").get<Dialogue>();
  r.guessed_box = j.at("guessed_box").get<BBox>();
  r.target_box = j.at("target_box").get<BBox>();
  r.iou = j.at("iou").get<double>();
  const auto reason = parse_stop_reason(j.at("stopped_reason").get<std::string>());
  if (!reason) throw ValidationError("unknown stopped_reason");
  r.stopped_reason = *reason;
  r.turn_count = j.at("turn_count").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.policies = j.at("policies").get<PolicyIds>();
  r.final_belief.reset();
  if (j.contains("final_belief")) r.final_belief = j["final_belief"].get<Belief>();
}

void to_json(Json& j, const EpisodeFailure& f) {
  j = Json::object();
  j["scene_ref"] = f.scene_ref;
  j["target"] = f.target;
  j["seed"] = f.seed;
  j["reason"] = f.reason;
  j["message"] = f.message;
  j["policies"] = f.policies;
}

}  // namespace ivg
