#include "ivg/reference_policies.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/rng.hpp"
#include "ivg/tokenizer.hpp"

namespace ivg {

namespace {

constexpr double kGainTolerance = 1e-12;

double entropy(const std::vector<double>& masses) {
  double total = 0.0;
  for (double m : masses) total += m;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double m : masses) {
    if (m > 0.0) {
      const double p = m / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

Belief require_alive(Belief b, std::string_view what) {
  if (b.degenerate()) {
    throw DegenerateBeliefError(fmt::format("every candidate was ruled out by {}", what));
  }
  return b;
}

// Object whose box is the closest match to a guessed box.
std::optional<ObjectId> object_at(const Scene& scene, const BBox& box) {
  std::optional<ObjectId> best;
  double best_iou = 0.0;
  for (const auto& o : scene.objects) {
    const double v = iou(o.bbox, box);
    if (v > best_iou) {
      best = o.id;
      best_iou = v;
    }
  }
  return best;
}

std::map<std::string, std::size_t> token_counts(std::string_view text) {
  std::map<std::string, std::size_t> counts;
  for (auto& w : split_words(text)) ++counts[std::move(w)];
  return counts;
}

}  // namespace

std::string oracle_initial_description(const Scene& scene, ObjectId target,
                                       double ambiguity_level, std::uint64_t seed) {
  const SceneObject& t = scene.at(target);
  const Description full = full_description(t);
  Rng rng(seed);
  if (!(rng.uniform() < ambiguity_level)) return render_description(full);

  std::vector<Description> ambiguous;
  for (int mask = 1; mask < 15; ++mask) {
    Description d;
    if (mask & 1) d.color = full.color;
    if (mask & 2) d.category = full.category;
    if (mask & 4) d.size = full.size;
    if (mask & 8) d.quadrant = full.quadrant;
    const auto matching = std::count_if(scene.objects.begin(), scene.objects.end(),
                                        [&](const SceneObject& o) { return d.matches(o); });
    if (matching >= 2) ambiguous.push_back(std::move(d));
  }
  if (ambiguous.empty()) {
    Description d;
    d.color = full.color;
    return render_description(d);
  }
  return render_description(ambiguous[rng.below(ambiguous.size())]);
}

std::string oracle_answer(const Scene& scene, ObjectId target, std::string_view question,
                          const AttrVocab& vocab) {
  const auto q = parse_question(question, vocab);
  if (!q) return std::string(kDontUnderstand);
  return answer_key(*q, scene.at(target));
}

double information_gain(const Belief& belief, const Scene& scene, const Question& q) {
  std::map<std::string, double> by_answer;
  std::map<std::string, std::vector<double>> members;
  std::vector<double> all;
  for (const auto& o : scene.objects) {
    const double w = belief.weight(o.id);
    if (w <= 0.0) continue;
    const std::string a = answer_key(q, o);
    by_answer[a] += w;
    members[a].push_back(w);
    all.push_back(w);
  }
  const double total = std::accumulate(all.begin(), all.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double conditional = 0.0;
  for (const auto& [answer, mass] : by_answer) {
    conditional += (mass / total) * entropy(members[answer]);
  }
  return entropy(all) - conditional;
}

Question questioner_select(const Belief& belief, const Scene& scene,
                           const std::vector<Question>& asked) {
  if (belief.degenerate()) throw DegenerateBeliefError("questioner_select: all-zero belief");
  if (belief.support().size() <= 1) {
    throw ValidationError("questioner_select: belief is already a singleton");
  }
  std::optional<Question> best;
  double best_gain = 0.0;
  for (const Question& q : template_questions(scene)) {
    if (std::find(asked.begin(), asked.end(), q) != asked.end()) continue;
    const double gain = information_gain(belief, scene, q);
    // Candidates arrive in tie-break order, so only a strictly larger gain
    // replaces the incumbent.
    if (gain > best_gain + kGainTolerance) {
      best = q;
      best_gain = gain;
    }
  }
  if (best) return *best;
  return Question::confirm(full_description(scene.at(belief.argmax())));
}

Belief apply_description(const Belief& belief, const Scene& scene, const Description& d,
                         double noise) {
  Belief out = belief;
  for (const auto& o : scene.objects) {
    if (!d.matches(o)) out.scale(o.id, noise);
  }
  return require_alive(std::move(out), "the description '" + render_description(d) + "'");
}

Belief guesser_update(const Belief& belief, const Scene& scene, std::string_view question,
                      std::string_view answer, const AttrVocab& vocab, double noise) {
  const auto q = parse_question(question, vocab);
  if (!q) return belief;
  const auto value = parse_answer(*q, answer, vocab);
  if (!value) return belief;
  Belief out = belief;
  for (const auto& o : scene.objects) {
    if (answer_key(*q, o) != *value) out.scale(o.id, noise);
  }
  return require_alive(std::move(out), fmt::format("the answer '{}'", answer));
}

BBox guesser_guess(const Belief& belief, const Scene& scene) {
  return scene.at(belief.argmax()).bbox;
}

Belief replay_belief(const Scene& scene, const std::vector<Turn>& history,
                     const ReferenceConfig& config) {
  Belief belief = Belief::uniform(scene);
  if (history.empty()) return belief;

  const Description e = parse_description(history.front().text, config.vocab);
  if (!e.empty()) belief = apply_description(belief, scene, e, config.noise);

  std::optional<std::string> pending_question;
  std::optional<BBox> last_guess;
  bool after_guess = false;
  for (std::size_t i = 1; i < history.size(); ++i) {
    const Turn& t = history[i];
    switch (t.speaker) {
      case Role::kQuestioner:
        pending_question = t.text;
        after_guess = false;
        break;
      case Role::kGuesser:
        last_guess = box_from_text(t.text);
        pending_question.reset();
        after_guess = true;
        break;
      case Role::kOracle:
        if (after_guess) {
          const Correction c = parse_correction(t.text, config.vocab);
          const auto guessed = last_guess ? object_at(scene, *last_guess) : std::nullopt;
          Belief next = belief;
          if (guessed && c.rejects_guess) next.scale(*guessed, config.noise);
          if (guessed && c.confirms_guess) {
            for (const auto& o : scene.objects) {
              if (o.id != *guessed) next.scale(o.id, config.noise);
            }
          }
          belief = require_alive(std::move(next), fmt::format("the correction '{}'", t.text));
          if (!c.description.empty()) {
            belief = apply_description(belief, scene, c.description, config.noise);
          }
        } else if (pending_question) {
          belief = guesser_update(belief, scene, *pending_question, t.text, config.vocab,
                                  config.noise);
        }
        pending_question.reset();
        break;
    }
  }
  return belief;
}

std::vector<Question> asked_questions(const std::vector<Turn>& history, const AttrVocab& vocab) {
  std::vector<Question> asked;
  for (const auto& t : history) {
    if (t.speaker != Role::kQuestioner) continue;
    if (auto q = parse_question(t.text, vocab)) asked.push_back(std::move(*q));
  }
  return asked;
}

double token_f1(std::string_view candidate, std::string_view truth) {
  const auto c = token_counts(candidate);
  const auto t = token_counts(truth);
  std::size_t c_len = 0, t_len = 0, overlap = 0;
  for (const auto& [w, n] : c) c_len += n;
  for (const auto& [w, n] : t) t_len += n;
  for (const auto& [w, n] : c) {
    if (auto it = t.find(w); it != t.end()) overlap += std::min(n, it->second);
  }
  if (overlap == 0 || c_len == 0 || t_len == 0) return 0.0;
  const double p = static_cast<double>(overlap) / c_len;
  const double r = static_cast<double>(overlap) / t_len;
  return 2.0 * p * r / (p + r);
}

std::vector<std::size_t> rank_candidates(std::string_view truth,
                                         const std::vector<std::string>& candidates) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) scores.push_back(token_f1(c, truth));
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<std::size_t> rank_candidates(std::string_view question, const Scene& scene,
                                         ObjectId target,
                                         const std::vector<std::string>& candidates,
                                         const AttrVocab& vocab) {
  return rank_candidates(oracle_answer(scene, target, question, vocab), candidates);
}

std::string ReferenceQuestioner::ask(const PolicyObservation& obs) const {
  const Belief belief = replay_belief(obs.scene, obs.history, config_);
  if (belief.support().size() <= 1) {
    return Question::confirm(full_description(obs.scene.at(belief.argmax()))).surface();
  }
  return questioner_select(belief, obs.scene, asked_questions(obs.history, config_.vocab))
      .surface();
}

StopDecision ReferenceGuesser::decide_stop(const PolicyObservation& obs) const {
  const Belief belief = replay_belief(obs.scene, obs.history, config_);
  return should_stop(belief, obs.questions_asked, obs.max_turns, config_.stop_epsilon);
}

GuessResult ReferenceGuesser::guess(const PolicyObservation& obs) const {
  Belief belief = replay_belief(obs.scene, obs.history, config_);
  const BBox box = guesser_guess(belief, obs.scene);
  return {box, std::move(belief)};
}

std::string ReferenceOracle::describe(const PolicyObservation& obs) const {
  if (!obs.target) throw PolicyError(PolicyErrorKind::kInternal, "oracle observation without target");
  return oracle_initial_description(obs.scene, *obs.target, config_.ambiguity_level, obs.seed);
}

std::string ReferenceOracle::answer(const PolicyObservation& obs) const {
  if (!obs.target) throw PolicyError(PolicyErrorKind::kInternal, "oracle observation without target");
  if (obs.history.empty() || obs.history.back().speaker != Role::kQuestioner) {
    throw PolicyError(PolicyErrorKind::kInternal, "oracle asked to answer without a question");
  }
  return oracle_answer(obs.scene, *obs.target, obs.history.back().text, config_.vocab);
}

}  // namespace ivg
