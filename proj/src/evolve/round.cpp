#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/evolve.hpp"
#include "ivg/parallel.hpp"
#include "ivg/rng.hpp"

namespace ivg {

PolicySet reference_policies(const ReferenceConfig& config) {
  return {std::make_shared<ReferenceQuestioner>(config), std::make_shared<ReferenceGuesser>(config),
          std::make_shared<ReferenceOracle>(config)};
}

EpisodePlan plan_episode(const std::vector<Scene>& scenes, std::uint64_t master_seed, std::size_t i) {
  if (scenes.empty()) throw ValidationError("scene source is empty");
  EpisodePlan plan;
  plan.seed = stable_hash(master_seed, i);
  plan.scene_index = i % scenes.size();
  const Scene& s = scenes[plan.scene_index];
  if (s.objects.empty()) throw ValidationError(fmt::format("scene {} has no objects", s.scene_id));
  Rng rng(plan.seed);
  plan.target = s.objects[rng.below(s.objects.size())].id;
  return plan;
}


RoundResult generate_round(const std::vector<Scene>& scenes, const PolicySet& policies,
                           const RoundConfig& config) {
  if (scenes.empty()) throw ValidationError("generate_round: scene source is empty");
  if (!policies.questioner || !policies.guesser || !policies.oracle) {
    throw ValidationError("generate_round: incomplete policy set");
  }
  if (config.max_turns < 0) throw ValidationError("generate_round: max_turns must be >= 0");

  std::vector<std::optional<EpisodeOutcome>> outcomes(config.n_episodes);
  parallel_for(config.n_episodes, config.workers, [&](std::size_t i) {
    const EpisodePlan plan = plan_episode(scenes, config.master_seed, i);
    outcomes[i] = run_episode(scenes[plan.scene_index], plan.target, *policies.questioner,
                              *policies.guesser, *policies.oracle, {config.max_turns, plan.seed});
  });

  RoundResult result;
  RoundManifest& m = result.manifest;
  m.round = config.round;
  m.master_seed = config.master_seed;
  m.inputs = config.inputs;
  m.policies = {policies.questioner->id(), policies.guesser->id(), policies.oracle->id()};
  m.records_file = records_file_name(config.round);
  m.counts.run = config.n_episodes;

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const EpisodeOutcome& out = *outcomes[i];
    if (const auto* f = std::get_if<EpisodeFailure>(&out)) {
      ++m.counts.errored;
      m.errors.push_back({i, f->scene_ref, f->reason, f->message});
      continue;
    }
    const auto& ep = std::get<EpisodeRecord>(out);
    if (!(iou(ep.guessed_box, ep.target_box) > kKeepThreshold)) {
      ++m.counts.dropped;
      continue;
    }
    ++m.counts.kept;
    DatasetRecord r;
    r.record_id = record_id_for(config.round, i);
    r.round = config.round;
    r.variant = Variant::kRaw;
    r.scene_ref = ep.dialogue.scene_ref;
    r.target = *ep.dialogue.target_ref;
    r.target_box = ep.target_box;
    r.guessed_box = ep.guessed_box;
    r.iou = ep.iou;
    r.turn_count = ep.turn_count;
    r.stopped_reason = ep.stopped_reason;
    r.dialogue = ep.dialogue;
    r.provenance = {ep.policies, config.master_seed, ep.seed, std::nullopt};
    result.records.push_back(std::move(r));
  }
  // Episode order already matches record_id order.
  return result;
}

}  // namespace ivg
