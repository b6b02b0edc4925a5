#include <cmath>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "ivg/bench.hpp"
#include "ivg/config.hpp"
#include "ivg/error.hpp"
#include "ivg/rng.hpp"
#include "loopback.hpp"
#include "remote_reference.hpp"
#include "test_util.hpp"

namespace ivg {
namespace {

using testing::TempDir;

std::vector<Scene> scene_source(std::size_t n, std::uint64_t seed, int ambiguity_k = 0) {
  std::vector<Scene> out;
  for (std::size_t i = 0; i < n; ++i) {
    Scene s = generate_scene(stable_hash(seed, i), {});
    if (ambiguity_k > 0) s = inject_ambiguity(s, ambiguity_k, stable_hash(seed + 1, i));
    out.push_back(std::move(s));
  }
  return out;
}

struct Dataset {
  std::vector<Scene> scenes;
  SceneIndex index;
  std::vector<DatasetRecord> records;
};

const Dataset& generated_dataset() {
  static const Dataset d = [] {
    Dataset out;
    out.scenes = scene_source(100, 11);
    out.index = index_scenes(out.scenes);
    RoundConfig cfg;
    cfg.n_episodes = 300;
    cfg.master_seed = 5;
    out.records = generate_round(out.scenes, reference_policies(), cfg).records;
    return out;
  }();
  return d;
}

// Text that shares no token with anything the grammar produces.
class RandomStringOracle : public OraclePolicy {
 public:
  std::string id() const override { return "random"; }
  std::string describe(const PolicyObservation& obs) const override { return word(obs, 0); }
  std::string answer(const PolicyObservation& obs) const override {
    return word(obs, obs.history.size());
  }

 private:
  static std::string word(const PolicyObservation& obs, std::size_t salt) {
    Rng rng(stable_hash(obs.seed, salt));
    std::string w = "zq";
    for (int i = 0; i < 6; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
    return w;
  }
};

class ThrowingGuesser : public GuesserPolicy {
 public:
  std::string id() const override { return "throwing"; }
  StopDecision decide_stop(const PolicyObservation&) const override { return {true, StopReason::kExternal}; }
  GuessResult guess(const PolicyObservation&) const override { throw TransportError("down"); }
};

// --- Bindings ----------------------------------------------------------------

TEST(Bindings, MissingBindingIsNamed) {
  try {
    make_policies({"reference", "", "reference"});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("guesser"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_oracle("gpt-9"), NotFoundError);
  EXPECT_THROW(make_questioner("http://"), NotFoundError);
}

TEST(Bindings, ResolvesBuiltinsAndUrls) {
  const PolicySet p = make_policies({"reference", "adversarial", "http://127.0.0.1:1"});
  EXPECT_EQ(p.questioner->id(), "reference");
  EXPECT_EQ(p.guesser->id(), "adversarial");
  EXPECT_EQ(p.oracle->id(), "http://127.0.0.1:1");
  EXPECT_TRUE(is_known_binding("reference"));
  EXPECT_FALSE(is_known_binding(""));
}

TEST(Bindings, TaskNamesRoundTrip) {
  for (BenchTask t : {BenchTask::kMtVqg, BenchTask::kMtVqa, BenchTask::kMtVg, BenchTask::kIvg}) {
    EXPECT_EQ(parse_bench_task(to_string(t)), t);
  }
  EXPECT_FALSE(parse_bench_task("vqa"));
}

// --- MT-VG -----------------------------------------------------------------------

TEST(MtVg, ReferenceGuesserRegroundsGeneratedRecords) {
  const Dataset& d = generated_dataset();
  ASSERT_GT(d.records.size(), 250u);
  const BenchResult r = eval_mt_vg(d.records, d.index, ReferenceGuesser{});
  EXPECT_EQ(*r.report.sr, 1.0);
  EXPECT_EQ(r.items.size(), d.records.size());
  EXPECT_EQ(r.bindings.guesser, "reference");
  EXPECT_TRUE(r.bindings.questioner.empty());
}

TEST(MtVg, AdversarialGuesserFloor) {
  const Dataset& d = generated_dataset();
  const BenchResult r = eval_mt_vg(d.records, d.index, ConstantGuesser{});
  EXPECT_LT(*r.report.sr, 0.02);
}

TEST(MtVg, FailuresCountAgainstSuccessRate) {
  const Dataset& d = generated_dataset();
  const BenchResult r = eval_mt_vg(d.records, d.index, ThrowingGuesser{});
  EXPECT_EQ(*r.report.sr, 0.0);
  EXPECT_EQ(r.count(ItemStatus::kFailure), d.records.size());
  EXPECT_EQ(r.count(ItemStatus::kSkipped), 0u);
  EXPECT_EQ(r.items.front().reason, "transport");
}

TEST(MtVg, EmptyDatasetIsAnError) {
  EXPECT_THROW(eval_mt_vg({}, {}, ReferenceGuesser{}), ValidationError);
}

// --- IVG -------------------------------------------------------------------------------

TEST(Ivg, ReferenceStackSolvesDistinguishableScenes) {
  const auto scenes = scene_source(200, 3);
  EvalOptions opts;
  opts.seed = 17;
  const BenchResult r = eval_ivg(scenes, reference_policies(), 200, opts);
  EXPECT_EQ(*r.report.sr, 1.0);
  for (const BenchItem& item : r.items) EXPECT_LE(item.detail["turn_count"].get<int>(), 5);
}

TEST(Ivg, AmbiguousPairsHalveSuccessOnTheirTargets) {
  const auto scenes = scene_source(200, 8, 2);
  EvalOptions opts;
  opts.seed = 21;
  const std::size_t n = 2000;
  const BenchResult r = eval_ivg(scenes, reference_policies(), n, opts);

  // Closed-form expectation: a target sharing its signature with another
  // object is found half the time, every other target always.
  double expected = 0.0, variance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const EpisodePlan plan = plan_episode(scenes, opts.seed, i);
    const Scene& s = scenes[plan.scene_index];
    const Signature sig = signature_of(s.at(plan.target));
    const auto twins = std::count_if(s.objects.begin(), s.objects.end(),
                                     [&](const SceneObject& o) { return signature_of(o) == sig; });
    const double p = twins > 1 ? 1.0 / static_cast<double>(twins) : 1.0;
    expected += p;
    variance += p * (1.0 - p);
  }
  expected /= static_cast<double>(n);
  const double sigma = std::sqrt(variance) / static_cast<double>(n);
  EXPECT_NEAR(*r.report.sr, expected, 4.0 * sigma) << "expected " << expected;
  EXPECT_LT(*r.report.sr, 1.0);
}

TEST(Ivg, DeterministicAcrossWorkersAndReruns) {
  const auto scenes = scene_source(50, 4);
  EvalOptions one;
  one.seed = 9;
  EvalOptions many = one;
  many.workers = 4;
  const auto a = to_json_value(eval_ivg(scenes, reference_policies(), 120, one)).dump();
  const auto b = to_json_value(eval_ivg(scenes, reference_policies(), 120, many)).dump();
  const auto c = to_json_value(eval_ivg(scenes, reference_policies(), 120, one)).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  EXPECT_EQ(a.find("wall"), std::string::npos);
}

TEST(Ivg, PolicyErrorsAreReasonedFailures) {
  const auto scenes = scene_source(10, 4);
  PolicySet p = reference_policies();
  p.oracle = make_oracle("http://127.0.0.1:1");
  const BenchResult r = eval_ivg(scenes, p, 5);
  EXPECT_EQ(*r.report.sr, 0.0);
  for (const BenchItem& item : r.items) {
    EXPECT_EQ(item.status, ItemStatus::kFailure);
    EXPECT_EQ(item.reason, "transport");
  }
}

TEST(Ivg, MissingBindingRejected) {
  PolicySet p = reference_policies();
  p.oracle.reset();
  EXPECT_THROW(eval_ivg(scene_source(2, 1), p, 2), ValidationError);
}

TEST(Ivg, RemoteQuestionerMixesWithReferenceStack) {
  testing::LoopbackServer server;
  testing::serve_reference_act(server.server());
  server.start();

  const auto scenes = scene_source(30, 6);
  PolicySet mixed = make_policies({server.url(), "reference", "reference"});
  const BenchResult remote = eval_ivg(scenes, mixed, 30);
  const BenchResult local = eval_ivg(scenes, reference_policies(), 30);
  EXPECT_EQ(remote.bindings.questioner, server.url());
  EXPECT_EQ(*remote.report.sr, *local.report.sr);
  EXPECT_EQ(*remote.report.sr, 1.0);
}

TEST(CrossValidation, StrongerBindingNeverLowersSuccess) {
  const auto scenes = scene_source(60, 12);
  EvalOptions opts;
  opts.seed = 2;
  const auto rows = cross_validate(scenes, 60, opts);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].bindings, (Bindings{"reference", "reference", "reference"}));
  EXPECT_EQ(rows[0].sr, 1.0);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].sr, rows[0].sr);
  EXPECT_LT(rows[2].sr, 0.05);
}

// --- Multi-choice pools -----------------------------------------------------------------

TEST(ChoicePool, TruthIsUniqueAndPoolFilled) {
  Rng rng(1);
  const std::vector<std::string> same = {"Red.", "red", "blue", "green", "the red"};
  const std::vector<std::string> other = {"ball", "cube", "cup", "book", "box", "plate", "toy", "yes"};
  const auto pool = build_choice_pool("red", same, other, 11, rng);
  ASSERT_TRUE(pool);
  EXPECT_EQ(pool->candidates.size(), 11u);
  EXPECT_EQ(pool->candidates[pool->truth_index], "red");
  EXPECT_NO_THROW(check_choice_pool(*pool));
  // Same-kind distractors come first.
  std::size_t same_kind = 0;
  for (const auto& c : pool->candidates) same_kind += (c == "blue" || c == "green" || c == "the red");
  EXPECT_EQ(same_kind, 3u);
}

TEST(ChoicePool, DuplicatedTruthRejected) {
  EXPECT_THROW(check_choice_pool({{"red", "blue", "Red ."}, 0}), ValidationError);
  EXPECT_THROW(check_choice_pool({{"red"}, 3}), ValidationError);
}

TEST(ChoicePool, TooFewDistractorsIsNotAPool) {
  Rng rng(1);
  EXPECT_FALSE(build_choice_pool("yes", {"no", "No"}, {}, 11, rng));
}

TEST(ChoicePool, TruthPositionIsSeeded) {
  std::vector<std::string> other;
  for (int i = 0; i < 20; ++i) other.push_back(fmt::format("word{}", i));
  std::vector<int> hits(11, 0);
  for (std::uint64_t s = 0; s < 2200; ++s) {
    Rng rng(s);
    ++hits[build_choice_pool("truth", {}, other, 11, rng)->truth_index];
  }
  for (int h : hits) EXPECT_NEAR(h, 200, 60);
}

// --- MT-VQA / MT-VQG -------------------------------------------------------------------

TEST(MtVqa, ReferenceOracleMatchesItsOwnAnswers) {
  const Dataset& d = generated_dataset();
  const BenchResult r = eval_mt_vqa(d.records, d.index, ReferenceOracle{});
  EXPECT_EQ(*r.report.b1, 1.0);
  EXPECT_EQ(*r.report.r1, 1.0);
  EXPECT_EQ(*r.report.rank, 1.0);
  EXPECT_FALSE(r.report.sr);
  EXPECT_EQ(r.bindings.oracle, "reference");
  EXPECT_EQ(r.count(ItemStatus::kFailure), 0u);
}

TEST(MtVqa, RandomOracleRecallNearChance) {
  const Dataset& d = generated_dataset();
  RoundConfig cfg;
  cfg.n_episodes = 2000;
  cfg.master_seed = 77;
  const auto records = generate_round(d.scenes, reference_policies(), cfg).records;
  const BenchResult r = eval_mt_vqa(records, d.index, RandomStringOracle{});
  const double n = static_cast<double>(r.report.samples);
  ASSERT_GT(n, 1500);
  const double p = 1.0 / 11.0;
  EXPECT_NEAR(*r.report.r1, p, 4.0 * std::sqrt(p * (1 - p) / n));
  EXPECT_NEAR(*r.report.rank, 6.0, 4.0 * std::sqrt(10.0 / n));
  EXPECT_EQ(*r.report.b1, 0.0);
}

TEST(MtVqg, ReferenceQuestionerMatchesItsOwnTranscripts) {
  const Dataset& d = generated_dataset();
  const BenchResult r = eval_mt_vqg(d.records, d.index, ReferenceQuestioner{});
  EXPECT_EQ(*r.report.b1, 1.0);
  EXPECT_EQ(*r.report.b4, 1.0);
  EXPECT_EQ(*r.report.r1, 1.0);
}

// Reverses the words of every recorded question.
std::vector<DatasetRecord> permuted(std::vector<DatasetRecord> records) {
  for (DatasetRecord& r : records) {
    for (Turn& t : r.dialogue.turns) {
      if (t.speaker != Role::kQuestioner) continue;
      Tokens words = metric_tokens(t.text);
      std::reverse(words.begin(), words.end());
      t.text = fmt::format("{}", fmt::join(words, " "));
    }
  }
  return records;
}

TEST(MtVqg, PermutedTranscriptsKeepRecall) {
  const Dataset& d = generated_dataset();
  EvalOptions opts;
  opts.seed = 3;
  const BenchResult base = eval_mt_vqg(d.records, d.index, ReferenceQuestioner{}, opts);
  const BenchResult perm = eval_mt_vqg(permuted(d.records), d.index, ReferenceQuestioner{}, opts);
  EXPECT_LT(*perm.report.b4, 1.0);
  EXPECT_LT(*perm.report.rouge, 1.0);
  EXPECT_EQ(*perm.report.r1, *base.report.r1);
}

TEST(MtVqg, EmptyQuestionIsAnItemFailure) {
  const Dataset& d = generated_dataset();
  std::vector<DatasetRecord> records(d.records.begin(), d.records.begin() + 40);
  std::size_t target = 0;
  while (records[target].dialogue.question_count() == 0) ++target;
  records[target].dialogue.turns[1].text = "";
  const BenchResult r = eval_mt_vqg(records, d.index, ReferenceQuestioner{});
  const std::string id = records[target].record_id + "#1";
  const auto it = std::find_if(r.items.begin(), r.items.end(), [&](const BenchItem& i) { return i.id == id; });
  ASSERT_NE(it, r.items.end());
  EXPECT_EQ(it->status, ItemStatus::kFailure);
  EXPECT_EQ(it->reason, "validation");
}

TEST(BenchResult, ConservationAndJsonShape) {
  const Dataset& d = generated_dataset();
  const BenchResult r = eval_mt_vqa(d.records, d.index, ReferenceOracle{});
  std::size_t questions = 0;
  for (const auto& rec : d.records) questions += static_cast<std::size_t>(rec.dialogue.question_count());
  EXPECT_EQ(r.count(ItemStatus::kSuccess) + r.count(ItemStatus::kFailure) + r.count(ItemStatus::kSkipped),
            questions);
  const Json j = to_json_value(r);
  EXPECT_EQ(j["version"], kWireVersion);
  EXPECT_EQ(j["task"], "mt-vqa");
  EXPECT_TRUE(j["bindings"]["guesser"].is_null());
  EXPECT_EQ(j["bindings"]["oracle"], "reference");
  EXPECT_EQ(j["counts"]["items"], questions);
  const std::string table = format_bench(r);
  EXPECT_NE(table.find("oracle=reference"), std::string::npos);
  EXPECT_NE(table.find("SR"), std::string::npos);
}

// --- Config -------------------------------------------------------------------------------

TEST(Config, ExampleFileMatchesDefaults) {
  const Config c = load_config(std::string(IVG_SOURCE_DIR) + "/config/ivg.example.ini");
  const Config def;
  EXPECT_EQ(c.scenes.n, def.scenes.n);
  EXPECT_EQ(c.scenes.max_overlap, def.scenes.max_overlap);
  EXPECT_EQ(c.policies.questioner, "reference");
  EXPECT_EQ(c.policies.max_turns, def.policies.max_turns);
  EXPECT_EQ(c.evolve.polisher, def.evolve.polisher);
  EXPECT_EQ(c.eval.pool_size, 11);
  EXPECT_EQ(c.eval.threshold, 0.5);
  EXPECT_EQ(c.serve.port, def.serve.port);
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_THROW(parse_config("[scenes]\nnumber = 3\n"), ValidationError);
  EXPECT_THROW(parse_config("[render]\nx = 1\n"), ValidationError);
  EXPECT_THROW(parse_config("[scenes]\nn = many\n"), ValidationError);
  EXPECT_THROW(parse_config("[eval]\nthreshold = 1.5\n"), ValidationError);
  EXPECT_THROW(load_config("/nonexistent/ivg.ini"), NotFoundError);
  const Config c = parse_config("[scenes]\nn = 7\n[policies]\noracle = adversarial\n");
  EXPECT_EQ(c.scenes.n, 7);
  EXPECT_EQ(c.policies.oracle, "adversarial");
}

}  // namespace
}  // namespace ivg
