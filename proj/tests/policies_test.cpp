#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "ivg/error.hpp"
#include "ivg/reference_policies.hpp"
#include "ivg/rng.hpp"
#include "ivg/tokenizer.hpp"
#include "test_util.hpp"

namespace ivg {
namespace {

using testing::box_in;
using testing::object;
using testing::scene_of;

// {2 red cubes, 1 blue ball, 1 green ball}, same size, same quadrant.
Scene two_red_cubes() {
  return scene_of({object(0, box_in(Quadrant::kTopLeft, 0), "cube", "red"),
                   object(1, box_in(Quadrant::kTopLeft, 1), "cube", "red"),
                   object(2, box_in(Quadrant::kTopLeft, 2), "ball", "blue"),
                   object(3, box_in(Quadrant::kTopLeft, 3), "ball", "green")});
}

// Independent IG: entropy of the uniform prior minus the expected entropy
// after partitioning the support by an attribute extractor.
template <typename Key>
double brute_force_gain(const std::vector<SceneObject>& support, Key key) {
  std::map<std::string, int> groups;
  for (const auto& o : support) ++groups[key(o)];
  const double n = static_cast<double>(support.size());
  double after = 0.0;
  for (const auto& [k, c] : groups) after += (c / n) * std::log2(static_cast<double>(c));
  return std::log2(n) - after;
}

TEST(OracleDescription, FullAtLevelZeroIsUnique) {
  SceneConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    for (const auto& o : s.objects) {
      const auto text = oracle_initial_description(s, o.id, 0.0, seed);
      const Description d = parse_description(text, AttrVocab{});
      const auto n = std::count_if(s.objects.begin(), s.objects.end(),
                                   [&](const SceneObject& x) { return d.matches(x); });
      ASSERT_EQ(n, 1) << text;
      EXPECT_TRUE(d.matches(o));
    }
  }
}

TEST(OracleDescription, AmbiguousPicksSharedAttribute) {
  const Scene s = scene_of({object(0, box_in(Quadrant::kTopLeft), "ball", "red", SizeClass::kSmall),
                            object(1, box_in(Quadrant::kBottomRight), "cube", "red", SizeClass::kLarge),
                            object(2, box_in(Quadrant::kTopRight), "plate", "blue", SizeClass::kMedium)});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    EXPECT_EQ(oracle_initial_description(s, 0, 1.0, seed), "the red one");
  }
}

TEST(OracleDescription, FallbackSingleAttribute) {
  const Scene s = scene_of({object(0, box_in(Quadrant::kTopLeft), "ball", "red", SizeClass::kSmall),
                            object(1, box_in(Quadrant::kBottomRight), "cube", "blue", SizeClass::kLarge)});
  const std::string text = oracle_initial_description(s, 0, 1.0, 3);
  EXPECT_EQ(text, "the red one");
  const Description d = parse_description(text, AttrVocab{});
  EXPECT_TRUE(d.matches(s.objects[0]));
  EXPECT_FALSE(d.matches(s.objects[1]));
}

TEST(OracleDescription, DeterministicInSeed) {
  SceneConfig cfg;
  const Scene s = inject_ambiguity(generate_scene(4, cfg), 2, 4);
  for (const auto& o : s.objects) {
    EXPECT_EQ(oracle_initial_description(s, o.id, 0.5, 17), oracle_initial_description(s, o.id, 0.5, 17));
  }
}

TEST(OracleAnswer, Examples) {
  const Scene s = scene_of({object(0, BBox(0.05, 0.05, 0.15, 0.15), "ball", "red"),
                            object(1, box_in(Quadrant::kBottomRight), "cube", "blue")});
  const AttrVocab v;
  EXPECT_EQ(oracle_answer(s, 0, "what color is it?", v), "red");
  EXPECT_EQ(oracle_answer(s, 0, "is it in the top left?", v), "yes");
  EXPECT_EQ(oracle_answer(s, 1, "is it in the top left?", v), "no");
  EXPECT_EQ(oracle_answer(s, 0, "where is it?", v), "top left");
  EXPECT_EQ(oracle_answer(s, 0, "what kind of object is it?", v), "ball");
  EXPECT_EQ(oracle_answer(s, 0, "what size is it?", v), "small");
  EXPECT_EQ(oracle_answer(s, 0, "is it the small red ball in the top left?", v), "yes");
  EXPECT_EQ(oracle_answer(s, 1, "is it the small red ball in the top left?", v), "no");
  EXPECT_EQ(oracle_answer(s, 0, "glorp zzyx?", v), kDontUnderstand);
  EXPECT_EQ(oracle_answer(s, 0, "", v), kDontUnderstand);
}

TEST(Questions, SurfaceRoundTripsAndTruthfulAnswersParse) {
  SceneConfig cfg;
  const AttrVocab v;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    for (const Question& q : template_questions(s)) {
      const auto back = parse_question(q.surface(), v);
      ASSERT_TRUE(back) << q.surface();
      EXPECT_EQ(*back, q) << q.surface();
      for (const auto& o : s.objects) {
        const auto a = oracle_answer(s, o.id, q.surface(), v);
        const auto parsed = parse_answer(q, a, v);
        ASSERT_TRUE(parsed) << q.surface() << " -> " << a;
        EXPECT_EQ(*parsed, answer_key(q, o));
      }
    }
  }
}

TEST(InformationGain, WorkedExample) {
  const Scene s = two_red_cubes();
  const Belief b = Belief::uniform(s);
  EXPECT_NEAR(information_gain(b, s, Question::color()), 1.5, 1e-12);
  EXPECT_NEAR(information_gain(b, s, Question::category()), 1.0, 1e-12);
  EXPECT_NEAR(information_gain(b, s, Question::size()), 0.0, 1e-12);
  EXPECT_NEAR(information_gain(b, s, Question::where()), 0.0, 1e-12);
  EXPECT_EQ(questioner_select(b, s, {}), Question::color());
  EXPECT_EQ(questioner_select(b, s, {Question::color()}), Question::category());
}

TEST(InformationGain, MatchesBruteForceOnGeneratedScenes) {
  SceneConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    const Belief b = Belief::uniform(s);
    EXPECT_NEAR(information_gain(b, s, Question::color()),
                brute_force_gain(s.objects, [](const SceneObject& o) { return o.color; }), 1e-12);
    EXPECT_NEAR(information_gain(b, s, Question::category()),
                brute_force_gain(s.objects, [](const SceneObject& o) { return o.category; }), 1e-12);
    EXPECT_NEAR(information_gain(b, s, Question::size()),
                brute_force_gain(s.objects,
                                 [](const SceneObject& o) { return std::string(to_string(o.size)); }),
                1e-12);
    EXPECT_NEAR(information_gain(b, s, Question::where()),
                brute_force_gain(s.objects,
                                 [](const SceneObject& o) { return std::string(to_string(o.quadrant())); }),
                1e-12);
  }
}

TEST(QuestionerSelect, TieGoesToEarlierKind) {
  const Scene s = scene_of({object(0, box_in(Quadrant::kTopLeft, 0), "ball", "red"),
                            object(1, box_in(Quadrant::kTopLeft, 1), "cube", "blue")});
  const Belief b = Belief::uniform(s);
  EXPECT_DOUBLE_EQ(information_gain(b, s, Question::color()),
                   information_gain(b, s, Question::category()));
  EXPECT_EQ(questioner_select(b, s, {}), Question::color());
  EXPECT_EQ(questioner_select(b, s, {}), questioner_select(b, s, {}));
}

TEST(QuestionerSelect, SingletonIsPreconditionViolation) {
  const Scene s = scene_of({object(0, box_in(Quadrant::kTopLeft, 0), "ball", "red"),
                            object(1, box_in(Quadrant::kTopLeft, 1), "cube", "blue"),
                            object(2, box_in(Quadrant::kTopLeft, 2), "cube", "green")});
  EXPECT_THROW(questioner_select(Belief({{0, 1.0}, {1, 0.0}, {2, 0.0}}), s, {}), ValidationError);
}

TEST(QuestionerSelect, FallsBackToConfirmOnArgmax) {
  // Indistinguishable pair: nothing has positive gain.
  const Scene s = scene_of({object(0, box_in(Quadrant::kTopLeft, 0), "ball", "red"),
                            object(1, box_in(Quadrant::kTopLeft, 1), "ball", "red")});
  const Question q = questioner_select(Belief::uniform(s), s, {});
  EXPECT_EQ(q.kind, QuestionKind::kConfirm);
  EXPECT_EQ(q, Question::confirm(full_description(s.objects[0])));
}

TEST(GuesserUpdate, Examples) {
  const Scene s = two_red_cubes();
  const AttrVocab v;
  const Belief b = guesser_update(Belief::uniform(s), s, "what color is it?", "red", v);
  EXPECT_EQ(b.support(), (std::vector<ObjectId>{0, 1}));
  EXPECT_DOUBLE_EQ(b.weight(0), b.weight(1));

  EXPECT_THROW(guesser_update(Belief::uniform(s), s, "what color is it?", "yellow", v),
               DegenerateBeliefError);
  // Unparseable question or answer leaves the belief alone.
  EXPECT_EQ(guesser_update(b, s, "glorp?", "red", v), b);
  EXPECT_EQ(guesser_update(b, s, "what color is it?", "hmm", v), b);
}

TEST(GuesserUpdate, SoftLikelihood) {
  const Scene s = scene_of({object(0, box_in(Quadrant::kTopLeft, 0), "ball", "red"),
                            object(1, box_in(Quadrant::kTopLeft, 1), "ball", "blue")});
  const Belief b = guesser_update(Belief::uniform(s), s, "what color is it?", "red", AttrVocab{}, 0.01);
  const auto p = b.normalized();
  EXPECT_NEAR(p.at(0), 1.0 / 1.01, 1e-9);
  EXPECT_NEAR(p.at(1), 0.01 / 1.01, 1e-9);
  EXPECT_NEAR(p.at(0), 0.990, 1e-3);
  EXPECT_NEAR(p.at(1), 0.0099, 1e-4);
}

TEST(GuesserGuess, ArgmaxAndTieRule) {
  const Scene s = scene_of({object(0, box_in(Quadrant::kTopLeft, 0), "ball", "red"),
                            object(1, box_in(Quadrant::kBottomRight, 0), "ball", "blue")});
  EXPECT_EQ(guesser_guess(Belief({{0, 0.2}, {1, 0.8}}), s), s.objects[1].bbox);
  EXPECT_EQ(guesser_guess(Belief({{0, 0.5}, {1, 0.5}}), s), s.objects[0].bbox);
  EXPECT_THROW(guesser_guess(Belief({{0, 0.0}, {1, 0.0}}), s), DegenerateBeliefError);
  // Round trip through bins: within the quantization floor for a 0.1 box,
  // and >= 0.99 once the box is large enough to guarantee it.
  const BBox g = guesser_guess(Belief({{0, 0.2}, {1, 0.8}}), s);
  EXPECT_GE(iou(g, box_from_bins(box_to_bins(g))), std::pow(0.099 / 0.101, 2));
  const Scene big = scene_of({object(0, BBox(0.1, 0.1, 0.6, 0.55), "ball", "red"),
                              object(1, BBox(0.61, 0.56, 0.9, 0.9), "ball", "blue")});
  const BBox gb = guesser_guess(Belief({{0, 0.9}, {1, 0.1}}), big);
  EXPECT_GE(iou(gb, box_from_bins(box_to_bins(gb))), 0.99);
}

TEST(Belief, RejectsOutOfRangeWeights) {
  EXPECT_THROW(Belief({{0, -0.1}}), ValidationError);
  EXPECT_THROW(Belief({{0, 1.5}}), ValidationError);
}

TEST(Invariants, PositiveGainShrinksSupport) {
  SceneConfig cfg;
  const AttrVocab v;
  Rng rng(31);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene s = inject_ambiguity(generate_scene(seed, cfg), 2, seed);
    const ObjectId target = s.objects[rng.below(s.objects.size())].id;
    Belief b = Belief::uniform(s);
    std::vector<Question> asked;
    while (b.support().size() > 1) {
      std::vector<Question> positive;
      for (const auto& q : template_questions(s)) {
        if (information_gain(b, s, q) > 1e-12) positive.push_back(q);
      }
      if (positive.empty()) break;
      const Question q = positive[rng.below(positive.size())];
      const auto before = b.support().size();
      b = guesser_update(b, s, q.surface(), oracle_answer(s, target, q.surface(), v), v);
      ASSERT_LT(b.support().size(), before);
      ASSERT_GT(b.weight(target), 0.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Invariants, HardFilterIsOrderIndependent) {
  SceneConfig cfg;
  const AttrVocab v;
  Rng rng(32);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = generate_scene(seed, cfg);
    const ObjectId target = s.objects[rng.below(s.objects.size())].id;
    auto qs = template_questions(s);
    rng.shuffle(qs);
    qs.resize(4);
    std::set<std::vector<ObjectId>> supports;
    std::sort(qs.begin(), qs.end(), question_order_less);
    do {
      Belief b = Belief::uniform(s);
      for (const auto& q : qs) {
        b = guesser_update(b, s, q.surface(), oracle_answer(s, target, q.surface(), v), v);
      }
      supports.insert(b.support());
    } while (std::next_permutation(qs.begin(), qs.end(), question_order_less));
    EXPECT_EQ(supports.size(), 1u);
  }
}

TEST(RankCandidates, Examples) {
  EXPECT_EQ(rank_candidates("red", {"red", "blue", "green"}).front(), 0u);
  EXPECT_NEAR(token_f1("dark red thing", "red"), 0.5, 1e-12);
  EXPECT_EQ(rank_candidates("red", {"blue", "dark red thing"}), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(rank_candidates("red", {"x", "x", "x"}), (std::vector<std::size_t>{0, 1, 2}));

  const Scene s = two_red_cubes();
  const auto order = rank_candidates("what color is it?", s, 2, {"red", "green", "blue"});
  EXPECT_EQ(order.front(), 2u);
}

TEST(RankCandidates, VerbatimTruthRanksFirst) {
  Rng rng(8);
  const std::vector<std::string> pool = {"red", "blue", "green", "a red one", "top left",
                                         "bottom right", "yes", "no", "small", "ball", "cube"};
  for (int trial = 0; trial < 200; ++trial) {
    auto cands = pool;
    rng.shuffle(cands);
    const std::string truth = cands[rng.below(cands.size())];
    const auto order = rank_candidates(truth, cands);
    EXPECT_EQ(cands[order.front()], truth);
  }
}

TEST(ReplayBelief, CorrectionsAfterGuess) {
  const Scene s = scene_of({object(0, box_in(Quadrant::kTopLeft, 0), "ball", "red"),
                            object(1, box_in(Quadrant::kTopLeft, 1), "ball", "red"),
                            object(2, box_in(Quadrant::kBottomRight, 0), "cube", "blue")});
  const ReferenceConfig config;
  std::vector<Turn> h = {{Role::kOracle, "the red one", 0},
                         {Role::kGuesser, box_to_text(s.objects[0].bbox), 1}};
  EXPECT_EQ(replay_belief(s, h, config).support(), (std::vector<ObjectId>{0, 1}));
  h.push_back({Role::kOracle, "no, the other one", 2});
  EXPECT_EQ(replay_belief(s, h, config).support(), (std::vector<ObjectId>{1}));
}

}  // namespace
}  // namespace ivg
