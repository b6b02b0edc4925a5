#include <future>
#include <set>

#include <fmt/format.h>
#include <gtest/gtest.h>
#include <httplib.h>

#include "ivg/error.hpp"
#include "ivg/hri.hpp"
#include "ivg/hri_server.hpp"
#include "ivg/rng.hpp"
#include "loopback.hpp"
#include "remote_reference.hpp"
#include "test_util.hpp"

namespace ivg::hri {
namespace {

using ivg::testing::TempDir;

std::vector<BenchEntry> bench_items(std::size_t n = 20) {
  std::vector<Scene> scenes;
  for (std::size_t i = 0; i < n; ++i) scenes.push_back(generate_scene(stable_hash(31, i), {}));
  return make_bench_items(scenes, n, 4);
}

std::vector<Verdict> v(std::initializer_list<Verdict> list) { return list; }
constexpr auto kBest = Verdict::kBest;
constexpr auto kTie = Verdict::kTie;
constexpr auto kWorst = Verdict::kWorst;
constexpr auto kNone = Verdict::kNone;

// --- Judgments --------------------------------------------------------------

TEST(Judgment, PaperCombinations) {
  EXPECT_EQ(format_order(derive_order(v({kTie, kTie, kWorst}))), "A = B > C");
  EXPECT_EQ(format_order(derive_order(v({kBest, kNone, kWorst}))), "A > B > C");
  EXPECT_EQ(format_order(derive_order(v({kTie, kTie, kNone}))), "A = B = C");
  EXPECT_EQ(format_order(derive_order(v({kTie, kTie, kBest}))), "C > A = B");
  EXPECT_EQ(derive_order(v({kTie, kTie, kWorst})), (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(derive_order(v({kBest, kNone, kWorst})), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(derive_order(v({kTie, kTie, kNone})), (std::vector<int>{0, 0, 0}));
}

TEST(Judgment, TieFillAndRelabeling) {
  EXPECT_EQ(format_order(derive_order(v({kTie, kTie, kTie}))), "A = B = C");
  EXPECT_EQ(format_order(derive_order(v({kWorst, kTie, kBest}))), "C > B > A");
  EXPECT_EQ(format_order(derive_order(v({kNone, kTie, kTie}))), "A = B = C");
  EXPECT_EQ(format_order(derive_order(v({kWorst, kBest, kNone}))), "B > C > A");
}

TEST(Judgment, InvalidCombinationsQuoteTheRule) {
  const std::vector<std::vector<Verdict>> invalid = {
      v({kBest, kBest, kWorst}), v({kWorst, kWorst, kTie}), v({kBest, kNone, kNone}),
      v({kTie, kNone, kNone}),   v({kNone, kNone, kNone}),  v({kBest, kTie, kNone}),
      v({kTie, kWorst}),         v({kBest, kNone})};
  for (const auto& combo : invalid) {
    try {
      derive_order(combo);
      ADD_FAILURE() << "accepted " << combo.size() << "-slot combination";
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find("accepted"), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(derive_order(v({kBest})), ValidationError);
  try {
    derive_order(v({kBest, kBest, kWorst}));
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("at most one slot can be best"), std::string::npos);
  }
}

TEST(Judgment, TwoSlotRestriction) {
  EXPECT_EQ(format_order(derive_order(v({kTie, kTie}))), "A = B");
  EXPECT_EQ(format_order(derive_order(v({kWorst, kBest}))), "B > A");
}

// --- Aggregation ---------------------------------------------------------------

LedgerEntry entry_with(const std::vector<std::string>& bindings, const std::vector<int>& levels) {
  LedgerEntry e;
  e.session_id = "s";
  e.item_id = "i";
  e.permutation = bindings;
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    SlotRecord s;
    s.label = slot_labels()[i];
    s.binding = bindings[i];
    s.level = levels[i];
    e.slots.push_back(s);
  }
  e.order = format_order(levels);
  return e;
}

TEST(Aggregate, PairwiseExpansion) {
  const Aggregate agg = aggregate_scores({entry_with({"x", "y", "z"}, {0, 1, 2})});
  EXPECT_EQ(agg.per_binding.at("x"), (Tally{2, 0, 0}));
  EXPECT_EQ(agg.per_binding.at("y"), (Tally{1, 0, 1}));
  EXPECT_EQ(agg.per_binding.at("z"), (Tally{0, 0, 2}));
  EXPECT_EQ(agg.pairwise.at({"y", "x"}), (Tally{0, 0, 1}));
}

TEST(Aggregate, AllTies) {
  std::vector<LedgerEntry> ledger(5, entry_with({"x", "y", "z"}, {0, 0, 0}));
  const Aggregate agg = aggregate_scores(ledger);
  for (const auto& [b, t] : agg.per_binding) {
    EXPECT_EQ(t.fractions()[1], 1.0) << b;
  }
}

TEST(Aggregate, FilterRestrictsPairs) {
  const Aggregate agg = aggregate_scores({entry_with({"x", "y", "z"}, {0, 1, 2})}, {"x", "z"});
  EXPECT_EQ(agg.per_binding.size(), 2u);
  EXPECT_EQ(agg.per_binding.at("z"), (Tally{0, 0, 1}));
}

// 100 synthetic entries from valid judgments; relabeling the slots of each
// entry must leave the de-blinded tallies unchanged.
TEST(Aggregate, InvariantUnderSlotRelabeling) {
  const std::vector<std::vector<Verdict>> combos = {
      v({kTie, kTie, kWorst}), v({kBest, kNone, kWorst}), v({kTie, kTie, kNone}),
      v({kTie, kTie, kBest}),  v({kBest, kTie, kWorst})};
  const std::vector<std::string> models = {"m1", "m2", "m3", "m4"};
  Rng rng(99);
  std::vector<LedgerEntry> ledger, relabeled;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> picked = models;
    rng.shuffle(picked);
    picked.resize(3);
    auto combo = combos[rng.below(combos.size())];
    rng.shuffle(combo);
    const auto levels = derive_order(combo);
    ledger.push_back(entry_with(picked, levels));

    std::vector<std::size_t> perm = {0, 1, 2};
    rng.shuffle(perm);
    std::vector<std::string> b2(3);
    std::vector<int> l2(3);
    for (std::size_t k = 0; k < 3; ++k) {
      b2[k] = picked[perm[k]];
      l2[k] = levels[perm[k]];
    }
    relabeled.push_back(entry_with(b2, l2));
  }
  const Aggregate a = aggregate_scores(ledger);
  EXPECT_EQ(a, aggregate_scores(relabeled));
  for (const auto& [pair, t] : a.pairwise) {
    const auto f = t.fractions();
    EXPECT_NEAR(f[0] + f[1] + f[2], 1.0, 1e-12);
    EXPECT_EQ(a.pairwise.at({pair.second, pair.first}), (Tally{t.worse, t.tie, t.better}));
  }
}

// --- Slot order ------------------------------------------------------------------

TEST(Slots, SeededPermutation) {
  EXPECT_EQ(slot_permutation(3, 1), slot_permutation(3, 1));
  std::map<std::vector<std::size_t>, int> seen;
  int differs = 0;
  const int trials = 6000;
  for (int s = 0; s < trials; ++s) {
    ++seen[slot_permutation(3, static_cast<std::uint64_t>(s))];
    differs += slot_permutation(3, 2 * s) != slot_permutation(3, 2 * s + 1);
  }
  EXPECT_EQ(seen.size(), 6u);
  for (const auto& [perm, count] : seen) EXPECT_NEAR(count, trials / 6, 150);
  EXPECT_NEAR(static_cast<double>(differs) / trials, 5.0 / 6.0, 0.03);
  EXPECT_EQ(slot_permutation(1, 5), (std::vector<std::size_t>{0}));
}

// --- Service -------------------------------------------------------------------

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::serve_reference_act(remote_.server(), &delay_ms_);
    remote_.start();
    bindings_ = {"reference", "adversarial", remote_.url()};
  }

  // Answers each slot truthfully until it guesses; checks blindness of
  // every response on the way.
  void play_out(HriService& svc, const std::string& sid) {
    const BenchEntry& item = svc.item(svc.session_view(sid)["item_id"].get<std::string>());
    for (int guard = 0; guard < 50; ++guard) {
      const Json view = svc.session_view(sid);
      expect_blind(view);
      if (view["status"] != "active") return;
      for (const Json& slot : view["slots"]) {
        if (slot["status"] != "awaiting_answer") continue;
        const std::string q = slot["turns"].back()["text"].get<std::string>();
        const Json reply = svc.post_answer(sid, slot["label"].get<std::string>(),
                                           oracle_answer(item.scene, item.target, q, AttrVocab{}));
        expect_blind(reply);
      }
    }
    FAIL() << "session never finished";
  }

  void expect_blind(const Json& body) const {
    const std::string text = body.dump();
    for (const std::string& b : bindings_) EXPECT_EQ(text.find(b), std::string::npos) << b << " in " << text;
    EXPECT_EQ(text.find(std::to_string(remote_.port())), std::string::npos);
    EXPECT_EQ(text.find("iou"), std::string::npos);
  }

  testing::LoopbackServer remote_;
  std::atomic<int> delay_ms_{0};
  std::vector<std::string> bindings_;
};

TEST_F(ServiceTest, FullSessionScoresAndReveals) {
  HriService svc(bench_items());
  const Json created = svc.create_session("item-0003", bindings_, 7);
  const std::string sid = created["session_id"].get<std::string>();
  EXPECT_EQ(created["version"], kWireVersion);
  EXPECT_EQ(created["slots"].size(), 3u);
  EXPECT_TRUE(created["scoring_enabled"].get<bool>());
  play_out(svc, sid);
  EXPECT_EQ(svc.session_view(sid)["status"], "guessed");

  const LedgerEntry e = svc.submit_scores(sid, {{"A", kBest}, {"C", kWorst}});
  EXPECT_EQ(e.order, "A > B > C");
  const Json revealed = svc.session_view(sid);
  EXPECT_EQ(revealed["status"], "scored");
  std::set<std::string> seen;
  for (const auto& [label, r] : revealed["reveal"].items()) {
    seen.insert(r["binding"].get<std::string>());
    const std::string b = r["binding"].get<std::string>();
    if (b == "reference") EXPECT_EQ(r["iou"].get<double>(), 1.0);
    // The remote guesser answers in quantization bins.
    if (b == remote_.url()) EXPECT_GT(r["iou"].get<double>(), 0.99);
  }
  EXPECT_EQ(seen, std::set<std::string>(bindings_.begin(), bindings_.end()));
  EXPECT_EQ(svc.ledger().entries().size(), 1u);
  EXPECT_EQ(e.permutation.size(), 3u);
}

TEST_F(ServiceTest, StateMachineErrors) {
  HriService svc(bench_items());
  const std::string sid = svc.create_session("item-0001", bindings_, 3)["session_id"].get<std::string>();
  const Json view = svc.session_view(sid);

  std::string waiting, done;
  for (const Json& s : view["slots"]) {
    (s["status"] == "awaiting_answer" ? waiting : done) = s["label"].get<std::string>();
  }
  ASSERT_FALSE(done.empty());  // the adversarial slot guesses at once
  EXPECT_THROW(svc.post_answer(sid, done, "red"), ConflictError);
  if (!waiting.empty()) EXPECT_THROW(svc.post_answer(sid, waiting, "  "), ValidationError);
  EXPECT_THROW(svc.post_answer(sid, "D", "red"), NotFoundError);
  EXPECT_THROW(svc.submit_scores(sid, {{"A", kTie}, {"B", kTie}}), StateError);

  play_out(svc, sid);
  EXPECT_THROW(svc.post_answer(sid, "A", "red"), StateError);
  EXPECT_THROW(svc.submit_scores(sid, {{"A", kBest}, {"B", kBest}}), ValidationError);
  svc.submit_scores(sid, {{"A", kTie}, {"B", kTie}});
  EXPECT_THROW(svc.submit_scores(sid, {{"A", kTie}, {"B", kTie}}), StateError);
  EXPECT_THROW(svc.post_answer(sid, "A", "red"), StateError);
}

TEST_F(ServiceTest, CreationErrorsAndSingleBinding) {
  HriService svc(bench_items());
  EXPECT_THROW(svc.create_session("nope", {"reference"}, 1), NotFoundError);
  EXPECT_THROW(svc.create_session("item-0001", {"gpt-9"}, 1), NotFoundError);
  EXPECT_THROW(svc.create_session("item-0001", {}, 1), ValidationError);
  EXPECT_THROW(svc.create_session("item-0001", {"reference", "reference"}, 1), ValidationError);

  const Json solo = svc.create_session("item-0002", {"reference"}, 1);
  EXPECT_FALSE(solo["scoring_enabled"].get<bool>());
  const std::string sid = solo["session_id"].get<std::string>();
  play_out(svc, sid);
  EXPECT_THROW(svc.submit_scores(sid, {{"A", kBest}}), StateError);
}

TEST_F(ServiceTest, SameSeedSameSlotOrder) {
  HriService svc(bench_items());
  auto order = [&](std::uint64_t seed) {
    const std::string sid = svc.create_session("item-0000", bindings_, seed)["session_id"].get<std::string>();
    play_out(svc, sid);
    svc.submit_scores(sid, {{"A", kTie}, {"B", kTie}});
    return svc.session_view(sid)["reveal"].dump();
  };
  const auto a = order(11);
  EXPECT_EQ(a, order(11));
}

TEST_F(ServiceTest, ConcurrentPostToSameSlotIsRejected) {
  HriService svc(bench_items());
  const std::string url = remote_.url();
  const Json created = svc.create_session("item-0005", {url}, 1);
  const std::string sid = created["session_id"].get<std::string>();
  if (created["slots"][0]["status"] != "awaiting_answer") GTEST_SKIP() << "slot guessed immediately";
  const BenchEntry& item = svc.item("item-0005");
  const std::string q = created["slots"][0]["turns"].back()["text"].get<std::string>();
  const std::string answer = oracle_answer(item.scene, item.target, q, AttrVocab{});

  delay_ms_ = 400;
  auto first = std::async(std::launch::async, [&] { return svc.post_answer(sid, "A", answer); });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  EXPECT_THROW(svc.post_answer(sid, "A", answer), ConflictError);
  EXPECT_NO_THROW(first.get());
  delay_ms_ = 0;
}

TEST_F(ServiceTest, LedgerReplayReproducesAggregate) {
  TempDir dir;
  const auto path = dir.path() / "ledger.jsonl";
  Aggregate before;
  std::string scored_view;
  {
    HriService svc(bench_items(), {}, std::make_shared<Ledger>(path));
    const std::vector<std::map<std::string, Verdict>> judgments = {
        {{"A", kBest}, {"C", kWorst}}, {{"A", kTie}, {"B", kTie}, {"C", kWorst}}, {{"B", kTie}, {"C", kTie}}};
    for (std::size_t i = 0; i < judgments.size(); ++i) {
      const std::string sid = svc.create_session(fmt::format("item-{:04d}", i), bindings_, i)["session_id"];
      play_out(svc, sid);
      svc.submit_scores(sid, judgments[i], "note");
    }
    before = svc.aggregate();
    scored_view = svc.session_view("s-000002").dump();
  }
  EXPECT_EQ(read_ledger(path).size(), 3u);
  EXPECT_EQ(aggregate_scores(read_ledger(path)), before);

  HriService restarted(bench_items(), {}, std::make_shared<Ledger>(path));
  EXPECT_EQ(restarted.aggregate(), before);
  EXPECT_EQ(restarted.session_view("s-000002").dump(), scored_view);
  const Json fresh = restarted.create_session("item-0009", {"reference"}, 1);
  EXPECT_EQ(fresh["session_id"], "s-000004");
}

// --- HTTP ----------------------------------------------------------------------

TEST_F(ServiceTest, HttpApi) {
  auto svc = std::make_shared<HriService>(bench_items());
  HriServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);

  auto post = [&](const std::string& path, const Json& body) {
    auto res = client.Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    return res;
  };

  auto items = client.Get("/items");
  ASSERT_TRUE(items);
  EXPECT_EQ(items->status, 200);
  const Json item_list = Json::parse(items->body);
  EXPECT_EQ(item_list["version"], kWireVersion);
  EXPECT_EQ(item_list["items"].size(), 20u);

  auto created = post("/sessions", {{"item_id", "item-0004"}, {"bindings", bindings_}, {"seed", 5}});
  ASSERT_EQ(created->status, 201) << created->body;
  expect_blind(Json::parse(created->body));
  const std::string sid = Json::parse(created->body)["session_id"].get<std::string>();
  const BenchEntry& item = svc->item("item-0004");

  for (int guard = 0; guard < 50; ++guard) {
    auto got = client.Get("/sessions/" + sid);
    ASSERT_EQ(got->status, 200);
    const Json view = Json::parse(got->body);
    expect_blind(view);
    if (view["status"] != "active") break;
    for (const Json& slot : view["slots"]) {
      if (slot["status"] != "awaiting_answer") continue;
      const std::string q = slot["turns"].back()["text"].get<std::string>();
      auto res = post("/sessions/" + sid + "/slots/" + slot["label"].get<std::string>() + "/answer",
                      {{"text", oracle_answer(item.scene, item.target, q, AttrVocab{})}});
      ASSERT_EQ(res->status, 200) << res->body;
      expect_blind(Json::parse(res->body));
    }
  }

  auto conflict = post("/sessions/" + sid + "/slots/A/answer", {{"text", "red"}});
  EXPECT_EQ(conflict->status, 409);
  EXPECT_EQ(Json::parse(conflict->body)["error"]["kind"], "state");

  auto bad = post("/sessions/" + sid + "/scores", {{"verdicts", {{"A", "best"}, {"B", "best"}}}});
  EXPECT_EQ(bad->status, 400);
  EXPECT_NE(bad->body.find("at most one slot can be best"), std::string::npos);

  auto scored = post("/sessions/" + sid + "/scores", {{"verdicts", {{"A", "tie"}, {"B", "tie"}, {"C", "worst"}}}});
  ASSERT_EQ(scored->status, 200) << scored->body;
  const Json reveal = Json::parse(scored->body);
  EXPECT_EQ(reveal["order"], "A = B > C");
  EXPECT_EQ(reveal["reveal"].size(), 3u);

  auto agg = client.Get("/aggregate?bindings=reference,adversarial");
  ASSERT_EQ(agg->status, 200);
  const Json a = Json::parse(agg->body);
  EXPECT_EQ(a["version"], kWireVersion);
  EXPECT_EQ(a["bindings"].size(), 2u);

  const Json guessed_slot = reveal["slots"][0];
  if (!guessed_slot["guess"].is_null()) {
    auto img = client.Get(guessed_slot["guess"]["overlay"].get<std::string>());
    ASSERT_EQ(img->status, 200);
    EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
    EXPECT_EQ(img->body.substr(1, 3), "PNG");
  }
  auto svg = client.Get("/items/item-0004/render?format=svg&target=1");
  ASSERT_EQ(svg->status, 200);
  EXPECT_NE(svg->body.find("<svg"), std::string::npos);

  EXPECT_EQ(client.Get("/sessions/nope")->status, 404);
  EXPECT_EQ(client.Get("/items/nope/render")->status, 404);
  EXPECT_EQ(client.Get("/items/item-0004/render?boxes=1,2,3")->status, 400);
  EXPECT_EQ(post("/sessions", {{"item_id", "item-0004"}, {"bindings", {"gpt-9"}}})->status, 404);
  EXPECT_EQ(client.Post("/sessions", "{oops", "application/json")->status, 400);
  server.stop();
}

TEST(BoxList, Parses) {
  const auto boxes = parse_box_list("0.1,0.2,0.3,0.4;0,0,1,1");
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[0], BBox(0.1, 0.2, 0.3, 0.4));
  EXPECT_THROW(parse_box_list("0.1,0.2,0.3"), MalformedBoxError);
  EXPECT_THROW(parse_box_list("0.1,0.2,x,0.4"), MalformedBoxError);
}

TEST(BenchItems, FileRoundTrip) {
  TempDir dir;
  const auto items = bench_items(5);
  write_bench_items(dir.path() / "items.jsonl", items);
  const auto back = read_bench_items(dir.path() / "items.jsonl");
  ASSERT_EQ(back.size(), 5u);
  EXPECT_EQ(back[2].instruction, items[2].instruction);
  EXPECT_EQ(back[2].scene, items[2].scene);
}

}  // namespace
}  // namespace ivg::hri
