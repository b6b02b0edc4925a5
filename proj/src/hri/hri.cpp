#include "ivg/hri.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/evolve.hpp"
#include "ivg/prompts.hpp"
#include "ivg/reference_policies.hpp"
#include "ivg/rng.hpp"
#include "ivg/tokenizer.hpp"

namespace ivg::hri {

// --- Bench items ------------------------------------------------------------

void to_json(Json& j, const BenchEntry& e) {
  j = Json::object();
  j["item_id"] = e.item_id;
  j["scene"] = e.scene;
  j["target"] = e.target;
  j["instruction"] = e.instruction;
}

void from_json(const Json& j, BenchEntry& e) {
  e.item_id = j.at("item_id").get<std::string>();
  e.scene = j.at("scene").get<Scene>();
  e.target = j.at("target").get<ObjectId>();
  e.instruction = j.value("instruction", std::string());
}

namespace {

std::string default_instruction(const BenchEntry& e) {
  return oracle_initial_description(e.scene, e.target, 1.0, stable_hash(0, e.item_id));
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::vector<BenchEntry> read_bench_items(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError(fmt::format("bench items {} not found", path.string()));
  std::vector<BenchEntry> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    BenchEntry e;
    try {
      e = Json::parse(line).get<BenchEntry>();
    } catch (const Json::exception& ex) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, ex.what()));
    }
    e.scene.at(e.target);
    if (blank(e.instruction)) e.instruction = default_instruction(e);
    if (!ids.insert(e.item_id).second) throw CollisionError(fmt::format("duplicate item_id {}", e.item_id));
    out.push_back(std::move(e));
  }
  return out;
}

void write_bench_items(const std::filesystem::path& path, const std::vector<BenchEntry>& items) {
  std::ofstream out(path);
  if (!out) throw StateError(fmt::format("cannot write {}", path.string()));
  for (const BenchEntry& e : items) out << Json(e).dump() << '\n';
  if (!out) throw StateError(fmt::format("write to {} failed", path.string()));
}

std::vector<BenchEntry> make_bench_items(const std::vector<Scene>& scenes, std::size_t n,
                                         std::uint64_t seed) {
  std::vector<BenchEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    const EpisodePlan plan = plan_episode(scenes, seed, i);
    BenchEntry e{fmt::format("item-{:04d}", i), scenes[plan.scene_index], plan.target, {}};
    e.instruction = oracle_initial_description(e.scene, e.target, 1.0, plan.seed);
    out.push_back(std::move(e));
  }
  return out;
}

// --- Judgments --------------------------------------------------------------

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kNone: return "";
    case Verdict::kBest: return "best";
    case Verdict::kTie: return "tie";
    case Verdict::kWorst: return "worst";
  }
  return "";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  for (Verdict v : {Verdict::kNone, Verdict::kBest, Verdict::kTie, Verdict::kWorst}) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

namespace {

constexpr std::string_view kThreeSlotRules =
    "accepted for three slots: two ties (all equal); a tie pair and a worst (the pair is better); "
    "a tie pair and a best (the pair is worse); a best and a worst (best > middle > worst)";
constexpr std::string_view kTwoSlotRules = "accepted for two slots: tie + tie, or best + worst";

std::string describe_verdicts(const std::vector<Verdict>& verdicts) {
  std::string out;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (i) out += ", ";
    const auto v = to_string(verdicts[i]);
    out += fmt::format("{}={}", slot_labels()[i], v.empty() ? "-" : v);
  }
  return out;
}

}  // namespace

std::vector<int> derive_order(const std::vector<Verdict>& verdicts) {
  const std::size_t n = verdicts.size();
  if (n < 2 || n > 3) throw ValidationError("scoring needs two or three slots");
  auto count = [&](Verdict v) { return std::count(verdicts.begin(), verdicts.end(), v); };
  const auto best = count(Verdict::kBest), tie = count(Verdict::kTie), worst = count(Verdict::kWorst);
  const auto none = count(Verdict::kNone);

  auto fail = [&](std::string_view why, std::string_view rules) -> std::vector<int> {
    throw ValidationError(fmt::format("invalid judgment ({}): {}; {}", describe_verdicts(verdicts), why, rules));
  };

  std::vector<int> levels(n, 0);
  if (n == 2) {
    if (tie == 2) return levels;
    if (best == 1 && worst == 1) {
      for (std::size_t i = 0; i < n; ++i) levels[i] = verdicts[i] == Verdict::kWorst ? 1 : 0;
      return levels;
    }
    return fail("two slots must be tied or split into a best and a worst", kTwoSlotRules);
  }

  if (best > 1) return fail("at most one slot can be best", kThreeSlotRules);
  if (worst > 1) return fail("at most one slot can be worst", kThreeSlotRules);
  if (tie >= 2 && best == 0 && worst == 0) return levels;
  if (tie == 2 && worst == 1) {
    for (std::size_t i = 0; i < n; ++i) levels[i] = verdicts[i] == Verdict::kWorst ? 1 : 0;
    return levels;
  }
  if (tie == 2 && best == 1) {
    for (std::size_t i = 0; i < n; ++i) levels[i] = verdicts[i] == Verdict::kBest ? 0 : 1;
    return levels;
  }
  if (best == 1 && worst == 1 && (none == 1 || tie == 1)) {
    for (std::size_t i = 0; i < n; ++i) {
      levels[i] = verdicts[i] == Verdict::kBest ? 0 : verdicts[i] == Verdict::kWorst ? 2 : 1;
    }
    return levels;
  }
  if (tie == 1) return fail("a tie needs two slots", kThreeSlotRules);
  return fail("a best needs a worst, or a tie pair", kThreeSlotRules);
}

std::string format_order(const std::vector<int>& levels) {
  std::vector<std::size_t> idx(levels.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  std::string out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) out += levels[idx[k]] == levels[idx[k - 1]] ? " = " : " > ";
    out += slot_labels()[idx[k]];
  }
  return out;
}

// --- Ledger -----------------------------------------------------------------

void to_json(Json& j, const LedgerEntry& e) {
  j = Json::object();
  j["version"] = kWireVersion;
  j["session_id"] = e.session_id;
  j["item_id"] = e.item_id;
  j["seed"] = e.seed;
  j["permutation"] = e.permutation;
  Json slots = Json::array();
  for (const SlotRecord& s : e.slots) {
    Json js;
    js["label"] = s.label;
    js["binding"] = s.binding;
    js["verdict"] = to_string(s.verdict);
    js["level"] = s.level;
    js["guess"] = s.guess ? Json(*s.guess) : Json(nullptr);
    js["iou"] = s.iou;
    js["turns"] = s.turns;
    slots.push_back(std::move(js));
  }
  j["slots"] = std::move(slots);
  j["order"] = e.order;
  j["comment"] = e.comment;
}

void from_json(const Json& j, LedgerEntry& e) {
  e.session_id = j.at("session_id").get<std::string>();
  e.item_id = j.at("item_id").get<std::string>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.permutation = j.at("permutation").get<std::vector<std::string>>();
  e.slots.clear();
  for (const Json& js : j.at("slots")) {
    SlotRecord s;
    s.label = js.at("label").get<std::string>();
    s.binding = js.at("binding").get<std::string>();
    const auto v = parse_verdict(js.at("verdict").get<std::string>());
    if (!v) throw ValidationError("ledger: unknown verdict");
    s.verdict = *v;
    s.level = js.at("level").get<int>();
    if (!js.at("guess").is_null()) s.guess = js["guess"].get<BBox>();
    s.iou = js.at("iou").get<double>();
    s.turns = js.at("turns").get<std::vector<Turn>>();
    e.slots.push_back(std::move(s));
  }
  e.order = j.at("order").get<std::string>();
  e.comment = j.value("comment", std::string());
}

std::vector<LedgerEntry> read_ledger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError(fmt::format("ledger {} not found", path.string()));
  std::vector<LedgerEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      out.push_back(Json::parse(line).get<LedgerEntry>());
    } catch (const Json::exception& ex) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, ex.what()));
    }
  }
  return out;
}

Ledger::Ledger(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) entries_ = read_ledger(*path_);
}

void Ledger::append(const LedgerEntry& entry) {
  std::lock_guard lock(mutex_);
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    out << Json(entry).dump() << '\n';
    out.flush();
    if (!out) throw StateError(fmt::format("append to ledger {} failed", path_->string()));
  }
  entries_.push_back(entry);
}

std::vector<LedgerEntry> Ledger::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

// --- Aggregation ------------------------------------------------------------

std::array<double, 3> Tally::fractions() const {
  const std::size_t n = total();
  if (n == 0) return {0.0, 0.0, 0.0};
  const double d = static_cast<double>(n);
  return {static_cast<double>(better) / d, static_cast<double>(tie) / d, static_cast<double>(worse) / d};
}

Aggregate aggregate_scores(const std::vector<LedgerEntry>& entries, const std::vector<std::string>& bindings) {
  const std::set<std::string> filter(bindings.begin(), bindings.end());
  auto counted = [&](const std::string& b) { return filter.empty() || filter.count(b) > 0; };
  auto record = [](Tally& t, int mine, int theirs) {
    if (mine < theirs) {
      ++t.better;
    } else if (mine == theirs) {
      ++t.tie;
    } else {
      ++t.worse;
    }
  };

  Aggregate agg;
  for (const LedgerEntry& e : entries) {
    for (std::size_t i = 0; i < e.slots.size(); ++i) {
      for (std::size_t k = i + 1; k < e.slots.size(); ++k) {
        const SlotRecord& a = e.slots[i];
        const SlotRecord& b = e.slots[k];
        if (!counted(a.binding) || !counted(b.binding)) continue;
        record(agg.per_binding[a.binding], a.level, b.level);
        record(agg.per_binding[b.binding], b.level, a.level);
        record(agg.pairwise[{a.binding, b.binding}], a.level, b.level);
        record(agg.pairwise[{b.binding, a.binding}], b.level, a.level);
      }
    }
  }
  return agg;
}

namespace {

Json tally_json(const Tally& t) {
  const auto f = t.fractions();
  return {{"better", t.better}, {"tie", t.tie}, {"worse", t.worse},
          {"fractions", {{"better", f[0]}, {"tie", f[1]}, {"worse", f[2]}}}};
}

}  // namespace

Json to_json_value(const Aggregate& agg) {
  Json j;
  j["version"] = kWireVersion;
  Json per = Json::object();
  for (const auto& [b, t] : agg.per_binding) per[b] = tally_json(t);
  j["bindings"] = std::move(per);
  Json pairs = Json::array();
  for (const auto& [key, t] : agg.pairwise) {
    Json p = tally_json(t);
    p["binding"] = key.first;
    p["opponent"] = key.second;
    pairs.push_back(std::move(p));
  }
  j["pairwise"] = std::move(pairs);
  return j;
}

// --- Sessions ---------------------------------------------------------------

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::kActive: return "active";
    case SessionStatus::kGuessed: return "guessed";
    case SessionStatus::kScored: return "scored";
  }
  return "active";
}

std::string_view to_string(SlotStatus s) {
  switch (s) {
    case SlotStatus::kAwaitingAnswer: return "awaiting_answer";
    case SlotStatus::kGuessed: return "guessed";
    case SlotStatus::kFailed: return "failed";
  }
  return "failed";
}

std::vector<std::size_t> slot_permutation(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> perm(count);
  for (std::size_t i = 0; i < count; ++i) perm[i] = i;
  Rng rng(stable_hash(seed, std::string_view("slots")));
  rng.shuffle(perm);
  return perm;
}

struct HriService::Slot {
  std::string label;
  std::string binding;
  std::shared_ptr<const QuestionerPolicy> questioner;
  std::shared_ptr<const GuesserPolicy> guesser;
  std::uint64_t seed = 0;
  std::vector<Turn> turns;
  int asked = 0;
  SlotStatus status = SlotStatus::kAwaitingAnswer;
  std::optional<BBox> guess;
  double iou = 0.0;
  std::string error;  // error kind only; messages may name the endpoint
  bool busy = false;
};

struct HriService::Session {
  std::string id;
  const BenchEntry* item = nullptr;
  std::uint64_t seed = 0;
  std::vector<Slot> slots;
  SessionStatus status = SessionStatus::kActive;
  std::optional<LedgerEntry> scored;
  mutable std::mutex mutex;

  void refresh_status() {
    if (status != SessionStatus::kActive) return;
    const bool done = std::all_of(slots.begin(), slots.end(),
                                  [](const Slot& s) { return s.status != SlotStatus::kAwaitingAnswer; });
    if (done) status = SessionStatus::kGuessed;
  }
};

HriService::HriService(std::vector<BenchEntry> items, ServiceConfig config, std::shared_ptr<Ledger> ledger)
    : items_(std::move(items)), config_(std::move(config)), ledger_(std::move(ledger)) {
  if (!ledger_) ledger_ = std::make_shared<Ledger>();
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!item_index_.emplace(items_[i].item_id, i).second) {
      throw CollisionError(fmt::format("duplicate item_id {}", items_[i].item_id));
    }
  }
  // Scored sessions come back from the ledger as read-only sessions.
  for (const LedgerEntry& e : ledger_->entries()) {
    auto s = std::make_shared<Session>();
    s->id = e.session_id;
    const auto it = item_index_.find(e.item_id);
    s->item = it == item_index_.end() ? nullptr : &items_[it->second];
    s->seed = e.seed;
    s->status = SessionStatus::kScored;
    s->scored = e;
    for (const SlotRecord& r : e.slots) {
      Slot slot;
      slot.label = r.label;
      slot.binding = r.binding;
      slot.turns = r.turns;
      slot.guess = r.guess;
      slot.iou = r.iou;
      slot.status = r.guess ? SlotStatus::kGuessed : SlotStatus::kFailed;
      slot.asked = static_cast<int>(std::count_if(r.turns.begin(), r.turns.end(), [](const Turn& t) {
        return t.speaker == Role::kQuestioner;
      }));
      s->slots.push_back(std::move(slot));
    }
    sessions_[s->id] = s;
  }
}

const BenchEntry& HriService::item(const std::string& item_id) const {
  const auto it = item_index_.find(item_id);
  if (it == item_index_.end()) throw NotFoundError(fmt::format("unknown item {}", item_id));
  return items_[it->second];
}

std::shared_ptr<HriService::Session> HriService::find(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError(fmt::format("unknown session {}", session_id));
  return it->second;
}

void HriService::advance(const Session& session, Slot& slot) const {
  const Scene& scene = session.item->scene;
  const int max_turns = std::max(0, config_.max_turns);
  try {
    bool stop = slot.asked >= max_turns;
    if (!stop) {
      stop = slot.guesser->decide_stop(observe_as_guesser(scene, slot.turns, slot.asked, max_turns, slot.seed,
                                                          PromptRegistry::kStopping)).stop;
    }
    if (!stop) {
      std::string q = slot.questioner->ask(observe_as_questioner(scene, slot.turns, slot.asked, max_turns, slot.seed));
      if (blank(q)) throw MalformedResponseError("questioner returned empty text");
      slot.turns.push_back({Role::kQuestioner, std::move(q), static_cast<int>(slot.turns.size())});
      slot.status = SlotStatus::kAwaitingAnswer;
      return;
    }
    const GuessResult g = slot.guesser->guess(
        observe_as_guesser(scene, slot.turns, slot.asked, max_turns, slot.seed, PromptRegistry::kLocating));
    slot.turns.push_back({Role::kGuesser, box_to_text(g.box), static_cast<int>(slot.turns.size())});
    slot.guess = g.box;
    slot.iou = iou(g.box, scene.at(session.item->target).bbox);
    slot.status = SlotStatus::kGuessed;
  } catch (const PolicyError& e) {
    slot.status = SlotStatus::kFailed;
    slot.error = to_string(e.kind());
  } catch (const DegenerateBeliefError&) {
    slot.status = SlotStatus::kFailed;
    slot.error = "degenerate_belief";
  } catch (const std::exception&) {
    slot.status = SlotStatus::kFailed;
    slot.error = "policy_internal";
  }
}

Json HriService::slot_view(const Session& session, const Slot& slot) const {
  Json j;
  j["label"] = slot.label;
  j["status"] = to_string(slot.status);
  j["questions_asked"] = slot.asked;
  Json turns = Json::array();
  for (const Turn& t : slot.turns) turns.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});
  j["turns"] = std::move(turns);
  if (slot.guess) {
    const auto& b = *slot.guess;
    const std::string item_id = session.item ? session.item->item_id : std::string();
    j["guess"] = {{"box", *slot.guess},
                  {"overlay", fmt::format("/items/{}/render?format=png&boxes={},{},{},{}", item_id, b.x_min(),
                                          b.y_min(), b.x_max(), b.y_max())}};
  } else {
    j["guess"] = nullptr;
  }
  if (!slot.error.empty()) j["error"] = slot.error;
  return j;
}

Json HriService::view_locked(const Session& s) const {
  Json j;
  j["version"] = kWireVersion;
  j["session_id"] = s.id;
  j["item_id"] = s.item ? s.item->item_id : (s.scored ? s.scored->item_id : std::string());
  j["instruction"] = s.item ? s.item->instruction : std::string();
  j["status"] = to_string(s.status);
  j["scoring_enabled"] = s.slots.size() >= 2;
  Json slots = Json::array();
  for (const Slot& slot : s.slots) slots.push_back(slot_view(s, slot));
  j["slots"] = std::move(slots);
  if (s.status == SessionStatus::kScored && s.scored) {
    Json reveal = Json::object();
    for (const SlotRecord& r : s.scored->slots) {
      reveal[r.label] = {{"binding", r.binding},
                         {"iou", r.iou},
                         {"success", r.iou > kSuccessThreshold},
                         {"verdict", to_string(r.verdict)},
                         {"level", r.level}};
    }
    j["reveal"] = std::move(reveal);
    j["order"] = s.scored->order;
    if (s.item) j["target_box"] = s.item->scene.at(s.item->target).bbox;
  }
  return j;
}

Json HriService::create_session(const std::string& item_id, const std::vector<std::string>& bindings,
                                std::uint64_t seed) {
  const BenchEntry& entry = item(item_id);
  if (bindings.empty() || bindings.size() > slot_labels().size()) {
    throw ValidationError(fmt::format("a session takes 1 to 3 bindings, got {}", bindings.size()));
  }
  if (std::set<std::string>(bindings.begin(), bindings.end()).size() != bindings.size()) {
    throw ValidationError("session bindings must be distinct");
  }

  auto session = std::make_shared<Session>();
  session->item = &entry;
  session->seed = seed;
  const auto perm = slot_permutation(bindings.size(), seed);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    Slot slot;
    slot.label = slot_labels()[k];
    slot.binding = bindings[perm[k]];
    slot.questioner = make_questioner(slot.binding, config_.bindings);
    slot.guesser = make_guesser(slot.binding, config_.bindings);
    slot.seed = stable_hash(seed, k);
    slot.turns.push_back({Role::kOracle, entry.instruction, 0});
    session->slots.push_back(std::move(slot));
  }
  for (Slot& slot : session->slots) advance(*session, slot);
  session->refresh_status();

  std::lock_guard lock(mutex_);
  std::size_t next = sessions_.size() + 1;
  while (sessions_.count(fmt::format("s-{:06d}", next))) ++next;
  session->id = fmt::format("s-{:06d}", next);
  sessions_[session->id] = session;
  std::lock_guard session_lock(session->mutex);
  return view_locked(*session);
}

Json HriService::session_view(const std::string& session_id) const {
  const auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return view_locked(*s);
}

Json HriService::post_answer(const std::string& session_id, const std::string& label, const std::string& text) {
  const auto s = find(session_id);
  Slot work;
  std::size_t index = 0;
  {
    std::lock_guard lock(s->mutex);
    const auto it = std::find_if(s->slots.begin(), s->slots.end(), [&](const Slot& x) { return x.label == label; });
    if (it == s->slots.end()) throw NotFoundError(fmt::format("session {} has no slot {}", session_id, label));
    if (s->status != SessionStatus::kActive) {
      throw StateError(fmt::format("session {} is {}, not active", session_id, to_string(s->status)));
    }
    if (it->busy) throw ConflictError(fmt::format("slot {} is already processing an answer", label));
    if (it->status != SlotStatus::kAwaitingAnswer) {
      throw ConflictError(fmt::format("slot {} is not awaiting an answer ({})", label, to_string(it->status)));
    }
    if (blank(text)) throw ValidationError("answer text is empty");
    it->busy = true;
    work = *it;
    index = static_cast<std::size_t>(it - s->slots.begin());
  }

  work.turns.push_back({Role::kOracle, text, static_cast<int>(work.turns.size())});
  ++work.asked;
  advance(*s, work);
  work.busy = false;

  std::lock_guard lock(s->mutex);
  s->slots[index] = std::move(work);
  s->refresh_status();
  Json j = slot_view(*s, s->slots[index]);
  j["version"] = kWireVersion;
  j["session_status"] = to_string(s->status);
  return j;
}

LedgerEntry HriService::submit_scores(const std::string& session_id, const std::map<std::string, Verdict>& verdicts,
                                      const std::string& comment) {
  const auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (s->status == SessionStatus::kScored) throw StateError(fmt::format("session {} is already scored", session_id));
  if (s->status != SessionStatus::kGuessed) {
    throw StateError(fmt::format("session {} still has slots awaiting answers", session_id));
  }
  if (s->slots.size() < 2) throw StateError("scoring is disabled for a single-binding session");

  std::vector<Verdict> ordered(s->slots.size(), Verdict::kNone);
  for (const auto& [label, v] : verdicts) {
    const auto it = std::find_if(s->slots.begin(), s->slots.end(), [&](const Slot& x) { return x.label == label; });
    if (it == s->slots.end()) throw ValidationError(fmt::format("no slot labeled {}", label));
    ordered[static_cast<std::size_t>(it - s->slots.begin())] = v;
  }
  const std::vector<int> levels = derive_order(ordered);

  LedgerEntry e;
  e.session_id = s->id;
  e.item_id = s->item->item_id;
  e.seed = s->seed;
  for (std::size_t i = 0; i < s->slots.size(); ++i) {
    const Slot& slot = s->slots[i];
    e.permutation.push_back(slot.binding);
    e.slots.push_back({slot.label, slot.binding, ordered[i], levels[i], slot.guess, slot.iou, slot.turns});
  }
  e.order = format_order(levels);
  e.comment = comment;
  ledger_->append(e);
  s->scored = e;
  s->status = SessionStatus::kScored;
  return e;
}

Aggregate HriService::aggregate(const std::vector<std::string>& bindings) const {
  return aggregate_scores(ledger_->entries(), bindings);
}

}  // namespace ivg::hri
