#include "ivg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <set>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/external_policy.hpp"
#include "ivg/language.hpp"
#include "ivg/parallel.hpp"
#include "ivg/prompts.hpp"

namespace ivg {

// --- Bindings ---------------------------------------------------------------

namespace {

bool is_url(std::string_view id) { return id.rfind("http://", 0) == 0; }

void require_binding(std::string_view id, std::string_view role) {
  if (id.empty()) throw ValidationError(fmt::format("missing {} binding", role));
  if (!is_known_binding(id)) {
    throw NotFoundError(fmt::format("unknown {} binding '{}'", role, id));
  }
}

}  // namespace

bool is_known_binding(std::string_view id) {
  return id == "reference" || id == "adversarial" || (is_url(id) && id.size() > 7);
}

std::shared_ptr<const QuestionerPolicy> make_questioner(std::string_view id, const BindingOptions& opts) {
  require_binding(id, "questioner");
  if (id == "reference") return std::make_shared<ReferenceQuestioner>(opts.reference);
  if (id == "adversarial") return std::make_shared<ConstantQuestioner>();
  return std::make_shared<ExternalQuestioner>(Endpoint{std::string(id), opts.timeout});
}

std::shared_ptr<const GuesserPolicy> make_guesser(std::string_view id, const BindingOptions& opts) {
  require_binding(id, "guesser");
  if (id == "reference") return std::make_shared<ReferenceGuesser>(opts.reference);
  if (id == "adversarial") return std::make_shared<ConstantGuesser>();
  return std::make_shared<ExternalGuesser>(Endpoint{std::string(id), opts.timeout});
}

std::shared_ptr<const OraclePolicy> make_oracle(std::string_view id, const BindingOptions& opts) {
  require_binding(id, "oracle");
  if (id == "reference") return std::make_shared<ReferenceOracle>(opts.reference);
  if (id == "adversarial") return std::make_shared<ConstantOracle>();
  return std::make_shared<ExternalOracle>(Endpoint{std::string(id), opts.timeout});
}

PolicySet make_policies(const Bindings& b, const BindingOptions& opts) {
  return {make_questioner(b.questioner, opts), make_guesser(b.guesser, opts),
          make_oracle(b.oracle, opts)};
}

// --- Results ----------------------------------------------------------------

std::string_view to_string(BenchTask task) {
  switch (task) {
    case BenchTask::kMtVqg: return "mt-vqg";
    case BenchTask::kMtVqa: return "mt-vqa";
    case BenchTask::kMtVg: return "mt-vg";
    case BenchTask::kIvg: return "ivg";
  }
  return "ivg";
}

std::optional<BenchTask> parse_bench_task(std::string_view text) {
  for (BenchTask t : {BenchTask::kMtVqg, BenchTask::kMtVqa, BenchTask::kMtVg, BenchTask::kIvg}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view to_string(ItemStatus status) {
  switch (status) {
    case ItemStatus::kSuccess: return "success";
    case ItemStatus::kFailure: return "failure";
    case ItemStatus::kSkipped: return "skipped";
  }
  return "failure";
}

std::size_t BenchResult::count(ItemStatus status) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const BenchItem& i) { return i.status == status; }));
}

namespace {

Json binding_json(const std::string& id) { return id.empty() ? Json(nullptr) : Json(id); }

}  // namespace

Json to_json_value(const BenchResult& r) {
  Json j;
  j["version"] = kWireVersion;
  j["task"] = to_string(r.task);
  j["bindings"] = {{"questioner", binding_json(r.bindings.questioner)},
                   {"guesser", binding_json(r.bindings.guesser)},
                   {"oracle", binding_json(r.bindings.oracle)}};
  j["seed"] = r.seed;
  j["counts"] = {{"items", r.items.size()},
                 {"success", r.count(ItemStatus::kSuccess)},
                 {"failure", r.count(ItemStatus::kFailure)},
                 {"skipped", r.count(ItemStatus::kSkipped)}};
  j["report"] = to_json_value(r.report);
  Json items = Json::array();
  for (const BenchItem& item : r.items) {
    Json e;
    e["id"] = item.id;
    e["status"] = to_string(item.status);
    if (!item.reason.empty()) e["reason"] = item.reason;
    e["detail"] = item.detail;
    items.push_back(std::move(e));
  }
  j["items"] = std::move(items);
  return j;
}

std::string format_bench(const BenchResult& r) {
  auto show = [](const std::string& id) { return id.empty() ? std::string("-") : id; };
  std::string out = fmt::format("task {}  questioner={} guesser={} oracle={}  seed={}\n",
                                to_string(r.task), show(r.bindings.questioner),
                                show(r.bindings.guesser), show(r.bindings.oracle), r.seed);
  out += fmt::format("items {}  success {}  failure {}  skipped {}\n", r.items.size(),
                     r.count(ItemStatus::kSuccess), r.count(ItemStatus::kFailure),
                     r.count(ItemStatus::kSkipped));
  out += format_table(r.report);
  return out;
}

SceneIndex index_scenes(const std::vector<Scene>& scenes) {
  SceneIndex index;
  for (const Scene& s : scenes) {
    if (!index.emplace(s.scene_id, s).second) {
      throw CollisionError(fmt::format("duplicate scene id {}", s.scene_id));
    }
  }
  return index;
}

// --- Shared item plumbing ----------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_options(const EvalOptions& opts) {
  if (!(opts.threshold > 0.0 && opts.threshold < 1.0)) {
    throw ValidationError(fmt::format("threshold must be in (0, 1), got {}", opts.threshold));
  }
  if (opts.pool_size < 2) throw ValidationError("pool_size must be at least 2");
  if (opts.max_turns < 0) throw ValidationError("max_turns must be >= 0");
}

void require_records(const std::vector<DatasetRecord>& records, BenchTask task) {
  if (records.empty()) throw ValidationError(fmt::format("{}: dataset is empty", to_string(task)));
}

std::string error_reason(const std::exception& e) {
  if (const auto* p = dynamic_cast<const PolicyError*>(&e)) return to_string(p->kind());
  if (dynamic_cast<const DegenerateBeliefError*>(&e)) return "degenerate_belief";
  if (dynamic_cast<const MalformedBoxError*>(&e)) return "malformed_box";
  if (dynamic_cast<const NotFoundError*>(&e)) return "not_found";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  return "policy_internal";
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

int questions_in(const std::vector<Turn>& turns) {
  return static_cast<int>(std::count_if(turns.begin(), turns.end(),
                                        [](const Turn& t) { return t.speaker == Role::kQuestioner; }));
}

// Raw record id shared by a record and its polished variants.
const std::string& family_of(const DatasetRecord& r) { return r.parent ? *r.parent : r.record_id; }

std::string kind_of_question(std::string_view question) {
  const auto q = parse_question(question, AttrVocab{});
  return q ? std::string(to_string(q->kind)) : std::string("other");
}

}  // namespace

// --- MT-VG ---------------------------------------------------------------------

BenchResult eval_mt_vg(const std::vector<DatasetRecord>& records, const SceneIndex& scenes,
                       const GuesserPolicy& guesser, const EvalOptions& opts) {
  check_options(opts);
  require_records(records, BenchTask::kMtVg);
  const auto start = Clock::now();

  BenchResult result;
  result.task = BenchTask::kMtVg;
  result.bindings.guesser = guesser.id();
  result.seed = opts.seed;
  result.items.resize(records.size());

  parallel_for(records.size(), opts.workers, [&](std::size_t i) {
    const DatasetRecord& r = records[i];
    BenchItem& item = result.items[i];
    item.id = r.record_id;
    item.detail["target_box"] = r.target_box;
    try {
      const auto it = scenes.find(r.scene_ref);
      if (it == scenes.end()) throw NotFoundError(fmt::format("unknown scene {}", r.scene_ref));
      std::vector<Turn> history;
      for (const Turn& t : r.dialogue.turns) {
        if (t.speaker == Role::kGuesser) break;
        history.push_back(t);
      }
      if (history.empty()) throw ValidationError("record has no initial expression");
      const int asked = questions_in(history);
      const GuessResult g = guesser.guess(observe_as_guesser(
          it->second, std::move(history), asked, std::max(opts.max_turns, asked),
          r.provenance.episode_seed, PromptRegistry::kLocating));
      const double score = iou(g.box, r.target_box);
      item.detail["guessed_box"] = g.box;
      item.detail["iou"] = score;
      item.status = score > opts.threshold ? ItemStatus::kSuccess : ItemStatus::kFailure;
      if (item.status == ItemStatus::kFailure) item.reason = "below_threshold";
    } catch (const std::exception& e) {
      item.status = ItemStatus::kFailure;
      item.reason = error_reason(e);
      item.detail["message"] = e.what();
    }
  });

  const std::size_t hits = result.count(ItemStatus::kSuccess);
  result.report.sr = static_cast<double>(hits) / static_cast<double>(records.size());
  result.report.samples = records.size();
  result.report.corpus = opts.corpus;
  result.wall_seconds = seconds_since(start);
  return result;
}

// --- Multi-choice pools ----------------------------------------------------------

std::vector<std::string> token_multiset(std::string_view text) {
  std::vector<std::string> tokens = metric_tokens(text);
  for (std::string& t : tokens) {
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  std::sort(tokens.begin(), tokens.end());
  return tokens;
}

std::optional<ChoicePool> build_choice_pool(const std::string& truth,
                                            const std::vector<std::string>& same_kind,
                                            const std::vector<std::string>& other_kinds,
                                            std::size_t pool_size, Rng& rng) {
  if (pool_size < 1) throw ValidationError("pool_size must be positive");
  std::set<std::vector<std::string>> seen{token_multiset(truth)};
  std::vector<std::string> distractors;

  auto draw_from = [&](const std::vector<std::string>& source) {
    std::vector<std::string> shuffled = source;
    rng.shuffle(shuffled);
    for (std::string& text : shuffled) {
      if (distractors.size() + 1 >= pool_size) return;
      if (blank(text)) continue;
      if (seen.insert(token_multiset(text)).second) distractors.push_back(std::move(text));
    }
  };
  draw_from(same_kind);
  draw_from(other_kinds);
  if (distractors.size() + 1 < pool_size) return std::nullopt;

  ChoicePool pool;
  pool.truth_index = rng.below(pool_size);
  pool.candidates = std::move(distractors);
  pool.candidates.insert(pool.candidates.begin() + static_cast<std::ptrdiff_t>(pool.truth_index), truth);
  check_choice_pool(pool);
  return pool;
}

void check_choice_pool(const ChoicePool& pool) {
  if (pool.truth_index >= pool.candidates.size()) {
    throw ValidationError("choice pool truth index out of range");
  }
  const auto truth = token_multiset(pool.candidates[pool.truth_index]);
  std::size_t copies = 0;
  for (const std::string& c : pool.candidates) copies += token_multiset(c) == truth ? 1 : 0;
  if (copies != 1) {
    throw ValidationError(fmt::format("choice pool holds the ground truth {} times", copies));
  }
}

// --- MT-VQA / MT-VQG -----------------------------------------------------------------

namespace {

// One question turn of one record.
struct TextItem {
  std::size_t record = 0;
  std::size_t turn = 0;  // index of the question turn
  std::string id;
  std::string kind;
  std::string truth;
  std::string family;
};

enum class TextTask { kAnswer, kQuestion };

std::vector<TextItem> collect_text_items(const std::vector<DatasetRecord>& records, TextTask task) {
  std::vector<TextItem> items;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& turns = records[r].dialogue.turns;
    for (std::size_t k = 1; k < turns.size(); ++k) {
      if (turns[k].speaker != Role::kQuestioner) continue;
      TextItem item;
      item.record = r;
      item.turn = k;
      item.id = fmt::format("{}#{}", records[r].record_id, k);
      item.kind = kind_of_question(turns[k].text);
      item.family = family_of(records[r]);
      if (task == TextTask::kQuestion) {
        item.truth = turns[k].text;
      } else if (k + 1 < turns.size() && turns[k + 1].speaker == Role::kOracle) {
        item.truth = turns[k + 1].text;
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

// Distinct texts per question kind with the record families they came from.
struct TextBank {
  struct Entry {
    std::string text;
    std::set<std::string> families;
  };
  std::map<std::string, std::map<std::vector<std::string>, Entry>> by_kind;

  void add(const TextItem& item) {
    if (blank(item.truth)) return;
    auto& entry = by_kind[item.kind][token_multiset(item.truth)];
    if (entry.text.empty()) entry.text = item.truth;
    entry.families.insert(item.family);
  }

  // Texts usable as distractors for `item`: seen in some other record family.
  void distractors_for(const TextItem& item, std::vector<std::string>& same,
                       std::vector<std::string>& other) const {
    for (const auto& [kind, entries] : by_kind) {
      auto& out = kind == item.kind ? same : other;
      for (const auto& [key, entry] : entries) {
        const bool foreign = entry.families.size() > 1 || !entry.families.count(item.family);
        if (foreign) out.push_back(entry.text);
      }
    }
  }
};

struct TextOutcome {
  std::optional<std::string> prediction;  // unset: no usable ground truth
  std::optional<RankedChoice> choice;
};

BenchResult eval_text_task(const std::vector<DatasetRecord>& records, const SceneIndex& scenes,
                           TextTask task, const std::function<std::string(const TextItem&, const Scene&,
                                                                          const DatasetRecord&)>& call,
                           const std::vector<std::string>& supplement, const EvalOptions& opts) {
  const auto start = Clock::now();
  const std::vector<TextItem> items = collect_text_items(records, task);
  TextBank bank;
  for (const TextItem& item : items) bank.add(item);

  BenchResult result;
  result.seed = opts.seed;
  result.items.resize(items.size());
  std::vector<TextOutcome> outcomes(items.size());

  parallel_for(items.size(), opts.workers, [&](std::size_t i) {
    const TextItem& ti = items[i];
    const DatasetRecord& record = records[ti.record];
    BenchItem& item = result.items[i];
    TextOutcome& out = outcomes[i];
    item.id = ti.id;
    item.detail["kind"] = ti.kind;
    item.detail["truth"] = ti.truth;

    if (blank(record.dialogue.turns[ti.turn].text)) {
      item.status = ItemStatus::kFailure;
      item.reason = "validation";
      item.detail["message"] = "empty question in record";
      return;
    }
    if (blank(ti.truth)) {
      item.status = ItemStatus::kFailure;
      item.reason = "validation";
      item.detail["message"] = "question has no recorded answer";
      return;
    }

    std::string prediction;
    try {
      const auto it = scenes.find(record.scene_ref);
      if (it == scenes.end()) throw NotFoundError(fmt::format("unknown scene {}", record.scene_ref));
      prediction = call(ti, it->second, record);
      if (blank(prediction)) throw MalformedResponseError("policy returned empty text");
      item.status = ItemStatus::kSuccess;
    } catch (const std::exception& e) {
      prediction.clear();
      item.status = ItemStatus::kFailure;
      item.reason = error_reason(e);
      item.detail["message"] = e.what();
    }
    item.detail["prediction"] = prediction;
    out.prediction = prediction;

    std::vector<std::string> same, other;
    bank.distractors_for(ti, same, other);
    other.insert(other.end(), supplement.begin(), supplement.end());
    Rng rng(stable_hash(opts.seed, ti.id));
    const auto pool = build_choice_pool(ti.truth, same, other, opts.pool_size, rng);
    if (!pool) {
      item.detail["pool"] = nullptr;
      item.detail["pool_note"] =
          fmt::format("fewer than {} distinct distractors", opts.pool_size - 1);
      return;
    }
    RankedChoice choice{pool->candidates, pool->truth_index,
                        rank_candidates(prediction, pool->candidates)};
    item.detail["truth_rank"] = choice.truth_rank();
    out.choice = std::move(choice);
  });

  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> references;
  std::vector<RankedChoice> choices;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!outcomes[i].prediction) continue;
    candidates.push_back(metric_tokens(*outcomes[i].prediction));
    references.push_back({metric_tokens(items[i].truth)});
    if (outcomes[i].choice) choices.push_back(std::move(*outcomes[i].choice));
  }

  MetricReport& rep = result.report;
  rep.samples = candidates.size();
  rep.corpus = opts.corpus;
  if (!candidates.empty()) {
    rep.b1 = corpus_bleu(candidates, references, 1);
    rep.b4 = corpus_bleu(candidates, references, 4);
    double rouge = 0.0, meteor = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      rouge += rouge_l(candidates[i], references[i]);
      meteor += meteor_simplified(candidates[i], references[i]);
    }
    rep.rouge = rouge / static_cast<double>(candidates.size());
    rep.meteor = meteor / static_cast<double>(candidates.size());
    rep.cider = cider_d(candidates, references);
  }
  if (!choices.empty()) {
    rep.r1 = recall_at_k(choices, 1);
    rep.r5 = recall_at_k(choices, 5);
    rep.rank = mean_rank(choices);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

}  // namespace

BenchResult eval_mt_vqa(const std::vector<DatasetRecord>& records, const SceneIndex& scenes,
                        const OraclePolicy& oracle, const EvalOptions& opts) {
  check_options(opts);
  require_records(records, BenchTask::kMtVqa);
  auto call = [&](const TextItem& ti, const Scene& scene, const DatasetRecord& r) {
    std::vector<Turn> history(r.dialogue.turns.begin(),
                              r.dialogue.turns.begin() + static_cast<std::ptrdiff_t>(ti.turn + 1));
    const int asked = questions_in(history) - 1;
    return oracle.answer(observe_as_oracle(scene, r.target, std::move(history), asked,
                                           std::max(opts.max_turns, asked + 1),
                                           r.provenance.episode_seed));
  };
  BenchResult result = eval_text_task(records, scenes, TextTask::kAnswer, call, {}, opts);
  result.task = BenchTask::kMtVqa;
  result.bindings.oracle = oracle.id();
  return result;
}

BenchResult eval_mt_vqg(const std::vector<DatasetRecord>& records, const SceneIndex& scenes,
                        const QuestionerPolicy& questioner, const EvalOptions& opts) {
  check_options(opts);
  require_records(records, BenchTask::kMtVqg);
  auto call = [&](const TextItem& ti, const Scene& scene, const DatasetRecord& r) {
    std::vector<Turn> history(r.dialogue.turns.begin(),
                              r.dialogue.turns.begin() + static_cast<std::ptrdiff_t>(ti.turn));
    const int asked = questions_in(history);
    return questioner.ask(observe_as_questioner(scene, std::move(history), asked,
                                                std::max(opts.max_turns, asked + 1),
                                                r.provenance.episode_seed));
  };
  // Transcripts reuse a handful of question forms, so the template
  // questions of the dataset's scenes widen the distractor bank.
  std::set<std::string> templates;
  for (const DatasetRecord& r : records) {
    const auto it = scenes.find(r.scene_ref);
    if (it == scenes.end()) continue;
    for (const Question& q : template_questions(it->second)) templates.insert(q.surface());
  }
  BenchResult result = eval_text_task(records, scenes, TextTask::kQuestion, call,
                                      {templates.begin(), templates.end()}, opts);
  result.task = BenchTask::kMtVqg;
  result.bindings.questioner = questioner.id();
  return result;
}

// --- IVG ------------------------------------------------------------------------

BenchResult eval_ivg(const std::vector<Scene>& scenes, const PolicySet& policies, std::size_t n,
                     const EvalOptions& opts) {
  check_options(opts);
  if (!policies.questioner) throw ValidationError("missing questioner binding");
  if (!policies.guesser) throw ValidationError("missing guesser binding");
  if (!policies.oracle) throw ValidationError("missing oracle binding");
  if (scenes.empty()) throw ValidationError("ivg: scene source is empty");
  if (n == 0) throw ValidationError("ivg: n must be positive");
  const auto start = Clock::now();

  BenchResult result;
  result.task = BenchTask::kIvg;
  result.bindings = {policies.questioner->id(), policies.guesser->id(), policies.oracle->id()};
  result.seed = opts.seed;
  result.items.resize(n);

  parallel_for(n, opts.workers, [&](std::size_t i) {
    const EpisodePlan plan = plan_episode(scenes, opts.seed, i);
    const Scene& scene = scenes[plan.scene_index];
    BenchItem& item = result.items[i];
    item.id = fmt::format("ep-{:06d}", i);
    item.detail["scene_ref"] = scene.scene_id;
    item.detail["target"] = plan.target;
    const EpisodeOutcome out = run_episode(scene, plan.target, *policies.questioner, *policies.guesser,
                                           *policies.oracle, {opts.max_turns, plan.seed});
    if (const auto* f = std::get_if<EpisodeFailure>(&out)) {
      item.status = ItemStatus::kFailure;
      item.reason = f->reason;
      item.detail["message"] = f->message;
      return;
    }
    const auto& ep = std::get<EpisodeRecord>(out);
    item.detail["iou"] = ep.iou;
    item.detail["turn_count"] = ep.turn_count;
    item.detail["stopped_reason"] = to_string(ep.stopped_reason);
    item.status = ep.iou > opts.threshold ? ItemStatus::kSuccess : ItemStatus::kFailure;
    if (item.status == ItemStatus::kFailure) item.reason = "below_threshold";
  });

  result.report.sr = static_cast<double>(result.count(ItemStatus::kSuccess)) / static_cast<double>(n);
  result.report.samples = n;
  result.report.corpus = opts.corpus;
  result.wall_seconds = seconds_since(start);
  return result;
}

std::vector<CrossValidationRow> cross_validate(const std::vector<Scene>& scenes, std::size_t n,
                                               const EvalOptions& opts,
                                               const BindingOptions& binding_opts) {
  const std::vector<Bindings> rows = {
      {"reference", "reference", "reference"},
      {"adversarial", "reference", "reference"},
      {"reference", "adversarial", "reference"},
      {"reference", "reference", "adversarial"},
  };
  std::vector<CrossValidationRow> out;
  for (const Bindings& b : rows) {
    const BenchResult r = eval_ivg(scenes, make_policies(b, binding_opts), n, opts);
    out.push_back({b, *r.report.sr});
  }
  return out;
}

}  // namespace ivg
