#include "ivg/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ivg/bench.hpp"
#include "ivg/config.hpp"
#include "ivg/error.hpp"
#include "ivg/evolve.hpp"
#include "ivg/hri.hpp"
#include "ivg/hri_server.hpp"

namespace ivg {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

struct BindingFlags {
  std::optional<std::string> questioner, guesser, oracle;
};

void add_common(CLI::App* sub, Common& c, bool out_required = false) {
  sub->add_option("--seed", c.seed, "Master seed; all randomness derives from it");
  sub->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  auto* out = sub->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

void add_bindings(CLI::App* sub, BindingFlags& b) {
  sub->add_option("--questioner", b.questioner, "Questioner binding: reference, adversarial or URL");
  sub->add_option("--guesser", b.guesser, "Guesser binding");
  sub->add_option("--oracle", b.oracle, "Oracle binding");
}

Config load(const Common& c) { return c.config.empty() ? Config{} : load_config(c.config); }

Bindings bindings_of(const Config& cfg, const BindingFlags& f) {
  return {f.questioner.value_or(cfg.policies.questioner), f.guesser.value_or(cfg.policies.guesser),
          f.oracle.value_or(cfg.policies.oracle)};
}

BindingOptions binding_options(const Config& cfg) {
  BindingOptions o;
  o.reference.noise = cfg.policies.noise;
  o.reference.ambiguity_level = cfg.policies.ambiguity_level;
  o.timeout = std::chrono::milliseconds(cfg.policies.timeout_ms);
  return o;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StateError(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw StateError(fmt::format("write to {} failed", path.string()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("{} not found", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

// Records from JSONL files or round manifests (their records file).
std::vector<DatasetRecord> load_records(const std::vector<std::string>& inputs) {
  std::vector<DatasetRecord> out;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    std::vector<DatasetRecord> part;
    if (p.extension() == ".json") {
      const RoundManifest m = read_manifest(p);
      part = read_records(dir_of(p) / m.records_file);
    } else {
      part = read_records(p);
    }
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

InputRef parse_input(const std::string& spec) {
  const auto colon = spec.rfind(':');
  InputRef ref;
  if (colon == std::string::npos || colon == 0) {
    ref.ref = spec;
    ref.kind = "generated";
  } else {
    ref.ref = spec.substr(0, colon);
    ref.kind = spec.substr(colon + 1);
  }
  if (ref.kind != "generated" && ref.kind != "seed" && ref.kind != "auxiliary") {
    throw ValidationError(fmt::format("input kind '{}' must be generated, seed or auxiliary", ref.kind));
  }
  ref.weight = default_weight(ref.kind);
  return ref;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// --- gen-scenes ---------------------------------------------------------------

struct GenScenes {
  Common common;
  std::optional<int> n, n_objects, ambiguity_k;
  std::optional<double> max_overlap;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("gen-scenes", "Generate a seeded scene source (JSONL)");
    add_common(sub, common, true);
    sub->add_option("--n", n, "Number of scenes");
    sub->add_option("--n-objects", n_objects, "Objects per scene");
    sub->add_option("--max-overlap", max_overlap, "Pairwise IoU bound");
    sub->add_option("--ambiguity-k", ambiguity_k, "Inject k indistinguishable clones per scene (0 = off)");
  }

  int run(std::ostream& out) const {
    Config cfg = load(common);
    if (n) cfg.scenes.n = *n;
    if (n_objects) cfg.scenes.n_objects = *n_objects;
    if (max_overlap) cfg.scenes.max_overlap = *max_overlap;
    if (ambiguity_k) cfg.scenes.ambiguity_k = *ambiguity_k;
    validate_config(cfg);
    const SceneConfig scfg = scene_config(cfg);

    std::ostringstream buf;
    std::vector<Scene> scenes;
    for (int i = 0; i < cfg.scenes.n; ++i) {
      const std::uint64_t s = stable_hash(common.seed, static_cast<std::uint64_t>(i));
      Scene scene = generate_scene(s, scfg);
      if (cfg.scenes.ambiguity_k > 0) {
        scene = inject_ambiguity(scene, cfg.scenes.ambiguity_k, stable_hash(s, std::string_view("ambiguity")),
                                 cfg.scenes.max_overlap);
      }
      scenes.push_back(std::move(scene));
    }
    write_scenes_jsonl(buf, scenes);
    write_text(common.out, buf.str());
    out << fmt::format("wrote {} scenes to {}\n", scenes.size(), common.out);
    return kExitOk;
  }
};

// --- selfplay -----------------------------------------------------------------

struct SelfPlay {
  Common common;
  BindingFlags bindings;
  std::string scenes;
  std::optional<int> episodes, round, workers, max_turns;
  std::vector<std::string> inputs;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("selfplay", "Run one self-play round and persist kept records");
    add_common(sub, common, true);
    add_bindings(sub, bindings);
    sub->add_option("--scenes", scenes, "Scene source (JSONL)")->required();
    sub->add_option("--episodes", episodes, "Episodes to run");
    sub->add_option("--round", round, "Round number");
    sub->add_option("--workers", workers, "Worker threads");
    sub->add_option("--max-turns", max_turns, "Question budget per episode");
    sub->add_option("--input", inputs, "Training input PATH[:generated|seed|auxiliary], recorded in the manifest");
  }

  int run(std::ostream& out) const {
    Config cfg = load(common);
    if (episodes) cfg.evolve.episodes = *episodes;
    if (round) cfg.evolve.round = *round;
    if (workers) cfg.evolve.workers = *workers;
    if (max_turns) cfg.policies.max_turns = *max_turns;
    validate_config(cfg);
    const PolicySet policies = make_policies(bindings_of(cfg, bindings), binding_options(cfg));
    const auto source = load_scenes(scenes);

    RoundConfig rc;
    rc.round = cfg.evolve.round;
    rc.n_episodes = static_cast<std::size_t>(cfg.evolve.episodes);
    rc.master_seed = common.seed;
    rc.workers = cfg.evolve.workers;
    rc.max_turns = cfg.policies.max_turns;
    for (const auto& spec : inputs) rc.inputs.push_back(parse_input(spec));

    RoundResult result = generate_round(source, policies, rc);
    const fs::path dir(common.out);
    fs::create_directories(dir);
    write_records(dir / result.manifest.records_file, result.records);
    write_manifest(dir / manifest_file_name(rc.round), result.manifest);
    const auto& c = result.manifest.counts;
    out << fmt::format("round {}: run {} kept {} dropped {} errored {}\n", rc.round, c.run, c.kept, c.dropped,
                       c.errored);
    out << fmt::format("wrote {}\n", (dir / manifest_file_name(rc.round)).string());
    return kExitOk;
  }
};

// --- polish -------------------------------------------------------------------

struct Polish {
  Common common;
  std::string manifest, scenes;
  std::optional<std::string> polisher;
  std::optional<int> workers, retries;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("polish", "Add enriched and simplified variants to a round");
    add_common(sub, common);
    sub->add_option("--manifest", manifest, "Round manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--scenes", scenes, "Scene source (JSONL)")->required();
    sub->add_option("--polisher", polisher, "mock or the URL of a /polish endpoint");
    sub->add_option("--workers", workers, "Worker threads");
    sub->add_option("--retries", retries, "Attempts per record for transport failures");
  }

  int run(std::ostream& out) const {
    Config cfg = load(common);
    if (polisher) cfg.evolve.polisher = *polisher;
    if (workers) cfg.evolve.workers = *workers;
    if (retries) cfg.evolve.polish_retries = *retries;
    validate_config(cfg);

    RoundManifest m = read_manifest(manifest);
    std::vector<DatasetRecord> records = read_records(dir_of(manifest) / m.records_file);
    const SceneIndex index = index_scenes(load_scenes(scenes));

    std::unique_ptr<Polisher> impl;
    if (cfg.evolve.polisher == "mock") {
      impl = std::make_unique<MockPolisher>();
    } else if (cfg.evolve.polisher.rfind("http://", 0) == 0) {
      impl = std::make_unique<HttpPolisher>(
          Endpoint{cfg.evolve.polisher, std::chrono::milliseconds(cfg.policies.timeout_ms)},
          load_polish_prompts(cfg.evolve.polish_prompts));
    } else {
      throw ValidationError(fmt::format("polisher '{}' must be mock or an http:// URL", cfg.evolve.polisher));
    }

    PolishConfig pc;
    pc.retries = cfg.evolve.polish_retries;
    polish_round(records, m, index, *impl, common.seed, pc, cfg.evolve.workers);

    const fs::path dir = common.out.empty() ? dir_of(manifest) : fs::path(common.out);
    fs::create_directories(dir);
    write_records(dir / m.records_file, records);
    write_manifest(dir / manifest_file_name(m.round), m);
    out << fmt::format("round {}: polished {} unpolished {}\n", m.round, m.polish->polished, m.polish->unpolished);
    return kExitOk;
  }
};

// --- select-variants -----------------------------------------------------------

struct SelectVariants {
  Common common;
  std::string manifest;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("select-variants", "Pick the training variant per record and seal the round");
    add_common(sub, common);
    sub->add_option("--manifest", manifest, "Round manifest")->required()->check(CLI::ExistingFile);
  }

  int run(std::ostream& out) const {
    load(common);
    RoundManifest m = read_manifest(manifest);
    const auto records = read_records(dir_of(manifest) / m.records_file);
    seal_round(m, records, common.seed);
    const fs::path dir = common.out.empty() ? dir_of(manifest) : fs::path(common.out);
    fs::create_directories(dir);
    if (fs::absolute(dir) != fs::absolute(dir_of(manifest))) write_records(dir / m.records_file, records);
    write_manifest(dir / manifest_file_name(m.round), m);
    std::size_t enriched = 0, simplified = 0, raw = 0;
    for (const auto& [id, v] : m.assignment) {
      enriched += v == Variant::kEnriched;
      simplified += v == Variant::kSimplified;
      raw += v == Variant::kRaw;
    }
    out << fmt::format("round {} sealed: enriched {} simplified {} raw {}\n", m.round, enriched, simplified, raw);
    return kExitOk;
  }
};

// --- merge ------------------------------------------------------------------------

struct Merge {
  Common common;
  std::vector<std::string> manifests;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("merge", "Merge sealed rounds into one record index");
    add_common(sub, common, true);
    sub->add_option("--manifests", manifests, "Sealed round manifests")->required()->check(CLI::ExistingFile);
  }

  int run(std::ostream& out) const {
    load(common);
    const std::vector<fs::path> paths(manifests.begin(), manifests.end());
    const MergedIndex index = merge_rounds(paths);
    write_text(common.out, Json(index).dump(2) + "\n");
    out << fmt::format("merged {} rounds, {} records\n", index.rounds.size(), index.entries.size());
    return kExitOk;
  }
};

// --- eval ---------------------------------------------------------------------------

struct Eval {
  Common common;
  BindingFlags bindings;
  std::string task;
  std::vector<std::string> records;
  std::string scenes;
  std::string variant = "all";
  std::optional<int> n, workers, pool_size, max_turns;
  std::optional<double> threshold;
  bool cross_validate = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("eval", "Run a benchmark task");
    add_common(sub, common);
    add_bindings(sub, bindings);
    sub->add_option("task", task, "mt-vg, mt-vqa, mt-vqg or ivg")
        ->required()
        ->check(CLI::IsMember({"mt-vg", "mt-vqa", "mt-vqg", "ivg"}));
    sub->add_option("--records", records, "Records JSONL files or round manifests (MT tasks)");
    sub->add_option("--scenes", scenes, "Scene source (JSONL)")->required();
    sub->add_option("--variant", variant, "raw, enriched, simplified or all")
        ->check(CLI::IsMember({"raw", "enriched", "simplified", "all"}));
    sub->add_option("--n", n, "Episodes (ivg)");
    sub->add_option("--workers", workers, "Worker threads");
    sub->add_option("--pool-size", pool_size, "Multi-choice pool size");
    sub->add_option("--threshold", threshold, "Success IoU threshold (strict)");
    sub->add_option("--max-turns", max_turns, "Question budget");
    sub->add_flag("--cross-validate", cross_validate, "ivg: also run the adversarial swap rows");
  }

  int run(std::ostream& out) const {
    Config cfg = load(common);
    if (n) cfg.eval.n = *n;
    if (workers) cfg.eval.workers = *workers;
    if (pool_size) cfg.eval.pool_size = *pool_size;
    if (threshold) cfg.eval.threshold = *threshold;
    if (max_turns) cfg.policies.max_turns = *max_turns;
    validate_config(cfg);

    EvalOptions opts;
    opts.seed = common.seed;
    opts.workers = cfg.eval.workers;
    opts.pool_size = static_cast<std::size_t>(cfg.eval.pool_size);
    opts.threshold = cfg.eval.threshold;
    opts.max_turns = cfg.policies.max_turns;

    const Bindings b = bindings_of(cfg, bindings);
    const BindingOptions bopts = binding_options(cfg);
    const auto task_id = *parse_bench_task(task);
    const auto source = load_scenes(scenes);
    const auto started = std::chrono::steady_clock::now();

    BenchResult result;
    std::vector<CrossValidationRow> rows;
    if (task_id == BenchTask::kIvg) {
      const PolicySet policies = make_policies(b, bopts);
      opts.corpus = scenes;
      result = eval_ivg(source, policies, static_cast<std::size_t>(cfg.eval.n), opts);
      if (cross_validate) rows = cross_validate_rows(source, cfg, opts, bopts);
    } else {
      if (records.empty()) throw ValidationError(fmt::format("{} needs --records", task));
      std::vector<DatasetRecord> data = load_records(records);
      if (variant != "all") {
        const Variant want = *parse_variant(variant);
        std::erase_if(data, [&](const DatasetRecord& r) { return r.variant != want; });
      }
      opts.corpus = join(records, ",");
      const SceneIndex index = index_scenes(source);
      switch (task_id) {
        case BenchTask::kMtVg: result = eval_mt_vg(data, index, *make_guesser(b.guesser, bopts), opts); break;
        case BenchTask::kMtVqa: result = eval_mt_vqa(data, index, *make_oracle(b.oracle, bopts), opts); break;
        default: result = eval_mt_vqg(data, index, *make_questioner(b.questioner, bopts), opts); break;
      }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    Json j = to_json_value(result);
    if (!rows.empty()) {
      Json cv = Json::array();
      for (const auto& r : rows) {
        cv.push_back({{"questioner", r.bindings.questioner},
                      {"guesser", r.bindings.guesser},
                      {"oracle", r.bindings.oracle},
                      {"sr", r.sr}});
      }
      j["cross_validation"] = std::move(cv);
    }
    if (!common.out.empty()) write_text(common.out, j.dump(2) + "\n");

    out << format_bench(result);
    for (const auto& r : rows) {
      out << fmt::format("cross-validation questioner={} guesser={} oracle={} SR {:.4f}\n", r.bindings.questioner,
                         r.bindings.guesser, r.bindings.oracle, r.sr);
    }
    out << fmt::format("wall {:.2f} s\n", wall);
    return kExitOk;
  }

  static std::vector<CrossValidationRow> cross_validate_rows(const std::vector<Scene>& source, const Config& cfg,
                                                             const EvalOptions& opts, const BindingOptions& bopts) {
    return ivg::cross_validate(source, static_cast<std::size_t>(cfg.eval.n), opts, bopts);
  }
};

// --- report ----------------------------------------------------------------------------

struct Report {
  Common common;
  std::vector<std::string> inputs;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("report", "Tabulate bench result files, one row each");
    add_common(sub, common);
    sub->add_option("--in", inputs, "Bench result JSON files")->required()->check(CLI::ExistingFile);
  }

  int run(std::ostream& out) const {
    load(common);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"task", "questioner", "guesser", "oracle", "n"};
    for (const auto& k : MetricReport::keys()) header.push_back(k);
    rows.push_back(header);
    for (const std::string& path : inputs) {
      const Json j = read_json_file(path);
      if (!j.contains("report") || !j.contains("bindings")) {
        throw ValidationError(fmt::format("{} is not a bench result", path));
      }
      const MetricReport rep = report_from_json(j["report"]);
      auto id = [&](const char* role) {
        const Json& v = j["bindings"][role];
        return v.is_null() ? std::string("-") : v.get<std::string>();
      };
      std::vector<std::string> row = {j.value("task", std::string("?")), id("questioner"), id("guesser"),
                                      id("oracle"), std::to_string(rep.samples)};
      for (const auto& k : MetricReport::keys()) {
        const auto v = rep.get(k);
        row.push_back(v ? fmt::format("{:.4f}", *v) : "-");
      }
      rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::string table;
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        const bool last = c + 1 == r.size();
        table += last ? r[c] + "\n" : fmt::format("{:<{}}  ", r[c], width[c]);
      }
    }
    table += "SPICE: not computed\n";
    if (!common.out.empty()) write_text(common.out, table);
    out << table;
    return kExitOk;
  }
};

// --- serve --------------------------------------------------------------------------------

struct Serve {
  Common common;
  std::optional<std::string> items, host, ledger, static_dir;
  std::optional<int> port, max_turns;
  std::string scenes;
  int n_items = 150;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("serve", "Run the human-in-the-loop session service");
    add_common(sub, common);
    sub->add_option("--items", items, "Bench items (JSONL)");
    sub->add_option("--scenes", scenes, "Build items from this scene source when --items is absent");
    sub->add_option("--n-items", n_items, "Items to build from --scenes");
    sub->add_option("--host", host, "Bind address");
    sub->add_option("--port", port, "Port (0 picks a free one)");
    sub->add_option("--ledger", ledger, "Append-only score ledger (JSONL)");
    sub->add_option("--static-dir", static_dir, "Web client bundle to serve under /");
    sub->add_option("--max-turns", max_turns, "Question budget per slot");
  }

  int run(std::ostream& out) const {
    Config cfg = load(common);
    if (items) cfg.serve.items = *items;
    if (host) cfg.serve.host = *host;
    if (port) cfg.serve.port = *port;
    if (ledger) cfg.serve.ledger = *ledger;
    if (static_dir) cfg.serve.static_dir = *static_dir;
    if (max_turns) cfg.policies.max_turns = *max_turns;
    validate_config(cfg);

    std::vector<hri::BenchEntry> entries;
    if (!cfg.serve.items.empty()) {
      entries = hri::read_bench_items(cfg.serve.items);
    } else if (!scenes.empty()) {
      if (n_items < 1) throw ValidationError("--n-items must be positive");
      entries = hri::make_bench_items(load_scenes(scenes), static_cast<std::size_t>(n_items), common.seed);
    } else {
      throw ValidationError("serve needs --items or --scenes");
    }
    if (!common.out.empty()) hri::write_bench_items(common.out, entries);

    hri::ServiceConfig sc;
    sc.max_turns = cfg.policies.max_turns;
    sc.bindings = binding_options(cfg);
    auto ledger_store = std::make_shared<hri::Ledger>(cfg.serve.ledger);
    auto service = std::make_shared<hri::HriService>(std::move(entries), sc, ledger_store);
    hri::HriServer server(service, cfg.serve.static_dir);
    const int bound = server.bind(cfg.serve.host, cfg.serve.port);
    out << fmt::format("serving {} items on http://{}:{}\n", service->items().size(), cfg.serve.host, bound)
        << std::flush;
    server.listen();
    return kExitOk;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interactive visual grounding toolkit: scenes, self-play, polishing, benchmarks, HRI service"};
  app.name("ivg");
  app.require_subcommand(1);

  GenScenes gen;
  SelfPlay selfplay;
  Polish polish;
  SelectVariants select;
  Merge merge;
  Eval eval;
  Report report;
  Serve serve;
  gen.add(app);
  selfplay.add(app);
  polish.add(app);
  select.add(app);
  merge.add(app);
  eval.add(app);
  report.add(app);
  serve.add(app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    err << "error: " << e.what() << "\n\n" << target->help();
    return kExitValidation;
  }

  try {
    if (app.got_subcommand("gen-scenes")) return gen.run(out);
    if (app.got_subcommand("selfplay")) return selfplay.run(out);
    if (app.got_subcommand("polish")) return polish.run(out);
    if (app.got_subcommand("select-variants")) return select.run(out);
    if (app.got_subcommand("merge")) return merge.run(out);
    if (app.got_subcommand("eval")) return eval.run(out);
    if (app.got_subcommand("report")) return report.run(out);
    if (app.got_subcommand("serve")) return serve.run(out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace ivg
