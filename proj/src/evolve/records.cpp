#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/evolve.hpp"
#include "ivg/tokenizer.hpp"

namespace ivg {

namespace {

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError(fmt::format("cannot open {} for writing", path.string()));
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("cannot open {}", path.string()));
  return in;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kRaw: return "raw";
    case Variant::kEnriched: return "enriched";
    case Variant::kSimplified: return "simplified";
  }
  return "raw";
}

std::optional<Variant> parse_variant(std::string_view text) {
  if (text == "raw") return Variant::kRaw;
  if (text == "enriched") return Variant::kEnriched;
  if (text == "simplified") return Variant::kSimplified;
  return std::nullopt;
}

std::string record_id_for(int round, std::size_t episode) {
  return fmt::format("r{}-{:06d}", round, episode);
}

std::string variant_id(const std::string& raw_id, Variant v) {
  if (v == Variant::kRaw) return raw_id;
  return fmt::format("{}:{}", raw_id, to_string(v));
}

void to_json(Json& j, const DatasetRecord& r) {
  j = Json::object();
  j["record_id"] = r.record_id;
  j["round"] = r.round;
  j["variant"] = to_string(r.variant);
  j["parent"] = optional_json(r.parent);
  j["scene_ref"] = r.scene_ref;
  j["target"] = Json{{"id", r.target}, {"box", r.target_box}};
  j["guessed_box"] = r.guessed_box;
  const auto bins = box_to_bins(r.guessed_box);
  j["guessed_bins"] = Json::array({bins[0], bins[1], bins[2], bins[3]});
  j["iou"] = r.iou;
  j["turn_count"] = r.turn_count;
  j["stopped_reason"] = to_string(r.stopped_reason);
  j["expression"] = r.dialogue.turns.empty() ? std::string() : r.expression();
  j["turns"] = r.dialogue.turns;
  Json prov = Json::object();
  prov["policies"] = r.provenance.policies;
  prov["master_seed"] = r.provenance.master_seed;
  prov["episode_seed"] = r.provenance.episode_seed;
  prov["polisher"] = optional_json(r.provenance.polisher);
  j["provenance"] = std::move(prov);
}

void from_json(const Json& j, DatasetRecord& r) {
  r.record_id = j.at("record_id").get<std::string>();
  r.round = j.at("round").get<int>();
  const auto variant = parse_variant(j.at("variant").get<std::string>());
  if (!variant) throw ValidationError("record " + r.record_id + ": unknown variant");
  r.variant = *variant;
  r.parent = optional_from<std::string>(j, "parent");
  r.scene_ref = j.at("scene_ref").get<std::string>();
  r.target = j.at("target").at("id").get<ObjectId>();
  r.target_box = j.at("target").at("box").get<BBox>();
  r.guessed_box = j.at("guessed_box").get<BBox>();
  r.iou = j.at("iou").get<double>();
  r.turn_count = j.at("turn_count").get<int>();
  const auto reason = parse_stop_reason(j.at("stopped_reason").get<std::string>());
  if (!reason) throw ValidationError("record " + r.record_id + ": unknown stopped_reason");
  r.stopped_reason = *reason;
  r.dialogue.scene_ref = r.scene_ref;
  r.dialogue.target_ref = r.target;
  r.dialogue.turns = j.at("turns").get<std::vector<Turn>>();
  const Json& prov = j.at("provenance");
  r.provenance.policies = prov.at("policies").get<PolicyIds>();
  r.provenance.master_seed = prov.at("master_seed").get<std::uint64_t>();
  r.provenance.episode_seed = prov.at("episode_seed").get<std::uint64_t>();
  r.provenance.polisher = optional_from<std::string>(prov, "polisher");
}

double default_weight(std::string_view kind) { return kind == "generated" ? 1.0 : 0.1; }

std::string manifest_file_name(int round) { return fmt::format("round_{}.manifest.json", round); }
std::string records_file_name(int round) { return fmt::format("round_{}.records.jsonl", round); }

void to_json(Json& j, const RoundManifest& m) {
  j = Json::object();
  j["version"] = kWireVersion;
  j["round"] = m.round;
  j["master_seed"] = m.master_seed;
  Json inputs = Json::array();
  for (const auto& in : m.inputs) {
    inputs.push_back(Json{{"ref", in.ref}, {"kind", in.kind}, {"weight", in.weight}});
  }
  j["inputs"] = std::move(inputs);
  j["counts"] = Json{{"run", m.counts.run},
                     {"kept", m.counts.kept},
                     {"dropped", m.counts.dropped},
                     {"errored", m.counts.errored}};
  j["policies"] = m.policies;
  j["records_file"] = m.records_file;
  Json errors = Json::array();
  for (const auto& e : m.errors) {
    errors.push_back(Json{{"episode", e.episode},
                          {"scene_ref", e.scene_ref},
                          {"reason", e.reason},
                          {"message", e.message}});
  }
  j["errors"] = std::move(errors);
  j["polisher"] = optional_json(m.polisher);
  j["polish"] = m.polish ? Json{{"polished", m.polish->polished}, {"unpolished", m.polish->unpolished}}
                         : Json(nullptr);
  j["selection_seed"] = optional_json(m.selection_seed);
  Json assignment = Json::object();
  for (const auto& [id, v] : m.assignment) assignment[id] = to_string(v);
  j["assignment"] = std::move(assignment);
  j["sealed"] = m.sealed;
}

void from_json(const Json& j, RoundManifest& m) {
  m = RoundManifest{};
  m.round = j.at("round").get<int>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  for (const auto& in : j.at("inputs")) {
    m.inputs.push_back({in.at("ref").get<std::string>(), in.at("kind").get<std::string>(),
                        in.at("weight").get<double>()});
  }
  const Json& c = j.at("counts");
  m.counts = {c.at("run").get<std::size_t>(), c.at("kept").get<std::size_t>(),
              c.at("dropped").get<std::size_t>(), c.at("errored").get<std::size_t>()};
  if (m.counts.kept + m.counts.dropped + m.counts.errored != m.counts.run) {
    throw ValidationError(fmt::format("round {} manifest: kept + dropped + errored != run", m.round));
  }
  m.policies = j.at("policies").get<PolicyIds>();
  m.records_file = j.at("records_file").get<std::string>();
  for (const auto& e : j.at("errors")) {
    m.errors.push_back({e.at("episode").get<std::size_t>(), e.at("scene_ref").get<std::string>(),
                        e.at("reason").get<std::string>(), e.at("message").get<std::string>()});
  }
  m.polisher = optional_from<std::string>(j, "polisher");
  if (j.contains("polish") && !j["polish"].is_null()) {
    m.polish = PolishCounts{j["polish"].at("polished").get<std::size_t>(),
                            j["polish"].at("unpolished").get<std::size_t>()};
  }
  m.selection_seed = optional_from<std::uint64_t>(j, "selection_seed");
  for (const auto& [id, v] : j.at("assignment").items()) {
    const auto variant = parse_variant(v.get<std::string>());
    if (!variant) throw ValidationError("manifest assignment for " + id + ": unknown variant");
    m.assignment[id] = *variant;
  }
  m.sealed = j.at("sealed").get<bool>();
}

void write_records(const std::filesystem::path& path, std::vector<DatasetRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const DatasetRecord& a, const DatasetRecord& b) { return a.record_id < b.record_id; });
  for (const auto& r : records) {
    const double v = iou(r.guessed_box, r.target_box);
    if (!(v > kKeepThreshold)) {
      throw StateError(fmt::format("record {} fails the IoU filter at write time (iou {})", r.record_id, v));
    }
  }
  auto out = open_out(path);
  for (const auto& r : records) out << Json(r).dump() << '\n';
  if (!out) throw StateError(fmt::format("write to {} failed", path.string()));
}

std::vector<DatasetRecord> read_records(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line).get<DatasetRecord>());
    } catch (const Json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const RoundManifest& manifest) {
  auto out = open_out(path);
  out << Json(manifest).dump(2) << '\n';
  if (!out) throw StateError(fmt::format("write to {} failed", path.string()));
}

RoundManifest read_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in).get<RoundManifest>();
  } catch (const Json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace ivg
