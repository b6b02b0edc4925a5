#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "ivg/error.hpp"
#include "ivg/evolve.hpp"
#include "ivg/parallel.hpp"
#include "ivg/rng.hpp"

namespace ivg {

void polish_round(std::vector<DatasetRecord>& records, RoundManifest& manifest,
                  const std::map<std::string, Scene>& scenes, const Polisher& polisher,
                  std::uint64_t seed, const PolishConfig& config, int workers) {
  if (manifest.sealed) {
    throw StateError(fmt::format("round {} is sealed; polishing would modify it", manifest.round));
  }
  std::vector<DatasetRecord> raw;
  for (const auto& r : records) {
    if (r.variant == Variant::kRaw) raw.push_back(r);
  }

  PolishConfig seeded = config;
  seeded.seed = seed;
  std::vector<PolishOutcome> outcomes(raw.size());
  parallel_for(raw.size(), workers, [&](std::size_t i) {
    const auto it = scenes.find(raw[i].scene_ref);
    if (it == scenes.end()) {
      throw NotFoundError(fmt::format("record {}: scene {} not in the scene source", raw[i].record_id,
                                      raw[i].scene_ref));
    }
    const auto& turns = raw[i].dialogue.turns;
    if (std::none_of(turns.begin(), turns.end(),
                     [](const Turn& t) { return t.speaker == Role::kQuestioner; })) {
      outcomes[i].failure = "no question/answer pair";
      return;
    }
    outcomes[i] = polish_dialogue(raw[i], describe_scene(it->second), polisher, seeded);
  });

  PolishCounts counts;
  std::vector<DatasetRecord> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& outcome = outcomes[i];
    out.push_back(raw[i]);
    if (!outcome.result) {
      ++counts.unpolished;
      continue;
    }
    ++counts.polished;
    for (const auto& [variant, turns] :
         {std::pair{Variant::kEnriched, &outcome.result->enriched},
          std::pair{Variant::kSimplified, &outcome.result->simplified}}) {
      DatasetRecord v = raw[i];
      v.record_id = variant_id(raw[i].record_id, variant);
      v.variant = variant;
      v.parent = raw[i].record_id;
      v.dialogue.turns = *turns;
      v.provenance.polisher = polisher.id();
      out.push_back(std::move(v));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const DatasetRecord& a, const DatasetRecord& b) { return a.record_id < b.record_id; });
  records = std::move(out);
  manifest.polisher = polisher.id();
  manifest.polish = counts;
}

std::map<std::string, Variant> select_training_variant(const std::vector<DatasetRecord>& records,
                                                       std::uint64_t seed) {
  std::set<std::string> has_enriched, has_simplified;
  std::vector<std::string> raw_ids;
  for (const auto& r : records) {
    if (r.variant == Variant::kRaw) raw_ids.push_back(r.record_id);
    if (r.parent && r.variant == Variant::kEnriched) has_enriched.insert(*r.parent);
    if (r.parent && r.variant == Variant::kSimplified) has_simplified.insert(*r.parent);
  }
  std::map<std::string, Variant> out;
  for (const auto& id : raw_ids) {
    if (!has_enriched.count(id) || !has_simplified.count(id)) {
      out[id] = Variant::kRaw;
      continue;
    }
    Rng rng(stable_hash(seed, std::string_view(id)));
    out[id] = rng.uniform() < 0.5 ? Variant::kEnriched : Variant::kSimplified;
  }
  return out;
}

void seal_round(RoundManifest& manifest, const std::vector<DatasetRecord>& records, std::uint64_t seed) {
  if (manifest.sealed) throw StateError(fmt::format("round {} is already sealed", manifest.round));
  manifest.assignment = select_training_variant(records, seed);
  manifest.selection_seed = seed;
  manifest.sealed = true;
}

std::vector<std::string> MergedIndex::ids_in_round(int round) const {
  std::vector<std::string> out;
  for (const auto& [id, e] : entries) {
    if (e.round == round) out.push_back(id);
  }
  return out;
}

DatasetRecord MergedIndex::load(const std::filesystem::path& base, const std::string& record_id) const {
  const auto it = entries.find(record_id);
  if (it == entries.end()) throw NotFoundError(fmt::format("record {} is not in the index", record_id));
  const auto path = base / it->second.file;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("cannot open {}", path.string()));
  in.seekg(static_cast<std::streamoff>(it->second.offset));
  std::string line;
  if (!std::getline(in, line)) throw StateError(fmt::format("{}: offset {} past end", path.string(), it->second.offset));
  return Json::parse(line).get<DatasetRecord>();
}

void to_json(Json& j, const MergedIndex& m) {
  j = Json::object();
  j["version"] = kWireVersion;
  j["rounds"] = m.rounds;
  j["counts"] = Json{{"run", m.counts.run},
                     {"kept", m.counts.kept},
                     {"dropped", m.counts.dropped},
                     {"errored", m.counts.errored}};
  Json inputs = Json::array();
  for (const auto& in : m.inputs) {
    inputs.push_back(Json{{"ref", in.ref}, {"kind", in.kind}, {"weight", in.weight}});
  }
  j["inputs"] = std::move(inputs);
  Json entries = Json::object();
  for (const auto& [id, e] : m.entries) {
    entries[id] = Json{{"round", e.round}, {"file", e.file}, {"offset", e.offset}};
  }
  j["entries"] = std::move(entries);
}

void from_json(const Json& j, MergedIndex& m) {
  m = MergedIndex{};
  m.rounds = j.at("rounds").get<std::vector<int>>();
  const Json& c = j.at("counts");
  m.counts = {c.at("run").get<std::size_t>(), c.at("kept").get<std::size_t>(),
              c.at("dropped").get<std::size_t>(), c.at("errored").get<std::size_t>()};
  for (const auto& in : j.at("inputs")) {
    m.inputs.push_back({in.at("ref").get<std::string>(), in.at("kind").get<std::string>(),
                        in.at("weight").get<double>()});
  }
  for (const auto& [id, e] : j.at("entries").items()) {
    m.entries[id] = {e.at("round").get<int>(), e.at("file").get<std::string>(),
                     e.at("offset").get<std::uint64_t>()};
  }
}

MergedIndex merge_rounds(const std::vector<std::filesystem::path>& manifest_paths) {
  MergedIndex merged;
  std::set<int> rounds;
  for (const auto& path : manifest_paths) {
    const RoundManifest m = read_manifest(path);
    if (!m.sealed) {
      throw StateError(fmt::format("{}: round {} is not sealed (run select-variants first)",
                                   path.string(), m.round));
    }
    if (!rounds.insert(m.round).second) {
      throw CollisionError(fmt::format("round {} appears in more than one manifest", m.round));
    }
    merged.rounds.push_back(m.round);
    merged.counts.run += m.counts.run;
    merged.counts.kept += m.counts.kept;
    merged.counts.dropped += m.counts.dropped;
    merged.counts.errored += m.counts.errored;
    merged.inputs.insert(merged.inputs.end(), m.inputs.begin(), m.inputs.end());

    const auto records_path = path.parent_path() / m.records_file;
    std::ifstream in(records_path, std::ios::binary);
    if (!in) throw NotFoundError(fmt::format("cannot open {}", records_path.string()));
    std::string line;
    std::uint64_t offset = 0;
    while (true) {
      const std::uint64_t start = offset;
      if (!std::getline(in, line)) break;
      offset += line.size() + 1;
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      const std::string id = j.at("record_id").get<std::string>();
      const IndexEntry entry{m.round, records_path.filename().string(), start};
      if (!merged.entries.emplace(id, entry).second) {
        throw CollisionError(fmt::format("record id {} appears more than once", id));
      }
    }
  }
  std::sort(merged.rounds.begin(), merged.rounds.end());
  return merged;
}

}  // namespace ivg
