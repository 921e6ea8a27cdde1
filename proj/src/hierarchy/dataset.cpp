#include "hnc/hierarchy/dataset.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "hnc/cad/canonical.hpp"
#include "hnc/cad/json_io.hpp"
#include "hnc/cad/tokens.hpp"

namespace hnc::hierarchy {

using nlohmann::json;

CodeTreeSkeleton ModelRefs::skeleton() const {
  CodeTreeSkeleton s;
  for (const auto& l : loops) s.loops_per_profile.push_back(static_cast<int>(l.size()));
  return s;
}

const std::vector<PropertyEntry>& PropertyDataset::level(Level l) const {
  switch (l) {
    case Level::Loop: return loops;
    case Level::Profile: return profiles;
    case Level::Solid: return solids;
  }
  return loops;
}

std::vector<LevelTokens> PropertyDataset::level_tokens(Level l) const {
  std::vector<LevelTokens> out;
  for (const auto& e : level(l)) out.push_back(e.tokens);
  return out;
}

namespace {

class LevelIndex {
 public:
  explicit LevelIndex(std::vector<PropertyEntry>& entries) : entries_(entries) {}

  int intern(LevelTokens tokens, const std::string& source) {
    auto [it, inserted] = index_.emplace(tokens.values, static_cast<int>(entries_.size()));
    if (inserted) entries_.push_back({std::move(tokens), source});
    return it->second;
  }

 private:
  std::vector<PropertyEntry>& entries_;
  std::map<std::vector<int>, int> index_;
};

}  // namespace

PropertyDataset build_dataset(const std::vector<ModelRecord>& models, const cad::Caps& caps) {
  PropertyDataset ds;
  ds.caps = caps;
  const cad::Caps unbounded{1 << 20, 1 << 20, 1 << 20, 1 << 30};

  std::vector<std::pair<const ModelRecord*, cad::CadModel>> unique;
  std::set<cad::TokenSequence> seen;
  for (const auto& rec : models) {
    cad::CadModel canon;
    try {
      canon = cad::canonical_sort(rec.model);
      if (!seen.insert(cad::tokenize(canon, unbounded)).second) {
        ++ds.duplicate_models;
        continue;
      }
    } catch (const cad::ValidationError& e) {
      ds.excluded.push_back({rec.id, std::string(cad::reason_code(e.reason())), e.what()});
      continue;
    }
    unique.emplace_back(&rec, std::move(canon));
  }

  LevelIndex loops(ds.loops), profiles(ds.profiles), solids(ds.solids);
  for (auto& [rec, model] : unique) {
    const auto violations = cad::cap_violations(model, caps);
    if (!violations.empty()) {
      ds.excluded.push_back({rec->id, std::string(cad::reason_code(violations.front().reason)),
                             violations.front().detail});
      continue;
    }
    ModelRefs refs;
    refs.id = rec->id;
    refs.solid = solids.intern(to_tokens(extract_solid_property(model, caps.max_steps)), rec->id);
    for (const auto& step : model.steps) {
      refs.profiles.push_back(profiles.intern(
          to_tokens(extract_profile_property(step.loops, caps.max_loops)), rec->id));
      auto& ls = refs.loops.emplace_back();
      for (const auto& loop : step.loops) {
        ls.push_back(loops.intern(to_tokens(extract_loop_property(loop)), rec->id));
      }
    }
    ds.models.push_back(std::move(refs));
    ds.retained.push_back(std::move(model));
  }
  return ds;
}

json dataset_card(const PropertyDataset& ds) {
  json excluded = json::array();
  for (const auto& e : ds.excluded) {
    excluded.push_back({{"id", e.id}, {"reason", e.reason}, {"detail", e.detail}});
  }
  return {
      {"counts",
       {{"models", ds.models.size()},
        {"solids", ds.solids.size()},
        {"profiles", ds.profiles.size()},
        {"loops", ds.loops.size()},
        {"duplicate_models", ds.duplicate_models},
        {"excluded", ds.excluded.size()}}},
      {"filter",
       {{"order", json::array({"dedup_models", "filter_caps", "dedup_properties"})},
        {"max_steps", ds.caps.max_steps},
        {"max_loops", ds.caps.max_loops},
        {"max_curves", ds.caps.max_curves},
        {"max_tokens", ds.caps.max_tokens}}},
      {"reference_counts", {{"solids", 102114}, {"profiles", 60584}, {"loops", 150158}}},
      {"excluded", excluded},
  };
}

json tokens_to_json(const LevelTokens& t) {
  json rows = json::array();
  const int w = t.width();
  for (int i = 0; i < t.length(); ++i) {
    rows.push_back(std::vector<int>(t.values.begin() + i * w, t.values.begin() + (i + 1) * w));
  }
  return rows;
}

LevelTokens tokens_from_json(Level level, const json& j) {
  LevelTokens t{level, {}};
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != tuple_width(level)) {
      throw std::invalid_argument(
          fmt::format("{} token rows need {} values", level_name(level), tuple_width(level)));
    }
    for (const auto& v : row) {
      const int c = v.get<int>();
      if (c < 0 || c >= kClasses) throw std::invalid_argument(fmt::format("class {} out of range", c));
      t.values.push_back(c);
    }
  }
  return t;
}

void write_manifest(const PropertyDataset& ds, const std::filesystem::path& jsonl) {
  std::ofstream out(jsonl);
  if (!out) throw std::runtime_error("cannot write " + jsonl.string());
  for (Level l : {Level::Solid, Level::Profile, Level::Loop}) {
    for (const auto& e : ds.level(l)) {
      out << json{{"level", level_name(l)},
                  {"tokens", tokens_to_json(e.tokens)},
                  {"source_model_id", e.source_model_id}}
                 .dump()
          << '\n';
    }
  }
}

void save_dataset(const PropertyDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_manifest(ds, dir / "manifest.jsonl");
  {
    std::ofstream card(dir / "card.json");
    card << dataset_card(ds).dump(2) << '\n';
  }
  std::ofstream models(dir / "models.jsonl");
  for (std::size_t i = 0; i < ds.models.size(); ++i) {
    models << json{{"id", ds.models[i].id}, {"model", cad::to_json(ds.retained[i])}}.dump() << '\n';
  }
}

PropertyDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream card_in(dir / "card.json");
  std::ifstream models_in(dir / "models.jsonl");
  if (!card_in || !models_in) throw std::runtime_error("no dataset in " + dir.string());
  const json card = json::parse(card_in);
  const auto& f = card.at("filter");
  const cad::Caps caps{f.at("max_steps").get<int>(), f.at("max_loops").get<int>(),
                       f.at("max_curves").get<int>(), f.at("max_tokens").get<int>()};
  std::vector<ModelRecord> records;
  std::string line;
  while (std::getline(models_in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    records.push_back({j.at("id").get<std::string>(), cad::model_from_json(j.at("model"))});
  }
  PropertyDataset ds = build_dataset(records, caps);
  ds.duplicate_models = card.at("counts").at("duplicate_models").get<std::size_t>();
  for (const auto& e : card.at("excluded")) {
    ds.excluded.push_back({e.at("id"), e.at("reason"), e.at("detail")});
  }
  return ds;
}

}  // namespace hnc::hierarchy
