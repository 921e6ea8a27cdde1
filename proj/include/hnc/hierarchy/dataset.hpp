#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "hnc/cad/model.hpp"
#include "hnc/hierarchy/properties.hpp"
#include "hnc/hierarchy/skeleton.hpp"

namespace hnc::hierarchy {

struct ModelRecord {
  std::string id;
  cad::CadModel model;
};

struct PropertyEntry {
  LevelTokens tokens;
  std::string source_model_id;
};

// Indices into the per-level property lists.
struct ModelRefs {
  std::string id;
  int solid = -1;
  std::vector<int> profiles;
  std::vector<std::vector<int>> loops;  // per profile
  CodeTreeSkeleton skeleton() const;
};

struct Exclusion {
  std::string id;
  std::string reason;  // reason_code() of the first violation
  std::string detail;
};

struct PropertyDataset {
  std::vector<PropertyEntry> loops;
  std::vector<PropertyEntry> profiles;
  std::vector<PropertyEntry> solids;
  std::vector<ModelRefs> models;
  std::vector<cad::CadModel> retained;  // parallel to models, canonical form
  std::vector<Exclusion> excluded;
  std::size_t duplicate_models = 0;
  cad::Caps caps;

  const std::vector<PropertyEntry>& level(Level l) const;
  std::vector<LevelTokens> level_tokens(Level l) const;
};

// Dedup models on canonical token content, drop models that break the caps,
// then dedup properties level by level. Output order follows input order.
PropertyDataset build_dataset(const std::vector<ModelRecord>& models,
                              const cad::Caps& caps = {});

nlohmann::json dataset_card(const PropertyDataset& ds);
void write_manifest(const PropertyDataset& ds, const std::filesystem::path& jsonl);
// Writes manifest.jsonl, card.json, models.jsonl into `dir`.
void save_dataset(const PropertyDataset& ds, const std::filesystem::path& dir);
PropertyDataset load_dataset(const std::filesystem::path& dir);

nlohmann::json tokens_to_json(const LevelTokens& t);
LevelTokens tokens_from_json(Level level, const nlohmann::json& j);

}  // namespace hnc::hierarchy
