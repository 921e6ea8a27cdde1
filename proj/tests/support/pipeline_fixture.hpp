#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <fmt/format.h>

#include "json.hpp"

#include "hnc/app/pipeline.hpp"

namespace hnc::testing {

// Small widths so a whole pipeline runs in about a second.
inline nlohmann::json tiny_pipeline_config() {
  const nlohmann::json block{{"d_model", 16}, {"d_ff", 32}, {"heads", 2}, {"layers", 1}, {"dropout", 0}};
  const nlohmann::json book{{"codebook", {{"size", 16}, {"dim", 16}}}, {"encoder", block}, {"decoder", block}, {"emb_dim", 4}};
  return {{"codebooks", {{"loop", book}, {"profile", book}, {"solid", book}}},
          {"codebook_train", {{"batch", 8}, {"optimizer", {{"warmup", 5}}}}},
          {"generator", {{"encoder", block}, {"code_decoder", block}, {"cad_decoder", block}}},
          {"generator_train", {{"batch", 8}, {"optimizer", {{"warmup", 5}}}}},
          {"metrics", {{"points", 128}, {"emd_points", 64}, {"voxel_resolution", 32}}}};
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() / fmt::format("hnc-{}-{:08x}", name, rd());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline nlohmann::json run_options(const std::filesystem::path& data, nlohmann::json extra = nlohmann::json::object()) {
  extra["data"] = data.string();
  extra["config_json"] = tiny_pipeline_config();
  extra["seed"] = 3;
  return extra;
}

// synth -> preprocess -> three codebooks -> encode-codes -> train-generator.
inline void build_pipeline(const std::filesystem::path& data, int models = 16, int steps = 4) {
  using app::run_command;
  run_command("synth", run_options(data, {{"n", models}}));
  run_command("preprocess", run_options(data, {{"input", (data / "corpus.jsonl").string()}}));
  for (const char* level : {"loop", "profile", "solid"}) {
    run_command("train-codebook", run_options(data, {{"level", level}, {"max_steps", steps}}));
  }
  run_command("encode-codes", run_options(data));
  run_command("train-generator", run_options(data, {{"max_steps", steps}}));
}

}  // namespace hnc::testing
