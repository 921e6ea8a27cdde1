#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include "json.hpp"

#include "hnc/gen/cascade.hpp"
#include "hnc/gen/trainer.hpp"
#include "hnc/metrics/set_metrics.hpp"
#include "hnc/vq/trainer.hpp"

namespace hnc::app {

// Everything a run needs besides its input paths. Missing keys in a config
// file keep these defaults.
struct PipelineConfig {
  cad::Caps caps;
  std::array<vq::VqConfig, 3> codebooks{vq::VqConfig::defaults(hierarchy::Level::Loop),
                                        vq::VqConfig::defaults(hierarchy::Level::Profile),
                                        vq::VqConfig::defaults(hierarchy::Level::Solid)};
  vq::VqTrainConfig codebook_train;
  gen::CascadeConfig generator;
  gen::CascadeTrainConfig generator_train;
  metrics::MetricConfig metrics;
  std::uint64_t seed = 0;

  PipelineConfig();
  const vq::VqConfig& codebook(hierarchy::Level l) const { return codebooks[static_cast<int>(l)]; }

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
};

// --data, else $HNC_DATA_DIR, else ./hnc-data.
std::filesystem::path data_dir(const std::optional<std::filesystem::path>& flag = std::nullopt);

}  // namespace hnc::app
