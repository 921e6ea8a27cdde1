#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "json.hpp"

#include "hnc/hierarchy/augment.hpp"
#include "hnc/nn/optim.hpp"
#include "hnc/vq/vqvae.hpp"

namespace hnc::vq {

struct VqTrainConfig {
  int epochs = 250;
  int max_steps = 0;  // stop early after this many updates; 0 = no limit
  int batch = 256;
  nn::AdamWConfig optimizer;
  bool augment = true;
  hierarchy::AugmentOptions augment_options;
  int usage_window = 0;  // updates per dead-code check; 0 = once per epoch
  int pool_size = 1024;  // recent pooled vectors kept for reinitialization
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static VqTrainConfig from_json(const nlohmann::json& j);
};

struct VqStepLog {
  long step = 0;
  int epoch = 0;
  double loss = 0, reconstruction = 0, commitment = 0, codebook_term = 0;
  double slot_accuracy = 0, token_accuracy = 0;
  int reinitialized = 0;
};

struct VqTrainResult {
  std::vector<VqStepLog> log;
  int reinitialized_total = 0;
};

VqTrainResult train_vqvae(VqVae<float>& model, const std::vector<LevelTokens>& data, const VqTrainConfig& cfg,
                          const std::function<void(const VqStepLog&)>& on_step = {});

// Masked-token accuracy on `data` with fresh masks drawn from `seed`.
struct MaskedAccuracy {
  double slot = 0, token = 0;
};
MaskedAccuracy masked_accuracy(const VqVae<float>& model, const std::vector<LevelTokens>& data,
                               std::uint64_t seed);

// JSON lines {code, members:[tokens...]}, one per used code, ascending.
nlohmann::json cluster_records(const std::vector<int>& codes, const std::vector<LevelTokens>& items);
void export_clusters(const std::filesystem::path& jsonl, const std::vector<int>& codes,
                     const std::vector<LevelTokens>& items);

}  // namespace hnc::vq
