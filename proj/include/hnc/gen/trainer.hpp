#pragma once

#include <functional>
#include <random>
#include <vector>

#include "json.hpp"

#include "hnc/gen/cascade.hpp"
#include "hnc/hierarchy/dataset.hpp"
#include "hnc/nn/optim.hpp"

namespace hnc::gen {

// Code index of every property, per level, in dataset order.
struct LevelCodes {
  std::vector<int> loops, profiles, solids;
  nlohmann::json to_json() const;
  static LevelCodes from_json(const nlohmann::json& j);
};

CodeTree code_tree_for(const hierarchy::ModelRefs& refs, const LevelCodes& codes);
std::vector<CodeTreeSequence> code_trees(const hierarchy::PropertyDataset& ds, const LevelCodes& codes,
                                         const CodeVocab& vocab);

// Conditioning input for training: empty with probability 1/3, otherwise a
// random prefix of steps whose last step may lose a random suffix of loops.
cad::CadModel sample_partial(const cad::CadModel& model, std::mt19937_64& rng);

struct CascadeTrainConfig {
  int epochs = 350;
  int max_steps = 0;  // 0 = no limit
  int batch = 32;
  nn::AdamWConfig optimizer;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static CascadeTrainConfig from_json(const nlohmann::json& j);
};

struct CascadeStepLog {
  long step = 0;
  int epoch = 0;
  double loss = 0, code_loss = 0, cad_loss = 0;
};

struct CascadeTrainResult {
  std::vector<CascadeStepLog> log;
  std::vector<double> epoch_loss;  // mean step loss per epoch
};

// Per-token cross entropy of both generators under teacher forcing.
struct CascadeLoss {
  nn::Var total;
  double code = 0, cad = 0;
};
template <class T>
CascadeLoss cascade_loss(nn::Tape<T>& t, const Cascade<T>& model, const std::vector<cad::CadModel>& partials,
                         const std::vector<CodeTreeSequence>& trees, const std::vector<cad::TokenSequence>& targets);

// Joint teacher-forced training of encoder, G_code and G_cad on full models
// with their ground-truth code trees.
CascadeTrainResult train_cascade(Cascade<float>& model, const std::vector<cad::CadModel>& models,
                                 const std::vector<CodeTreeSequence>& trees, const CascadeTrainConfig& cfg,
                                 const std::function<void(const CascadeStepLog&)>& on_step = {});

}  // namespace hnc::gen
