#include "hnc/gen/trainer.hpp"

#include <numeric>

#include "hnc/nn/ops.hpp"

namespace hnc::gen {

using nlohmann::json;

json LevelCodes::to_json() const { return {{"loop", loops}, {"profile", profiles}, {"solid", solids}}; }

LevelCodes LevelCodes::from_json(const json& j) {
  return {j.at("loop").get<std::vector<int>>(), j.at("profile").get<std::vector<int>>(),
          j.at("solid").get<std::vector<int>>()};
}

CodeTree code_tree_for(const hierarchy::ModelRefs& refs, const LevelCodes& codes) {
  CodeTree tree;
  tree.solid = codes.solids.at(refs.solid);
  for (std::size_t p = 0; p < refs.profiles.size(); ++p) {
    ProfileCodes pc{codes.profiles.at(refs.profiles[p]), {}};
    for (int l : refs.loops[p]) pc.loops.push_back(codes.loops.at(l));
    tree.profiles.push_back(std::move(pc));
  }
  return tree;
}

std::vector<CodeTreeSequence> code_trees(const hierarchy::PropertyDataset& ds, const LevelCodes& codes,
                                         const CodeVocab& vocab) {
  std::vector<CodeTreeSequence> out;
  for (const auto& refs : ds.models) out.push_back(serialize(code_tree_for(refs, codes), vocab));
  return out;
}

cad::CadModel sample_partial(const cad::CadModel& model, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> third(0, 2);
  if (third(rng) == 0 || model.steps.empty()) return {};
  const int n = static_cast<int>(model.steps.size());
  const int keep = std::uniform_int_distribution<int>(1, n)(rng);
  cad::CadModel out;
  out.steps.assign(model.steps.begin(), model.steps.begin() + keep);
  auto& last = out.steps.back();
  if (last.loops.size() > 1 && std::bernoulli_distribution(0.5)(rng)) {
    const int loops = std::uniform_int_distribution<int>(1, static_cast<int>(last.loops.size()))(rng);
    last.loops.resize(loops);
  }
  return out;
}

json CascadeTrainConfig::to_json() const {
  return {{"epochs", epochs}, {"max_steps", max_steps}, {"batch", batch}, {"optimizer", optimizer.to_json()},
          {"seed", seed}};
}

CascadeTrainConfig CascadeTrainConfig::from_json(const json& j) {
  CascadeTrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.batch = j.value("batch", c.batch);
  if (j.contains("optimizer")) c.optimizer = nn::AdamWConfig::from_json(j["optimizer"]);
  c.seed = j.value("seed", c.seed);
  return c;
}

template <class T>
CascadeLoss cascade_loss(nn::Tape<T>& t, const Cascade<T>& model, const std::vector<cad::CadModel>& partials,
                         const std::vector<CodeTreeSequence>& trees, const std::vector<cad::TokenSequence>& targets) {
  const auto encoded = model.encode(t, partials);
  const auto code_logits = model.code_logits(t, encoded, trees);
  const auto memory = model.cad_memory(t, encoded, trees);
  const auto cad_logits = model.cad_logits(t, memory, targets);

  auto ce = [&](nn::Var logits, const std::vector<std::vector<int>>& seqs) {
    std::vector<int> flat;
    for (const auto& s : seqs) flat.insert(flat.end(), s.begin(), s.end());
    const std::vector<T> w(flat.size(), T(1) / static_cast<T>(flat.size()));
    return nn::cross_entropy(t, logits, flat, w);
  };
  CascadeLoss out;
  const auto lc = ce(code_logits, trees);
  const auto lm = ce(cad_logits, targets);
  out.total = nn::add(t, lc, lm);
  out.code = static_cast<double>(t.value(lc)(0, 0));
  out.cad = static_cast<double>(t.value(lm)(0, 0));
  return out;
}

template CascadeLoss cascade_loss<float>(nn::Tape<float>&, const Cascade<float>&, const std::vector<cad::CadModel>&,
                                         const std::vector<CodeTreeSequence>&,
                                         const std::vector<cad::TokenSequence>&);
template CascadeLoss cascade_loss<double>(nn::Tape<double>&, const Cascade<double>&,
                                          const std::vector<cad::CadModel>&, const std::vector<CodeTreeSequence>&,
                                          const std::vector<cad::TokenSequence>&);

CascadeTrainResult train_cascade(Cascade<float>& model, const std::vector<cad::CadModel>& models,
                                 const std::vector<CodeTreeSequence>& trees, const CascadeTrainConfig& cfg,
                                 const std::function<void(const CascadeStepLog&)>& on_step) {
  if (models.size() != trees.size()) throw std::invalid_argument("one code tree per model");
  CascadeTrainResult result;
  if (models.empty()) return result;
  std::vector<cad::TokenSequence> tokens;
  for (const auto& m : models) tokens.push_back(cad::tokenize(m, model.config().caps));
  nn::AdamW<float> opt(model.params(), cfg.optimizer);
  const int batch = std::max(1, std::min<int>(cfg.batch, static_cast<int>(models.size())));
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL * (epoch + 1));
    std::vector<int> order(models.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0;
    int epoch_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::vector<cad::CadModel> partials;
      std::vector<CodeTreeSequence> tr;
      std::vector<cad::TokenSequence> tg;
      for (std::size_t i = start; i < std::min(order.size(), start + batch); ++i) {
        partials.push_back(sample_partial(models[order[i]], rng));
        tr.push_back(trees[order[i]]);
        tg.push_back(tokens[order[i]]);
      }
      nn::Tape<float> tape(true, cfg.seed ^ static_cast<std::uint64_t>(step + 1));
      model.params().zero_grad();
      const auto loss = cascade_loss(tape, model, partials, tr, tg);
      tape.backward(loss.total);
      opt.step();
      ++step;
      CascadeStepLog log{step, epoch, loss.code + loss.cad, loss.code, loss.cad};
      epoch_sum += log.loss;
      ++epoch_steps;
      result.log.push_back(log);
      if (on_step) on_step(log);
      if (cfg.max_steps > 0 && step >= cfg.max_steps) {
        result.epoch_loss.push_back(epoch_sum / epoch_steps);
        return result;
      }
    }
    result.epoch_loss.push_back(epoch_sum / epoch_steps);
  }
  return result;
}

}  // namespace hnc::gen
