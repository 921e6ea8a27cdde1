#include "hnc/app/config.hpp"

#include <cstdlib>
#include <fstream>

namespace hnc::app {

using nlohmann::json;
using hierarchy::Level;

namespace {

constexpr std::array<Level, 3> kLevels{Level::Loop, Level::Profile, Level::Solid};

json caps_json(const cad::Caps& c) {
  return {{"max_steps", c.max_steps}, {"max_loops", c.max_loops}, {"max_curves", c.max_curves},
          {"max_tokens", c.max_tokens}};
}

}  // namespace

PipelineConfig::PipelineConfig() {
  generator_train.batch = 256;
  codebook_train.batch = 256;
}

json PipelineConfig::to_json() const {
  json books = json::object();
  for (Level l : kLevels) books[hierarchy::level_name(l)] = codebook(l).to_json();
  return {{"caps", caps_json(caps)},
          {"codebooks", books},
          {"codebook_train", codebook_train.to_json()},
          {"generator", generator.to_json()},
          {"generator_train", generator_train.to_json()},
          {"metrics", metrics.to_json()},
          {"seed", seed}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  // Patch the serialized defaults so that partial files keep every default.
  json merged = PipelineConfig().to_json();
  merged.merge_patch(j);
  PipelineConfig c;
  const auto& caps = merged.at("caps");
  c.caps = {caps.at("max_steps").get<int>(), caps.at("max_loops").get<int>(), caps.at("max_curves").get<int>(),
            caps.at("max_tokens").get<int>()};
  for (Level l : kLevels) {
    json book = merged.at("codebooks").at(hierarchy::level_name(l));
    book["level"] = hierarchy::level_name(l);
    c.codebooks[static_cast<int>(l)] = vq::VqConfig::from_json(book);
  }
  c.codebook_train = vq::VqTrainConfig::from_json(merged.at("codebook_train"));
  c.generator = gen::CascadeConfig::from_json(merged.at("generator"));
  c.generator.caps = c.caps;
  c.generator_train = gen::CascadeTrainConfig::from_json(merged.at("generator_train"));
  c.metrics = metrics::MetricConfig::from_json(merged.at("metrics"));
  c.seed = merged.at("seed").get<std::uint64_t>();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return from_json(json::parse(in));
}

std::filesystem::path data_dir(const std::optional<std::filesystem::path>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("HNC_DATA_DIR"); env && *env) return env;
  return "hnc-data";
}

}  // namespace hnc::app
