#include "hnc/app/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <fmt/format.h>

#include "hnc/app/lock.hpp"
#include "hnc/cad/canonical.hpp"
#include "hnc/cad/json_io.hpp"
#include "hnc/cad/synthetic.hpp"
#include "hnc/gen/workflows.hpp"
#include "hnc/geometry/export.hpp"
#include "hnc/geometry/mesh.hpp"
#include "hnc/geometry/sample.hpp"
#include "hnc/geometry/voxel.hpp"

namespace hnc::app {

namespace fs = std::filesystem;
using nlohmann::json;
using hierarchy::Level;

namespace {

constexpr std::array<Level, 3> kLevels{Level::Loop, Level::Profile, Level::Solid};

// Resolved options plus the config they imply.
struct Context {
  json opts;
  PipelineConfig cfg;
  fs::path data;

  fs::path path(const char* key, const fs::path& fallback) {
    if (!opts.contains(key) || opts[key].is_null() || opts[key].get<std::string>().empty()) {
      opts[key] = fallback.string();
    }
    return opts[key].get<std::string>();
  }
  fs::path required(const char* key) {
    if (!opts.contains(key) || opts[key].is_null() || opts[key].get<std::string>().empty()) {
      throw std::invalid_argument(fmt::format("--{} is required", dashed(key)));
    }
    return opts[key].get<std::string>();
  }
  template <class T>
  T value(const char* key, T fallback) {
    if (!opts.contains(key) || opts[key].is_null()) opts[key] = fallback;
    return opts[key].get<T>();
  }
  std::uint64_t seed() { return value<std::uint64_t>("seed", cfg.seed); }

  static std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
  }
};

Context make_context(const json& options) {
  Context c;
  c.opts = options.is_object() ? options : json::object();
  c.data = data_dir(c.opts.contains("data") && c.opts["data"].is_string()
                        ? std::optional<fs::path>(c.opts["data"].get<std::string>())
                        : std::nullopt);
  c.opts["data"] = c.data.string();
  // Inline the config so reruns do not depend on the file.
  if (c.opts.contains("config_json") && c.opts["config_json"].is_object()) {
    c.cfg = PipelineConfig::from_json(c.opts["config_json"]);
  } else if (c.opts.contains("config") && c.opts["config"].is_string() && !c.opts["config"].get<std::string>().empty()) {
    const fs::path file = c.opts["config"].get<std::string>();
    if (!fs::exists(file)) throw DataError("config file not found: " + file.string());
    c.cfg = PipelineConfig::load(file);
  }
  c.opts.erase("config");
  c.opts["config_json"] = c.cfg.to_json();
  if (c.opts.contains("threads") && c.opts["threads"].is_number_integer()) {
    c.cfg.metrics.threads = std::max(1, c.opts["threads"].get<int>());
  }
  return c;
}

std::string dump_line(const json& j) { return j.dump(2) + "\n"; }

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: {}", file.string(), e.what()));
  }
}

std::vector<json> read_jsonl(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::vector<json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}:{}: {}", file.string(), n, e.what()));
    }
  }
  return out;
}

struct LoadedModels {
  std::vector<hierarchy::ModelRecord> records;
  std::vector<hierarchy::Exclusion> malformed;
};

void add_model(LoadedModels& out, const std::string& id, const json& j) {
  try {
    out.records.push_back({id, cad::model_from_json(j)});
  } catch (const cad::ValidationError& e) {
    out.malformed.push_back({id, std::string(cad::reason_code(e.reason())), e.what()});
  }
}

// A directory of model files, a JSONL file of {id, model} or bare models,
// or a JSON file holding one model, an array or {models: [...]}.
LoadedModels load_models(const fs::path& path) {
  LoadedModels out;
  if (!fs::exists(path)) throw DataError("not found: " + path.string());
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add_model(out, f.stem().string(), read_json(f));
    return out;
  }
  if (path.extension() == ".jsonl") {
    int i = 0;
    for (const auto& j : read_jsonl(path)) {
      if (j.contains("model")) {
        add_model(out, j.value("id", fmt::format("m{:05}", i)), j["model"]);
      } else {
        add_model(out, fmt::format("m{:05}", i), j);
      }
      ++i;
    }
    return out;
  }
  const json j = read_json(path);
  const json* list = j.is_array() ? &j : (j.contains("models") ? &j["models"] : nullptr);
  if (!list) {
    add_model(out, path.stem().string(), j);
    return out;
  }
  for (std::size_t i = 0; i < list->size(); ++i) add_model(out, fmt::format("m{:05}", i), (*list)[i]);
  return out;
}

cad::CadModel load_one_model(const fs::path& path) {
  const auto loaded = load_models(path);
  if (!loaded.malformed.empty()) {
    throw DataError(fmt::format("{}: {}", path.string(), loaded.malformed.front().detail));
  }
  if (loaded.records.size() != 1) throw DataError(path.string() + " must hold exactly one model");
  return loaded.records.front().model;
}

hierarchy::PropertyDataset open_dataset(const fs::path& dir) {
  try {
    return hierarchy::load_dataset(dir);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
}

vq::VqVae<float> open_codebook(const fs::path& dir) {
  if (!fs::exists(dir / "model.ckpt")) throw DataError("no trained codebook in " + dir.string());
  return vq::VqVae<float>::load(dir);
}

gen::Cascade<float> open_generator(const fs::path& dir) {
  if (!fs::exists(dir / "cascade.ckpt")) throw DataError("no trained generator in " + dir.string());
  return gen::Cascade<float>::load(dir);
}

std::uint64_t model_hash(const cad::CadModel& m) {
  return cad::hash_tokens(cad::tokenize(cad::canonical_sort(m)));
}

// ---------------------------------------------------------------- commands

RunOutput cmd_synth(Context& c) {
  const int n = c.value("n", 64);
  const auto seed = c.seed();
  cad::SyntheticOptions so;
  so.max_steps = c.value("max_steps", so.max_steps);
  const fs::path out = c.path("out", c.data / "corpus.jsonl");
  const int resolution = c.cfg.metrics.voxel_resolution;
  std::mt19937_64 rng(seed);
  std::string text;
  int rejected = 0;
  for (int i = 0; i < n; ++i) {
    // Keep models whose every step leaves material inside the unit cube.
    cad::CadModel m = cad::random_model(rng, so);
    while (!geometry::execute_model(m, resolution).skipped_steps.empty()) {
      ++rejected;
      m = cad::random_model(rng, so);
    }
    text += json{{"id", fmt::format("s{:05}", i)}, {"model", cad::to_json(m)}}.dump() + "\n";
  }
  write_text(out, text);
  return {c.opts, dump_line({{"models", n}, {"rejected", rejected}, {"out", out.string()}}), {out}};
}

RunOutput cmd_preprocess(Context& c) {
  const fs::path input = c.required("input");
  const fs::path out = c.path("out", c.data / "dataset");
  auto loaded = load_models(input);
  auto ds = hierarchy::build_dataset(loaded.records, c.cfg.caps);
  ds.excluded.insert(ds.excluded.end(), loaded.malformed.begin(), loaded.malformed.end());
  for (const auto& e : ds.excluded) std::cerr << fmt::format("excluded {}: {} ({})\n", e.id, e.reason, e.detail);
  hierarchy::save_dataset(ds, out);
  std::vector<fs::path> files;
  for (const char* f : {"manifest.jsonl", "card.json", "models.jsonl"}) files.push_back(out / f);
  return {c.opts, dump_line(hierarchy::dataset_card(ds)), files};
}

RunOutput cmd_train_codebook(Context& c) {
  const auto level_name = c.value<std::string>("level", "");
  Level level;
  try {
    level = hierarchy::level_from_name(level_name);
  } catch (const std::exception&) {
    throw std::invalid_argument("--level must be loop, profile or solid");
  }
  const fs::path dataset = c.path("dataset", c.data / "dataset");
  const fs::path out = c.path("out", c.data / "codebooks" / level_name);
  const auto seed = c.seed();
  auto tc = c.cfg.codebook_train;
  tc.seed = seed;
  tc.max_steps = c.value("max_steps", tc.max_steps);
  DirLock lock(c.data, DirLock::Mode::Exclusive);

  const auto ds = open_dataset(dataset);
  const auto items = ds.level_tokens(level);
  if (items.empty()) throw DataError(fmt::format("dataset has no {} properties", level_name));
  vq::VqVae<float> model(c.cfg.codebook(level), seed);
  const auto result = vq::train_vqvae(model, items, tc);
  model.save(out);
  const auto codes = model.encode(items);
  const std::set<int> used(codes.begin(), codes.end());
  const auto acc = vq::masked_accuracy(model, items, seed);
  json summary{{"level", level_name},
               {"items", items.size()},
               {"steps", result.log.size()},
               {"final_loss", result.log.empty() ? 0.0 : result.log.back().loss},
               {"reinitialized", result.reinitialized_total},
               {"codes_used", used.size()},
               {"masked_slot_accuracy", acc.slot},
               {"masked_token_accuracy", acc.token}};
  write_text(out / "summary.json", dump_line(summary));
  return {c.opts, dump_line(summary),
          {out / "model.ckpt", out / "codebook.ckpt", out / "codebook.json", out / "summary.json"}};
}

gen::CodeVocab vocab_of(const std::array<vq::VqVae<float>, 3>& books) {
  return {books[0].codebook().size(), books[1].codebook().size(), books[2].codebook().size()};
}

std::array<vq::VqVae<float>, 3> open_codebooks(const fs::path& dir) {
  return {open_codebook(dir / "loop"), open_codebook(dir / "profile"), open_codebook(dir / "solid")};
}

RunOutput cmd_encode_codes(Context& c) {
  const fs::path dataset = c.path("dataset", c.data / "dataset");
  const fs::path books_dir = c.path("codebooks", c.data / "codebooks");
  const fs::path out = c.path("out", c.data / "codes");
  const auto ds = open_dataset(dataset);
  const auto books = open_codebooks(books_dir);
  gen::LevelCodes codes;
  std::vector<fs::path> files;
  json used = json::object();
  for (Level l : kLevels) {
    const auto items = ds.level_tokens(l);
    auto assigned = books[static_cast<int>(l)].encode(items);
    const std::string name = hierarchy::level_name(l);
    const auto file = out / fmt::format("clusters_{}.jsonl", name);
    fs::create_directories(out);
    vq::export_clusters(file, assigned, items);
    files.push_back(file);
    used[name] = std::set<int>(assigned.begin(), assigned.end()).size();
    (l == Level::Loop ? codes.loops : l == Level::Profile ? codes.profiles : codes.solids) = std::move(assigned);
  }
  const auto vocab = vocab_of(books);
  const auto trees = gen::code_trees(ds, codes, vocab);
  std::string lines;
  for (std::size_t i = 0; i < trees.size(); ++i) lines += json{{"id", ds.models[i].id}, {"codes", trees[i]}}.dump() + "\n";
  write_text(out / "trees.jsonl", lines);
  write_text(out / "codes.json", dump_line({{"vocab", vocab.to_json()}, {"codes", codes.to_json()}}));
  files.push_back(out / "trees.jsonl");
  files.push_back(out / "codes.json");
  return {c.opts, dump_line({{"models", trees.size()}, {"codes_used", used}}), files};
}

std::map<std::string, gen::CodeTreeSequence> read_trees(const fs::path& codes_dir) {
  std::map<std::string, gen::CodeTreeSequence> out;
  for (const auto& j : read_jsonl(codes_dir / "trees.jsonl")) {
    out[j.at("id").get<std::string>()] = j.at("codes").get<gen::CodeTreeSequence>();
  }
  return out;
}

RunOutput cmd_train_generator(Context& c) {
  const fs::path dataset = c.path("dataset", c.data / "dataset");
  const fs::path codes_dir = c.path("codes", c.data / "codes");
  const fs::path books_dir = c.path("codebooks", c.data / "codebooks");
  const fs::path out = c.path("out", c.data / "generator");
  const auto seed = c.seed();
  auto tc = c.cfg.generator_train;
  tc.seed = seed;
  tc.max_steps = c.value("max_steps", tc.max_steps);
  DirLock lock(c.data, DirLock::Mode::Exclusive);

  const auto ds = open_dataset(dataset);
  const auto books = open_codebooks(books_dir);
  const auto tree_map = read_trees(codes_dir);
  std::vector<cad::CadModel> models;
  std::vector<gen::CodeTreeSequence> trees;
  for (std::size_t i = 0; i < ds.models.size(); ++i) {
    const auto it = tree_map.find(ds.models[i].id);
    if (it == tree_map.end()) throw DataError("no code tree for model " + ds.models[i].id);
    models.push_back(ds.retained[i]);
    trees.push_back(it->second);
  }
  if (models.empty()) throw DataError("dataset is empty");
  auto gcfg = c.cfg.generator;
  gcfg.vocab = vocab_of(books);
  gcfg.caps = ds.caps;
  if (books[0].codebook().dim() != gcfg.d_model()) {
    throw DataError(fmt::format("codebook width {} differs from generator width {}", books[0].codebook().dim(),
                                gcfg.d_model()));
  }
  gen::Cascade<float> model(gcfg,
                            gen::stack_codebooks(books[0].codebook(), books[1].codebook(), books[2].codebook()),
                            seed);
  const auto result = gen::train_cascade(model, models, trees, tc);
  model.save(out);
  json summary{{"models", models.size()},
               {"steps", result.log.size()},
               {"epoch_loss", result.epoch_loss},
               {"final_loss", result.log.empty() ? 0.0 : result.log.back().loss}};
  write_text(out / "summary.json", dump_line(summary));
  json brief = summary;
  brief.erase("epoch_loss");
  return {c.opts, dump_line(brief), {out / "cascade.ckpt", out / "codes.ckpt", out / "summary.json"}};
}

RunOutput with_optional_file(Context& c, const json& result) {
  RunOutput r{c.opts, dump_line(result), {}};
  if (c.opts.contains("out") && c.opts["out"].is_string() && !c.opts["out"].get<std::string>().empty()) {
    const fs::path out = c.opts["out"].get<std::string>();
    write_text(out, r.stdout_text);
    r.files.push_back(out);
  }
  return r;
}

RunOutput cmd_sample(Context& c) {
  const auto model = open_generator(c.path("model", c.data / "generator"));
  const int n = c.value("n", 1);
  const double p = c.value("p", 0.9);
  if (n < 0) throw std::invalid_argument("--n must be non-negative");
  const auto g = gen::sample_unconditional(model, n, p, p, c.seed());
  return with_optional_file(c, gen::to_json(g));
}

RunOutput cmd_autocomplete(Context& c) {
  const auto model = open_generator(c.path("model", c.data / "generator"));
  const auto partial = load_one_model(c.required("partial"));
  const int n = c.value("n", 5);
  const double p = c.value("p", 0.9);
  if (n < 0) throw std::invalid_argument("--n must be non-negative");
  return with_optional_file(c, gen::to_json(gen::autocomplete(model, partial, n, p, c.seed())));
}

gen::SlotPath parse_slot(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.empty()) throw std::invalid_argument("--slot must look like solid, profile:P or loop:P:L");
  json j{{"kind", parts[0]}};
  try {
    if (parts.size() > 1) j["profile"] = std::stoi(parts[1]);
    if (parts.size() > 2) j["loop"] = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw std::invalid_argument("--slot indices must be integers");
  }
  return gen::SlotPath::from_json(j);
}

RunOutput cmd_edit(Context& c) {
  const auto model = open_generator(c.path("model", c.data / "generator"));
  const auto& vocab = model.config().vocab;
  const json codes_json = read_json(c.required("codes"));
  const auto codes = (codes_json.is_object() ? codes_json.at("codes") : codes_json).get<gen::CodeTreeSequence>();
  const auto slot_text = c.value<std::string>("slot", "");
  const auto slot = parse_slot(slot_text);
  const auto level = hierarchy::level_from_name(
      c.value<std::string>("level", slot.kind == gen::SlotKind::Sep ? "loop" : hierarchy::level_name(gen::level_of(slot.kind))));
  const int code = c.value("code", 0);
  cad::CadModel partial;
  if (c.opts.contains("partial") && c.opts["partial"].is_string() && !c.opts["partial"].get<std::string>().empty()) {
    partial = load_one_model(c.opts["partial"].get<std::string>());
  }
  const auto edited = gen::edit_code_tree(codes, vocab, slot, vocab.token(level, code));
  const auto regenerated = gen::regenerate_with_codes(model, partial, edited);
  return with_optional_file(c, {{"codes", edited}, {"model", cad::to_json(regenerated)}});
}

std::vector<geometry::PointCloud> clouds_of(const std::vector<hierarchy::ModelRecord>& records,
                                            const metrics::MetricConfig& mc, std::uint64_t salt,
                                            std::vector<std::uint64_t>& hashes, int& skipped) {
  std::vector<geometry::PointCloud> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto grid = geometry::execute_model(records[i].model, mc.voxel_resolution).grid;
    if (grid.empty()) {
      ++skipped;
      continue;
    }
    std::mt19937_64 rng(mc.seed ^ (salt + 0x9e3779b97f4a7c15ULL * (i + 1)));
    out.push_back(geometry::sample_surface(grid, mc.points, rng));
    hashes.push_back(model_hash(records[i].model));
  }
  return out;
}

RunOutput cmd_evaluate(Context& c) {
  const fs::path gen_path = c.required("gen");
  const fs::path gt_path = c.required("gt");
  auto mc = c.cfg.metrics;
  mc.points = c.value("points", mc.points);
  mc.emd_points = std::min(mc.emd_points, mc.points);
  mc.seed = c.seed();
  const auto gen_models = load_models(gen_path);
  const auto gt_models = load_models(gt_path);
  std::vector<std::uint64_t> gen_hashes, gt_hashes;
  int gen_skipped = 0, gt_skipped = 0;
  const auto gen_clouds = clouds_of(gen_models.records, mc, 1, gen_hashes, gen_skipped);
  const auto gt_clouds = clouds_of(gt_models.records, mc, 2, gt_hashes, gt_skipped);
  if (gen_clouds.empty() || gt_clouds.empty()) throw DataError("both sets need at least one non-empty model");
  std::vector<std::uint64_t> train_hashes = gt_hashes;
  if (c.opts.contains("train") && c.opts["train"].is_string() && !c.opts["train"].get<std::string>().empty()) {
    const auto ds = open_dataset(c.opts["train"].get<std::string>());
    train_hashes.clear();
    for (const auto& m : ds.retained) train_hashes.push_back(model_hash(m));
  }
  auto report = metrics::evaluate_sets(gen_clouds, gt_clouds, gen_hashes, train_hashes, mc).to_json();
  report["skipped"] = {{"gen", gen_skipped + static_cast<int>(gen_models.malformed.size())},
                       {"gt", gt_skipped + static_cast<int>(gt_models.malformed.size())}};
  return with_optional_file(c, report);
}

RunOutput cmd_export_mesh(Context& c) {
  const fs::path input = c.required("input");
  const auto model = load_one_model(input);
  fs::path out = c.path("out", fs::path(input).replace_extension(".obj"));
  const auto mesh = geometry::mesh_model(model);
  write_text(out, geometry::to_obj(mesh));
  return {c.opts, dump_line({{"out", out.string()}, {"triangles", mesh.triangles.size()}}), {out}};
}

using Command = std::function<RunOutput(Context&)>;

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table{
      {"synth", cmd_synth},
      {"preprocess", cmd_preprocess},
      {"train-codebook", cmd_train_codebook},
      {"encode-codes", cmd_encode_codes},
      {"train-generator", cmd_train_generator},
      {"sample", cmd_sample},
      {"autocomplete", cmd_autocomplete},
      {"edit", cmd_edit},
      {"evaluate", cmd_evaluate},
      {"export-mesh", cmd_export_mesh},
  };
  return table;
}

std::uint64_t fnv(std::uint64_t h, const char* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::uint64_t hash_file(std::uint64_t h, const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv(h, buf, static_cast<std::size_t>(in.gcount()));
  }
  return h;
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : commands()) out.push_back(name);
  return out;
}

RunOutput run_command(const std::string& command, const json& options) {
  const auto it = commands().find(command);
  if (it == commands().end()) throw std::invalid_argument("unknown command " + command);
  Context c = make_context(options);
  return it->second(c);
}

std::string digest_text(const std::string& text) {
  return fmt::format("{:016x}", fnv(kFnvOffset, text.data(), text.size()));
}

std::string digest(const fs::path& path) {
  if (!fs::is_directory(path)) return fmt::format("{:016x}", hash_file(kFnvOffset, path));
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name != "manifest.json" && name != ".hnc.lock") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = kFnvOffset;
  for (const auto& f : files) {
    const auto rel = fs::relative(f, path).generic_string();
    h = fnv(h, rel.data(), rel.size() + 1);
    h = hash_file(h, f);
  }
  return fmt::format("{:016x}", h);
}

json make_manifest(const std::string& command, const json& options, const RunOutput& out) {
  json outputs = json::object();
  for (const auto& f : out.files) outputs[f.string()] = digest(f);
  json opts = options;
  const json config = opts.contains("config_json") ? opts["config_json"] : json();
  return {{"command", command},
          {"options", opts},
          {"config", config},
          {"seed", opts.value("seed", json())},
          {"versions",
           {{"hnc", kVersion},
            {"format", kFormatVersion},
            {"compiler", __VERSION__},
            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)}}},
          {"outputs", outputs},
          {"stdout", digest_text(out.stdout_text)}};
}

fs::path default_manifest_path(const std::string& command, const json& options) {
  if (options.contains("manifest") && options["manifest"].is_string() &&
      !options["manifest"].get<std::string>().empty()) {
    return options["manifest"].get<std::string>();
  }
  if (options.contains("out") && options["out"].is_string() && !options["out"].get<std::string>().empty()) {
    const fs::path out = options["out"].get<std::string>();
    if (fs::is_directory(out)) return out / "manifest.json";
    return fs::path(out.string() + ".manifest.json");
  }
  return data_dir(options.contains("data") && options["data"].is_string()
                      ? std::optional<fs::path>(options["data"].get<std::string>())
                      : std::nullopt) /
         "runs" / (command + ".manifest.json");
}

RerunReport rerun(const json& manifest) {
  RerunReport r;
  const auto command = manifest.at("command").get<std::string>();
  r.output = run_command(command, manifest.at("options"));
  const auto& expected = manifest.at("outputs");
  for (const auto& [file, hash] : expected.items()) {
    const fs::path f = file;
    const std::string now = fs::exists(f) ? digest(f) : std::string("missing");
    if (now != hash.get<std::string>()) r.mismatches.push_back(fmt::format("{}: {} != {}", file, now, hash.get<std::string>()));
  }
  for (const auto& f : r.output.files) {
    if (!expected.contains(f.string())) r.mismatches.push_back(f.string() + ": not in manifest");
  }
  if (digest_text(r.output.stdout_text) != manifest.value("stdout", std::string())) {
    r.mismatches.push_back("stdout differs");
  }
  r.identical = r.mismatches.empty();
  return r;
}

}  // namespace hnc::app
