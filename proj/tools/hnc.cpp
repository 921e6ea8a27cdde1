#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "hnc/app/lock.hpp"
#include "hnc/app/pipeline.hpp"
#include "hnc/app/service.hpp"
#include "hnc/cad/model.hpp"
#include "hnc/gen/code_tree.hpp"
#include "hnc/gen/workflows.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

enum class Kind { Text, Int, Real };

struct Flag {
  std::string name;  // long name without dashes
  Kind kind;
  std::string help;
  bool required = false;
};

// Flags of every pipeline command. Values land in the options JSON under the
// flag name with dashes replaced by underscores.
const std::map<std::string, std::pair<std::string, std::vector<Flag>>>& command_flags() {
  static const std::map<std::string, std::pair<std::string, std::vector<Flag>>> table{
      {"synth",
       {"write a synthetic corpus (JSONL of {id, model})",
        {{"n", Kind::Int, "number of models"},
         {"max-steps", Kind::Int, "largest step count"},
         {"out", Kind::Text, "output file"}}}},
      {"preprocess",
       {"dedup, filter by caps and extract properties",
        {{"input", Kind::Text, "model directory, JSONL or JSON file", true},
         {"out", Kind::Text, "dataset directory"}}}},
      {"train-codebook",
       {"train one level's VQ-VAE",
        {{"level", Kind::Text, "loop, profile or solid", true},
         {"dataset", Kind::Text, "dataset directory"},
         {"max-steps", Kind::Int, "stop after this many updates"},
         {"out", Kind::Text, "checkpoint directory"}}}},
      {"encode-codes",
       {"assign codes and write code trees and cluster listings",
        {{"dataset", Kind::Text, "dataset directory"},
         {"codebooks", Kind::Text, "directory holding loop/, profile/, solid/"},
         {"out", Kind::Text, "output directory"}}}},
      {"train-generator",
       {"train encoder, code-tree generator and model generator",
        {{"dataset", Kind::Text, "dataset directory"},
         {"codes", Kind::Text, "encode-codes output"},
         {"codebooks", Kind::Text, "codebook directory"},
         {"max-steps", Kind::Int, "stop after this many updates"},
         {"out", Kind::Text, "checkpoint directory"}}}},
      {"sample",
       {"unconditional samples",
        {{"model", Kind::Text, "generator directory"},
         {"n", Kind::Int, "number of samples"},
         {"p", Kind::Real, "nucleus mass"},
         {"out", Kind::Text, "also write the JSON here"}}}},
      {"autocomplete",
       {"complete a partial model",
        {{"model", Kind::Text, "generator directory"},
         {"partial", Kind::Text, "partial model JSON", true},
         {"n", Kind::Int, "variants"},
         {"p", Kind::Real, "nucleus mass for code trees"},
         {"out", Kind::Text, "also write the JSON here"}}}},
      {"edit",
       {"replace one code and regenerate",
        {{"model", Kind::Text, "generator directory"},
         {"codes", Kind::Text, "code tree JSON (array or {codes})", true},
         {"slot", Kind::Text, "solid | profile:P | loop:P:L", true},
         {"code", Kind::Int, "new code index", true},
         {"level", Kind::Text, "level of the new code (default: the slot's)"},
         {"partial", Kind::Text, "partial model JSON"},
         {"out", Kind::Text, "also write the JSON here"}}}},
      {"evaluate",
       {"COV, MMD, JSD, Novel and Unique of generated against reference models",
        {{"gen", Kind::Text, "generated models", true},
         {"gt", Kind::Text, "reference models", true},
         {"train", Kind::Text, "training dataset for Novel (default: reference set)"},
         {"points", Kind::Int, "surface points per model"},
         {"out", Kind::Text, "also write the report here"}}}},
      {"export-mesh",
       {"write a viewer mesh as OBJ",
        {{"input", Kind::Text, "model JSON", true}, {"out", Kind::Text, "OBJ file"}}}},
  };
  return table;
}

std::string key_of(std::string name) {
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

json typed(const std::string& text, Kind kind) {
  switch (kind) {
    case Kind::Text: return text;
    case Kind::Int: return std::stoi(text);
    case Kind::Real: return std::stod(text);
  }
  return text;
}

void write_manifest(const std::string& command, const hnc::app::RunOutput& out) {
  const auto path = hnc::app::default_manifest_path(command, out.options);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path) << hnc::app::make_manifest(command, out.options, out).dump(2) << '\n';
  std::cerr << "manifest: " << path.string() << '\n';
}

int classify(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const hnc::app::LockBusy& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  } catch (const hnc::app::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const hnc::cad::ValidationError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const hnc::gen::CodeTreeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical neural coding pipeline for sketch-and-extrude CAD models"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string data, config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  app.add_option("--data", data, "data directory (default: $HNC_DATA_DIR or ./hnc-data)");
  app.add_option("--config", config, "pipeline config JSON");
  app.add_option("--seed", seed, "random seed (default: config seed)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, spec] : command_flags()) {
    auto* sub = app.add_subcommand(name, spec.first);
    subs[name] = sub;
    for (const auto& f : spec.second) {
      auto* opt = sub->add_option("--" + f.name, values[name][f.name], f.help);
      if (f.required) opt->required();
      if (f.kind == Kind::Int) opt->check(CLI::Number);
      if (f.kind == Kind::Real) opt->check(CLI::Number);
    }
  }

  std::string manifest_path;
  bool no_check = false;
  auto* rerun = app.add_subcommand("rerun", "replay a run from its manifest and compare outputs");
  rerun->add_option("manifest", manifest_path, "manifest JSON")->required();
  rerun->add_flag("--no-check", no_check, "only replay");

  std::string host = "127.0.0.1", model_dir, dataset_dir, codes_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP JSON service");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port (0 picks a free one)");
  serve->add_option("--model", model_dir, "generator directory");
  serve->add_option("--dataset", dataset_dir, "dataset directory");
  serve->add_option("--codes", codes_dir, "encode-codes output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  json common = json::object();
  if (!data.empty()) common["data"] = data;
  if (!config.empty()) common["config"] = config;
  if (seed) common["seed"] = *seed;
  common["threads"] = threads;

  try {
    if (rerun->parsed()) {
      std::ifstream in(manifest_path);
      if (!in) throw hnc::app::DataError("cannot open " + manifest_path);
      const json manifest = json::parse(in);
      const auto report = hnc::app::rerun(manifest);
      std::cout << report.output.stdout_text;
      if (no_check) return kOk;
      if (!report.identical) {
        for (const auto& m : report.mismatches) std::cerr << "mismatch: " << m << '\n';
        return kRuntime;
      }
      std::cerr << "rerun identical: " << manifest.at("outputs").size() << " outputs\n";
      return kOk;
    }
    if (serve->parsed()) {
      const fs::path root = hnc::app::data_dir(data.empty() ? std::nullopt : std::optional<fs::path>(data));
      auto pick = [&](const std::string& flag, const fs::path& fallback, const char* marker) -> std::optional<fs::path> {
        if (!flag.empty()) return fs::path(flag);
        if (fs::exists(fallback / marker)) return fallback;
        return std::nullopt;
      };
      hnc::app::ServiceConfig sc;
      sc.generator = pick(model_dir, root / "generator", "cascade.ckpt");
      sc.dataset = pick(dataset_dir, root / "dataset", "card.json");
      sc.codes = pick(codes_dir, root / "codes", "trees.jsonl");
      sc.threads = threads;
      hnc::app::DirLock lock(root, hnc::app::DirLock::Mode::Shared);
      hnc::app::Service service(sc);
      hnc::app::RunOutput out;
      out.options = common;
      out.options["data"] = root.string();
      out.options["host"] = host;
      out.options["port"] = port;
      out.options["health"] = service.health();
      write_manifest("serve", out);
      std::atomic<bool> finished{false};
      std::thread announce([&] {
        while (service.bound_port() == 0 && !finished) std::this_thread::sleep_for(std::chrono::milliseconds(10));
        if (service.bound_port() > 0) std::cerr << "listening on " << host << ":" << service.bound_port() << '\n';
      });
      const bool ok = service.listen(host, port);
      finished = true;
      announce.join();
      if (!ok) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
      return kOk;
    }
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      json options = common;
      for (const auto& f : command_flags().at(name).second) {
        if (sub->count("--" + f.name) > 0) options[key_of(f.name)] = typed(values[name][f.name], f.kind);
      }
      const auto out = hnc::app::run_command(name, options);
      std::cout << out.stdout_text;
      write_manifest(name, out);
      return kOk;
    }
  } catch (...) {
    return classify(std::current_exception());
  }
  return kUsage;
}
