#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "../support/pipeline_fixture.hpp"
#include "doctest.h"
#include "httplib.h"
#include "hnc/app/lock.hpp"
#include "hnc/app/service.hpp"
#include "hnc/cad/json_io.hpp"
#include "hnc/cad/synthetic.hpp"
#include "hnc/gen/workflows.hpp"

using namespace hnc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Built once, shared by the tests that only read it.
const fs::path& pipeline() {
  static const fs::path dir = [] {
    auto d = testing::fresh_dir("app");
    testing::build_pipeline(d);
    return d;
  }();
  return dir;
}

app::ServiceConfig service_config() {
  app::ServiceConfig sc;
  sc.generator = pipeline() / "generator";
  sc.dataset = pipeline() / "dataset";
  sc.codes = pipeline() / "codes";
  return sc;
}

const app::Service& service() {
  static const app::Service s(service_config());
  return s;
}

json first_tree() {
  std::ifstream in(pipeline() / "codes" / "trees.jsonl");
  std::string line;
  std::getline(in, line);
  return json::parse(line);
}

json first_model() {
  std::ifstream in(pipeline() / "dataset" / "models.jsonl");
  std::string line;
  std::getline(in, line);
  return json::parse(line);
}

cad::ExtrudeStep square_step(int d = 20) {
  cad::ExtrudeStep s;
  s.loops = {cad::make_rectangle(8, 8, 40, 40)};
  s.distance = d;
  return s;
}

struct Shell {
  int code;
  std::string out;
};

Shell run_cli(const std::string& args) {
  const std::string cmd = std::string(HNC_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("config merges partial files over defaults") {
  const auto def = app::PipelineConfig();
  CHECK(def.codebook_train.batch == 256);
  CHECK(def.generator_train.batch == 256);
  CHECK(def.caps.max_steps == 5);

  const auto c = app::PipelineConfig::from_json({{"caps", {{"max_steps", 3}}}, {"seed", 9}});
  CHECK(c.caps.max_steps == 3);
  CHECK(c.generator.caps.max_steps == 3);
  CHECK(c.seed == 9);
  CHECK(c.codebook_train.batch == 256);
  CHECK(c.codebook(hierarchy::Level::Profile).codebook.size == def.codebook(hierarchy::Level::Profile).codebook.size);
  CHECK(app::PipelineConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("data directory precedence") {
  ::setenv("HNC_DATA_DIR", "/tmp/from-env", 1);
  CHECK(app::data_dir(fs::path("/tmp/flag")) == fs::path("/tmp/flag"));
  CHECK(app::data_dir() == fs::path("/tmp/from-env"));
  ::unsetenv("HNC_DATA_DIR");
  CHECK(app::data_dir() == fs::path("hnc-data"));
}

TEST_CASE("directory lock excludes training while shared") {
  const auto dir = testing::fresh_dir("lock");
  {
    app::DirLock a(dir, app::DirLock::Mode::Shared);
    app::DirLock b(dir, app::DirLock::Mode::Shared);
    CHECK_THROWS_AS(app::DirLock(dir, app::DirLock::Mode::Exclusive), app::LockBusy);
  }
  {
    app::DirLock a(dir, app::DirLock::Mode::Exclusive);
    CHECK_THROWS_AS(app::DirLock(dir, app::DirLock::Mode::Shared), app::LockBusy);
  }
  CHECK_NOTHROW(app::DirLock(dir, app::DirLock::Mode::Exclusive));
}

TEST_CASE("training commands refuse a locked data directory") {
  app::DirLock held(pipeline(), app::DirLock::Mode::Shared);
  CHECK_THROWS_AS(app::run_command("train-codebook", testing::run_options(pipeline(), {{"level", "loop"}, {"max_steps", 1},
                                                                                    {"out", (pipeline() / "tmp").string()}})),
                  app::LockBusy);
  CHECK_THROWS_AS(app::run_command("train-generator", testing::run_options(pipeline(), {{"max_steps", 1},
                                                                                     {"out", (pipeline() / "tmp").string()}})),
                  app::LockBusy);
}

TEST_CASE("pipeline writes every artifact") {
  const auto& d = pipeline();
  for (const char* f : {"corpus.jsonl", "dataset/card.json", "dataset/models.jsonl", "codebooks/loop/model.ckpt",
                        "codebooks/profile/summary.json", "codebooks/solid/codebook.json", "codes/trees.jsonl",
                        "codes/clusters_loop.jsonl", "codes/codes.json", "generator/cascade.ckpt", "generator/summary.json"}) {
    INFO(f);
    CHECK(fs::exists(d / f));
  }
  const auto summary = json::parse(std::ifstream(d / "codebooks" / "loop" / "summary.json"));
  CHECK(summary.at("steps") == 4);
  CHECK(summary.contains("masked_token_accuracy"));
}

TEST_CASE("preprocess excludes a six-step model with its reason") {
  const auto dir = testing::fresh_dir("pre");
  cad::CadModel six;
  for (int i = 0; i < 6; ++i) six.steps.push_back(square_step(10 + i));
  const cad::CadModel ok{{square_step()}};
  std::ofstream(dir / "corpus.jsonl") << json{{"id", "six"}, {"model", cad::to_json(six)}}.dump() << "\n"
                                      << json{{"id", "ok"}, {"model", cad::to_json(ok)}}.dump() << "\n";
  app::run_command("preprocess", testing::run_options(dir, {{"input", (dir / "corpus.jsonl").string()}}));
  const auto card = json::parse(std::ifstream(dir / "dataset" / "card.json"));
  REQUIRE(card.at("excluded").size() == 1);
  CHECK(card["excluded"][0]["id"] == "six");
  CHECK(card["excluded"][0]["reason"] == "too_many_steps");
  CHECK(card["counts"]["models"] == 1);
}

TEST_CASE("reruns from manifests are bit-identical") {
  const auto& d = pipeline();
  const auto scratch = testing::fresh_dir("rerun");
  const std::vector<std::pair<std::string, json>> runs{
      {"synth", {{"n", 5}, {"out", (scratch / "c.jsonl").string()}}},
      {"preprocess", {{"input", (d / "corpus.jsonl").string()}, {"out", (scratch / "ds").string()}}},
      {"train-codebook", {{"level", "profile"}, {"max_steps", 3}, {"out", (scratch / "cb").string()}}},
      {"encode-codes", {{"out", (scratch / "codes").string()}}},
      {"train-generator", {{"max_steps", 2}, {"out", (scratch / "gen").string()}}},
      {"sample", {{"n", 3}, {"p", 0.9}, {"out", (scratch / "s.json").string()}}},
      {"autocomplete", {{"partial", (scratch / "partial.json").string()}, {"n", 2}, {"out", (scratch / "a.json").string()}}},
      {"evaluate", {{"gen", (d / "dataset" / "models.jsonl").string()}, {"gt", (d / "corpus.jsonl").string()},
                    {"out", (scratch / "e.json").string()}}},
      {"export-mesh", {{"input", (scratch / "partial.json").string()}, {"out", (scratch / "m.obj").string()}}},
  };
  std::ofstream(scratch / "partial.json") << first_model().at("model").dump();
  for (const auto& [cmd, extra] : runs) {
    INFO(cmd);
    const auto out = app::run_command(cmd, testing::run_options(d, extra));
    CHECK(!out.files.empty());
    const auto manifest = app::make_manifest(cmd, out.options, out);
    CHECK(manifest.at("versions").at("hnc") == app::kVersion);
    CHECK(manifest.at("config").is_object());
    // Through text, as the CLI stores it.
    const auto report = app::rerun(json::parse(manifest.dump()));
    CHECK(report.identical);
    for (const auto& m : report.mismatches) MESSAGE(m);
  }
  // A changed artifact is reported.
  const auto out = app::run_command("sample", testing::run_options(d, {{"n", 2}, {"out", (scratch / "t.json").string()}}));
  auto manifest = app::make_manifest("sample", out.options, out);
  manifest["outputs"][(scratch / "t.json").string()] = "0000000000000000";
  CHECK_FALSE(app::rerun(manifest).identical);
}

TEST_CASE("sample with a fixed seed repeats") {
  const auto opts = testing::run_options(pipeline(), {{"n", 3}, {"p", 0.9}});
  auto a = opts, b = opts;
  a["seed"] = b["seed"] = 7;
  CHECK(app::run_command("sample", a).stdout_text == app::run_command("sample", b).stdout_text);
}

TEST_CASE("unknown command and missing inputs") {
  CHECK_THROWS_AS(app::run_command("nope", json::object()), std::invalid_argument);
  CHECK_THROWS_AS(app::run_command("preprocess", testing::run_options(pipeline())), std::invalid_argument);
  CHECK_THROWS_AS(app::run_command("evaluate", testing::run_options(pipeline(), {{"gen", "/nonexistent"}, {"gt", "/nonexistent"}})),
                  app::DataError);
}

TEST_CASE("service read routes") {
  const auto& s = service();
  auto r = s.handle("GET", "/health", "");
  CHECK(r.status == 200);
  const auto health = json::parse(r.body);
  CHECK(health.at("status") == "ok");
  CHECK(health.at("checkpoints").at("generator").is_string());

  const auto id = first_model().at("id").get<std::string>();
  r = s.handle("GET", "/model/" + id, "");
  CHECK(r.status == 200);
  CHECK(json::parse(r.body).at("model") == first_model().at("model"));
  CHECK(s.handle("GET", "/model/missing", "").status == 404);

  r = s.handle("GET", "/mesh/" + id, "");
  CHECK(r.status == 200);
  CHECK(r.body.find("\nf ") != std::string::npos);
  CHECK(s.handle("GET", "/mesh/missing", "").status == 404);

  r = s.handle("GET", "/codebook/loop/clusters", "");
  CHECK(r.status == 200);
  CHECK(json::parse(r.body).is_array());
  CHECK(s.handle("GET", "/codebook/edge/clusters", "").status == 404);
  CHECK(s.handle("GET", "/nowhere", "").status == 404);
  CHECK(s.handle("DELETE", "/health", "").status == 404);

  r = s.handle("GET", "/spec", "");
  const auto spec = json::parse(r.body);
  CHECK(spec.at("openapi") == "3.0.3");
  for (const char* p : {"/health", "/model/{id}", "/generate", "/autocomplete", "/codes/edit", "/regenerate", "/mesh/{id}",
                        "/codebook/{level}/clusters"}) {
    CHECK(spec.at("paths").contains(p));
  }
}

TEST_CASE("service code edits") {
  const auto& s = service();
  const auto codes = first_tree().at("codes");
  const auto vocab = gen::Cascade<float>::load(pipeline() / "generator").config().vocab;

  auto r = s.handle("POST", "/codes/edit", json{{"codes", codes}, {"path", {{"kind", "solid"}}}, {"code", 1}}.dump());
  CHECK(r.status == 200);
  auto edited = json::parse(r.body).at("codes").get<gen::CodeTreeSequence>();
  CHECK(edited[0] == vocab.token(hierarchy::Level::Solid, 1));
  CHECK(std::equal(edited.begin() + 1, edited.end(), codes.begin() + 1));

  // Solid slot given a loop code.
  r = s.handle("POST", "/codes/edit",
               json{{"codes", codes}, {"path", {{"kind", "solid"}}}, {"code", 0}, {"level", "loop"}}.dump());
  CHECK(r.status == 409);
  r = s.handle("POST", "/codes/edit",
               json{{"codes", codes}, {"path", {{"kind", "solid"}}}, {"token", vocab.token(hierarchy::Level::Loop, 0)}}.dump());
  CHECK(r.status == 409);

  CHECK(s.handle("POST", "/codes/edit", "{not json").status == 400);
  CHECK(s.handle("POST", "/codes/edit", json{{"codes", codes}}.dump()).status == 400);
  CHECK(s.handle("POST", "/codes/edit", json{{"codes", codes}, {"path", {{"kind", "profile"}, {"profile", 99}}}, {"code", 0}}.dump())
            .status == 400);
  CHECK(s.handle("POST", "/codes/edit", json{{"codes", {vocab.sep(), vocab.eos()}}, {"path", {{"kind", "solid"}}}, {"code", 0}}.dump()).status == 400);
}

TEST_CASE("service generation") {
  const auto& s = service();
  const auto before = s.handle("GET", "/health", "").body;
  const auto codes = first_tree().at("codes");
  const auto partial = first_model().at("model");

  const json regen{{"codes", codes}, {"partial", partial}};
  const auto a = s.handle("POST", "/regenerate", regen.dump());
  const auto b = s.handle("POST", "/regenerate", regen.dump());
  CHECK(a.status == 200);
  CHECK(a.body == b.body);
  CHECK(json::parse(a.body).at("models").size() == 1);
  CHECK(s.handle("POST", "/regenerate", json{{"codes", codes}}.dump()).status == 200);
  CHECK(s.handle("POST", "/regenerate", json{{"partial", partial}}.dump()).status == 400);

  auto r = s.handle("POST", "/autocomplete", json{{"partial", partial}, {"seed", 4}}.dump());
  CHECK(r.status == 200);
  auto body = json::parse(r.body);
  CHECK(body.at("models").size() + body.at("dropped").get<std::size_t>() == 5);
  CHECK(body.at("codes").size() == body.at("models").size());

  r = s.handle("POST", "/generate", json{{"mode", "unconditional"}, {"n", 3}, {"p", 0.9}, {"seed", 2}}.dump());
  CHECK(r.status == 200);
  CHECK(r.body == s.handle("POST", "/generate", json{{"mode", "unconditional"}, {"n", 3}, {"p", 0.9}, {"seed", 2}}.dump()).body);
  CHECK(s.handle("POST", "/generate", json{{"mode", "dream"}}.dump()).status == 400);
  CHECK(s.handle("POST", "/generate", "[1,2]").status == 400);
  CHECK(s.handle("POST", "/generate", json{{"mode", "autocomplete"}, {"partial", {{"steps", 3}}}}.dump()).status == 400);

  r = s.handle("POST", "/mesh", partial.dump());
  CHECK(r.status == 200);
  CHECK(r.body.find("\nf ") != std::string::npos);

  CHECK(s.handle("GET", "/health", "").body == before);
}

TEST_CASE("handler errors map to statuses") {
  auto status = [](auto&& thrower) {
    try {
      thrower();
    } catch (...) {
      return app::Service::map_error(std::current_exception());
    }
    return app::HttpResponse{};
  };
  auto r = status([] { throw gen::DecodeError("bad", 3); });
  CHECK(r.status == 500);
  CHECK(json::parse(r.body).at("dropped") == 3);
  CHECK(status([] { throw gen::CodeTreeError(gen::CodeTreeError::Kind::LevelMismatch, "x"); }).status == 409);
  CHECK(status([] { throw gen::CodeTreeError(gen::CodeTreeError::Kind::Grammar, "x"); }).status == 400);
  CHECK(status([] { throw cad::ValidationError(cad::Reason::LoopNotClosed, "x"); }).status == 400);
  CHECK(status([] { throw std::invalid_argument("x"); }).status == 400);
  CHECK(status([] { throw std::runtime_error("x"); }).status == 500);
}

TEST_CASE("service without checkpoints") {
  const app::Service s(app::ServiceConfig{});
  CHECK(s.handle("GET", "/health", "").status == 200);
  CHECK(s.handle("POST", "/generate", json{{"mode", "unconditional"}, {"n", 1}}.dump()).status == 500);
  CHECK(s.handle("GET", "/model/x", "").status == 404);
}

TEST_CASE("service over a socket") {
  app::Service s(service_config());
  std::thread server([&] { s.listen("127.0.0.1", 0); });
  for (int i = 0; i < 500 && s.bound_port() == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  REQUIRE(s.bound_port() > 0);
  httplib::Client client("127.0.0.1", s.bound_port());
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body).at("status") == "ok");
  const json bad{{"codes", first_tree().at("codes")}, {"path", {{"kind", "solid"}}}, {"code", 0}, {"level", "loop"}};
  auto edit = client.Post("/codes/edit", bad.dump(), "application/json");
  REQUIRE(edit);
  CHECK(edit->status == 409);
  auto missing = client.Get("/model/none");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  s.stop();
  server.join();
}

TEST_CASE("cli exit codes") {
  const auto& d = pipeline();
  const std::string data = "--data " + d.string() + " ";
  CHECK(run_cli("--bogus sample").code == 1);
  CHECK(run_cli("sample --bogus").code == 1);
  CHECK(run_cli("").code == 1);
  CHECK(run_cli(data + "evaluate --gen /nonexistent --gt /nonexistent").code == 2);
  CHECK(run_cli(data + "train-codebook --level edge").code == 1);

  const auto scratch = testing::fresh_dir("cli");
  std::ofstream(scratch / "tiny.json") << testing::tiny_pipeline_config().dump();
  const std::string cfg = data + "--config " + (scratch / "tiny.json").string() + " ";
  auto a = run_cli(cfg + "sample --n 3 --p 0.9 --seed 7");
  auto b = run_cli(cfg + "sample --n 3 --p 0.9 --seed 7");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(json::parse(a.out).contains("models"));

  CHECK(run_cli(cfg + "sample --n 2 --seed 1 --out " + (scratch / "s.json").string()).code == 0);
  CHECK(run_cli("rerun " + (scratch / "s.json.manifest.json").string()).code == 0);
  auto manifest = json::parse(std::ifstream(scratch / "s.json.manifest.json"));
  manifest["stdout"] = "0";
  std::ofstream(scratch / "bad.manifest.json") << manifest.dump();
  CHECK(run_cli("rerun " + (scratch / "bad.manifest.json").string()).code == 3);

  app::DirLock held(d, app::DirLock::Mode::Shared);
  CHECK(run_cli(cfg + "train-codebook --level loop --max-steps 1 --out " + (scratch / "cb").string()).code == 3);
}
