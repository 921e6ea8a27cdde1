#include "hnc/cad/json_io.hpp"

#include <fstream>

namespace hnc::cad {

using nlohmann::json;

json to_json(const CadModel& model) {
  json steps = json::array();
  for (const auto& step : model.steps) {
    json loops = json::array();
    for (const auto& loop : step.loops) {
      json curves = json::array();
      for (const auto& curve : loop.curves) {
        json pts = json::array();
        for (const auto& p : curve.points) pts.push_back({p.x, p.y});
        curves.push_back({{"pts", pts}});
      }
      loops.push_back({{"curves", curves}});
    }
    steps.push_back({{"loops", loops},
                     {"plane",
                      {{"o", step.plane.origin},
                       {"a", step.plane.angles},
                       {"s", step.plane.scale}}},
                     {"d", step.distance},
                     {"op", std::string(to_string(step.op))}});
  }
  return {{"steps", steps}};
}

CadModel model_from_json(const json& j) {
  CadModel model;
  try {
    for (const auto& js : j.at("steps")) {
      ExtrudeStep step;
      for (const auto& jl : js.at("loops")) {
        Loop loop;
        for (const auto& jc : jl.at("curves")) {
          Curve curve;
          for (const auto& jp : jc.at("pts")) {
            curve.points.push_back({jp.at(0).get<int>(), jp.at(1).get<int>()});
          }
          loop.curves.push_back(std::move(curve));
        }
        step.loops.push_back(std::move(loop));
      }
      const auto& plane = js.at("plane");
      step.plane.origin = plane.at("o").get<std::array<int, 3>>();
      step.plane.angles = plane.at("a").get<std::array<int, 3>>();
      step.plane.scale = plane.at("s").get<int>();
      step.distance = js.at("d").get<int>();
      step.op = bool_op_from_string(js.value("op", std::string("union")));
      model.steps.push_back(std::move(step));
    }
  } catch (const json::exception& e) {
    throw ValidationError(Reason::UnexpectedToken,
                          std::string("malformed model JSON: ") + e.what());
  }
  validate(model);
  return model;
}

CadModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(Reason::UnexpectedToken,
                          path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const CadModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

}  // namespace hnc::cad
