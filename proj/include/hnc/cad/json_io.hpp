#pragma once

#include <filesystem>

#include "json.hpp"

#include "hnc/cad/model.hpp"

namespace hnc::cad {

// {steps:[{loops:[{curves:[{pts:[[x,y],...]}]}], plane:{o:[..],a:[..],s}, d, op}]}
nlohmann::json to_json(const CadModel& model);
// Structural validation is applied; throws ValidationError.
CadModel model_from_json(const nlohmann::json& j);

CadModel load_model(const std::filesystem::path& path);
void save_model(const CadModel& model, const std::filesystem::path& path);

}  // namespace hnc::cad
