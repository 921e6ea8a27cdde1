#pragma once

#include <filesystem>

#include "json.hpp"

#include "hnc/nn/tape.hpp"

namespace hnc::nn {

// "HNCK", u32 version, u64 header size, JSON header
// {config, params:[{name, shape:[r,c]}]}, then little-endian f32 values in
// header order. Written to a temporary file and renamed into place.
template <class T>
void save_checkpoint(const std::filesystem::path& path, const ParameterSet<T>& params,
                     const nlohmann::json& config);

// Loads values by name; every parameter of `params` must be present with a
// matching shape. Returns the stored config. Throws std::runtime_error.
template <class T>
nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet<T>& params);

nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

}  // namespace hnc::nn
