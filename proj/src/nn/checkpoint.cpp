#include "hnc/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace hnc::nn {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'H', 'N', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class U>
void put(std::ostream& out, U v) {
  unsigned char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof b);
}

template <class U>
U get(std::istream& in) {
  unsigned char b[sizeof(U)];
  in.read(reinterpret_cast<char*>(b), sizeof b);
  if (!in) throw std::runtime_error("truncated checkpoint");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

json read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error(fmt::format("unsupported checkpoint version {}", version));
  const auto size = get<std::uint64_t>(in);
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  if (!in) throw std::runtime_error("truncated checkpoint header");
  return json::parse(text);
}

}  // namespace

template <class T>
void save_checkpoint(const std::filesystem::path& path, const ParameterSet<T>& params, const json& config) {
  json names = json::array();
  for (const auto& p : params.all()) names.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}});
  const std::string header = json{{"config", config}, {"params", names}}.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& p : params.all()) {
      for (Eigen::Index i = 0; i < p->value.size(); ++i) {
        put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(p->value.data()[i])));
      }
    }
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <class T>
json load_checkpoint(const std::filesystem::path& path, ParameterSet<T>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  const json header = read_header(in, path);
  std::map<std::string, std::vector<float>> values;
  std::map<std::string, std::pair<long, long>> shapes;
  for (const auto& e : header.at("params")) {
    const auto name = e.at("name").get<std::string>();
    const long r = e.at("shape")[0].get<long>(), c = e.at("shape")[1].get<long>();
    std::vector<float> v(static_cast<std::size_t>(r * c));
    for (auto& x : v) x = std::bit_cast<float>(get<std::uint32_t>(in));
    values[name] = std::move(v);
    shapes[name] = {r, c};
  }
  for (const auto& p : params.all()) {
    const auto it = values.find(p->name);
    if (it == values.end()) throw std::runtime_error("checkpoint lacks parameter " + p->name);
    const auto [r, c] = shapes[p->name];
    if (r != p->value.rows() || c != p->value.cols()) {
      throw std::runtime_error(fmt::format("shape mismatch for {}: {}x{} vs {}x{}", p->name, r, c,
                                           p->value.rows(), p->value.cols()));
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = static_cast<T>(it->second[i]);
  }
  return header.at("config");
}

json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_header(in, path);
}

template void save_checkpoint<float>(const std::filesystem::path&, const ParameterSet<float>&, const json&);
template void save_checkpoint<double>(const std::filesystem::path&, const ParameterSet<double>&, const json&);
template json load_checkpoint<float>(const std::filesystem::path&, ParameterSet<float>&);
template json load_checkpoint<double>(const std::filesystem::path&, ParameterSet<double>&);

}  // namespace hnc::nn
