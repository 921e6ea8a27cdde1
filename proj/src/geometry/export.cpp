#include "hnc/geometry/export.hpp"

#include <array>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace hnc::geometry {

void write_obj(const TriangleMesh& mesh, std::ostream& out) {
  out << "# hnc mesh\n";
  for (const auto& v : mesh.vertices) {
    out << fmt::format("v {:.6f} {:.6f} {:.6f}\n", v.x(), v.y(), v.z());
  }
  int current = -1;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const int step = mesh.triangle_step[t];
    if (step != current) {
      current = step;
      out << "g step_" << step << '\n';
      out << "usemtl " << (mesh.step_is_cut[step] ? "cut" : "solid") << '\n';
    }
    const auto& tri = mesh.triangles[t];
    out << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
  }
}

std::string to_obj(const TriangleMesh& mesh) {
  std::ostringstream out;
  write_obj(mesh, out);
  return out.str();
}

void write_xyz(const PointCloud& cloud, std::ostream& out) {
  for (const auto& p : cloud.points) {
    out << fmt::format("{:.9g} {:.9g} {:.9g}\n", p.x(), p.y(), p.z());
  }
}

PointCloud read_xyz(std::istream& in) {
  PointCloud cloud;
  double x, y, z;
  while (in >> x >> y >> z) cloud.points.emplace_back(x, y, z);
  return cloud;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw std::runtime_error("truncated voxel file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void write_voxels(const VoxelGrid& grid, std::ostream& out) {
  const auto& bits = grid.bits();
  std::vector<char> packed((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
  }
  out.write("HNCV", 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(grid.resolution()));
  put_le<std::uint64_t>(out, packed.size());
  out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
}

VoxelGrid read_voxels(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HNCV", 4) != 0) throw std::runtime_error("not a voxel file");
  const auto r = get_le<std::uint32_t>(in);
  const auto bytes = get_le<std::uint64_t>(in);
  VoxelGrid grid(static_cast<int>(r));
  if (bytes != (grid.size() + 7) / 8) throw std::runtime_error("voxel payload size mismatch");
  std::vector<char> packed(bytes);
  in.read(packed.data(), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("truncated voxel file");
  for (int k = 0; k < grid.resolution(); ++k) {
    for (int j = 0; j < grid.resolution(); ++j) {
      for (int i = 0; i < grid.resolution(); ++i) {
        const auto idx = grid.index(i, j, k);
        grid.set(i, j, k, (packed[idx / 8] >> (idx % 8)) & 1);
      }
    }
  }
  return grid;
}

}  // namespace hnc::geometry
