#include "gns/app/vtk.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gns/errors.hpp"

namespace gns {

namespace {

void put_double(std::ostringstream& out, double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw ContractError("vtk: cannot format coordinate");
  out.write(buf, end - buf);
}

}  // namespace

std::string vtk_polydata(const Matrix& positions, std::span<const std::int64_t> types) {
  const std::size_t n = positions.rows();
  const std::size_t dim = positions.cols();
  if (n > 0 && dim != 2 && dim != 3) {
    throw ContractError("vtk: positions must have 2 or 3 columns, got " + std::to_string(dim));
  }
  if (types.size() != n) {
    throw ContractError("vtk: " + std::to_string(types.size()) + " types for " + std::to_string(n) +
                        " particles");
  }
  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\n"
      << "gns particles\n"
      << "ASCII\n"
      << "DATASET POLYDATA\n"
      << "POINTS " << n << " double\n";
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t d = 0; d < 3; ++d) {
      if (d > 0) out << ' ';
      put_double(out, d < dim ? positions(p, d) : 0.0);
    }
    out << '\n';
  }
  out << "VERTICES " << n << ' ' << 2 * n << '\n';
  for (std::size_t p = 0; p < n; ++p) out << "1 " << p << '\n';
  out << "POINT_DATA " << n << '\n'
      << "SCALARS particle_type int 1\n"
      << "LOOKUP_TABLE default\n";
  for (std::size_t p = 0; p < n; ++p) out << types[p] << '\n';
  return out.str();
}

void write_vtk(const Matrix& positions, std::span<const std::int64_t> types,
               const std::filesystem::path& path) {
  const std::string text = vtk_polydata(positions, types);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string vtk_frame_name(const std::string& prefix, std::size_t index, std::size_t frame_count) {
  const std::size_t last = frame_count > 0 ? frame_count - 1 : 0;
  const std::size_t width = std::max<std::size_t>(4, std::to_string(last).size());
  std::string number = std::to_string(index);
  if (number.size() < width) number.insert(0, width - number.size(), '0');
  return prefix + "_" + number + ".vtk";
}

std::vector<std::filesystem::path> export_vtk(const Trajectory& trajectory,
                                              const std::filesystem::path& directory,
                                              const std::string& prefix) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
  std::vector<std::filesystem::path> paths;
  for (std::size_t t = 0; t < trajectory.steps; ++t) {
    paths.push_back(directory / vtk_frame_name(prefix, t, trajectory.steps));
    write_vtk(trajectory.frame(t), trajectory.types, paths.back());
  }
  return paths;
}

}  // namespace gns
