#include "gns/graph/radius_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gns/errors.hpp"

namespace gns {

namespace {

void check_inputs(const Matrix& positions, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ContractError("radius_graph: radius must be positive and finite");
  }
  if (positions.cols() < 1 || positions.cols() > 3) {
    throw ContractError("radius_graph: positions must have 1 to 3 columns, got " +
                        positions.shape_string());
  }
  for (double v : positions.values()) {
    if (!std::isfinite(v)) throw ContractError("radius_graph: non-finite position");
  }
}

double squared_distance(const Matrix& x, std::size_t i, std::size_t j) {
  double d2 = 0.0;
  for (std::size_t d = 0; d < x.cols(); ++d) {
    const double r = x(i, d) - x(j, d);
    d2 += r * r;
  }
  return d2;
}

}  // namespace

std::size_t CellList::CellHash::operator()(const Cell& c) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ull;
  for (std::int64_t v : c) {
    h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

CellList::CellList(const Matrix& positions, double cell_size)
    : dim_(positions.cols()), cell_size_(cell_size) {
  check_inputs(positions, cell_size);
  for (std::size_t i = 0; i < positions.rows(); ++i) cells_[cell_of(positions.row(i))].push_back(i);
}

CellList::Cell CellList::cell_of(std::span<const double> position) const {
  Cell c{0, 0, 0};
  for (std::size_t d = 0; d < dim_; ++d) {
    c[d] = static_cast<std::int64_t>(std::floor(position[d] / cell_size_));
  }
  return c;
}

const std::vector<std::size_t>& CellList::particles_in(const Cell& cell) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = cells_.find(cell);
  return it == cells_.end() ? kEmpty : it->second;
}

Edges radius_graph(const Matrix& positions, double radius, bool self_edges) {
  const CellList cells(positions, radius);
  const std::size_t dim = positions.cols();
  const double r2 = radius * radius;
  const std::int64_t reach_y = dim >= 2 ? 1 : 0;
  const std::int64_t reach_z = dim >= 3 ? 1 : 0;

  Edges edges;
  std::vector<std::size_t> found;
  for (std::size_t i = 0; i < positions.rows(); ++i) {
    found.clear();
    const CellList::Cell home = cells.cell_of(positions.row(i));
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -reach_y; dy <= reach_y; ++dy) {
        for (std::int64_t dz = -reach_z; dz <= reach_z; ++dz) {
          const CellList::Cell c{home[0] + dx, home[1] + dy, home[2] + dz};
          for (std::size_t j : cells.particles_in(c)) {
            if (j == i ? self_edges : squared_distance(positions, i, j) <= r2) found.push_back(j);
          }
        }
      }
    }
    std::sort(found.begin(), found.end());
    for (std::size_t j : found) {
      edges.senders.push_back(j);
      edges.receivers.push_back(i);
    }
  }
  return edges;
}

Edges radius_graph_brute_force(const Matrix& positions, double radius, bool self_edges) {
  check_inputs(positions, radius);
  const double r2 = radius * radius;
  Edges edges;
  for (std::size_t i = 0; i < positions.rows(); ++i) {
    for (std::size_t j = 0; j < positions.rows(); ++j) {
      if (j == i ? self_edges : squared_distance(positions, i, j) <= r2) {
        edges.senders.push_back(j);
        edges.receivers.push_back(i);
      }
    }
  }
  return edges;
}

}  // namespace gns
