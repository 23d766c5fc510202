#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "gns/tensor/matrix.hpp"

namespace gns {

/// Directed edge lists; edge k runs senders[k] -> receivers[k].
struct Edges {
  std::vector<std::size_t> senders;
  std::vector<std::size_t> receivers;

  std::size_t size() const noexcept { return senders.size(); }
  friend bool operator==(const Edges&, const Edges&) = default;
};

/// Uniform grid bucketing of particles; cell of a particle is
/// floor(position / cell_size) per dimension. Supports 1 to 3 dimensions.
class CellList {
 public:
  using Cell = std::array<std::int64_t, 3>;

  CellList(const Matrix& positions, double cell_size);

  Cell cell_of(std::span<const double> position) const;
  /// Particles bucketed in `cell`, ascending; empty if none.
  const std::vector<std::size_t>& particles_in(const Cell& cell) const;
  std::size_t cell_count() const noexcept { return cells_.size(); }
  double cell_size() const noexcept { return cell_size_; }

 private:
  struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept;
  };

  std::size_t dim_;
  double cell_size_;
  std::unordered_map<Cell, std::vector<std::size_t>, CellHash> cells_;
};

/// All ordered pairs (i, j), i != j, with |x_i - x_j| <= radius, found by
/// scanning the 3^dim cells around each particle. Sorted by (receiver,
/// sender). `self_edges` additionally adds (i, i) for every particle.
/// Throws ContractError for a non-positive radius or non-finite positions.
Edges radius_graph(const Matrix& positions, double radius, bool self_edges = false);

/// O(n^2) reference used to cross-check the cell list.
Edges radius_graph_brute_force(const Matrix& positions, double radius, bool self_edges = false);

}  // namespace gns
