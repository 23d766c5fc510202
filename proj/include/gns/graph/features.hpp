#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gns/dataset/metadata.hpp"
#include "gns/dataset/windows.hpp"
#include "gns/graph/radius_graph.hpp"
#include "gns/tensor/matrix.hpp"

namespace gns {

/// Graph handed to the network. `node_features` holds the kinematic part
/// (normalized velocity history and wall distances); the learned type
/// embedding is looked up from `types` inside the encoder so that it can be
/// trained. `global` is either empty or a single row.
struct EncodedGraph {
  Matrix node_features;  // n x (history * dim + 2 * dim)
  std::vector<std::int64_t> types;
  std::vector<std::size_t> senders;
  std::vector<std::size_t> receivers;
  Matrix edge_features;  // E x (dim + 1)
  Matrix global;         // empty or 1 x g

  std::size_t node_count() const noexcept { return node_features.rows(); }
  std::size_t edge_count() const noexcept { return senders.size(); }
};

struct GraphOptions {
  bool self_edges = false;
  /// Overrides Metadata::default_connectivity_radius when positive.
  double radius = 0.0;
};

double connectivity_radius(const Metadata& meta, const GraphOptions& options = {});

/// Per particle: the len(history)-1 finite-difference velocities, oldest
/// first, each normalized as (v - vel_mean) / vel_std, followed by the
/// distances of the latest position to the lower walls then the upper
/// walls, divided by `radius` and clipped to [-1, 1].
Matrix kinematic_features(std::span<const Matrix> history, const Metadata& meta, double radius);

/// kinematic_features with the type embedding rows appended. Throws
/// ContractError for a type id outside the embedding table.
Matrix node_features(std::span<const Matrix> history, std::span<const std::int64_t> types,
                     const Metadata& meta, const Matrix& embedding, double radius);

/// Per edge: (x_sender - x_receiver) / radius followed by its Euclidean norm.
Matrix edge_features(const Matrix& positions, std::span<const std::size_t> senders,
                     std::span<const std::size_t> receivers, double radius);

/// x_{t+1} - 2 x_t + x_{t-1} from the last two inputs and the target, in
/// finite-difference units.
Matrix raw_acceleration(const TrainingWindow& window);
/// raw_acceleration normalized by the metadata acceleration statistics.
Matrix target_acceleration(const TrainingWindow& window, const Metadata& meta);

/// Connectivity and features of the latest frame in `history`.
EncodedGraph build_graph(std::span<const Matrix> history, std::span<const std::int64_t> types,
                         const Metadata& meta, const GraphOptions& options = {});

}  // namespace gns
