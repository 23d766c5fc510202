#include "gns/graph/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gns/errors.hpp"

namespace gns {

double connectivity_radius(const Metadata& meta, const GraphOptions& options) {
  return options.radius > 0.0 ? options.radius : meta.default_connectivity_radius;
}

Matrix kinematic_features(std::span<const Matrix> history, const Metadata& meta, double radius) {
  if (history.size() < 2) throw ContractError("kinematic_features: need at least two positions");
  const std::size_t n = history.back().rows();
  const std::size_t dim = meta.dim;
  for (const Matrix& frame : history) {
    if (frame.rows() != n || frame.cols() != dim) {
      throw ShapeError("kinematic_features: frame " + frame.shape_string() + ", expected " +
                       std::to_string(n) + "x" + std::to_string(dim));
    }
  }
  const std::size_t velocities = history.size() - 1;
  Matrix out(n, velocities * dim + 2 * dim);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t k = 0; k < velocities; ++k) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double v = history[k + 1](p, d) - history[k](p, d);
        out(p, k * dim + d) = (v - meta.stats.vel_mean[d]) / meta.stats.vel_std[d];
      }
    }
    const Matrix& latest = history.back();
    for (std::size_t d = 0; d < dim; ++d) {
      const auto [low, high] = meta.bounds[d];
      out(p, velocities * dim + d) = std::clamp((latest(p, d) - low) / radius, -1.0, 1.0);
      out(p, velocities * dim + dim + d) = std::clamp((high - latest(p, d)) / radius, -1.0, 1.0);
    }
  }
  return out;
}

Matrix node_features(std::span<const Matrix> history, std::span<const std::int64_t> types,
                     const Metadata& meta, const Matrix& embedding, double radius) {
  const Matrix kinematic = kinematic_features(history, meta, radius);
  if (types.size() != kinematic.rows()) {
    throw ContractError("node_features: " + std::to_string(types.size()) + " types for " +
                        std::to_string(kinematic.rows()) + " particles");
  }
  const std::size_t width = kinematic.cols() + embedding.cols();
  Matrix out(kinematic.rows(), width);
  for (std::size_t p = 0; p < kinematic.rows(); ++p) {
    if (types[p] < 0 || static_cast<std::size_t>(types[p]) >= embedding.rows()) {
      throw ContractError("node_features: particle type " + std::to_string(types[p]) +
                          " has no embedding (table has " + std::to_string(embedding.rows()) + " rows)");
    }
    auto row = out.row(p);
    std::copy(kinematic.row(p).begin(), kinematic.row(p).end(), row.begin());
    const auto emb = embedding.row(static_cast<std::size_t>(types[p]));
    std::copy(emb.begin(), emb.end(), row.begin() + static_cast<std::ptrdiff_t>(kinematic.cols()));
  }
  return out;
}

Matrix edge_features(const Matrix& positions, std::span<const std::size_t> senders,
                     std::span<const std::size_t> receivers, double radius) {
  if (senders.size() != receivers.size()) throw ShapeError("edge_features: sender/receiver count mismatch");
  const std::size_t dim = positions.cols();
  Matrix out(senders.size(), dim + 1);
  for (std::size_t k = 0; k < senders.size(); ++k) {
    if (senders[k] >= positions.rows() || receivers[k] >= positions.rows()) {
      throw IndexError("edge_features: edge " + std::to_string(k) + " references a missing particle");
    }
    double norm2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double r = (positions(senders[k], d) - positions(receivers[k], d)) / radius;
      out(k, d) = r;
      norm2 += r * r;
    }
    out(k, dim) = std::sqrt(norm2);
  }
  return out;
}

Matrix raw_acceleration(const TrainingWindow& window) {
  if (window.inputs.size() < 2) throw ContractError("raw_acceleration: need at least two inputs");
  const Matrix& prev = window.inputs[window.inputs.size() - 2];
  const Matrix& last = window.inputs.back();
  require_same_shape(prev, window.target, "raw_acceleration");
  require_same_shape(last, window.target, "raw_acceleration");
  Matrix a(last.rows(), last.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.data()[i] = window.target.data()[i] - 2.0 * last.data()[i] + prev.data()[i];
  }
  return a;
}

Matrix target_acceleration(const TrainingWindow& window, const Metadata& meta) {
  Matrix a = raw_acceleration(window);
  if (a.cols() != meta.dim) throw ShapeError("target_acceleration: dimension does not match metadata");
  for (std::size_t p = 0; p < a.rows(); ++p) {
    for (std::size_t d = 0; d < a.cols(); ++d) {
      a(p, d) = (a(p, d) - meta.stats.acc_mean[d]) / meta.stats.acc_std[d];
    }
  }
  return a;
}

EncodedGraph build_graph(std::span<const Matrix> history, std::span<const std::int64_t> types,
                         const Metadata& meta, const GraphOptions& options) {
  const double radius = connectivity_radius(meta, options);
  EncodedGraph g;
  g.node_features = kinematic_features(history, meta, radius);
  if (types.size() != g.node_features.rows()) {
    throw ContractError("build_graph: " + std::to_string(types.size()) + " types for " +
                        std::to_string(g.node_features.rows()) + " particles");
  }
  g.types.assign(types.begin(), types.end());
  Edges edges = radius_graph(history.back(), radius, options.self_edges);
  g.edge_features = edge_features(history.back(), edges.senders, edges.receivers, radius);
  g.senders = std::move(edges.senders);
  g.receivers = std::move(edges.receivers);
  return g;
}

}  // namespace gns
