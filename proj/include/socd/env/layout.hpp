#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "socd/common.hpp"
#include "socd/env/config.hpp"

namespace socd::env {

/// One deadline-indexed queue slot. The action vector has one entry per cell,
/// in the same order as the queue block of the observation.
struct QueueCell {
  int user = 0;
  int hop = 0;   // 0-based hop index
  int tau = 0;   // slots to expiry
  int node = 0;  // node charged for resource spent on this cell
};

/// Flat observation layout: [A(t) | queue cells | c(t)]; the channel block is
/// absent under partial observability.
///
/// Single-hop: queue cells are Q_1^0..Q_1^{tau_1}, Q_2^0, ... (user-major,
/// ascending tau), all charged to node 0.
/// Multi-hop: aggregated buffers Q^(1), Q^(2), ... in hop-major order; inside a
/// hop, flows in index order; inside a flow, ascending tau. Channels are per node.
struct ObsLayout {
  int num_users = 0;
  int num_nodes = 1;
  int num_hops = 1;
  int num_channels = 0;
  bool has_channels = true;
  double v_max = 1.0;
  Vec weights;
  std::vector<int> deadlines;
  std::vector<QueueCell> cells;
  std::vector<std::size_t> user_cell_begin;  // single-hop only: user i owns [begin[i], begin[i+1])

  std::size_t arrivals_offset() const { return 0; }
  std::size_t queue_offset() const { return static_cast<std::size_t>(num_users); }
  std::size_t channel_offset() const { return queue_offset() + cells.size(); }
  std::size_t obs_dim() const {
    return channel_offset() + (has_channels ? static_cast<std::size_t>(num_channels) : 0);
  }
  std::size_t action_dim() const { return cells.size(); }

  std::span<const double> queues(std::span<const double> obs) const {
    return obs.subspan(queue_offset(), cells.size());
  }

  /// Total E(t) = sum over cells of v * Q.
  double consumption(std::span<const double> obs, std::span<const double> action) const;
  /// E^(k)(t) per node.
  Vec node_consumption(std::span<const double> obs, std::span<const double> action) const;

  static ObsLayout single_hop(const EnvConfig& c);
  static ObsLayout multi_hop(const MultiHopConfig& c);
  static ObsLayout from(const AnyEnvConfig& c);
};

}  // namespace socd::env
