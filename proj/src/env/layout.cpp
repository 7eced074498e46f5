#include "socd/env/layout.hpp"

#include <stdexcept>

namespace socd::env {

double ObsLayout::consumption(std::span<const double> obs, std::span<const double> action) const {
  if (action.size() != cells.size() || obs.size() != obs_dim()) {
    throw std::invalid_argument("consumption: observation/action size does not match layout");
  }
  const auto q = queues(obs);
  double e = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) e += action[c] * q[c];
  return e;
}

Vec ObsLayout::node_consumption(std::span<const double> obs, std::span<const double> action) const {
  if (action.size() != cells.size() || obs.size() != obs_dim()) {
    throw std::invalid_argument("node_consumption: observation/action size does not match layout");
  }
  const auto q = queues(obs);
  Vec e(num_nodes, 0.0);
  for (std::size_t c = 0; c < cells.size(); ++c) e[cells[c].node] += action[c] * q[c];
  return e;
}

ObsLayout ObsLayout::single_hop(const EnvConfig& c) {
  ObsLayout l;
  l.num_users = c.num_users;
  l.num_nodes = 1;
  l.num_hops = 1;
  l.num_channels = c.num_users;
  l.has_channels = !c.partial_obs;
  l.v_max = c.v_max;
  l.weights = c.weights;
  l.deadlines = c.deadlines;
  for (int i = 0; i < c.num_users; ++i) {
    l.user_cell_begin.push_back(l.cells.size());
    for (int tau = 0; tau <= c.deadlines[i]; ++tau) l.cells.push_back({i, 0, tau, 0});
  }
  l.user_cell_begin.push_back(l.cells.size());
  return l;
}

ObsLayout ObsLayout::multi_hop(const MultiHopConfig& c) {
  ObsLayout l;
  l.num_users = c.base.num_users;
  l.num_nodes = c.num_nodes;
  l.num_hops = c.max_path_len();
  l.num_channels = c.num_nodes;
  l.has_channels = !c.base.partial_obs;
  l.v_max = c.base.v_max;
  l.weights = c.base.weights;
  l.deadlines = c.base.deadlines;
  for (int j = 0; j < l.num_hops; ++j) {
    for (int i = 0; i < l.num_users; ++i) {
      if (j >= c.path_len(i)) continue;
      // 1-based hop h keeps lifetimes 0..tau_i-h+1; with 0-based j that is tau_i-j.
      for (int tau = 0; tau <= c.base.deadlines[i] - j; ++tau) {
        l.cells.push_back({i, j, tau, c.routes[i][j]});
      }
    }
  }
  return l;
}

ObsLayout ObsLayout::from(const AnyEnvConfig& c) {
  return c.multihop ? multi_hop(*c.multihop) : single_hop(c.single);
}

}  // namespace socd::env
