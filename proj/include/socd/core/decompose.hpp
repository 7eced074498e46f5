#pragma once

#include <span>

#include "socd/env/layout.hpp"

namespace socd::core {

/// Fixed per-user view used by the decomposed mode (single-hop only):
/// sub-state [i/N, A_i, Q_i^0..Q_i^{tau_max}, c_i] with Q_i zero-padded past tau_i
/// and c_i absent under partial observability; sub-action has tau_max + 1 entries.
struct UserView {
  int num_users = 0;
  int max_deadline = 0;
  bool has_channels = true;

  static UserView from(const env::ObsLayout& layout);
  std::size_t state_dim() const { return 2 + static_cast<std::size_t>(max_deadline) + 1 + (has_channels ? 1 : 0); }
  std::size_t action_dim() const { return static_cast<std::size_t>(max_deadline) + 1; }
};

/// Throws std::invalid_argument for multi-hop layouts and std::out_of_range for a bad index.
Vec decompose_state(const env::ObsLayout& layout, std::span<const double> obs, int user);

/// User i's slice of a global action, zero-padded to the sub-action size.
Vec user_action(const env::ObsLayout& layout, std::span<const double> action, int user);

/// Writes a sub-action into user i's cells of a global action, dropping padding.
void scatter_user_action(const env::ObsLayout& layout, int user, std::span<const double> sub_action,
                         std::span<double> action);

/// v_i^T Q_i for user i.
double user_consumption(const env::ObsLayout& layout, std::span<const double> obs,
                        std::span<const double> action, int user);

}  // namespace socd::core
