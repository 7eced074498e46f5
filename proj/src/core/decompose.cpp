#include "socd/core/decompose.hpp"

#include <algorithm>
#include <stdexcept>

namespace socd::core {

namespace {

void require_single_hop(const env::ObsLayout& layout) {
  if (layout.num_nodes != 1 || layout.num_hops != 1 ||
      layout.user_cell_begin.size() != static_cast<std::size_t>(layout.num_users) + 1) {
    throw std::invalid_argument("user decomposition supports single-hop layouts only");
  }
}

void check_user(const env::ObsLayout& layout, int user) {
  if (user < 0 || user >= layout.num_users) throw std::out_of_range("user index out of range");
}

}  // namespace

UserView UserView::from(const env::ObsLayout& layout) {
  require_single_hop(layout);
  UserView v;
  v.num_users = layout.num_users;
  v.max_deadline = *std::max_element(layout.deadlines.begin(), layout.deadlines.end());
  v.has_channels = layout.has_channels;
  return v;
}

Vec decompose_state(const env::ObsLayout& layout, std::span<const double> obs, int user) {
  require_single_hop(layout);
  check_user(layout, user);
  if (obs.size() != layout.obs_dim()) throw std::invalid_argument("decompose_state: observation size mismatch");
  const UserView view = UserView::from(layout);
  Vec s(view.state_dim(), 0.0);
  s[0] = static_cast<double>(user) / layout.num_users;
  s[1] = obs[layout.arrivals_offset() + user];
  const std::size_t begin = layout.user_cell_begin[user], end = layout.user_cell_begin[user + 1];
  for (std::size_t c = begin; c < end; ++c) s[2 + (c - begin)] = obs[layout.queue_offset() + c];
  if (view.has_channels) s.back() = obs[layout.channel_offset() + user];
  return s;
}

Vec user_action(const env::ObsLayout& layout, std::span<const double> action, int user) {
  require_single_hop(layout);
  check_user(layout, user);
  if (action.size() != layout.action_dim()) throw std::invalid_argument("user_action: action size mismatch");
  Vec a(UserView::from(layout).action_dim(), 0.0);
  const std::size_t begin = layout.user_cell_begin[user], end = layout.user_cell_begin[user + 1];
  std::copy(action.begin() + begin, action.begin() + end, a.begin());
  return a;
}

void scatter_user_action(const env::ObsLayout& layout, int user, std::span<const double> sub_action,
                         std::span<double> action) {
  require_single_hop(layout);
  check_user(layout, user);
  const std::size_t begin = layout.user_cell_begin[user], end = layout.user_cell_begin[user + 1];
  if (sub_action.size() < end - begin || action.size() != layout.action_dim()) {
    throw std::invalid_argument("scatter_user_action: size mismatch");
  }
  std::copy(sub_action.begin(), sub_action.begin() + (end - begin), action.begin() + begin);
}

double user_consumption(const env::ObsLayout& layout, std::span<const double> obs,
                        std::span<const double> action, int user) {
  require_single_hop(layout);
  check_user(layout, user);
  const auto q = layout.queues(obs);
  double e = 0.0;
  for (std::size_t c = layout.user_cell_begin[user]; c < layout.user_cell_begin[user + 1]; ++c) {
    e += action[c] * q[c];
  }
  return e;
}

}  // namespace socd::core
