#include "sdcfr/enumerate.hpp"

#include <unordered_set>

namespace sdcfr {
namespace {

struct Walker {
  std::vector<std::vector<InfosetInfo>> out{2};
  std::unordered_set<InfoSetKey, InfoSetKeyHash> seen;
  std::vector<std::pair<StatePtr, int>> trajectory[2];

  void visit(const GameState& state) {
    if (state.is_terminal()) return;
    if (state.current_player() == Player::chance) {
      for (int id = 0; id < state.num_actions(); ++id) visit(*state.apply_action(id));
      return;
    }
    int p = player_index(state.current_player());
    InfoSetKey key = state.infoset_key(state.current_player());
    if (seen.insert(key).second) {
      InfosetInfo info;
      info.key = key;
      info.player = state.current_player();
      info.num_actions = state.num_actions();
      info.state = state.clone();
      for (const auto& [s, a] : trajectory[p])
        info.own_trajectory.emplace_back(s->clone(), a);
      out[p].push_back(std::move(info));
    }
    for (int id = 0; id < state.num_actions(); ++id) {
      trajectory[p].emplace_back(state.clone(), id);
      visit(*state.apply_action(id));
      trajectory[p].pop_back();
    }
  }
};

}  // namespace

std::vector<std::vector<InfosetInfo>> enumerate_infosets(const Game& game) {
  Walker walker;
  walker.visit(*game.new_initial_state());
  return std::move(walker.out);
}

InfosetIndex build_infoset_index(const std::vector<std::vector<InfosetInfo>>& per_player) {
  InfosetIndex index;
  for (const auto& list : per_player)
    for (const auto& info : list) index.emplace(info.key, &info);
  return index;
}

}  // namespace sdcfr
