#pragma once

#include <unordered_map>
#include <vector>

#include "sdcfr/game.hpp"

namespace sdcfr {

/// One decision point of `player`, with a representative state and the
/// player's own decisions (state, action id) on the path to it. Any
/// representative works: perfect recall makes the own trajectory identical
/// across the histories of an information set.
struct InfosetInfo {
  InfoSetKey key;
  Player player = Player::p0;
  int num_actions = 0;
  StatePtr state;
  std::vector<std::pair<StatePtr, int>> own_trajectory;
};

/// Full-tree enumeration of every information set with positive possible
/// reach, per player, in a deterministic DFS order. Caller bounds game size.
std::vector<std::vector<InfosetInfo>> enumerate_infosets(const Game& game);

/// Convenience index over enumerate_infosets output. The index borrows from
/// `per_player`, which must outlive it; rvalues are rejected.
using InfosetIndex =
    std::unordered_map<InfoSetKey, const InfosetInfo*, InfoSetKeyHash>;
InfosetIndex build_infoset_index(const std::vector<std::vector<InfosetInfo>>& per_player);
InfosetIndex build_infoset_index(std::vector<std::vector<InfosetInfo>>&&) = delete;

}  // namespace sdcfr
