#pragma once

#include <array>
#include <unordered_map>

#include "sdcfr/game.hpp"

namespace sdcfr {

struct GameTooLarge : Error { using Error::Error; };

struct EvalReport {
  std::string metric;
  double value = 0.0;
  std::string units = "mA/g";
  std::uint64_t samples = 0;  // 0 for exact metrics
  double ci95_half = 0.0;     // 0 for exact metrics
  std::uint64_t seed = 0;
};

inline double chips_to_milli_antes(double chips, int ante) {
  return chips / static_cast<double>(ante) * 1000.0;
}

struct BestResponseResult {
  double value_chips = 0.0;
  std::unordered_map<InfoSetKey, int, InfoSetKeyHash> best_actions;  // local action ids
};

/// Exact best response: enumerates the full tree (chance expanded), groups
/// histories by responder information set, and maximizes
/// counterfactual-reach-weighted values per infoset. The opponent strategy
/// is queried once per opponent infoset during the depth-first walk.
BestResponseResult best_response(const Game& game, QueryableStrategy& opponent_strategy,
                                 Player responder, std::size_t node_budget = 50'000'000);

struct ExploitabilityResult {
  /// br_values[i] = best-response value (chips) earned against player i's
  /// strategy by the other seat.
  std::array<double, 2> br_values_chips{};
  double total_chips = 0.0;
  double total_milli_antes = 0.0;
  double per_player_milli_antes = 0.0;

  EvalReport report() const;
};

ExploitabilityResult exploitability(const Game& game, QueryableStrategy& strategy0,
                                    QueryableStrategy& strategy1,
                                    std::size_t node_budget = 50'000'000);

/// Exact expected chips for player 0 under a fixed strategy profile.
double expected_value(const Game& game, QueryableStrategy& strategy0,
                      QueryableStrategy& strategy1);

/// Match play. Duplicate pairing plays every card sequence twice with the
/// seats swapped, which cancels card luck exactly: a policy against an
/// identical policy scores 0 chip-for-chip. Reports policy A's mean
/// winnings in milli-antes per hand with a normal-approximation 95% CI.
EvalReport head_to_head(const Game& game, Policy& policy_a, Policy& policy_b, int n_pairs,
                        std::uint64_t seed, bool duplicate = true, int workers = 1);

struct DisagreementRow {
  int depth = 0;  // acting player's own decisions before this one
  int round = 0;
  double mean = 0.0;
  double ci95_half = 0.0;
  double stddev = 0.0;
  std::uint64_t n = 0;
};

/// Per-(depth, round) mean L1 distance between two average strategies over
/// rollouts where the measured player follows `sd` and the opponent plays
/// uniformly at random; both players' expectations contribute with weight
/// one half.
std::vector<DisagreementRow> strategy_disagreement(
    const Game& game, const std::array<QueryableStrategy*, 2>& sd,
    const std::array<QueryableStrategy*, 2>& shat, int n_rollouts_per_player,
    std::uint64_t seed);

}  // namespace sdcfr
