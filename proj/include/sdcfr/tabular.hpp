#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "sdcfr/enumerate.hpp"
#include "sdcfr/game.hpp"

namespace sdcfr {

struct EmptyActionSet : Error { using Error::Error; };

/// Positive-part normalization of accumulated regrets; uniform when no
/// entry is positive.
Distribution regret_matching(std::span<const double> regrets);

/// Accumulated per-action regrets, one vector per information set. An
/// absent key reads as the all-zero vector.
struct RegretTable {
  std::unordered_map<InfoSetKey, std::vector<double>, InfoSetKeyHash> values;

  std::span<const double> at(const InfoSetKey& key) const {
    auto it = values.find(key);
    if (it == values.end()) return {};
    return it->second;
  }
};

/// Numerator/denominator accumulators of the reach-weighted average
/// strategy. The denominator always equals the numerator summed over
/// actions.
struct AvgStrategyTable {
  struct Entry {
    std::vector<double> numerator;
    double denominator = 0.0;
  };
  std::unordered_map<InfoSetKey, Entry, InfoSetKeyHash> values;
};

Distribution average_strategy(const AvgStrategyTable& table, const InfoSetKey& key,
                              int num_actions);

/// One player's full iteration strategy at iteration `t`, complete over all
/// information sets with positive possible reach.
struct StrategySnapshot {
  int iteration = 0;
  Player player = Player::p0;
  std::unordered_map<InfoSetKey, Distribution, InfoSetKeyHash> strategies;
};

void write_snapshot_file(const StrategySnapshot& snapshot, const std::filesystem::path& path);
StrategySnapshot read_snapshot_file(const std::filesystem::path& path);

enum class CfrMode { vanilla, linear };
enum class UpdateScheme { simultaneous, alternating };

/// Exact full-traversal CFR with vanilla or linear iteration weights.
/// Chance nodes are expanded exactly; this solver is the convergence
/// oracle for the sampled and neural pipelines.
class TabularCfr {
 public:
  TabularCfr(const Game& game, CfrMode mode,
             UpdateScheme scheme = UpdateScheme::simultaneous);

  /// Runs iteration t (alternating: player t mod 2 only) and advances t.
  void run_iteration();
  void run_iterations(int n);

  /// Iteration the next run_iteration() call will perform; starts at 1.
  int next_iteration() const { return t_; }

  Distribution current_strategy(Player p, const InfoSetKey& key, int num_actions) const;
  Distribution average_strategy_at(Player p, const InfoSetKey& key, int num_actions) const;

  const RegretTable& regrets(Player p) const { return regrets_[player_index(p)]; }
  const AvgStrategyTable& averages(Player p) const { return averages_[player_index(p)]; }

  void enable_snapshots(bool on) { snapshots_enabled_ = on; }
  const std::vector<StrategySnapshot>& snapshots() const { return snapshots_; }

  /// Test seam: overrides the iteration weight w(t); by default the mode
  /// selects w(t)=1 (vanilla) or w(t)=t (linear).
  void set_iteration_weight(std::function<double(int)> weight) { weight_ = std::move(weight); }

 private:
  double traverse(const GameState& state, double reach0, double reach1, double reach_c,
                  int update_player, double w);
  void take_snapshot(Player p);

  const Game& game_;
  CfrMode mode_;
  UpdateScheme scheme_;
  std::function<double(int)> weight_;
  RegretTable regrets_[2];
  AvgStrategyTable averages_[2];
  // Per-iteration staging; merged into the tables once the traversal ends.
  std::unordered_map<InfoSetKey, std::vector<double>, InfoSetKeyHash> pending_regrets_[2];
  std::unordered_map<InfoSetKey, AvgStrategyTable::Entry, InfoSetKeyHash> pending_averages_[2];
  int t_ = 1;
  bool snapshots_enabled_ = false;
  std::vector<StrategySnapshot> snapshots_;
  std::vector<std::vector<InfosetInfo>> infosets_;  // filled on first snapshot
};

}  // namespace sdcfr
