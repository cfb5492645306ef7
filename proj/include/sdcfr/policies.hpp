#pragma once

#include <unordered_map>

#include "sdcfr/deep_cfr.hpp"
#include "sdcfr/game.hpp"
#include "sdcfr/kuhn.hpp"
#include "sdcfr/net.hpp"
#include "sdcfr/tabular.hpp"

namespace sdcfr {

class UniformStrategy final : public QueryableStrategy {
 public:
  Distribution query(const GameState& state) override {
    return uniform_distribution(state.num_actions());
  }
};

/// Folds whenever folding is legal, otherwise checks/calls.
class AlwaysFoldStrategy final : public QueryableStrategy {
 public:
  Distribution query(const GameState& state) override {
    Distribution dist(state.num_actions(), 0.0);
    for (int a = 0; a < state.num_actions(); ++a)
      if (state.action_slot(a) == kFold) {
        dist[a] = 1.0;
        return dist;
      }
    for (int a = 0; a < state.num_actions(); ++a)
      if (state.action_slot(a) == kCall) {
        dist[a] = 1.0;
        return dist;
      }
    dist[0] = 1.0;
    return dist;
  }
};

/// Always checks/calls.
class AlwaysCallStrategy final : public QueryableStrategy {
 public:
  Distribution query(const GameState& state) override {
    Distribution dist(state.num_actions(), 0.0);
    for (int a = 0; a < state.num_actions(); ++a)
      if (state.action_slot(a) == kCall) {
        dist[a] = 1.0;
        return dist;
      }
    dist[0] = 1.0;
    return dist;
  }
};

/// Fixed per-infoset distributions; falls back to uniform off the map.
class MapStrategy final : public QueryableStrategy {
 public:
  using Table = std::unordered_map<InfoSetKey, Distribution, InfoSetKeyHash>;
  explicit MapStrategy(Table table) : table_(std::move(table)) {}

  Distribution query(const GameState& state) override {
    auto it = table_.find(state.infoset_key(state.current_player()));
    if (it == table_.end()) return uniform_distribution(state.num_actions());
    return it->second;
  }

 private:
  Table table_;
};

/// The tabular solver's average strategy for one player.
class TabularAverageStrategy final : public QueryableStrategy {
 public:
  TabularAverageStrategy(const TabularCfr& solver, Player player)
      : solver_(&solver), player_(player) {}

  Distribution query(const GameState& state) override {
    return solver_->average_strategy_at(player_, state.infoset_key(player_),
                                        state.num_actions());
  }

 private:
  const TabularCfr* solver_;
  Player player_;
};

/// The tabular solver's current (regret-matched) iteration strategy.
class TabularCurrentStrategy final : public QueryableStrategy {
 public:
  TabularCurrentStrategy(const TabularCfr& solver, Player player)
      : solver_(&solver), player_(player) {}

  Distribution query(const GameState& state) override {
    return solver_->current_strategy(player_, state.infoset_key(player_), state.num_actions());
  }

 private:
  const TabularCfr* solver_;
  Player player_;
};

/// Average-strategy network readout (Deep CFR's S-hat).
class NetAverageStrategy final : public QueryableStrategy {
 public:
  explicit NetAverageStrategy(NetParams params) : params_(std::move(params)) {}

  Distribution query(const GameState& state) override {
    auto features = state.encode_features(state.current_player());
    auto out = forward<float>(params_, features);
    std::vector<double> outputs(out.begin(), out.end());
    auto slot_dist = average_policy(outputs, state.legal_mask());
    Distribution local(state.num_actions());
    for (int a = 0; a < state.num_actions(); ++a) local[a] = slot_dist[state.action_slot(a)];
    return local;
  }

 private:
  NetParams params_;
};

/// Adapts a QueryableStrategy to episodic play.
class StrategyPolicy final : public Policy {
 public:
  explicit StrategyPolicy(QueryableStrategy& strategy) : strategy_(&strategy) {}

  void begin_episode(Rng&) override {
    for (; pushes_ > 0; --pushes_) strategy_->pop_own_action();
  }
  Distribution act(const GameState& state) override { return strategy_->query(state); }
  void observe_own_action(const GameState& state, int action_id) override {
    strategy_->push_own_action(state, action_id);
    ++pushes_;
  }

 private:
  QueryableStrategy* strategy_;
  int pushes_ = 0;
};

}  // namespace sdcfr
