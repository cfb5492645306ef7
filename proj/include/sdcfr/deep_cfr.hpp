#pragma once

#include <filesystem>
#include <optional>

#include "sdcfr/net.hpp"
#include "sdcfr/sampling.hpp"
#include "sdcfr/tabular.hpp"

namespace sdcfr {

struct NoLegalAction : Error { using Error::Error; };

/// Iteration-strategy derivation from advantages over the action head:
/// positive parts normalized; when no masked output is positive, a one-hot
/// on the argmax (not uniform). Returns a distribution over head slots with
/// zeros at illegal slots.
Distribution advantage_policy(std::span<const double> outputs,
                              std::span<const std::uint8_t> mask);

/// Average-strategy readout: masked outputs clipped below zero and
/// renormalized; all-zero masks to uniform over the legal slots.
Distribution average_policy(std::span<const double> outputs,
                            std::span<const std::uint8_t> mask);

/// Supplier of per-slot advantages at a decision state. Production uses a
/// value network; tests substitute exact tabular regrets to isolate
/// algorithm error from approximation error.
class AdvantageSource {
 public:
  virtual ~AdvantageSource() = default;
  virtual std::vector<double> advantages(const GameState& state) const = 0;
};

class NetAdvantage final : public AdvantageSource {
 public:
  explicit NetAdvantage(NetParams params) : params_(std::move(params)) {}
  std::vector<double> advantages(const GameState& state) const override;
  const NetParams& params() const { return params_; }

 private:
  NetParams params_;
};

/// Linear accumulated regrets read straight from a tabular solver's table.
class TableAdvantage final : public AdvantageSource {
 public:
  TableAdvantage(const RegretTable& table, Player player) : table_(&table), player_(player) {}
  std::vector<double> advantages(const GameState& state) const override;

 private:
  const RegretTable* table_;
  Player player_;
};

/// Local-action iteration strategy at `state` from an advantage source.
Distribution advantage_strategy(const AdvantageSource& source, const GameState& state);

IterationStrategyFn make_advantage_policy_fn(std::shared_ptr<const AdvantageSource> source);
IterationStrategyFn uniform_policy_fn();

struct DeepCfrConfig {
  int traversals_per_iteration = 1500;
  std::size_t advantage_buffer_capacity = 1'000'000;
  std::size_t strategy_buffer_capacity = 1'000'000;
  std::vector<int> hidden_dims{64, 64, 64};
  TrainConfig value_train{.batch_size = 2048, .n_updates = 750};
  TrainConfig avg_train{.batch_size = 2048, .n_updates = 5000};
  bool fill_strategy_buffers = true;
  int workers = 1;

  void validate() const;
};

struct CheckpointRecord {
  Player player = Player::p0;
  int iteration = 0;
  std::filesystem::path path;
};

/// The alternating Deep CFR loop. Iteration t: traverser t mod 2 runs N
/// external-sampling traversals with both players acting by their current
/// value nets (uniform before a player's first net exists), then trains a
/// fresh value net for the traverser - randomly initialized while t < 3,
/// warm-started from that player's t-2 net afterwards - and checkpoints it.
class DeepCfrRun {
 public:
  DeepCfrRun(const Game& game, DeepCfrConfig config, std::uint64_t seed,
             std::filesystem::path checkpoint_dir);

  CheckpointRecord run_iteration();
  int next_iteration() const { return t_; }

  const ReservoirBuffer<AdvantageSample>& advantage_buffer(Player p) const {
    return advantage_[player_index(p)];
  }
  ReservoirBuffer<AdvantageSample>& advantage_buffer(Player p) {
    return advantage_[player_index(p)];
  }
  const ReservoirBuffer<StrategySample>& strategy_buffer(Player p) const {
    return strategy_[player_index(p)];
  }
  ReservoirBuffer<StrategySample>& strategy_buffer(Player p) {
    return strategy_[player_index(p)];
  }

  const std::optional<NetParams>& value_net(Player p) const {
    return current_[player_index(p)];
  }
  const std::vector<CheckpointRecord>& checkpoints() const { return checkpoints_; }
  const DeepCfrConfig& config() const { return config_; }

  /// Mean weighted training loss of `params` over (a prefix of) a buffer;
  /// recorded to the metrics log.
  float training_loss(const NetParams& params, Player p, std::size_t max_samples = 4096) const;

  /// Test seam: replaces the policy a player acts with during traversals.
  void set_policy_override(Player p, IterationStrategyFn fn) {
    override_[player_index(p)] = std::move(fn);
  }

  /// Restores a run mid-stream (resume); buffers are restored separately.
  void restore(int next_iteration, std::optional<NetParams> net0, std::optional<NetParams> net1);

 private:
  IterationStrategyFn policy_for(Player p) const;

  const Game& game_;
  DeepCfrConfig config_;
  NetConfig net_config_;
  std::uint64_t seed_;
  std::filesystem::path checkpoint_dir_;
  ReservoirBuffer<AdvantageSample> advantage_[2];
  ReservoirBuffer<StrategySample> strategy_[2];
  std::optional<NetParams> current_[2];
  IterationStrategyFn override_[2];
  std::vector<CheckpointRecord> checkpoints_;
  int t_ = 1;
};

/// Fits the average-strategy network from a strategy buffer, always from a
/// fresh random initialization.
NetParams train_average_network(const Game& game, const DeepCfrConfig& config,
                                std::span<const StrategySample> data,
                                int current_total_iterations, Rng& rng);

}  // namespace sdcfr
