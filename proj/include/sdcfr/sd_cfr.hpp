#pragma once

#include <filesystem>
#include <list>
#include <memory>
#include <unordered_map>

#include "sdcfr/deep_cfr.hpp"
#include "sdcfr/game.hpp"
#include "sdcfr/net.hpp"
#include "sdcfr/tabular.hpp"

namespace sdcfr {

struct EmptyModelBuffer : Error { using Error::Error; };
struct QueryBeforeReset : Error { using Error::Error; };
struct DepthMismatch : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Buffer of past value networks
// ---------------------------------------------------------------------------

struct ModelEntry {
  Player player = Player::p0;
  int iteration = 0;
  std::filesystem::path path;
  std::uint64_t bytes = 0;
  std::uint64_t checksum = 0;
};

enum class ModelStorageMode { keep_all, reservoir };

/// Ordered per-player store of value-network checkpoints. keep_all retains
/// every iteration; reservoir mode exists to reproduce the degradation that
/// sampling this buffer causes.
class ModelBuffer {
 public:
  explicit ModelBuffer(ModelStorageMode mode = ModelStorageMode::keep_all,
                       std::size_t capacity = 0);

  void append(ModelEntry entry, Rng* rng = nullptr);

  std::span<const ModelEntry> entries(Player p) const { return entries_[player_index(p)]; }
  std::uint64_t seen(Player p) const { return seen_[player_index(p)]; }
  ModelStorageMode mode() const { return mode_; }
  std::size_t capacity() const { return capacity_; }

  void save_manifest(const std::filesystem::path& path) const;
  static ModelBuffer load_manifest(const std::filesystem::path& path);

 private:
  ModelStorageMode mode_;
  std::size_t capacity_;
  std::vector<ModelEntry> entries_[2];
  std::uint64_t seen_[2] = {0, 0};
};

/// Decodes checkpoints on demand behind a small LRU so that at no point do
/// all networks sit in memory. The stats expose how many networks were ever
/// resident at once.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::size_t lru_capacity = 8);

  std::shared_ptr<const NetParams> load(const std::filesystem::path& path);

  struct Stats {
    std::uint64_t disk_loads = 0;
    std::size_t resident = 0;
    std::size_t peak_resident = 0;
  };
  Stats stats() const { return stats_; }

 private:
  std::size_t lru_capacity_;
  std::list<std::pair<std::string, std::shared_ptr<const NetParams>>> lru_;
  std::unordered_map<std::string, decltype(lru_)::iterator> index_;
  Stats stats_;
  mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Iteration strategies
// ---------------------------------------------------------------------------

/// One stored iteration strategy: sigma^t for a fixed player, queryable at
/// any of that player's decision states.
class IterationStrategyHandle {
 public:
  virtual ~IterationStrategyHandle() = default;
  virtual int iteration() const = 0;
  virtual Distribution strategy(const GameState& state) const = 0;
};

using StrategyHandlePtr = std::shared_ptr<const IterationStrategyHandle>;

/// Value-network-backed sigma^t via the advantage-policy readout.
class NetIterationStrategy final : public IterationStrategyHandle {
 public:
  NetIterationStrategy(ModelEntry entry, std::shared_ptr<CheckpointStore> store)
      : entry_(std::move(entry)), store_(std::move(store)) {}
  int iteration() const override { return entry_.iteration; }
  Distribution strategy(const GameState& state) const override;

 private:
  ModelEntry entry_;
  std::shared_ptr<CheckpointStore> store_;
};

/// Exact sigma^t from a tabular snapshot; the oracle side of the
/// equivalence tests.
class TabularIterationStrategy final : public IterationStrategyHandle {
 public:
  TabularIterationStrategy(int iteration,
                           std::shared_ptr<const StrategySnapshot> snapshot)
      : iteration_(iteration), snapshot_(std::move(snapshot)) {}
  int iteration() const override { return iteration_; }
  Distribution strategy(const GameState& state) const override;

 private:
  int iteration_;
  std::shared_ptr<const StrategySnapshot> snapshot_;
};

std::vector<StrategyHandlePtr> make_net_handles(const ModelBuffer& buffer, Player p,
                                                std::shared_ptr<CheckpointStore> store);
std::vector<StrategyHandlePtr> make_snapshot_handles(
    const std::vector<StrategySnapshot>& snapshots, Player p);

/// Linear-weight draw from the model buffer: entry t with probability
/// t / sum of stored iterations.
const ModelEntry& sample_iteration_network(const ModelBuffer& buffer, Player p, Rng& rng);

/// Normalized linear sampling weights over a player's stored entries.
std::vector<double> model_sampling_weights(const ModelBuffer& buffer, Player p);

// ---------------------------------------------------------------------------
// Trajectory sampling (SD-CFR playing a hand)
// ---------------------------------------------------------------------------

/// Samples one iteration strategy per episode with weight t and plays it
/// for the whole trajectory; query cost per decision is constant in the
/// buffer size.
class TrajectorySamplingPolicy final : public Policy {
 public:
  explicit TrajectorySamplingPolicy(std::vector<StrategyHandlePtr> handles);

  void begin_episode(Rng& rng) override;
  Distribution act(const GameState& state) override;

  int current_iteration() const;

 private:
  std::vector<StrategyHandlePtr> handles_;
  std::vector<double> weights_;
  int active_ = -1;
};

// ---------------------------------------------------------------------------
// Explicit averaging with cached reach products
// ---------------------------------------------------------------------------

/// Per-network running product of own action probabilities along a
/// trajectory, with a dead flag once a product hits zero.
class ReachCache {
 public:
  explicit ReachCache(std::size_t n_networks);

  int depth() const { return static_cast<int>(stack_.size()); }
  std::span<const double> products() const { return current_; }
  bool dead(std::size_t i) const { return current_[i] == 0.0; }

  /// Multiplies each product by that network's probability of the action
  /// actually taken at depth `expected_depth`.
  void push(int expected_depth, std::span<const double> taken_probs);
  void pop();

 private:
  std::vector<double> current_;
  std::vector<std::vector<double>> stack_;
};

/// The average strategy reconstructed from stored iteration strategies:
///   sigma_bar(I) = sum_t t * pi_t(I) * sigma_t(I) / sum_t t * pi_t(I)
/// where pi_t(I) multiplies sigma_t over the player's own past decisions.
/// Usable episodically (push own actions as the hand advances) and in
/// depth-first walks (push/pop). Per-network distributions are memoized per
/// information set, so a full best-response walk queries each network at
/// most once per infoset.
class SdCfrAverageStrategy final : public QueryableStrategy {
 public:
  SdCfrAverageStrategy(std::vector<StrategyHandlePtr> handles, bool prune_zero_reach = true);

  Distribution query(const GameState& state) override;
  void push_own_action(const GameState& state, int action_id) override;
  void pop_own_action() override;

  /// Clears the trajectory back to the root.
  void reset();

  int depth() const { return cache_.depth(); }
  std::uint64_t strategy_queries(std::size_t net) const { return query_counts_[net]; }
  std::uint64_t total_strategy_queries() const;

 private:
  const std::vector<Distribution>& per_net_distributions(const GameState& state);

  std::vector<StrategyHandlePtr> handles_;
  bool prune_;
  ReachCache cache_;
  std::unordered_map<InfoSetKey, std::vector<Distribution>, InfoSetKeyHash> memo_;
  std::vector<std::uint64_t> query_counts_;
};

/// One-shot explicit query: reconstructs the average distribution at
/// `query_state` given the player's own past decisions, in order.
Distribution explicit_average_distribution(
    const std::vector<StrategyHandlePtr>& handles,
    std::span<const std::pair<const GameState*, int>> own_trajectory,
    const GameState& query_state, bool prune_zero_reach = true);

}  // namespace sdcfr
