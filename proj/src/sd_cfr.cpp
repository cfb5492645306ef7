#include "sdcfr/sd_cfr.hpp"

#include <fstream>

#include <json.hpp>

#include "sdcfr/binio.hpp"

namespace sdcfr {

// ---------------------------------------------------------------------------
// ModelBuffer
// ---------------------------------------------------------------------------

ModelBuffer::ModelBuffer(ModelStorageMode mode, std::size_t capacity)
    : mode_(mode), capacity_(capacity) {
  if (mode_ == ModelStorageMode::reservoir && capacity_ == 0)
    throw std::invalid_argument("reservoir model buffer needs a positive capacity");
}

void ModelBuffer::append(ModelEntry entry, Rng* rng) {
  int i = player_index(entry.player);
  auto& list = entries_[i];
  ++seen_[i];
  if (mode_ == ModelStorageMode::keep_all) {
    if (!list.empty() && list.back().iteration >= entry.iteration)
      throw std::invalid_argument("model buffer iterations must be strictly increasing");
    list.push_back(std::move(entry));
    return;
  }
  if (list.size() < capacity_) {
    list.push_back(std::move(entry));
    return;
  }
  if (rng == nullptr) throw std::invalid_argument("reservoir append needs an rng");
  std::size_t j = static_cast<std::size_t>(uniform01(*rng) * static_cast<double>(seen_[i]));
  if (j < capacity_) list[j] = std::move(entry);
}

void ModelBuffer::save_manifest(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["mode"] = mode_ == ModelStorageMode::keep_all ? "keep_all" : "reservoir";
  j["capacity"] = capacity_;
  for (int p = 0; p < 2; ++p) {
    j["seen"].push_back(seen_[p]);
    auto& list = j["entries"].emplace_back(nlohmann::json::array());
    for (const auto& e : entries_[p])
      list.push_back({{"player", p},
                      {"iteration", e.iteration},
                      {"path", e.path.string()},
                      {"bytes", e.bytes},
                      {"checksum", e.checksum}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

ModelBuffer ModelBuffer::load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read manifest: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  ModelBuffer buffer(j.at("mode") == "keep_all" ? ModelStorageMode::keep_all
                                                : ModelStorageMode::reservoir,
                     j.at("capacity").get<std::size_t>());
  for (int p = 0; p < 2; ++p) {
    for (const auto& e : j.at("entries").at(p)) {
      ModelEntry entry;
      entry.player = player_from_index(e.at("player").get<int>());
      entry.iteration = e.at("iteration").get<int>();
      entry.path = e.at("path").get<std::string>();
      entry.bytes = e.at("bytes").get<std::uint64_t>();
      entry.checksum = e.at("checksum").get<std::uint64_t>();
      buffer.entries_[p].push_back(std::move(entry));
    }
    buffer.seen_[p] = j.at("seen").at(p).get<std::uint64_t>();
  }
  return buffer;
}

// ---------------------------------------------------------------------------
// CheckpointStore
// ---------------------------------------------------------------------------

CheckpointStore::CheckpointStore(std::size_t lru_capacity) : lru_capacity_(lru_capacity) {
  if (lru_capacity_ == 0) throw std::invalid_argument("LRU capacity must be positive");
}

std::shared_ptr<const NetParams> CheckpointStore::load(const std::filesystem::path& path) {
  std::lock_guard lock(mutex_);
  const std::string key = path.string();
  if (auto it = index_.find(key); it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
  }
  // Make room before decoding so the resident bound is never exceeded.
  while (lru_.size() >= lru_capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  auto params = std::make_shared<NetParams>(load_checkpoint(path).params);
  ++stats_.disk_loads;
  lru_.emplace_front(key, params);
  index_[key] = lru_.begin();
  stats_.resident = lru_.size();
  stats_.peak_resident = std::max(stats_.peak_resident, stats_.resident);
  return params;
}

// ---------------------------------------------------------------------------
// Iteration strategies
// ---------------------------------------------------------------------------

Distribution NetIterationStrategy::strategy(const GameState& state) const {
  auto params = store_->load(entry_.path);
  auto features = state.encode_features(state.current_player());
  auto out = forward<float>(*params, features);
  std::vector<double> outputs(out.begin(), out.end());
  auto slot_dist = advantage_policy(outputs, state.legal_mask());
  Distribution local(state.num_actions());
  for (int a = 0; a < state.num_actions(); ++a) local[a] = slot_dist[state.action_slot(a)];
  return local;
}

Distribution TabularIterationStrategy::strategy(const GameState& state) const {
  auto it = snapshot_->strategies.find(state.infoset_key(state.current_player()));
  if (it == snapshot_->strategies.end()) return uniform_distribution(state.num_actions());
  return it->second;
}

std::vector<StrategyHandlePtr> make_net_handles(const ModelBuffer& buffer, Player p,
                                                std::shared_ptr<CheckpointStore> store) {
  std::vector<StrategyHandlePtr> handles;
  for (const auto& entry : buffer.entries(p))
    handles.push_back(std::make_shared<NetIterationStrategy>(entry, store));
  return handles;
}

std::vector<StrategyHandlePtr> make_snapshot_handles(
    const std::vector<StrategySnapshot>& snapshots, Player p) {
  std::vector<StrategyHandlePtr> handles;
  for (const auto& snap : snapshots) {
    if (snap.player != p) continue;
    handles.push_back(std::make_shared<TabularIterationStrategy>(
        snap.iteration, std::make_shared<const StrategySnapshot>(snap)));
  }
  return handles;
}

std::vector<double> model_sampling_weights(const ModelBuffer& buffer, Player p) {
  auto entries = buffer.entries(p);
  if (entries.empty()) throw EmptyModelBuffer("model buffer is empty for this player");
  std::vector<double> weights(entries.size());
  double total = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) total += entries[i].iteration;
  for (std::size_t i = 0; i < entries.size(); ++i)
    weights[i] = entries[i].iteration / total;
  return weights;
}

const ModelEntry& sample_iteration_network(const ModelBuffer& buffer, Player p, Rng& rng) {
  auto entries = buffer.entries(p);
  if (entries.empty()) throw EmptyModelBuffer("model buffer is empty for this player");
  std::vector<double> weights(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i)
    weights[i] = static_cast<double>(entries[i].iteration);
  return entries[sample_weighted(weights, rng)];
}

// ---------------------------------------------------------------------------
// TrajectorySamplingPolicy
// ---------------------------------------------------------------------------

TrajectorySamplingPolicy::TrajectorySamplingPolicy(std::vector<StrategyHandlePtr> handles)
    : handles_(std::move(handles)) {
  if (handles_.empty()) throw EmptyModelBuffer("trajectory policy needs at least one network");
  weights_.reserve(handles_.size());
  for (const auto& h : handles_) weights_.push_back(static_cast<double>(h->iteration()));
}

void TrajectorySamplingPolicy::begin_episode(Rng& rng) {
  active_ = sample_weighted(weights_, rng);
}

Distribution TrajectorySamplingPolicy::act(const GameState& state) {
  if (active_ < 0)
    throw QueryBeforeReset("trajectory policy queried before begin_episode");
  return handles_[active_]->strategy(state);
}

int TrajectorySamplingPolicy::current_iteration() const {
  if (active_ < 0)
    throw QueryBeforeReset("trajectory policy queried before begin_episode");
  return handles_[active_]->iteration();
}

// ---------------------------------------------------------------------------
// Reach cache + explicit averaging
// ---------------------------------------------------------------------------

ReachCache::ReachCache(std::size_t n_networks) : current_(n_networks, 1.0) {}

void ReachCache::push(int expected_depth, std::span<const double> taken_probs) {
  if (expected_depth != depth())
    throw DepthMismatch("reach cache push at depth " + std::to_string(expected_depth) +
                        ", cache is at " + std::to_string(depth()));
  if (taken_probs.size() != current_.size())
    throw ShapeMismatch("reach cache push with wrong network count");
  stack_.push_back(current_);
  for (std::size_t i = 0; i < current_.size(); ++i) current_[i] *= taken_probs[i];
}

void ReachCache::pop() {
  if (stack_.empty()) throw DepthMismatch("reach cache pop at the root");
  current_ = std::move(stack_.back());
  stack_.pop_back();
}

SdCfrAverageStrategy::SdCfrAverageStrategy(std::vector<StrategyHandlePtr> handles, bool prune)
    : handles_(std::move(handles)),
      prune_(prune),
      cache_(handles_.size()),
      query_counts_(handles_.size(), 0) {
  if (handles_.empty()) throw EmptyModelBuffer("average strategy needs at least one network");
}

const std::vector<Distribution>& SdCfrAverageStrategy::per_net_distributions(
    const GameState& state) {
  InfoSetKey key = state.infoset_key(state.current_player());
  auto [it, inserted] = memo_.try_emplace(std::move(key));
  auto& dists = it->second;
  if (inserted) dists.resize(handles_.size());
  for (std::size_t i = 0; i < handles_.size(); ++i) {
    if (prune_ && cache_.dead(i)) continue;  // no forward passes for dead networks
    if (dists[i].empty()) {
      dists[i] = handles_[i]->strategy(state);
      ++query_counts_[i];
    }
  }
  return dists;
}

Distribution SdCfrAverageStrategy::query(const GameState& state) {
  const auto& dists = per_net_distributions(state);
  const int n = state.num_actions();
  Distribution numerator(n, 0.0);
  double denominator = 0.0;
  auto reach = cache_.products();
  for (std::size_t i = 0; i < handles_.size(); ++i) {
    const double weight = handles_[i]->iteration() * reach[i];
    if (weight == 0.0) continue;
    denominator += weight;
    for (int a = 0; a < n; ++a) numerator[a] += weight * dists[i][a];
  }
  if (denominator <= 0.0) return uniform_distribution(n);
  for (double& v : numerator) v /= denominator;
  return numerator;
}

void SdCfrAverageStrategy::push_own_action(const GameState& state, int action_id) {
  const auto& dists = per_net_distributions(state);
  std::vector<double> taken(handles_.size(), 0.0);
  for (std::size_t i = 0; i < handles_.size(); ++i) {
    if (prune_ && cache_.dead(i)) continue;
    taken[i] = dists[i][action_id];
  }
  cache_.push(cache_.depth(), taken);
}

void SdCfrAverageStrategy::pop_own_action() { cache_.pop(); }

void SdCfrAverageStrategy::reset() {
  while (cache_.depth() > 0) cache_.pop();
}

std::uint64_t SdCfrAverageStrategy::total_strategy_queries() const {
  std::uint64_t total = 0;
  for (auto c : query_counts_) total += c;
  return total;
}

Distribution explicit_average_distribution(
    const std::vector<StrategyHandlePtr>& handles,
    std::span<const std::pair<const GameState*, int>> own_trajectory,
    const GameState& query_state, bool prune_zero_reach) {
  SdCfrAverageStrategy strategy(handles, prune_zero_reach);
  for (const auto& [state, action] : own_trajectory)
    strategy.push_own_action(*state, action);
  return strategy.query(query_state);
}

}  // namespace sdcfr
