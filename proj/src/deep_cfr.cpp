#include "sdcfr/deep_cfr.hpp"

#include <algorithm>
#include <thread>

namespace sdcfr {

Distribution advantage_policy(std::span<const double> outputs,
                              std::span<const std::uint8_t> mask) {
  if (outputs.size() != mask.size())
    throw ShapeMismatch("advantage_policy: outputs and mask lengths differ");
  double positive_sum = 0.0;
  int n_legal = 0;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    if (!mask[s]) continue;
    ++n_legal;
    positive_sum += std::max(outputs[s], 0.0);
  }
  if (n_legal == 0) throw NoLegalAction("advantage_policy: empty legal mask");

  Distribution dist(outputs.size(), 0.0);
  if (positive_sum > 0.0) {
    for (std::size_t s = 0; s < outputs.size(); ++s)
      if (mask[s]) dist[s] = std::max(outputs[s], 0.0) / positive_sum;
    return dist;
  }
  // No positive advantage: play the highest-advantage action outright.
  std::size_t best = outputs.size();
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    if (!mask[s]) continue;
    if (best == outputs.size() || outputs[s] > outputs[best]) best = s;
  }
  dist[best] = 1.0;
  return dist;
}

Distribution average_policy(std::span<const double> outputs,
                            std::span<const std::uint8_t> mask) {
  if (outputs.size() != mask.size())
    throw ShapeMismatch("average_policy: outputs and mask lengths differ");
  double positive_sum = 0.0;
  int n_legal = 0;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    if (!mask[s]) continue;
    ++n_legal;
    positive_sum += std::max(outputs[s], 0.0);
  }
  if (n_legal == 0) throw NoLegalAction("average_policy: empty legal mask");
  Distribution dist(outputs.size(), 0.0);
  if (positive_sum > 0.0) {
    for (std::size_t s = 0; s < outputs.size(); ++s)
      if (mask[s]) dist[s] = std::max(outputs[s], 0.0) / positive_sum;
  } else {
    for (std::size_t s = 0; s < outputs.size(); ++s)
      if (mask[s]) dist[s] = 1.0 / n_legal;
  }
  return dist;
}

std::vector<double> NetAdvantage::advantages(const GameState& state) const {
  auto features = state.encode_features(state.current_player());
  auto out = forward<float>(params_, features);
  return {out.begin(), out.end()};
}

std::vector<double> TableAdvantage::advantages(const GameState& state) const {
  std::vector<double> adv(state.game().max_actions(), 0.0);
  auto regs = table_->at(state.infoset_key(player_));
  for (int a = 0; a < state.num_actions() && a < static_cast<int>(regs.size()); ++a)
    adv[state.action_slot(a)] = regs[a];
  return adv;
}

Distribution advantage_strategy(const AdvantageSource& source, const GameState& state) {
  auto slot_dist = advantage_policy(source.advantages(state), state.legal_mask());
  Distribution local(state.num_actions());
  for (int a = 0; a < state.num_actions(); ++a) local[a] = slot_dist[state.action_slot(a)];
  return local;
}

IterationStrategyFn make_advantage_policy_fn(std::shared_ptr<const AdvantageSource> source) {
  return [source = std::move(source)](const GameState& state) {
    return advantage_strategy(*source, state);
  };
}

IterationStrategyFn uniform_policy_fn() {
  return [](const GameState& state) { return uniform_distribution(state.num_actions()); };
}

void DeepCfrConfig::validate() const {
  if (traversals_per_iteration < 1)
    throw std::invalid_argument("traversals_per_iteration must be positive");
  if (advantage_buffer_capacity == 0 || strategy_buffer_capacity == 0)
    throw std::invalid_argument("buffer capacities must be positive");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  value_train.validate();
  avg_train.validate();
}

DeepCfrRun::DeepCfrRun(const Game& game, DeepCfrConfig config, std::uint64_t seed,
                       std::filesystem::path checkpoint_dir)
    : game_(game),
      config_(std::move(config)),
      seed_(seed),
      checkpoint_dir_(std::move(checkpoint_dir)),
      advantage_{ReservoirBuffer<AdvantageSample>(config_.advantage_buffer_capacity),
                 ReservoirBuffer<AdvantageSample>(config_.advantage_buffer_capacity)},
      strategy_{ReservoirBuffer<StrategySample>(config_.strategy_buffer_capacity),
                ReservoirBuffer<StrategySample>(config_.strategy_buffer_capacity)} {
  config_.validate();
  net_config_.input_dim = game_.feature_dim();
  net_config_.hidden_dims = config_.hidden_dims;
  net_config_.output_dim = game_.max_actions();
  std::filesystem::create_directories(checkpoint_dir_);
}

IterationStrategyFn DeepCfrRun::policy_for(Player p) const {
  int i = player_index(p);
  if (override_[i]) return override_[i];
  if (!current_[i].has_value()) return uniform_policy_fn();
  return make_advantage_policy_fn(std::make_shared<NetAdvantage>(*current_[i]));
}

CheckpointRecord DeepCfrRun::run_iteration() {
  const int t = t_;
  const Player traverser = player_from_index(t % 2);
  const int i = player_index(traverser);

  auto policy0 = policy_for(Player::p0);
  auto policy1 = policy_for(Player::p1);
  auto* strategy_out =
      config_.fill_strategy_buffers ? &strategy_[1 - i] : nullptr;

  auto run_range = [&](int begin, int end) {
    for (int k = begin; k < end; ++k) {
      Rng rng = make_stream(seed_, {1, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(k)});
      external_sampling_traverse(*game_.new_initial_state(), traverser, policy0, policy1, t,
                                 &advantage_[i], strategy_out, rng);
    }
  };
  const int n = config_.traversals_per_iteration;
  if (config_.workers <= 1) {
    run_range(0, n);
  } else {
    std::vector<std::thread> threads;
    const int chunk = (n + config_.workers - 1) / config_.workers;
    for (int w = 0; w < config_.workers; ++w)
      threads.emplace_back(run_range, std::min(w * chunk, n), std::min((w + 1) * chunk, n));
    for (auto& th : threads) th.join();
  }

  NetParams params;
  if (t < 3 || !current_[i].has_value()) {
    Rng init_rng = make_stream(seed_, {2, static_cast<std::uint64_t>(t)});
    params = init_params(net_config_, init_rng);
  } else {
    params = *current_[i];  // warm start from this player's t-2 net
  }
  Rng train_rng = make_stream(seed_, {3, static_cast<std::uint64_t>(t)});
  auto views = as_train_samples(advantage_[i].entries());
  params = train(std::move(params), views, config_.value_train, t, train_rng);

  char name[64];
  std::snprintf(name, sizeof(name), "value_p%d_t%06d.bin", i, t);
  CheckpointRecord record{traverser, t, checkpoint_dir_ / name};
  save_checkpoint(params, {static_cast<std::uint8_t>(i), static_cast<std::uint32_t>(t)},
                  record.path);
  current_[i] = std::move(params);
  checkpoints_.push_back(record);
  ++t_;
  return record;
}

float DeepCfrRun::training_loss(const NetParams& params, Player p,
                                std::size_t max_samples) const {
  auto entries = advantage_[player_index(p)].entries();
  const std::size_t n = std::min(entries.size(), max_samples);
  if (n == 0) return 0.0f;
  const float total = static_cast<float>(std::max(t_ - 1, 1));
  double loss = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto& sample = entries[s];
    auto out = forward<float>(params, sample.features);
    double err = 0.0;
    for (std::size_t a = 0; a < out.size(); ++a) {
      if (!sample.legal_mask[a]) continue;
      double d = static_cast<double>(out[a]) - sample.target[a];
      err += d * d;
    }
    loss += err * sample.iteration / total;
  }
  return static_cast<float>(loss / static_cast<double>(n));
}

void DeepCfrRun::restore(int next_iteration, std::optional<NetParams> net0,
                         std::optional<NetParams> net1) {
  t_ = next_iteration;
  current_[0] = std::move(net0);
  current_[1] = std::move(net1);
}

NetParams train_average_network(const Game& game, const DeepCfrConfig& config,
                                std::span<const StrategySample> data,
                                int current_total_iterations, Rng& rng) {
  if (data.empty()) throw EmptyBuffer("train_average_network on empty strategy buffer");
  NetConfig net_config;
  net_config.input_dim = game.feature_dim();
  net_config.hidden_dims = config.hidden_dims;
  net_config.output_dim = game.max_actions();
  NetParams params = init_params(net_config, rng);
  auto views = as_train_samples(data);
  return train(std::move(params), views, config.avg_train, current_total_iterations, rng);
}

}  // namespace sdcfr
