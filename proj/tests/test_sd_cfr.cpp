#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "sdcfr/deep_cfr.hpp"
#include "sdcfr/enumerate.hpp"
#include "sdcfr/kuhn.hpp"
#include "sdcfr/leduc.hpp"
#include "sdcfr/sd_cfr.hpp"
#include "sdcfr/tabular.hpp"
#include "test_util.hpp"

using namespace sdcfr;

TEST_SUITE_BEGIN("sd_cfr");

namespace {

ModelEntry entry_for(Player p, int iteration) {
  ModelEntry e;
  e.player = p;
  e.iteration = iteration;
  return e;
}

/// Fixed-distribution iteration strategy for stub-based arithmetic tests.
class FixedStrategy final : public IterationStrategyHandle {
 public:
  FixedStrategy(int iteration, Distribution dist)
      : iteration_(iteration), dist_(std::move(dist)) {}
  int iteration() const override { return iteration_; }
  Distribution strategy(const GameState&) const override { return dist_; }

 private:
  int iteration_;
  Distribution dist_;
};

}  // namespace

TEST_CASE("model sampling weights are proportional to the iteration") {
  ModelBuffer buffer;
  for (int t = 1; t <= 4; ++t) buffer.append(entry_for(Player::p0, t));
  auto weights = model_sampling_weights(buffer, Player::p0);
  CHECK(weights == std::vector<double>{0.1, 0.2, 0.3, 0.4});

  ModelBuffer single;
  single.append(entry_for(Player::p1, 7));
  Rng rng = make_stream(41, {0});
  for (int i = 0; i < 32; ++i)
    CHECK(sample_iteration_network(single, Player::p1, rng).iteration == 7);

  CHECK_THROWS_AS(model_sampling_weights(single, Player::p0), EmptyModelBuffer);
}

TEST_CASE("empirical draw frequencies follow t over the weight sum") {
  ModelBuffer buffer;
  for (int t = 1; t <= 10; ++t) buffer.append(entry_for(Player::p0, t));
  const int n = 100000;
  std::vector<int> counts(11, 0);
  Rng rng = make_stream(42, {1});
  for (int i = 0; i < n; ++i)
    ++counts[sample_iteration_network(buffer, Player::p0, rng).iteration];
  for (int t = 1; t <= 10; ++t) {
    double p = t / 55.0;
    double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(counts[t]) / n - p) <= 3 * sigma);
  }
}

TEST_CASE("model buffer keep_all demands increasing iterations; reservoir drops") {
  ModelBuffer keep;
  keep.append(entry_for(Player::p0, 2));
  CHECK_THROWS(keep.append(entry_for(Player::p0, 2)));

  ModelBuffer reservoir(ModelStorageMode::reservoir, 2);
  Rng rng = make_stream(43, {0});
  for (int t = 1; t <= 40; ++t) reservoir.append(entry_for(Player::p0, t), &rng);
  CHECK(reservoir.entries(Player::p0).size() == 2);
  CHECK(reservoir.seen(Player::p0) == 40);
}

TEST_CASE("manifest round-trips") {
  ModelBuffer buffer;
  for (int t = 1; t <= 3; ++t) {
    auto e = entry_for(player_from_index(t % 2), t);
    e.path = "checkpoints/value_p" + std::to_string(t % 2) + "_t" + std::to_string(t) + ".bin";
    e.bytes = 1000 + t;
    e.checksum = 77u * t;
    buffer.append(e);
  }
  auto path = std::filesystem::temp_directory_path() / "sdcfr_manifest.json";
  buffer.save_manifest(path);
  auto loaded = ModelBuffer::load_manifest(path);
  for (Player p : {Player::p0, Player::p1}) {
    REQUIRE(loaded.entries(p).size() == buffer.entries(p).size());
    for (std::size_t i = 0; i < loaded.entries(p).size(); ++i) {
      CHECK(loaded.entries(p)[i].iteration == buffer.entries(p)[i].iteration);
      CHECK(loaded.entries(p)[i].path == buffer.entries(p)[i].path);
      CHECK(loaded.entries(p)[i].bytes == buffer.entries(p)[i].bytes);
      CHECK(loaded.entries(p)[i].checksum == buffer.entries(p)[i].checksum);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("trajectory policy plays one sampled network per episode") {
  std::vector<StrategyHandlePtr> handles = {
      std::make_shared<FixedStrategy>(1, Distribution{1.0, 0.0}),
      std::make_shared<FixedStrategy>(3, Distribution{0.0, 1.0})};
  TrajectorySamplingPolicy policy(handles);
  CHECK_THROWS_AS(policy.current_iteration(), QueryBeforeReset);

  KuhnGame game;
  auto state = game.new_initial_state()->apply_action(0)->apply_action(0);
  CHECK_THROWS_AS(policy.act(*state), QueryBeforeReset);

  std::map<int, int> seen;
  for (int e = 0; e < 3000; ++e) {
    Rng rng = make_stream(44, {static_cast<std::uint64_t>(e)});
    policy.begin_episode(rng);
    int it = policy.current_iteration();
    auto first = policy.act(*state);
    auto second = policy.act(*state);
    CHECK(first == second);  // same network for the whole trajectory
    CHECK(policy.current_iteration() == it);
    CHECK(first == (it == 1 ? Distribution{1.0, 0.0} : Distribution{0.0, 1.0}));
    ++seen[it];
  }
  // Weight-3 network drawn three times as often.
  CHECK(std::abs(static_cast<double>(seen[3]) / 3000 - 0.75) < 0.03);
}

TEST_CASE("explicit average: root query and two-network arithmetic") {
  KuhnGame game;
  auto root_p0 = game.new_initial_state()->apply_action(0)->apply_action(0);

  SUBCASE("empty trajectory weights by t alone") {
    std::vector<StrategyHandlePtr> handles = {
        std::make_shared<FixedStrategy>(1, Distribution{1.0, 0.0}),
        std::make_shared<FixedStrategy>(3, Distribution{0.0, 1.0})};
    auto dist = explicit_average_distribution(handles, {}, *root_p0);
    CHECK(dist[0] == doctest::Approx(0.25));
    CHECK(dist[1] == doctest::Approx(0.75));
  }

  SUBCASE("reach products weight the mixture") {
    // Fixed per-network distributions: the taken root action has
    // sigma_1 = 0.5 and sigma_2 = 1.0, so reaches are (0.5, 1.0) and
    //   (1*0.5*(0.5,0.5) + 2*1.0*(1,0)) / (1*0.5 + 2*1.0) = (0.9, 0.1).
    std::vector<StrategyHandlePtr> handles = {
        std::make_shared<FixedStrategy>(1, Distribution{0.5, 0.5}),
        std::make_shared<FixedStrategy>(2, Distribution{1.0, 0.0})};
    std::vector<std::pair<const GameState*, int>> trajectory = {{root_p0.get(), 0}};
    auto dist = explicit_average_distribution(handles, trajectory, *root_p0);
    CHECK(dist[0] == doctest::Approx(0.9));
    CHECK(dist[1] == doctest::Approx(0.1));
  }

  SUBCASE("zero denominator falls back to uniform") {
    std::vector<StrategyHandlePtr> handles = {
        std::make_shared<FixedStrategy>(4, Distribution{0.0, 1.0})};
    std::vector<std::pair<const GameState*, int>> trajectory = {{root_p0.get(), 0}};
    auto dist = explicit_average_distribution(handles, trajectory, *root_p0);
    CHECK(dist == uniform_distribution(2));
  }

  SUBCASE("empty handle list is rejected") {
    CHECK_THROWS_AS(SdCfrAverageStrategy(std::vector<StrategyHandlePtr>{}),
                    EmptyModelBuffer);
  }
}

TEST_CASE("reach cache: products, zero pruning, depth checks") {
  ReachCache cache(2);
  CHECK(cache.depth() == 0);
  cache.push(0, std::vector<double>{0.5, 0.0});
  CHECK(cache.products()[0] == 0.5);
  CHECK(cache.dead(1));
  cache.push(1, std::vector<double>{0.4, 0.9});
  CHECK(cache.products()[0] == doctest::Approx(0.2));
  CHECK(cache.dead(1));  // once dead, dead for the rest of the trajectory
  CHECK_THROWS_AS(cache.push(5, std::vector<double>{1, 1}), DepthMismatch);
  CHECK_THROWS_AS(cache.push(2, std::vector<double>{1.0}), ShapeMismatch);
  cache.pop();
  CHECK(cache.products()[0] == 0.5);
  cache.pop();
  CHECK(cache.depth() == 0);
  CHECK_THROWS_AS(cache.pop(), DepthMismatch);
}

namespace {

// Shared helper: tabular linear run with snapshots, handles per player.
struct TabularReference {
  std::unique_ptr<TabularCfr> solver;
  std::vector<StrategyHandlePtr> handles[2];

  TabularReference(const Game& game, int iterations) {
    solver = std::make_unique<TabularCfr>(game, CfrMode::linear, UpdateScheme::alternating);
    solver->enable_snapshots(true);
    solver->run_iterations(iterations);
    for (int p = 0; p < 2; ++p)
      handles[p] = make_snapshot_handles(solver->snapshots(), player_from_index(p));
  }
};

std::vector<std::pair<const GameState*, int>> as_view(
    const std::vector<std::pair<StatePtr, int>>& own) {
  std::vector<std::pair<const GameState*, int>> view;
  for (const auto& [state, action] : own) view.emplace_back(state.get(), action);
  return view;
}

}  // namespace

TEST_CASE("explicit averaging equals the tabular linear average everywhere (kuhn)") {
  KuhnGame game;
  TabularReference ref(game, 50);
  auto infosets = enumerate_infosets(game);
  for (const auto& side : infosets) {
    for (const auto& info : side) {
      int p = player_index(info.player);
      auto dist = explicit_average_distribution(ref.handles[p], as_view(info.own_trajectory),
                                                *info.state);
      auto expected = ref.solver->average_strategy_at(info.player, info.key, info.num_actions);
      for (int a = 0; a < info.num_actions; ++a)
        CHECK(std::abs(dist[a] - expected[a]) < 1e-9);
    }
  }
}

TEST_CASE("trajectory sampling matches explicit queries at the root infosets") {
  KuhnGame game;
  TabularReference ref(game, 30);
  TrajectorySamplingPolicy policy(ref.handles[0]);

  std::map<std::string, std::vector<int>> action_counts;  // key -> per-action
  std::map<std::string, int> visits;
  const int episodes = 100000;
  for (int e = 0; e < episodes; ++e) {
    Rng rng = make_stream(45, {static_cast<std::uint64_t>(e)});
    StatePtr state = game.new_initial_state();
    while (state->current_player() == Player::chance) {
      auto outcomes = state->chance_outcomes();
      double u = uniform01(rng), acc = 0.0;
      int chosen = static_cast<int>(outcomes.size()) - 1;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        acc += outcomes[i].prob;
        if (u < acc) {
          chosen = static_cast<int>(i);
          break;
        }
      }
      state = state->apply_action(outcomes[chosen].action.id);
    }
    policy.begin_episode(rng);
    auto dist = policy.act(*state);
    int a = 0;
    double u = uniform01(rng), acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      acc += dist[i];
      if (u < acc) {
        a = static_cast<int>(i);
        break;
      }
      a = static_cast<int>(i);
    }
    auto key = state->infoset_key(Player::p0).bytes;
    auto& counts = action_counts[key];
    counts.resize(dist.size(), 0);
    ++counts[a];
    ++visits[key];
  }

  auto infosets = enumerate_infosets(game);
  for (const auto& info : infosets[0]) {
    if (!info.own_trajectory.empty()) continue;  // root decisions only
    auto expected = explicit_average_distribution(ref.handles[0], {}, *info.state);
    int n = visits.at(info.key.bytes);
    const auto& counts = action_counts.at(info.key.bytes);
    for (int a = 0; a < info.num_actions; ++a) {
      double p = expected[a];
      double freq = static_cast<double>(counts[a]) / n;
      double sigma = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(freq - p) <= 3 * sigma + 1e-9);
    }
  }
}

TEST_CASE("incremental reach caching equals recomputation from scratch (leduc)") {
  LeducGame game;
  TabularReference ref(game, 10);
  SdCfrAverageStrategy cached[2] = {SdCfrAverageStrategy(ref.handles[0]),
                                    SdCfrAverageStrategy(ref.handles[1])};

  std::vector<std::pair<StatePtr, int>> trail[2];
  std::function<void(const GameState&)> dfs = [&](const GameState& state) {
    if (state.is_terminal()) return;
    if (state.current_player() == Player::chance) {
      for (const auto& o : state.chance_outcomes()) dfs(*state.apply_action(o.action.id));
      return;
    }
    int p = player_index(state.current_player());
    auto incremental = cached[p].query(state);
    auto scratch = explicit_average_distribution(ref.handles[p], as_view(trail[p]), state);
    REQUIRE(incremental.size() == scratch.size());
    for (std::size_t a = 0; a < incremental.size(); ++a)
      CHECK(std::abs(incremental[a] - scratch[a]) < 1e-12);
    for (int a = 0; a < state.num_actions(); ++a) {
      cached[p].push_own_action(state, a);
      trail[p].emplace_back(state.clone(), a);
      dfs(*state.apply_action(a));
      cached[p].pop_own_action();
      trail[p].pop_back();
    }
  };
  dfs(*game.new_initial_state());
}

TEST_CASE("zero-reach pruning never changes a distribution") {
  KuhnGame game;
  TabularReference ref(game, 40);
  auto infosets = enumerate_infosets(game);
  for (const auto& side : infosets) {
    for (const auto& info : side) {
      int p = player_index(info.player);
      auto with = explicit_average_distribution(ref.handles[p], as_view(info.own_trajectory),
                                                *info.state, /*prune=*/true);
      auto without = explicit_average_distribution(ref.handles[p],
                                                   as_view(info.own_trajectory), *info.state,
                                                   /*prune=*/false);
      for (std::size_t a = 0; a < with.size(); ++a) CHECK(with[a] == without[a]);
    }
  }
}

TEST_CASE("pruning skips forward passes for dead networks") {
  // A network that assigns probability zero to the taken action must not be
  // queried again below that point.
  KuhnGame game;
  auto root_p0 = game.new_initial_state()->apply_action(0)->apply_action(0);
  auto deeper = root_p0->apply_action(0)->apply_action(1);  // check, then a bet
  REQUIRE(deeper->current_player() == Player::p0);

  std::vector<StrategyHandlePtr> handles = {
      std::make_shared<FixedStrategy>(1, Distribution{0.0, 1.0}),
      std::make_shared<FixedStrategy>(2, Distribution{0.5, 0.5})};
  SdCfrAverageStrategy strategy(handles);
  strategy.push_own_action(*root_p0, 0);  // net 1 assigns zero to action 0
  CHECK(strategy.strategy_queries(0) == 1);
  strategy.query(*deeper);
  CHECK(strategy.strategy_queries(0) == 1);  // not queried below the zero
  CHECK(strategy.strategy_queries(1) == 2);
}

TEST_CASE("checkpoint store keeps a bounded working set") {
  KuhnGame game;
  auto dir = std::filesystem::temp_directory_path() / "sdcfr_store_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  DeepCfrConfig config;
  config.traversals_per_iteration = 40;
  config.hidden_dims = {16, 16};
  config.value_train.batch_size = 64;
  config.value_train.n_updates = 5;
  DeepCfrRun run(game, config, 5, dir);
  ModelBuffer models;
  for (int t = 1; t <= 6; ++t) {
    auto record = run.run_iteration();
    ModelEntry entry;
    entry.player = record.player;
    entry.iteration = record.iteration;
    entry.path = record.path;
    entry.bytes = std::filesystem::file_size(record.path);
    models.append(entry);
  }

  // keep_all: disk usage is exactly per-net checkpoint size times count.
  NetConfig net_config{.input_dim = game.feature_dim(),
                       .hidden_dims = {16, 16},
                       .output_dim = game.max_actions()};
  for (Player p : {Player::p0, Player::p1})
    for (const auto& entry : models.entries(p))
      CHECK(entry.bytes == checkpoint_byte_size(net_config));

  // An LRU of one decoded network suffices for exact queries.
  auto store1 = std::make_shared<CheckpointStore>(1);
  auto store8 = std::make_shared<CheckpointStore>(8);
  auto infosets = enumerate_infosets(game);
  for (const auto& info : infosets[0]) {
    SdCfrAverageStrategy a(make_net_handles(models, Player::p0, store1));
    SdCfrAverageStrategy b(make_net_handles(models, Player::p0, store8));
    for (const auto& [state, action] : info.own_trajectory) {
      a.push_own_action(*state, action);
      b.push_own_action(*state, action);
    }
    auto da = a.query(*info.state);
    auto db = b.query(*info.state);
    for (std::size_t i = 0; i < da.size(); ++i) CHECK(da[i] == db[i]);
  }
  CHECK(store1->stats().peak_resident == 1);
  CHECK(store8->stats().peak_resident <= 8);
  CHECK(store1->stats().disk_loads > store8->stats().disk_loads);
  std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
