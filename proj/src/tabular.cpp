#include "sdcfr/tabular.hpp"

#include "sdcfr/binio.hpp"

namespace sdcfr {

Distribution regret_matching(std::span<const double> regrets) {
  if (regrets.empty()) throw EmptyActionSet("regret_matching on empty action set");
  double positive_sum = 0.0;
  for (double r : regrets) positive_sum += std::max(r, 0.0);
  if (positive_sum <= 0.0) return uniform_distribution(static_cast<int>(regrets.size()));
  Distribution dist(regrets.size());
  for (std::size_t a = 0; a < regrets.size(); ++a)
    dist[a] = std::max(regrets[a], 0.0) / positive_sum;
  return dist;
}

Distribution average_strategy(const AvgStrategyTable& table, const InfoSetKey& key,
                              int num_actions) {
  auto it = table.values.find(key);
  if (it == table.values.end() || it->second.denominator <= 0.0)
    return uniform_distribution(num_actions);
  const auto& entry = it->second;
  Distribution dist(entry.numerator.size());
  for (std::size_t a = 0; a < dist.size(); ++a) dist[a] = entry.numerator[a] / entry.denominator;
  return dist;
}

TabularCfr::TabularCfr(const Game& game, CfrMode mode, UpdateScheme scheme)
    : game_(game), mode_(mode), scheme_(scheme) {
  weight_ = mode_ == CfrMode::linear ? [](int t) { return static_cast<double>(t); }
                                     : std::function<double(int)>([](int) { return 1.0; });
}

void TabularCfr::run_iteration() {
  double w = weight_(t_);
  if (scheme_ == UpdateScheme::alternating) {
    int update_player = t_ % 2;
    if (snapshots_enabled_) take_snapshot(player_from_index(update_player));
    traverse(*game_.new_initial_state(), 1.0, 1.0, 1.0, update_player, w);
  } else {
    if (snapshots_enabled_) {
      take_snapshot(Player::p0);
      take_snapshot(Player::p1);
    }
    traverse(*game_.new_initial_state(), 1.0, 1.0, 1.0, -1, w);
  }
  // The iteration strategy sigma^t is fixed for the whole traversal: the
  // staged updates land only now.
  for (int p = 0; p < 2; ++p) {
    for (auto& [key, delta] : pending_regrets_[p]) {
      auto& regs = regrets_[p].values[key];
      regs.resize(delta.size(), 0.0);
      for (std::size_t a = 0; a < delta.size(); ++a) regs[a] += delta[a];
    }
    for (auto& [key, delta] : pending_averages_[p]) {
      auto& avg = averages_[p].values[key];
      avg.numerator.resize(delta.numerator.size(), 0.0);
      for (std::size_t a = 0; a < delta.numerator.size(); ++a)
        avg.numerator[a] += delta.numerator[a];
      avg.denominator += delta.denominator;
    }
    pending_regrets_[p].clear();
    pending_averages_[p].clear();
  }
  ++t_;
}

void TabularCfr::run_iterations(int n) {
  for (int i = 0; i < n; ++i) run_iteration();
}

Distribution TabularCfr::current_strategy(Player p, const InfoSetKey& key,
                                          int num_actions) const {
  auto regs = regrets_[player_index(p)].at(key);
  if (regs.empty()) return uniform_distribution(num_actions);
  return regret_matching(regs);
}

Distribution TabularCfr::average_strategy_at(Player p, const InfoSetKey& key,
                                             int num_actions) const {
  return average_strategy(averages_[player_index(p)], key, num_actions);
}

// Post-order recursion carrying per-player and chance reach products.
// Returns the expected utility for player 0 under the current iteration
// strategies. update_player == -1 updates both players.
double TabularCfr::traverse(const GameState& state, double reach0, double reach1,
                            double reach_c, int update_player, double w) {
  if (state.is_terminal()) return static_cast<double>(state.terminal_utility(Player::p0));

  if (state.current_player() == Player::chance) {
    double value = 0.0;
    for (const auto& outcome : state.chance_outcomes())
      value += outcome.prob *
               traverse(*state.apply_action(outcome.action.id), reach0, reach1,
                        reach_c * outcome.prob, update_player, w);
    return value;
  }

  int p = player_index(state.current_player());
  int n = state.num_actions();
  InfoSetKey key = state.infoset_key(state.current_player());
  Distribution sigma = current_strategy(state.current_player(), key, n);

  std::vector<double> child_values(n);
  double value = 0.0;
  for (int a = 0; a < n; ++a) {
    double r0 = p == 0 ? reach0 * sigma[a] : reach0;
    double r1 = p == 1 ? reach1 * sigma[a] : reach1;
    child_values[a] = traverse(*state.apply_action(a), r0, r1, reach_c, update_player, w);
    value += sigma[a] * child_values[a];
  }

  if (update_player < 0 || update_player == p) {
    double sign = p == 0 ? 1.0 : -1.0;
    double counterfactual = (p == 0 ? reach1 : reach0) * reach_c;
    double own_reach = p == 0 ? reach0 : reach1;

    auto& regs = pending_regrets_[p][key];
    regs.resize(n, 0.0);
    for (int a = 0; a < n; ++a)
      regs[a] += w * counterfactual * sign * (child_values[a] - value);

    auto& avg = pending_averages_[p][key];
    avg.numerator.resize(n, 0.0);
    for (int a = 0; a < n; ++a) avg.numerator[a] += w * own_reach * sigma[a];
    avg.denominator += w * own_reach;
  }
  return value;
}

void TabularCfr::take_snapshot(Player p) {
  if (infosets_.empty()) infosets_ = enumerate_infosets(game_);
  StrategySnapshot snap;
  snap.iteration = t_;
  snap.player = p;
  for (const auto& info : infosets_[player_index(p)])
    snap.strategies.emplace(info.key, current_strategy(p, info.key, info.num_actions));
  snapshots_.push_back(std::move(snap));
}

void write_snapshot_file(const StrategySnapshot& snapshot, const std::filesystem::path& path) {
  BinaryWriter out(path, "SDSS", 1);
  out.write_u32(static_cast<std::uint32_t>(snapshot.iteration));
  out.write_u8(static_cast<std::uint8_t>(player_index(snapshot.player)));
  out.write_u64(snapshot.strategies.size());
  for (const auto& [key, dist] : snapshot.strategies) {
    out.write_u32(static_cast<std::uint32_t>(key.bytes.size()));
    out.write_bytes(key.bytes.data(), key.bytes.size());
    out.write_u32(static_cast<std::uint32_t>(dist.size()));
    for (double p : dist) out.write_f64(p);
  }
}

StrategySnapshot read_snapshot_file(const std::filesystem::path& path) {
  BinaryReader in(path, "SDSS", 1);
  StrategySnapshot snap;
  snap.iteration = static_cast<int>(in.read_u32());
  snap.player = player_from_index(in.read_u8());
  std::uint64_t count = in.read_u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    InfoSetKey key;
    key.bytes.resize(in.read_u32());
    in.read_bytes(key.bytes.data(), key.bytes.size());
    Distribution dist(in.read_u32());
    for (double& p : dist) p = in.read_f64();
    snap.strategies.emplace(std::move(key), std::move(dist));
  }
  return snap;
}

}  // namespace sdcfr
