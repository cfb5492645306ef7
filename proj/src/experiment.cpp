#include "sdcfr/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sdcfr/binio.hpp"
#include "sdcfr/kuhn.hpp"
#include "sdcfr/policies.hpp"
#include "sdcfr/tabular.hpp"

namespace sdcfr {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::tabular_vanilla: return "tabular_vanilla";
    case Algorithm::tabular_linear: return "tabular_linear";
    case Algorithm::deep_cfr: return "deep_cfr";
    case Algorithm::sd_cfr_shared: return "sd_cfr_shared";
  }
  throw std::logic_error("unknown algorithm");
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "tabular_vanilla") return Algorithm::tabular_vanilla;
  if (s == "tabular_linear") return Algorithm::tabular_linear;
  if (s == "deep_cfr") return Algorithm::deep_cfr;
  if (s == "sd_cfr_shared") return Algorithm::sd_cfr_shared;
  throw ConfigError("algorithm: unknown value '" + s + "'");
}

std::unique_ptr<Game> make_game(const GameConfig& config) {
  if (config.name == "kuhn") return std::make_unique<KuhnGame>();
  if (config.name == "leduc") return std::make_unique<LeducGame>();
  if (config.name == "big_leduc") return std::make_unique<LeducGame>(LeducConfig::big());
  if (config.name == "leduc_custom") return std::make_unique<LeducGame>(config.leduc);
  throw ConfigError("game.name: unknown game '" + config.name + "'");
}

void ExperimentConfig::validate() const {
  auto positive = [](long long v, const char* field) {
    if (v <= 0) throw ConfigError(std::string(field) + ": must be positive, got " +
                                  std::to_string(v));
  };
  make_game(game);  // validates game.name
  if (game.name == "leduc_custom") {
    try {
      game.leduc.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("game.leduc: ") + e.what());
    }
  }
  positive(iterations, "iterations");
  positive(eval_every, "eval_every");
  positive(workers, "workers");
  positive(node_budget, "node_budget");
  if (save_every < 0) throw ConfigError("save_every: must be >= 0");
  if (algorithm == Algorithm::deep_cfr || algorithm == Algorithm::sd_cfr_shared) {
    try {
      deep.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("deep: ") + e.what());
    }
    if (algorithm == Algorithm::deep_cfr && !deep.fill_strategy_buffers)
      throw ConfigError("deep.fill_strategy_buffers: deep_cfr needs strategy samples");
    if (model_buffer_mode == ModelStorageMode::reservoir && model_buffer_capacity == 0)
      throw ConfigError("model_buffer_capacity: reservoir mode needs a positive capacity");
  } else {
    if (tabular_update_scheme != "alternating" && tabular_update_scheme != "simultaneous")
      throw ConfigError("tabular_update_scheme: must be alternating or simultaneous");
  }
}

std::string ExperimentConfig::effective_run_id() const {
  if (!run_id.empty()) return run_id;
  return to_string(algorithm) + "_" + game.name + "_s" + std::to_string(seed);
}

namespace {

json train_to_json(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"n_updates", t.n_updates},
          {"learning_rate", t.learning_rate},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_epsilon", t.adam_epsilon},
          {"grad_clip_norm", t.grad_clip_norm}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.batch_size = j.at("batch_size").get<int>();
  t.n_updates = j.at("n_updates").get<int>();
  t.learning_rate = j.at("learning_rate").get<float>();
  t.adam_beta1 = j.at("adam_beta1").get<float>();
  t.adam_beta2 = j.at("adam_beta2").get<float>();
  t.adam_epsilon = j.at("adam_epsilon").get<float>();
  t.grad_clip_norm = j.at("grad_clip_norm").get<float>();
  return t;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["run_id"] = c.run_id;
  j["game"] = {{"name", c.game.name},
               {"n_ranks", c.game.leduc.n_ranks},
               {"n_suits", c.game.leduc.n_suits},
               {"max_raises_per_round", c.game.leduc.max_raises_per_round},
               {"ante", c.game.leduc.ante},
               {"bet_sizes", c.game.leduc.bet_sizes}};
  j["algorithm"] = to_string(c.algorithm);
  j["iterations"] = c.iterations;
  j["eval_every"] = c.eval_every;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["deep"] = {{"traversals_per_iteration", c.deep.traversals_per_iteration},
               {"advantage_buffer_capacity", c.deep.advantage_buffer_capacity},
               {"strategy_buffer_capacity", c.deep.strategy_buffer_capacity},
               {"hidden_dims", c.deep.hidden_dims},
               {"value_train", train_to_json(c.deep.value_train)},
               {"avg_train", train_to_json(c.deep.avg_train)},
               {"fill_strategy_buffers", c.deep.fill_strategy_buffers}};
  j["model_buffer"] = {
      {"mode", c.model_buffer_mode == ModelStorageMode::keep_all ? "keep_all" : "reservoir"},
      {"capacity", c.model_buffer_capacity}};
  j["tabular_update_scheme"] = c.tabular_update_scheme;
  j["tabular_snapshots"] = c.tabular_snapshots;
  j["save_every"] = c.save_every;
  j["node_budget"] = c.node_budget;
  j["evaluate_exploitability"] = c.evaluate_exploitability;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.run_id = j.at("run_id").get<std::string>();
    const auto& g = j.at("game");
    c.game.name = g.at("name").get<std::string>();
    c.game.leduc.n_ranks = g.at("n_ranks").get<int>();
    c.game.leduc.n_suits = g.at("n_suits").get<int>();
    c.game.leduc.max_raises_per_round = g.at("max_raises_per_round").get<int>();
    c.game.leduc.ante = g.at("ante").get<int>();
    c.game.leduc.bet_sizes = g.at("bet_sizes").get<std::array<int, 2>>();
    c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    c.iterations = j.at("iterations").get<int>();
    c.eval_every = j.at("eval_every").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.workers = j.at("workers").get<int>();
    const auto& d = j.at("deep");
    c.deep.traversals_per_iteration = d.at("traversals_per_iteration").get<int>();
    c.deep.advantage_buffer_capacity = d.at("advantage_buffer_capacity").get<std::size_t>();
    c.deep.strategy_buffer_capacity = d.at("strategy_buffer_capacity").get<std::size_t>();
    c.deep.hidden_dims = d.at("hidden_dims").get<std::vector<int>>();
    c.deep.value_train = train_from_json(d.at("value_train"));
    c.deep.avg_train = train_from_json(d.at("avg_train"));
    c.deep.fill_strategy_buffers = d.at("fill_strategy_buffers").get<bool>();
    const auto& m = j.at("model_buffer");
    c.model_buffer_mode = m.at("mode").get<std::string>() == "keep_all"
                              ? ModelStorageMode::keep_all
                              : ModelStorageMode::reservoir;
    c.model_buffer_capacity = m.at("capacity").get<std::size_t>();
    c.tabular_update_scheme = j.at("tabular_update_scheme").get<std::string>();
    c.tabular_snapshots = j.at("tabular_snapshots").get<bool>();
    c.save_every = j.at("save_every").get<int>();
    c.node_budget = j.at("node_budget").get<std::size_t>();
    c.evaluate_exploitability = j.at("evaluate_exploitability").get<bool>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

ExperimentConfig recipe(const std::string& name) {
  ExperimentConfig c;
  if (name == "fig1a") {
    // Full desk-scale shared run on standard Leduc.
    c.algorithm = Algorithm::sd_cfr_shared;
    c.iterations = 5000;
    c.eval_every = 30;
  } else if (name == "fig1a_t150") {
    c.algorithm = Algorithm::sd_cfr_shared;
    c.iterations = 150;
    c.eval_every = 30;
  } else if (name == "fig1a_smoke") {
    c.algorithm = Algorithm::sd_cfr_shared;
    c.iterations = 150;
    c.eval_every = 30;
    c.deep.traversals_per_iteration = 300;
    c.deep.value_train.n_updates = 150;
    c.deep.avg_train.n_updates = 150;
  } else if (name == "fig1b_cap250" || name == "fig1b_cap500" || name == "fig1b_cap1000") {
    c.algorithm = Algorithm::sd_cfr_shared;
    c.iterations = 5000;
    c.eval_every = 30;
    c.model_buffer_mode = ModelStorageMode::reservoir;
    c.model_buffer_capacity = name == "fig1b_cap250" ? 250
                              : name == "fig1b_cap500" ? 500
                                                       : 1000;
  } else if (name == "fig1b_accept") {
    // Reduced profile: enough iterations that a 250-entry reservoir keeps
    // under a tenth of each player's networks, cheap enough per iteration
    // to stay desk-scale. Both storage modes share identical training, so
    // the comparison isolates what sampling the model buffer costs.
    c.algorithm = Algorithm::sd_cfr_shared;
    c.iterations = 6000;
    c.eval_every = 6000;
    c.deep.traversals_per_iteration = 40;
    c.deep.hidden_dims = {16, 16};
    c.deep.advantage_buffer_capacity = 200'000;
    c.deep.value_train.batch_size = 256;
    c.deep.value_train.n_updates = 32;
    c.deep.avg_train.n_updates = 150;
    c.deep.fill_strategy_buffers = false;
    c.model_buffer_mode = ModelStorageMode::reservoir;
    c.model_buffer_capacity = 250;
  } else if (name == "bigleduc") {
    c.game.name = "big_leduc";
    c.algorithm = Algorithm::sd_cfr_shared;
    c.iterations = 630;
    c.eval_every = 30;
    c.deep.traversals_per_iteration = 8800;
    c.deep.advantage_buffer_capacity = 4'000'000;
    c.deep.strategy_buffer_capacity = 4'000'000;
    c.deep.value_train.batch_size = 2816;
    c.deep.value_train.n_updates = 1200;
    c.deep.avg_train.batch_size = 5632;
    c.deep.avg_train.n_updates = 10000;
  } else if (name == "bigleduc_accept") {
    c.game.name = "big_leduc";
    c.algorithm = Algorithm::sd_cfr_shared;
    c.iterations = 60;
    c.eval_every = 60;
    c.evaluate_exploitability = false;
    c.deep.traversals_per_iteration = 1000;
    c.deep.value_train.batch_size = 1024;
    c.deep.value_train.n_updates = 300;
    c.deep.avg_train.batch_size = 1024;
    c.deep.avg_train.n_updates = 1000;
  } else if (name == "kuhn_vanilla") {
    c.game.name = "kuhn";
    c.algorithm = Algorithm::tabular_vanilla;
    c.iterations = 10000;
    c.eval_every = 500;
    c.tabular_update_scheme = "simultaneous";
  } else if (name == "leduc_linear") {
    // 1000 full (both-player) sweeps = 2000 alternating updates.
    c.algorithm = Algorithm::tabular_linear;
    c.iterations = 2000;
    c.eval_every = 200;
    c.tabular_update_scheme = "alternating";
  } else if (name == "theorem1_demo") {
    // Tiny strategy buffer: the trained average network cannot represent
    // the true average; compare-strategies shows the gap (not asserted).
    c.algorithm = Algorithm::sd_cfr_shared;
    c.iterations = 60;
    c.eval_every = 30;
    c.deep.traversals_per_iteration = 300;
    c.deep.value_train.n_updates = 150;
    c.deep.avg_train.n_updates = 500;
    c.deep.strategy_buffer_capacity = 128;
  } else {
    throw ConfigError("unknown recipe '" + name + "'");
  }
  c.run_id = name + "_s" + std::to_string(c.seed);
  return c;
}

std::vector<std::string> recipe_names() {
  return {"fig1a",        "fig1a_t150", "fig1a_smoke",    "fig1b_cap250",
          "fig1b_cap500", "fig1b_cap1000", "fig1b_accept", "bigleduc",
          "bigleduc_accept", "kuhn_vanilla", "leduc_linear", "theorem1_demo"};
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("format_double failed");
  return std::string(buf, ptr);
}

void append_csv_row(const std::filesystem::path& file, const std::string& header,
                    const std::vector<std::string>& fields) {
  bool fresh = !std::filesystem::exists(file) || std::filesystem::file_size(file) == 0;
  std::ofstream out(file, std::ios::app);
  if (!out) throw Error("cannot open csv: " + file.string());
  if (fresh) out << header << "\n";
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
  out << "\n";
}

namespace {

// Drops rows whose iteration column is >= next_iteration (resume rewrites
// them deterministically).
void truncate_csv(const std::filesystem::path& file, int iteration_column,
                  int next_iteration) {
  if (!std::filesystem::exists(file)) return;
  std::ifstream in(file);
  std::vector<std::string> kept;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      kept.push_back(line);
      first = false;
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    int col = 0, iter = -1;
    while (std::getline(ss, field, ',')) {
      if (col++ == iteration_column) {
        iter = std::stoi(field);
        break;
      }
    }
    if (iter >= 0 && iter < next_iteration) kept.push_back(line);
  }
  in.close();
  std::ofstream out(file, std::ios::trunc);
  for (const auto& l : kept) out << l << "\n";
}

void remove_if_exists(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::remove(p, ec);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------
// Deep runs
// ---------------------------------------------------------------------------

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path config() const { return dir / "config.json"; }
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path model_manifest() const { return dir / "model_manifest.json"; }
  std::filesystem::path checkpoints() const { return dir / "checkpoints"; }
  std::filesystem::path buffers() const { return dir / "buffers"; }
  std::filesystem::path snapshots() const { return dir / "snapshots"; }
  std::filesystem::path metrics() const { return dir / "metrics.csv"; }
  std::filesystem::path expl_sd() const { return dir / "exploitability_sd.csv"; }
  std::filesystem::path expl_avgnet() const { return dir / "exploitability_avgnet.csv"; }
  std::filesystem::path expl_tabular() const { return dir / "exploitability.csv"; }
};

constexpr const char* kExplHeader = "run_id,iteration,e_total_mA,e_per_player_mA";
constexpr const char* kMetricsHeader = "iteration,bv0,bv1,bs0,bs1,value_loss,wall_seconds";

std::filesystem::path avg_net_path(const RunPaths& paths, int player, int iteration) {
  char name[64];
  std::snprintf(name, sizeof(name), "avg_p%d_t%06d.bin", player, iteration);
  return paths.checkpoints() / name;
}

void eval_deep(const ExperimentConfig& cfg, const Game& game, const RunPaths& paths,
               DeepCfrRun& run, const ModelBuffer& models, int t) {
  if (models.entries(Player::p0).empty() || models.entries(Player::p1).empty()) return;
  const std::string run_id = cfg.effective_run_id();

  if (cfg.algorithm == Algorithm::sd_cfr_shared && cfg.evaluate_exploitability) {
    // The query loop cycles over every stored network per infoset; size the
    // LRU to hold them all so each checkpoint decodes once per evaluation.
    auto store = std::make_shared<CheckpointStore>(std::max<std::size_t>(
        8, models.entries(Player::p0).size() + models.entries(Player::p1).size()));
    SdCfrAverageStrategy s0(make_net_handles(models, Player::p0, store));
    SdCfrAverageStrategy s1(make_net_handles(models, Player::p1, store));
    auto res = exploitability(game, s0, s1, cfg.node_budget);
    append_csv_row(paths.expl_sd(), kExplHeader,
                   {run_id, std::to_string(t), format_double(res.total_milli_antes),
                    format_double(res.per_player_milli_antes)});
  }

  const bool avgnet_path = cfg.deep.fill_strategy_buffers &&
                           run.strategy_buffer(Player::p0).size() > 0 &&
                           run.strategy_buffer(Player::p1).size() > 0;
  if (avgnet_path) {
    NetParams nets[2];
    for (int p = 0; p < 2; ++p) {
      Rng rng = make_stream(cfg.seed, {5, static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(p)});
      nets[p] = train_average_network(
          game, cfg.deep, run.strategy_buffer(player_from_index(p)).entries(), t, rng);
      save_checkpoint(nets[p],
                      {static_cast<std::uint8_t>(p), static_cast<std::uint32_t>(t)},
                      avg_net_path(paths, p, t));
    }
    if (cfg.evaluate_exploitability) {
      NetAverageStrategy s0(nets[0]), s1(nets[1]);
      auto res = exploitability(game, s0, s1, cfg.node_budget);
      append_csv_row(paths.expl_avgnet(), kExplHeader,
                     {run_id, std::to_string(t), format_double(res.total_milli_antes),
                      format_double(res.per_player_milli_antes)});
    }
  }
}

void save_deep_state(const RunPaths& paths, DeepCfrRun& run, const ModelBuffer& models,
                     int next_iteration) {
  std::filesystem::create_directories(paths.buffers());
  save_buffer(run.advantage_buffer(Player::p0), paths.buffers() / "bv0.bin");
  save_buffer(run.advantage_buffer(Player::p1), paths.buffers() / "bv1.bin");
  save_buffer(run.strategy_buffer(Player::p0), paths.buffers() / "bs0.bin");
  save_buffer(run.strategy_buffer(Player::p1), paths.buffers() / "bs1.bin");
  models.save_manifest(paths.model_manifest());

  json j;
  j["version"] = 1;
  j["next_iteration"] = next_iteration;
  j["config_checksum"] = file_checksum(paths.config());
  for (const char* name : {"bv0.bin", "bv1.bin", "bs0.bin", "bs1.bin"}) {
    auto p = paths.buffers() / name;
    j["buffers"][name] = {{"path", p.string()}, {"checksum", file_checksum(p)}};
  }
  std::string last[2];
  for (const auto& record : run.checkpoints())
    last[player_index(record.player)] = record.path.string();
  j["last_value_checkpoint"] = {last[0], last[1]};
  write_text_file(paths.manifest(), j.dump(2) + "\n");
}

ModelEntry make_model_entry(const CheckpointRecord& record) {
  ModelEntry entry;
  entry.player = record.player;
  entry.iteration = record.iteration;
  entry.path = record.path;
  entry.bytes = std::filesystem::file_size(record.path);
  entry.checksum = file_checksum(record.path);
  return entry;
}

void deep_loop(const ExperimentConfig& cfg, const Game& game, const RunPaths& paths,
               DeepCfrRun& run, ModelBuffer& models, int stop_after = 0) {
  while (run.next_iteration() <= cfg.iterations) {
    const int t = run.next_iteration();
    if (stop_after > 0 && t > stop_after) break;
    auto started = std::chrono::steady_clock::now();
    CheckpointRecord record = run.run_iteration();
    Rng bm_rng = make_stream(cfg.seed, {4, static_cast<std::uint64_t>(t)});
    models.append(make_model_entry(record), &bm_rng);

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                      .count();
    float loss = run.training_loss(*run.value_net(record.player), record.player);
    append_csv_row(paths.metrics(), kMetricsHeader,
                   {std::to_string(t), std::to_string(run.advantage_buffer(Player::p0).size()),
                    std::to_string(run.advantage_buffer(Player::p1).size()),
                    std::to_string(run.strategy_buffer(Player::p0).size()),
                    std::to_string(run.strategy_buffer(Player::p1).size()),
                    format_double(static_cast<double>(loss)), format_double(wall)});

    if (t % cfg.eval_every == 0 || t == cfg.iterations)
      eval_deep(cfg, game, paths, run, models, t);
    if ((cfg.save_every > 0 && t % cfg.save_every == 0) || t == cfg.iterations ||
        t == stop_after)
      save_deep_state(paths, run, models, t + 1);
  }
}

// ---------------------------------------------------------------------------
// Tabular runs
// ---------------------------------------------------------------------------

void tabular_loop(const ExperimentConfig& cfg, const Game& game, const RunPaths& paths) {
  CfrMode mode =
      cfg.algorithm == Algorithm::tabular_linear ? CfrMode::linear : CfrMode::vanilla;
  UpdateScheme scheme = cfg.tabular_update_scheme == "alternating"
                            ? UpdateScheme::alternating
                            : UpdateScheme::simultaneous;
  TabularCfr solver(game, mode, scheme);
  solver.enable_snapshots(cfg.tabular_snapshots);
  if (cfg.tabular_snapshots) std::filesystem::create_directories(paths.snapshots());
  const std::string run_id = cfg.effective_run_id();

  std::size_t dumped = 0;
  for (int t = 1; t <= cfg.iterations; ++t) {
    solver.run_iteration();
    if (cfg.tabular_snapshots) {
      for (; dumped < solver.snapshots().size(); ++dumped) {
        const auto& snap = solver.snapshots()[dumped];
        char name[64];
        std::snprintf(name, sizeof(name), "iter_%06d_p%d.bin", snap.iteration,
                      player_index(snap.player));
        write_snapshot_file(snap, paths.snapshots() / name);
      }
    }
    if (t % cfg.eval_every == 0 || t == cfg.iterations) {
      TabularAverageStrategy s0(solver, Player::p0), s1(solver, Player::p1);
      auto res = exploitability(game, s0, s1, cfg.node_budget);
      append_csv_row(paths.expl_tabular(), kExplHeader,
                     {run_id, std::to_string(t), format_double(res.total_milli_antes),
                      format_double(res.per_player_milli_antes)});
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// run / resume
// ---------------------------------------------------------------------------

std::filesystem::path run_experiment(const ExperimentConfig& config,
                                     const std::filesystem::path& out_dir,
                                     int stop_after_iteration) {
  config.validate();
  RunPaths paths{out_dir};
  std::filesystem::create_directories(paths.checkpoints());
  write_text_file(paths.config(), config_to_json(config));
  for (const auto& f : {paths.metrics(), paths.expl_sd(), paths.expl_avgnet(),
                        paths.expl_tabular(), paths.manifest(), paths.model_manifest()})
    remove_if_exists(f);

  auto game = make_game(config.game);
  if (config.algorithm == Algorithm::tabular_vanilla ||
      config.algorithm == Algorithm::tabular_linear) {
    tabular_loop(config, *game, paths);
    return out_dir;
  }

  DeepCfrConfig deep = config.deep;
  deep.workers = config.workers;
  DeepCfrRun run(*game, deep, config.seed, paths.checkpoints());
  ModelBuffer models(config.model_buffer_mode, config.model_buffer_capacity);
  deep_loop(config, *game, paths, run, models, stop_after_iteration);
  return out_dir;
}

std::filesystem::path resume_experiment(const std::filesystem::path& run_dir,
                                        const std::optional<std::string>& expected_config_json) {
  RunPaths paths{run_dir};
  if (!std::filesystem::exists(paths.config()))
    throw CorruptRun("run directory lacks config.json");
  const std::string stored = read_text_file(paths.config());
  if (expected_config_json.has_value() && *expected_config_json != stored) {
    std::stringstream diff;
    diff << "config does not match the stored run config:\n";
    std::stringstream a(*expected_config_json), b(stored);
    std::string la, lb;
    int line = 0;
    while (true) {
      bool ga = static_cast<bool>(std::getline(a, la));
      bool gb = static_cast<bool>(std::getline(b, lb));
      ++line;
      if (!ga && !gb) break;
      if (!ga) la.clear();
      if (!gb) lb.clear();
      if (la != lb)
        diff << "  line " << line << ": given '" << la << "' vs stored '" << lb << "'\n";
    }
    throw ConfigError(diff.str());
  }
  ExperimentConfig config = config_from_json(stored);
  config.validate();
  if (config.algorithm == Algorithm::tabular_vanilla ||
      config.algorithm == Algorithm::tabular_linear)
    throw ConfigError("resume applies to deep runs; tabular runs re-run deterministically");
  if (!std::filesystem::exists(paths.manifest()))
    throw CorruptRun("run directory lacks manifest.json");

  json manifest;
  try {
    manifest = json::parse(read_text_file(paths.manifest()));
  } catch (const std::exception& e) {
    throw CorruptRun(std::string("manifest unreadable: ") + e.what());
  }
  if (manifest.at("config_checksum").get<std::uint64_t>() != file_checksum(paths.config()))
    throw CorruptRun("config.json does not match the manifest checksum");
  const int next_iteration = manifest.at("next_iteration").get<int>();

  ModelBuffer models = ModelBuffer::load_manifest(paths.model_manifest());
  for (Player p : {Player::p0, Player::p1}) {
    for (const auto& entry : models.entries(p)) {
      if (!std::filesystem::exists(entry.path) ||
          std::filesystem::file_size(entry.path) != entry.bytes ||
          file_checksum(entry.path) != entry.checksum)
        throw CorruptRun("checkpoint missing or corrupt: " + entry.path.string());
    }
  }

  auto game = make_game(config.game);
  DeepCfrConfig deep = config.deep;
  deep.workers = config.workers;
  DeepCfrRun run(*game, deep, config.seed, paths.checkpoints());

  for (const char* name : {"bv0.bin", "bv1.bin", "bs0.bin", "bs1.bin"}) {
    const auto& info = manifest.at("buffers").at(name);
    std::filesystem::path p = info.at("path").get<std::string>();
    if (!std::filesystem::exists(p) ||
        file_checksum(p) != info.at("checksum").get<std::uint64_t>())
      throw CorruptRun("buffer spill missing or corrupt: " + p.string());
  }
  load_buffer(run.advantage_buffer(Player::p0), paths.buffers() / "bv0.bin");
  load_buffer(run.advantage_buffer(Player::p1), paths.buffers() / "bv1.bin");
  load_buffer(run.strategy_buffer(Player::p0), paths.buffers() / "bs0.bin");
  load_buffer(run.strategy_buffer(Player::p1), paths.buffers() / "bs1.bin");

  std::optional<NetParams> nets[2];
  auto last = manifest.at("last_value_checkpoint").get<std::vector<std::string>>();
  for (int p = 0; p < 2; ++p) {
    if (last[p].empty()) continue;
    if (!std::filesystem::exists(last[p]))
      throw CorruptRun("checkpoint missing: " + last[p]);
    nets[p] = load_checkpoint(last[p]).params;
  }
  run.restore(next_iteration, std::move(nets[0]), std::move(nets[1]));

  truncate_csv(paths.metrics(), 0, next_iteration);
  truncate_csv(paths.expl_sd(), 1, next_iteration);
  truncate_csv(paths.expl_avgnet(), 1, next_iteration);

  deep_loop(config, *game, paths, run, models);
  return run_dir;
}

// ---------------------------------------------------------------------------
// Post-hoc evaluation
// ---------------------------------------------------------------------------

RunHandle open_run(const std::filesystem::path& run_dir) {
  RunPaths paths{run_dir};
  if (!std::filesystem::exists(paths.config()))
    throw CorruptRun("no config.json in " + run_dir.string());
  RunHandle handle;
  handle.config = config_from_json(read_text_file(paths.config()));
  handle.game = make_game(handle.config.game);
  handle.dir = run_dir;
  if (std::filesystem::exists(paths.model_manifest()))
    handle.models = ModelBuffer::load_manifest(paths.model_manifest());
  return handle;
}

namespace {

// Reservoir-mode buffers store entries in replacement order; sort before
// rebuilding the keep-all view.
ModelBuffer filtered_models(const ModelBuffer& models, int iteration) {
  ModelBuffer copy(ModelStorageMode::keep_all, 0);
  for (Player p : {Player::p0, Player::p1}) {
    std::vector<ModelEntry> kept;
    for (const auto& e : models.entries(p))
      if (iteration <= 0 || e.iteration <= iteration) kept.push_back(e);
    std::sort(kept.begin(), kept.end(),
              [](const ModelEntry& a, const ModelEntry& b) { return a.iteration < b.iteration; });
    for (auto& e : kept) copy.append(std::move(e));
  }
  return copy;
}

}  // namespace

ModelBuffer simulate_reservoir_buffer(const ModelBuffer& keep_all, std::size_t capacity,
                                      std::uint64_t seed, int up_to_iteration) {
  std::vector<ModelEntry> ordered;
  for (Player p : {Player::p0, Player::p1})
    for (const auto& e : keep_all.entries(p))
      if (up_to_iteration <= 0 || e.iteration <= up_to_iteration) ordered.push_back(e);
  std::sort(ordered.begin(), ordered.end(),
            [](const ModelEntry& a, const ModelEntry& b) { return a.iteration < b.iteration; });
  ModelBuffer buffer(ModelStorageMode::reservoir, capacity);
  for (const auto& e : ordered) {
    Rng rng = make_stream(seed, {4, static_cast<std::uint64_t>(e.iteration)});
    buffer.append(e, &rng);
  }
  return buffer;
}

std::unique_ptr<SdCfrAverageStrategy> sd_average_strategy(const RunHandle& run, Player p,
                                                          int iteration) {
  ModelBuffer filtered = filtered_models(run.models, iteration);
  auto store = std::make_shared<CheckpointStore>(
      std::max<std::size_t>(8, filtered.entries(p).size()));
  auto handles = make_net_handles(filtered, p, store);
  if (handles.empty())
    throw EmptyModelBuffer("no stored value networks for player " +
                           std::to_string(player_index(p)));
  return std::make_unique<SdCfrAverageStrategy>(std::move(handles));
}

NetParams load_average_net(const RunHandle& run, Player p, int iteration) {
  RunPaths paths{run.dir};
  auto path = avg_net_path(paths, player_index(p), iteration);
  if (!std::filesystem::exists(path)) {
    std::string available;
    for (int t : average_net_iterations(run)) available += " " + std::to_string(t);
    throw Error("no average network at iteration " + std::to_string(iteration) +
                "; available:" + available);
  }
  return load_checkpoint(path).params;
}

std::vector<int> average_net_iterations(const RunHandle& run) {
  RunPaths paths{run.dir};
  std::vector<int> iters;
  if (!std::filesystem::exists(paths.checkpoints())) return iters;
  for (const auto& e : std::filesystem::directory_iterator(paths.checkpoints())) {
    int p = 0, t = 0;
    if (std::sscanf(e.path().filename().string().c_str(), "avg_p%d_t%d.bin", &p, &t) == 2 &&
        p == 0)
      iters.push_back(t);
  }
  std::sort(iters.begin(), iters.end());
  return iters;
}

namespace {

class SdMatchPolicy final : public Policy {
 public:
  SdMatchPolicy(std::vector<StrategyHandlePtr> h0, std::vector<StrategyHandlePtr> h1)
      : players_{TrajectorySamplingPolicy(std::move(h0)),
                 TrajectorySamplingPolicy(std::move(h1))} {}

  void begin_episode(Rng& rng) override {
    players_[0].begin_episode(rng);
    players_[1].begin_episode(rng);
  }
  Distribution act(const GameState& state) override {
    return players_[player_index(state.current_player())].act(state);
  }

 private:
  TrajectorySamplingPolicy players_[2];
};

class AvgNetMatchPolicy final : public Policy {
 public:
  AvgNetMatchPolicy(NetParams p0, NetParams p1)
      : strategies_{NetAverageStrategy(std::move(p0)), NetAverageStrategy(std::move(p1))} {}

  Distribution act(const GameState& state) override {
    return strategies_[player_index(state.current_player())].query(state);
  }

 private:
  NetAverageStrategy strategies_[2];
};

class StatelessStrategyPolicy final : public Policy {
 public:
  explicit StatelessStrategyPolicy(std::unique_ptr<QueryableStrategy> s)
      : strategy_(std::move(s)) {}
  Distribution act(const GameState& state) override { return strategy_->query(state); }

 private:
  std::unique_ptr<QueryableStrategy> strategy_;
};

}  // namespace

std::unique_ptr<Policy> make_match_policy(const RunHandle& run, const std::string& kind,
                                          int iteration) {
  if (kind == "sd") {
    ModelBuffer filtered = filtered_models(run.models, iteration);
    auto store = std::make_shared<CheckpointStore>(std::max<std::size_t>(
        8, filtered.entries(Player::p0).size() + filtered.entries(Player::p1).size()));
    return std::make_unique<SdMatchPolicy>(make_net_handles(filtered, Player::p0, store),
                                           make_net_handles(filtered, Player::p1, store));
  }
  if (kind == "avgnet") {
    if (iteration <= 0) throw ConfigError("avgnet policy needs an explicit --iteration");
    return std::make_unique<AvgNetMatchPolicy>(load_average_net(run, Player::p0, iteration),
                                               load_average_net(run, Player::p1, iteration));
  }
  if (kind == "uniform")
    return std::make_unique<StatelessStrategyPolicy>(std::make_unique<UniformStrategy>());
  if (kind == "always_fold")
    return std::make_unique<StatelessStrategyPolicy>(std::make_unique<AlwaysFoldStrategy>());
  if (kind == "always_call")
    return std::make_unique<StatelessStrategyPolicy>(std::make_unique<AlwaysCallStrategy>());
  throw ConfigError("unknown policy kind '" + kind +
                    "' (expected sd, avgnet, uniform, always_fold, always_call)");
}

EvalReport eval_exploitability_sd(const RunHandle& run, int iteration) {
  auto s0 = sd_average_strategy(run, Player::p0, iteration);
  auto s1 = sd_average_strategy(run, Player::p1, iteration);
  auto res = exploitability(*run.game, *s0, *s1, run.config.node_budget);
  EvalReport report = res.report();
  report.metric = "exploitability_sd";
  return report;
}

EvalReport eval_exploitability_avgnet(const RunHandle& run, int iteration) {
  NetAverageStrategy s0(load_average_net(run, Player::p0, iteration));
  NetAverageStrategy s1(load_average_net(run, Player::p1, iteration));
  auto res = exploitability(*run.game, s0, s1, run.config.node_budget);
  EvalReport report = res.report();
  report.metric = "exploitability_avgnet";
  return report;
}

std::vector<DisagreementRow> compare_strategies(const RunHandle& run, int iteration,
                                                int n_rollouts_per_player,
                                                std::uint64_t seed) {
  auto sd0 = sd_average_strategy(run, Player::p0, iteration);
  auto sd1 = sd_average_strategy(run, Player::p1, iteration);
  NetAverageStrategy hat0(load_average_net(run, Player::p0, iteration));
  NetAverageStrategy hat1(load_average_net(run, Player::p1, iteration));
  return strategy_disagreement(*run.game, {sd0.get(), sd1.get()}, {&hat0, &hat1},
                               n_rollouts_per_player, seed);
}

}  // namespace sdcfr
