#pragma once

#include <filesystem>
#include <optional>

#include "sdcfr/deep_cfr.hpp"
#include "sdcfr/evaluator.hpp"
#include "sdcfr/game.hpp"
#include "sdcfr/leduc.hpp"
#include "sdcfr/sd_cfr.hpp"

namespace sdcfr {

struct ConfigError : Error { using Error::Error; };
struct CorruptRun : Error { using Error::Error; };

enum class Algorithm { tabular_vanilla, tabular_linear, deep_cfr, sd_cfr_shared };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct GameConfig {
  std::string name = "leduc";  // kuhn | leduc | big_leduc | leduc_custom
  LeducConfig leduc;           // consulted for leduc and leduc_custom
};

std::unique_ptr<Game> make_game(const GameConfig& config);

struct ExperimentConfig {
  std::string run_id;  // defaults to <algorithm>_<game>_s<seed>
  GameConfig game;
  Algorithm algorithm = Algorithm::sd_cfr_shared;
  int iterations = 150;
  int eval_every = 30;
  std::uint64_t seed = 0;
  int workers = 1;
  DeepCfrConfig deep;
  ModelStorageMode model_buffer_mode = ModelStorageMode::keep_all;
  std::size_t model_buffer_capacity = 0;
  std::string tabular_update_scheme = "alternating";  // or "simultaneous"
  bool tabular_snapshots = false;
  int save_every = 0;  // state spill cadence; 0 = end of run only
  std::size_t node_budget = 50'000'000;
  /// Exact best response at eval points; off for games whose full tree
  /// exceeds the node budget. Average networks are still fitted and stored.
  bool evaluate_exploitability = true;

  void validate() const;  // throws ConfigError with field-level messages
  std::string effective_run_id() const;
};

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

/// Named experiment presets; the hyperparameter defaults of the desk-scale
/// study are encoded here.
ExperimentConfig recipe(const std::string& name);
std::vector<std::string> recipe_names();

/// Executes the configured run into `out_dir` (created if needed) and
/// returns the directory. Rerunning with the same config and seed
/// reproduces every result CSV byte-for-byte in single-worker mode.
/// `stop_after_iteration` (0 = run to completion) abandons the run after
/// that iteration, as an interruption would; resume_experiment continues it.
std::filesystem::path run_experiment(const ExperimentConfig& config,
                                     const std::filesystem::path& out_dir,
                                     int stop_after_iteration = 0);

/// Continues an interrupted run from its last saved state up to the
/// configured iteration count. If `expected_config_json` is supplied it
/// must match the stored copy byte-for-byte.
std::filesystem::path resume_experiment(const std::filesystem::path& run_dir,
                                        const std::optional<std::string>& expected_config_json =
                                            std::nullopt);

// -- post-hoc evaluation over a stored run -----------------------------------

struct RunHandle {
  ExperimentConfig config;
  std::unique_ptr<Game> game;
  ModelBuffer models{ModelStorageMode::keep_all, 0};
  std::filesystem::path dir;
};

RunHandle open_run(const std::filesystem::path& run_dir);

/// Replays the per-iteration reservoir appends over a keep-all model
/// buffer, reproducing bit-exactly the buffer a reservoir-mode run of the
/// same seed would hold after `up_to_iteration` (0 = all stored
/// iterations). Training never reads the model buffer, so a keep-all run
/// plus this replay equals a reservoir-mode run.
ModelBuffer simulate_reservoir_buffer(const ModelBuffer& keep_all, std::size_t capacity,
                                      std::uint64_t seed, int up_to_iteration = 0);

/// Builds the SD-CFR average strategy for one player from the run's stored
/// value networks up to `iteration` (0 = all).
std::unique_ptr<SdCfrAverageStrategy> sd_average_strategy(const RunHandle& run, Player p,
                                                          int iteration = 0);

/// Loads the average-strategy network checkpoint trained at `iteration`.
NetParams load_average_net(const RunHandle& run, Player p, int iteration);
std::vector<int> average_net_iterations(const RunHandle& run);

/// Match policy kinds playable from a stored run.
std::unique_ptr<Policy> make_match_policy(const RunHandle& run, const std::string& kind,
                                          int iteration);

EvalReport eval_exploitability_sd(const RunHandle& run, int iteration = 0);
EvalReport eval_exploitability_avgnet(const RunHandle& run, int iteration);

std::vector<DisagreementRow> compare_strategies(const RunHandle& run, int iteration,
                                                int n_rollouts_per_player, std::uint64_t seed);

// -- CSV helpers (stable formatting; shortest round-trip doubles) ------------

std::string format_double(double v);
void append_csv_row(const std::filesystem::path& file, const std::string& header,
                    const std::vector<std::string>& fields);

}  // namespace sdcfr
