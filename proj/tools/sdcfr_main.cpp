#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sdcfr/enumerate.hpp"
#include "sdcfr/experiment.hpp"
#include "sdcfr/policies.hpp"

namespace fs = std::filesystem;
using namespace sdcfr;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitCorruptRun = 3;

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_config(const std::string& config_path, const std::string& recipe_name,
                             std::optional<std::uint64_t> seed, int workers) {
  ExperimentConfig config;
  if (!config_path.empty() && !recipe_name.empty())
    throw ConfigError("pass either --config or --recipe, not both");
  if (!config_path.empty()) {
    config = config_from_json(read_file(config_path));
  } else if (!recipe_name.empty()) {
    config = recipe(recipe_name);
  } else {
    throw ConfigError("one of --config or --recipe is required");
  }
  if (seed.has_value()) {
    config.seed = *seed;
    if (!recipe_name.empty()) config.run_id = recipe_name + "_s" + std::to_string(*seed);
  }
  if (workers > 0) config.workers = workers;
  config.validate();
  return config;
}

void print_report(const EvalReport& report) {
  std::cout << report.metric << " = " << format_double(report.value) << " " << report.units;
  if (report.samples > 0)
    std::cout << " +/- " << format_double(report.ci95_half) << " (n=" << report.samples << ")";
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CFR family solver: tabular CFR, Deep CFR, and single deep CFR"};
  app.require_subcommand(1);

  std::string config_path, recipe_name, out_dir = "runs/out", run_dir;
  std::optional<std::uint64_t> seed;
  int workers = 0, iteration = 0, pairs = 10000, rollouts = 10000;
  std::string policy_a = "sd", policy_b = "avgnet", game_name = "kuhn";
  std::uint64_t eval_seed = 1;

  auto* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", config_path, "experiment config JSON");
  train->add_option("--recipe", recipe_name, "named preset; see --list-recipes");
  train->add_option("--seed", seed, "override the config seed");
  train->add_option("--workers", workers, "traversal worker threads (1 = strict determinism)");
  train->add_option("--out", out_dir, "output run directory");

  bool list_recipes = false;
  train->add_flag("--list-recipes", list_recipes, "print recipe names and exit");

  auto* resume = app.add_subcommand("resume", "continue an interrupted run");
  resume->add_option("--run", run_dir, "run directory")->required();
  resume->add_option("--config", config_path, "config to check against the stored copy");

  auto* evalx = app.add_subcommand("eval-exploitability", "exploitability of a stored run");
  evalx->add_option("--run", run_dir, "run directory")->required();
  evalx->add_option("--iteration", iteration, "evaluate at this iteration (0 = final)");

  auto* h2h = app.add_subcommand("head2head", "duplicate-paired match play");
  h2h->add_option("--run", run_dir, "run directory")->required();
  h2h->add_option("--a", policy_a, "policy A kind (sd|avgnet|uniform|always_fold|always_call)");
  h2h->add_option("--b", policy_b, "policy B kind");
  h2h->add_option("--iteration", iteration, "checkpoint iteration (avgnet requires one)");
  h2h->add_option("--pairs", pairs, "duplicate pairs to play");
  h2h->add_option("--seed", eval_seed, "match seed");

  auto* cmp = app.add_subcommand("compare-strategies", "per-depth strategy disagreement");
  cmp->add_option("--run", run_dir, "run directory")->required();
  cmp->add_option("--iteration", iteration, "average-net iteration to compare against")
      ->required();
  cmp->add_option("--rollouts", rollouts, "rollouts per player");
  cmp->add_option("--seed", eval_seed, "rollout seed");

  auto* enumerate = app.add_subcommand("enumerate", "dump the information-set listing");
  enumerate->add_option("--game", game_name, "kuhn|leduc|big_leduc");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      if (list_recipes) {
        for (const auto& name : recipe_names()) std::cout << name << "\n";
        return 0;
      }
      ExperimentConfig config = load_config(config_path, recipe_name, seed, workers);
      fs::path dir = run_experiment(config, out_dir);
      std::cout << "run complete: " << dir.string() << "\n";
      return 0;
    }
    if (resume->parsed()) {
      std::optional<std::string> expected;
      if (!config_path.empty()) expected = read_file(config_path);
      fs::path dir = resume_experiment(run_dir, expected);
      std::cout << "run complete: " << dir.string() << "\n";
      return 0;
    }
    if (evalx->parsed()) {
      RunHandle run = open_run(run_dir);
      print_report(eval_exploitability_sd(run, iteration));
      if (iteration > 0) print_report(eval_exploitability_avgnet(run, iteration));
      return 0;
    }
    if (h2h->parsed()) {
      RunHandle run = open_run(run_dir);
      auto a = make_match_policy(run, policy_a, iteration);
      auto b = make_match_policy(run, policy_b, iteration);
      EvalReport report = head_to_head(*run.game, *a, *b, pairs, eval_seed);
      report.metric = policy_a + "_vs_" + policy_b;
      print_report(report);
      append_csv_row(fs::path(run_dir) / "head2head.csv",
                     "iteration,mean,ci95,n_hands,units",
                     {std::to_string(iteration), format_double(report.value),
                      format_double(report.ci95_half), std::to_string(report.samples),
                      report.units});
      return 0;
    }
    if (cmp->parsed()) {
      RunHandle run = open_run(run_dir);
      auto rows = compare_strategies(run, iteration, rollouts, eval_seed);
      std::cout << "depth,round,mean,ci95,std,n\n";
      for (const auto& row : rows) {
        append_csv_row(fs::path(run_dir) / "disagreement.csv", "depth,round,mean,ci95,std,n",
                       {std::to_string(row.depth), std::to_string(row.round),
                        format_double(row.mean), format_double(row.ci95_half),
                        format_double(row.stddev), std::to_string(row.n)});
        std::cout << row.depth << "," << row.round << "," << format_double(row.mean) << ","
                  << format_double(row.ci95_half) << "," << format_double(row.stddev) << ","
                  << row.n << "\n";
      }
      return 0;
    }
    if (enumerate->parsed()) {
      GameConfig gc;
      gc.name = game_name;
      auto game = make_game(gc);
      auto infosets = enumerate_infosets(*game);
      std::cout << "game=" << game->name() << " p0=" << infosets[0].size()
                << " p1=" << infosets[1].size()
                << " total=" << infosets[0].size() + infosets[1].size() << "\n";
      for (const auto& side : infosets)
        for (const auto& info : side)
          std::cout << info.key.hex() << "," << info.num_actions << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const CorruptRun& e) {
    std::cerr << "corrupt run: " << e.what() << "\n";
    return kExitCorruptRun;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
