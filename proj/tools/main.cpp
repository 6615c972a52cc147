// iemppo train | sweep | sigma-sweep | eval

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "iemppo/harness.hpp"

namespace {

using namespace iemppo;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void print_warnings(const RunConfig& cfg) {
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PPO with learned exploration bonuses on small control tasks"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train one agent");
  std::string env, algo, config_path, out_dir;
  std::uint64_t seed = 0;
  long steps = 0;
  double c1 = 0.0, beta = 0.0;
  bool no_wall_clock = false;
  train->add_option("--env", env, "pendulum | mountaincar | pointtrap");
  train->add_option("--algo", algo, "ppo | icm-ppo | iem-ppo");
  train->add_option("--seed", seed, "master seed");
  train->add_option("--steps", steps, "total environment steps");
  train->add_option("--config", config_path, "JSON config; flags override it")->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "output directory");
  auto* c1_opt = train->add_option("--c1", c1, "uncertainty bonus scale (iem-ppo)");
  auto* beta_opt = train->add_option("--beta", beta, "curiosity bonus scale (icm-ppo)");
  train->add_flag("--no-wall-clock", no_wall_clock, "write seconds = 0 for reproducible files");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run a grid of configurations");
  std::string sweep_config, sweep_out;
  int jobs = 0;
  sweep_cmd->add_option("--config", sweep_config, "sweep JSON")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", sweep_out, "output directory (overrides the file)");
  sweep_cmd->add_option("--jobs", jobs, "concurrent runs");

  // sigma-sweep
  auto* sigma_cmd = app.add_subcommand("sigma-sweep", "one run per initial sigma");
  std::string sigma_config, sigma_out;
  std::vector<double> sigma_inits;
  sigma_cmd->add_option("--config", sigma_config, "base run JSON")->required()->check(CLI::ExistingFile);
  sigma_cmd->add_option("--sigma-inits", sigma_inits, "initial sigma values")->required()->delimiter(',');
  sigma_cmd->add_option("--out", sigma_out, "output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "deterministic rollouts of a checkpoint");
  std::string checkpoint;
  int episodes = 10;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", episodes, "episodes to run")->required();
  eval_cmd->add_option("--seed", eval_seed, "seed for initial states");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      json doc = config_path.empty() ? json::object() : read_json_file(config_path);
      if (!env.empty()) doc["env"] = env;
      if (!algo.empty()) doc["algo"] = algo;
      if (train->count("--seed")) doc["seed"] = seed;
      if (train->count("--steps")) doc["total_env_steps"] = steps;
      if (!out_dir.empty()) doc["out_dir"] = out_dir;
      if (c1_opt->count()) doc["c1"] = c1;
      if (beta_opt->count()) doc["beta"] = beta;
      if (no_wall_clock) doc["record_wall_clock"] = false;
      RunConfig cfg = config_from_json(doc);
      print_warnings(cfg);
      if (cfg.out_dir.empty()) {
        cfg.out_dir = "runs/" + cfg.env + "_" + std::string(to_string(cfg.algo())) + "_seed" + std::to_string(cfg.seed);
      }
      const auto res = run(cfg);
      const auto& last = res.rows.back();
      std::printf("iterations %zu  steps %ld  final100 %.3f  last ret_mean %.3f  sigma %.4f  -> %s\n", res.rows.size(),
                  last.steps, res.final_window, last.ret_mean, last.sigma, cfg.out_dir.c_str());
    } else if (sweep_cmd->parsed()) {
      const json doc = read_json_file(sweep_config);
      const auto entries = expand_sweep(doc);
      for (const auto& e : entries) print_warnings(e.config);
      if (sweep_out.empty()) sweep_out = doc.value("out_dir", std::string("runs/sweep"));
      if (jobs <= 0) jobs = doc.value("jobs", 1);
      const auto res = sweep(entries, jobs, sweep_out);
      std::printf("%-12s %-8s %-18s %5s %6s %12s %12s %12s %10s\n", "env", "algo", "setting", "runs", "failed",
                  "final_mean", "final_var", "goal_median", "seconds");
      for (const auto& r : res.summary) {
        std::printf("%-12s %-8s %-18s %5d %6d %12.3f %12.3f %12.0f %10.1f\n", r.env.c_str(), r.algo.c_str(),
                    r.setting.c_str(), r.runs, r.failures, r.final_mean, r.final_var, r.first_goal_median,
                    r.seconds_total);
      }
      for (std::size_t i = 0; i < res.errors.size(); ++i) {
        if (!res.errors[i].empty()) std::cerr << "run " << i << " failed: " << res.errors[i] << '\n';
      }
    } else if (sigma_cmd->parsed()) {
      json doc = read_json_file(sigma_config);
      if (!sigma_out.empty()) doc["out_dir"] = sigma_out;
      RunConfig base = config_from_json(doc);
      print_warnings(base);
      if (base.out_dir.empty()) base.out_dir = "runs/sigma_sweep";
      for (const auto& c : sigma_sweep(base, sigma_inits)) {
        std::printf("sigma_init %.3f  final ret_mean %.3f  final sigma %.4f\n", c.sigma_init, c.rows.back().ret_mean,
                    c.rows.back().sigma);
      }
    } else if (eval_cmd->parsed()) {
      const auto res = evaluate(std::filesystem::path(checkpoint), episodes, eval_seed);
      std::printf("episodes %d  mean_return %.6f\n", episodes, res.mean_return);
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
