#include "iemppo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "iemppo/checkpoint.hpp"

namespace iemppo {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (std::find(env_names().begin(), env_names().end(), env) == env_names().end()) {
    throw ConfigError("unknown environment '" + env + "'");
  }
  trainer.validate();
  if (total_env_steps < trainer.steps_per_iteration) {
    throw ConfigError("total_env_steps must be >= steps_per_iteration");
  }
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
}

RunConfig default_config(const std::string& env) {
  RunConfig cfg;
  cfg.env = env;
  auto& s = cfg.trainer.sigma;
  s.sigma_init = 0.6;
  s.sigma_min = 0.1;
  if (env == "pendulum") {
    s.reward_low = -1400.0;
    s.reward_high = -200.0;
    cfg.total_env_steps = 300000;
  } else if (env == "mountaincar") {
    s.reward_low = -40.0;
    s.reward_high = 90.0;
    cfg.total_env_steps = 200000;
  } else if (env == "pointtrap") {
    s.reward_low = -1500.0;
    s.reward_high = 400.0;
    cfg.total_env_steps = 200000;
  } else {
    throw ConfigError("unknown environment '" + env + "'");
  }
  return cfg;
}

// --- config JSON --------------------------------------------------------------

namespace {

double read_double(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  throw ConfigError("config key '" + key + "' must be a number");
}

json write_double(double x) {
  if (std::isinf(x) && x > 0) return "inf";
  return x;
}

template <typename T>
T read_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<T>();
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  std::string env = "pendulum";
  if (doc.contains("env")) {
    if (!doc["env"].is_string()) throw ConfigError("config key 'env' must be a string");
    env = doc["env"].get<std::string>();
  }
  RunConfig cfg = default_config(env);
  auto& t = cfg.trainer;

  for (const auto& [key, v] : doc.items()) {
    if (key == "env") continue;
    if (key == "algo") {
      if (!v.is_string()) throw ConfigError("config key 'algo' must be a string");
      t.algo = algo_from_string(v.get<std::string>());
    } else if (key == "total_env_steps") {
      cfg.total_env_steps = read_int<long>(v, key);
    } else if (key == "steps_per_iteration") {
      t.steps_per_iteration = read_int<int>(v, key);
    } else if (key == "seed") {
      cfg.seed = read_int<std::uint64_t>(v, key);
    } else if (key == "out_dir") {
      cfg.out_dir = v.get<std::string>();
    } else if (key == "checkpoint_every") {
      cfg.checkpoint_every = read_int<int>(v, key);
    } else if (key == "record_wall_clock") {
      cfg.record_wall_clock = v.get<bool>();
    } else if (key == "clip_epsilon") {
      t.ppo.clip_epsilon = read_double(v, key);
    } else if (key == "gamma") {
      t.ppo.gamma = read_double(v, key);
    } else if (key == "epochs") {
      t.ppo.epochs = read_int<int>(v, key);
    } else if (key == "minibatch_size") {
      t.ppo.minibatch_size = read_int<int>(v, key);
    } else if (key == "policy_lr") {
      t.ppo.policy_lr = read_double(v, key);
    } else if (key == "value_lr") {
      t.ppo.value_lr = read_double(v, key);
    } else if (key == "kl_limit") {
      t.ppo.kl_limit = read_double(v, key);
    } else if (key == "sigma_init") {
      t.sigma.sigma_init = read_double(v, key);
    } else if (key == "sigma_min") {
      t.sigma.sigma_min = read_double(v, key);
    } else if (key == "reward_low") {
      t.sigma.reward_low = read_double(v, key);
    } else if (key == "reward_high") {
      t.sigma.reward_high = read_double(v, key);
    } else if (key == "c1") {
      t.c1 = read_double(v, key);
    } else if (key == "beta") {
      t.beta = read_double(v, key);
    } else if (key == "n_max") {
      t.n_max = read_int<int>(v, key);
    } else if (key == "bonus_offset") {
      t.bonus_offset = read_double(v, key);
    } else if (key == "intrinsic_lr") {
      t.intrinsic_lr = read_double(v, key);
    } else if (key == "standardize_inputs") {
      t.standardize_inputs = v.get<bool>();
    } else if (key == "hidden_dims") {
      t.hidden_dims = v.get<std::vector<int>>();
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  const bool has_c1 = doc.contains("c1");
  const bool has_beta = doc.contains("beta");
  if (t.algo == Algo::kPpo && (has_c1 || has_beta)) {
    cfg.warnings.push_back("algo ppo has no intrinsic reward; ignoring c1/beta");
  } else if (t.algo == Algo::kIcmPpo && has_c1) {
    cfg.warnings.push_back("algo icm-ppo ignores c1");
  } else if (t.algo == Algo::kIemPpo && has_beta) {
    cfg.warnings.push_back("algo iem-ppo ignores beta");
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  const auto& t = cfg.trainer;
  json j;
  j["env"] = cfg.env;
  j["algo"] = std::string(to_string(t.algo));
  j["total_env_steps"] = cfg.total_env_steps;
  j["steps_per_iteration"] = t.steps_per_iteration;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["record_wall_clock"] = cfg.record_wall_clock;
  j["clip_epsilon"] = write_double(t.ppo.clip_epsilon);
  j["gamma"] = t.ppo.gamma;
  j["epochs"] = t.ppo.epochs;
  j["minibatch_size"] = t.ppo.minibatch_size;
  j["policy_lr"] = t.ppo.policy_lr;
  j["value_lr"] = t.ppo.value_lr;
  j["kl_limit"] = write_double(t.ppo.kl_limit);
  j["sigma_init"] = t.sigma.sigma_init;
  j["sigma_min"] = t.sigma.sigma_min;
  j["reward_low"] = t.sigma.reward_low;
  j["reward_high"] = t.sigma.reward_high;
  j["hidden_dims"] = t.hidden_dims;
  if (t.algo == Algo::kIemPpo) {
    j["c1"] = t.c1;
    j["n_max"] = t.n_max;
    j["bonus_offset"] = t.bonus_offset;
    j["standardize_inputs"] = t.standardize_inputs;
  }
  if (t.algo == Algo::kIcmPpo) j["beta"] = t.beta;
  if (t.algo != Algo::kPpo) j["intrinsic_lr"] = t.intrinsic_lr;
  return j;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

// --- metrics ------------------------------------------------------------------

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string metrics_line(const MetricsRow& r) {
  std::ostringstream os;
  os << r.iter << ',' << r.steps << ',' << format_double(r.ret_mean) << ',' << format_double(r.ret_min) << ','
     << format_double(r.ret_max) << ',' << format_double(r.bonus_mean) << ',' << format_double(r.sigma) << ','
     << r.epochs_run << ',' << format_double(r.kl) << ',' << format_double(r.loss_pi) << ','
     << format_double(r.loss_v) << ',' << format_double(r.loss_intrinsic) << ',' << format_double(r.seconds);
  return os.str();
}

namespace {

bool row_finite(const MetricsRow& r) {
  for (double x : {r.ret_mean, r.ret_min, r.ret_max, r.bonus_mean, r.sigma, r.kl, r.loss_pi, r.loss_v,
                   r.loss_intrinsic}) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

}  // namespace

json checkpoint_json(const AlgoState& s, const std::string& env) {
  json j;
  j["env"] = env;
  j["algo"] = std::string(to_string(s.cfg.algo));
  j["iteration"] = s.iteration;
  j["env_steps"] = s.env_steps;
  j["action_low"] = nn::hex_array(s.policy.action_low);
  j["action_high"] = nn::hex_array(s.policy.action_high);
  j["sigma"] = {
      {"sigma_init", nn::format_hex(s.sigma.sigma_init())},
      {"sigma_min", nn::format_hex(s.sigma.sigma_min())},
      {"reward_low", nn::format_hex(s.sigma.reward_low())},
      {"reward_high", nn::format_hex(s.sigma.reward_high())},
      {"running_reward", nn::format_hex(s.sigma.running_reward())},
      {"current", nn::format_hex(s.sigma.sigma())},
  };
  j["policy"] = nn::to_json(s.policy.net.spec, s.policy.net.params);
  j["value"] = nn::to_json(s.value.spec, s.value.params);
  if (s.icm) j["curiosity"] = nn::to_json(s.icm->net.spec, s.icm->net.params);
  if (s.iem) j["uncertainty"] = nn::to_json(s.iem->net.spec, s.iem->net.params);
  return j;
}

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto env = make_env(cfg.env);
  AlgoState state = make_algo_state(cfg.trainer, *env, cfg.seed);

  std::ofstream metrics;
  fs::path dir;
  if (!cfg.out_dir.empty()) {
    dir = cfg.out_dir;
    fs::create_directories(dir);
    write_json(dir / "config.json", config_to_json(cfg));
    metrics.open(dir / "metrics.csv");
    if (!metrics) throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
    metrics << kMetricsHeader << '\n' << std::flush;
  }
  auto save_checkpoint = [&](const std::string& name) {
    if (!dir.empty()) write_json(dir / name, checkpoint_json(state, cfg.env));
  };
  auto write_episodes = [&] {
    if (dir.empty()) return;
    std::ofstream out(dir / "episodes.csv");
    out << "episode,end_step,return,terminated\n";
    for (std::size_t i = 0; i < state.episodes.size(); ++i) {
      const auto& e = state.episodes[i];
      out << i << ',' << e.end_step << ',' << format_double(e.episode_return) << ',' << (e.terminated ? 1 : 0)
          << '\n';
    }
  };

  RunResult result;
  while (state.env_steps < cfg.total_env_steps) {
    MetricsRow row;
    try {
      row = train_iteration(state, *env);
      if (!row_finite(row)) throw NumericError("iteration " + std::to_string(row.iter) + ": non-finite metrics");
    } catch (const NumericError&) {
      write_episodes();
      throw;
    }
    if (!cfg.record_wall_clock) row.seconds = 0.0;
    result.rows.push_back(row);
    if (metrics.is_open()) metrics << metrics_line(row) << '\n' << std::flush;
    if (state.iteration % cfg.checkpoint_every == 0) {
      std::ostringstream name;
      name << "checkpoint_" << std::setw(5) << std::setfill('0') << state.iteration << ".json";
      save_checkpoint(name.str());
    }
  }
  save_checkpoint("checkpoint.json");
  write_episodes();

  result.episodes = state.episodes;
  result.final_window = final_window_mean(state.episodes);
  result.first_goal_step = state.first_termination_step;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// --- evaluation ---------------------------------------------------------------

EvalResult evaluate(const json& ckpt, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw ConfigError("evaluate: need at least one episode");
  GaussianPolicy policy;
  std::unique_ptr<Env> env;
  try {
    env = make_env(ckpt.at("env").get<std::string>());
    policy = GaussianPolicy(nn::mlp_from_json(ckpt.at("policy")), nn::vec_from_hex_array(ckpt.at("action_low")),
                            nn::vec_from_hex_array(ckpt.at("action_high")));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  if (policy.state_dim() != env->state_dim() || policy.action_dim() != env->action_dim()) {
    throw ParseError("checkpoint: policy shape does not match environment " + std::string(env->name()));
  }

  Rng env_rng = make_stream(seed, Stream::kEnv);
  Rng unused = make_stream(seed, Stream::kNoise);
  EvalResult out;
  for (int ep = 0; ep < episodes; ++ep) {
    Vec s = env->reset(env_rng);
    double total = 0.0;
    for (;;) {
      const auto step = env->step(act(policy, s, 0.0, unused).action);
      total += step.reward;
      s = step.next_state;
      if (step.terminated || step.truncated) break;
    }
    out.returns.push_back(total);
  }
  double sum = 0.0;
  for (double r : out.returns) sum += r;
  out.mean_return = sum / static_cast<double>(episodes);
  return out;
}

EvalResult evaluate(const fs::path& checkpoint, int episodes, std::uint64_t seed) {
  std::ifstream in(checkpoint);
  if (!in) throw ConfigError("cannot open checkpoint " + checkpoint.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("checkpoint " + checkpoint.string() + ": " + e.what());
  }
  return evaluate(doc, episodes, seed);
}

// --- sweeps -------------------------------------------------------------------

std::vector<SweepEntry> expand_sweep(const json& doc) {
  if (!doc.is_object()) throw ConfigError("sweep config must be a JSON object");
  const json base = doc.value("base", json::object());
  if (!base.is_object()) throw ConfigError("sweep: 'base' must be an object");

  auto list_or = [&](const char* key, json fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc[key];
    if (!v.is_array() || v.empty()) throw ConfigError(std::string("sweep: '") + key + "' must be a non-empty array");
    return v;
  };
  const json envs = list_or("envs", json::array({base.value("env", std::string("pendulum"))}));
  const json algos = list_or("algos", json::array({base.value("algo", std::string("ppo"))}));
  const json seeds = list_or("seeds", json::array({base.value("seed", 0)}));
  const bool sigma_axis = doc.contains("sigma_inits");
  const json sigmas = list_or("sigma_inits", json::array({nullptr}));

  for (const auto& [key, v] : doc.items()) {
    static const std::set<std::string> known{"base", "envs", "algos", "seeds", "sigma_inits", "out_dir", "jobs"};
    if (!known.count(key)) throw ConfigError("sweep: unknown key '" + key + "'");
  }

  std::vector<SweepEntry> out;
  for (const auto& env : envs) {
    for (const auto& algo : algos) {
      for (const auto& sigma : sigmas) {
        for (const auto& seed : seeds) {
          json run = base;
          run["env"] = env;
          run["algo"] = algo;
          run["seed"] = seed;
          run.erase("out_dir");
          std::string setting = "default";
          if (sigma_axis) {
            run["sigma_init"] = sigma;
            setting = "sigma_init=" + format_double(sigma.get<double>());
          }
          SweepEntry entry{config_from_json(run), setting};
          out.push_back(std::move(entry));
        }
      }
    }
  }
  return out;
}

namespace {

std::string run_label(const SweepEntry& e) {
  std::string setting = e.setting;
  std::replace(setting.begin(), setting.end(), '=', '-');
  return e.config.env + "_" + std::string(to_string(e.config.algo())) + "_" + setting + "_seed" +
         std::to_string(e.config.seed);
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<SweepEntry>& entries,
                                  const std::vector<std::optional<RunResult>>& runs) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Key key{entries[i].config.env, std::string(to_string(entries[i].config.algo())), entries[i].setting};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(i);
  }

  std::vector<SummaryRow> rows;
  for (const auto& key : order) {
    SummaryRow row;
    std::tie(row.env, row.algo, row.setting) = key;
    std::vector<double> finals, goals;
    for (std::size_t i : groups[key]) {
      ++row.runs;
      if (!runs[i]) {
        ++row.failures;
        continue;
      }
      finals.push_back(runs[i]->final_window);
      goals.push_back(runs[i]->first_goal_step ? static_cast<double>(*runs[i]->first_goal_step)
                                               : std::numeric_limits<double>::infinity());
      row.seconds_total += runs[i]->wall_seconds;
    }
    const auto n = static_cast<double>(finals.size());
    if (finals.empty()) {
      row.final_mean = row.final_var = row.first_goal_median = std::numeric_limits<double>::quiet_NaN();
    } else {
      for (double f : finals) row.final_mean += f;
      row.final_mean /= n;
      for (double f : finals) row.final_var += (f - row.final_mean) * (f - row.final_mean);
      row.final_var = finals.size() > 1 ? row.final_var / (n - 1.0) : 0.0;
      std::sort(goals.begin(), goals.end());
      const std::size_t m = goals.size();
      row.first_goal_median = m % 2 ? goals[m / 2] : 0.5 * (goals[m / 2 - 1] + goals[m / 2]);
    }
    rows.push_back(row);
  }
  return rows;
}

SweepResult sweep(const std::vector<SweepEntry>& entries, int jobs, const std::string& out_dir) {
  if (entries.empty()) throw ConfigError("sweep: no runs");
  SweepResult result;
  result.runs.resize(entries.size());
  result.errors.resize(entries.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      RunConfig cfg = entries[i].config;
      if (!out_dir.empty()) cfg.out_dir = (fs::path(out_dir) / run_label(entries[i])).string();
      try {
        result.runs[i] = run(cfg);
      } catch (const std::exception& e) {
        result.errors[i] = e.what();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(entries.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.summary = summarize(entries, result.runs);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "summary.csv");
    out << "env,algo,setting,runs,failures,final100_mean,final100_var,first_goal_median,seconds_total\n";
    for (const auto& r : result.summary) {
      out << r.env << ',' << r.algo << ',' << r.setting << ',' << r.runs << ',' << r.failures << ','
          << format_double(r.final_mean) << ',' << format_double(r.final_var) << ','
          << format_double(r.first_goal_median) << ',' << format_double(r.seconds_total) << '\n';
    }
    std::ofstream failures(fs::path(out_dir) / "failures.csv");
    failures << "run,error\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (result.runs[i]) continue;
      std::string msg = result.errors[i];
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      std::replace(msg.begin(), msg.end(), '"', '\'');
      failures << run_label(entries[i]) << ",\"" << msg << "\"\n";
    }
  }
  return result;
}

std::vector<SigmaCurve> sigma_sweep(const RunConfig& base, const std::vector<double>& sigma_inits) {
  if (sigma_inits.empty()) throw ConfigError("sigma_sweep: no settings");
  for (double s : sigma_inits) {
    if (!(s >= base.trainer.sigma.sigma_min)) throw ConfigError("sigma_sweep: every sigma_init must be >= sigma_min");
  }
  std::vector<SigmaCurve> curves;
  for (double s : sigma_inits) {
    RunConfig cfg = base;
    cfg.trainer.sigma.sigma_init = s;
    if (!base.out_dir.empty()) cfg.out_dir = (fs::path(base.out_dir) / ("sigma_init-" + format_double(s))).string();
    curves.push_back({s, run(cfg).rows});
  }
  if (!base.out_dir.empty()) {
    std::ofstream out(fs::path(base.out_dir) / "sigma_curves.csv");
    out << "sigma_init,iter,steps,ret_mean,sigma\n";
    for (const auto& c : curves) {
      for (const auto& r : c.rows) {
        out << format_double(c.sigma_init) << ',' << r.iter << ',' << r.steps << ',' << format_double(r.ret_mean)
            << ',' << format_double(r.sigma) << '\n';
      }
    }
  }
  return curves;
}

}  // namespace iemppo
