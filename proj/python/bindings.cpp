#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "iemppo/checkpoint.hpp"
#include "iemppo/harness.hpp"

namespace py = pybind11;
using namespace iemppo;

namespace {

py::dict row_dict(const MetricsRow& r) {
  py::dict d;
  d["iter"] = r.iter;
  d["steps"] = r.steps;
  d["ret_mean"] = r.ret_mean;
  d["ret_min"] = r.ret_min;
  d["ret_max"] = r.ret_max;
  d["bonus_mean"] = r.bonus_mean;
  d["sigma"] = r.sigma;
  d["epochs_run"] = r.epochs_run;
  d["kl"] = r.kl;
  d["loss_pi"] = r.loss_pi;
  d["loss_v"] = r.loss_v;
  d["loss_intrinsic"] = r.loss_intrinsic;
  d["seconds"] = r.seconds;
  return d;
}

// Owns an environment and the training state built for it.
class Trainer {
 public:
  Trainer(const std::string& config_json) : cfg_(config_from_json(json::parse(config_json))) {
    env_ = make_env(cfg_.env);
    state_ = make_algo_state(cfg_.trainer, *env_, cfg_.seed);
  }

  py::dict step() {
    MetricsRow row;
    {
      py::gil_scoped_release release;
      row = train_iteration(state_, *env_);
    }
    return row_dict(row);
  }

  long env_steps() const { return state_.env_steps; }
  double sigma() const { return state_.sigma.sigma(); }
  double final_window() const { return final_window_mean(state_.episodes); }
  std::vector<double> episode_returns() const {
    std::vector<double> out;
    for (const auto& e : state_.episodes) out.push_back(e.episode_return);
    return out;
  }
  Vec policy_mean(const Vec& s) const { return state_.policy.mean(s); }
  std::string checkpoint() const { return checkpoint_json(state_, cfg_.env).dump(); }
  const std::vector<std::string>& warnings() const { return cfg_.warnings; }

 private:
  RunConfig cfg_;
  std::unique_ptr<Env> env_;
  AlgoState state_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "PPO with curiosity and step-count uncertainty bonuses";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<EpisodeError>(m, "EpisodeError", PyExc_RuntimeError);

  py::class_<Rng>(m, "Rng").def(py::init<std::uint64_t>(), py::arg("seed"));
  m.def("make_stream", [](std::uint64_t seed, int id) { return make_stream(seed, static_cast<Stream>(id)); });

  // networks
  py::class_<nn::Mlp>(m, "Mlp")
      .def(py::init([](int in, std::vector<int> hidden, int out, std::uint64_t seed) {
             Rng rng(seed);
             return nn::Mlp(nn::MlpSpec{in, std::move(hidden), out}, rng);
           }),
           py::arg("input_dim"), py::arg("hidden_dims"), py::arg("output_dim"), py::arg("seed") = 0)
      .def("__call__", [](const nn::Mlp& net, const Vec& x) { return net(x); })
      .def("forward_batch", [](const nn::Mlp& net, const Mat& x) { return net.batch(x); })
      .def("num_params", [](const nn::Mlp& net) { return net.spec.num_params(); })
      .def("get_flat", [](const nn::Mlp& net) { return net.params.flatten(); })
      .def("set_flat", [](nn::Mlp& net, const std::vector<double>& flat) { net.params.assign_flat(flat); })
      .def("input_gradient",
           [](const nn::Mlp& net, const Vec& x, const Vec& out_grad) {
             nn::ForwardCache cache;
             nn::forward_batch(net.spec, net.params, x, &cache);
             const Mat g = out_grad;
             return Vec(nn::backward_batch(net.spec, net.params, cache, g).inputs.col(0));
           })
      .def("param_gradient",
           [](const nn::Mlp& net, const Vec& x, const Vec& out_grad) {
             nn::ForwardCache cache;
             nn::forward_batch(net.spec, net.params, x, &cache);
             const Mat g = out_grad;
             return nn::backward_batch(net.spec, net.params, cache, g).params.flatten();
           })
      .def("to_json", [](const nn::Mlp& net) { return nn::save_params(net.spec, net.params); });

  // policy pieces
  m.def("log_prob", py::overload_cast<const Vec&, double, const Vec&>(&log_prob), py::arg("mean"), py::arg("sigma"),
        py::arg("action"));
  m.def("clip_objective", &clip_objective, py::arg("ratio"), py::arg("advantage"), py::arg("epsilon"));
  m.def("advantages", &advantages, py::arg("returns"), py::arg("values"), py::arg("normalize") = true);
  m.def("count_bonus", py::overload_cast<long>(&count_bonus), py::arg("visits"));

  py::class_<SigmaSchedule>(m, "SigmaSchedule")
      .def(py::init<double, double, double, double>(), py::arg("sigma_init"), py::arg("sigma_min"),
           py::arg("reward_low"), py::arg("reward_high"))
      .def("update", &SigmaSchedule::update)
      .def_property_readonly("sigma", &SigmaSchedule::sigma)
      .def_property_readonly("running_reward", &SigmaSchedule::running_reward);

  // environments
  py::class_<StepResult>(m, "StepResult")
      .def_readonly("next_state", &StepResult::next_state)
      .def_readonly("reward", &StepResult::reward)
      .def_readonly("terminated", &StepResult::terminated)
      .def_readonly("truncated", &StepResult::truncated);
  py::class_<Env>(m, "Env")
      .def_property_readonly("name", [](const Env& e) { return std::string(e.name()); })
      .def_property_readonly("state_dim", &Env::state_dim)
      .def_property_readonly("action_dim", &Env::action_dim)
      .def_property_readonly("max_episode_steps", &Env::max_episode_steps)
      .def("reset", &Env::reset, py::arg("rng"))
      .def("step", &Env::step, py::arg("action"));
  m.def("make_env", &make_env, py::arg("name"));
  m.def("env_names", &env_names);

  // harness
  py::class_<Trainer>(m, "Trainer")
      .def(py::init<const std::string&>(), py::arg("config_json"))
      .def("step", &Trainer::step)
      .def_property_readonly("env_steps", &Trainer::env_steps)
      .def_property_readonly("sigma", &Trainer::sigma)
      .def_property_readonly("warnings", &Trainer::warnings)
      .def("final_window", &Trainer::final_window)
      .def("episode_returns", &Trainer::episode_returns)
      .def("policy_mean", &Trainer::policy_mean)
      .def("checkpoint_json", &Trainer::checkpoint);

  m.def("resolve_config", [](const std::string& doc) { return config_to_json(config_from_json(json::parse(doc))).dump(); });
  m.def(
      "run",
      [](const std::string& doc) {
        const RunConfig cfg = config_from_json(json::parse(doc));
        RunResult res;
        {
          py::gil_scoped_release release;
          res = run(cfg);
        }
        py::list rows;
        for (const auto& r : res.rows) rows.append(row_dict(r));
        return py::make_tuple(rows, res.final_window);
      },
      py::arg("config_json"));
  m.def(
      "evaluate",
      [](const std::string& checkpoint, int episodes, std::uint64_t seed) {
        return evaluate(json::parse(checkpoint), episodes, seed).mean_return;
      },
      py::arg("checkpoint_json"), py::arg("episodes"), py::arg("seed") = 0);
  m.attr("METRICS_COLUMNS") = std::string(kMetricsHeader);
}
