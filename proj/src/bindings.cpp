#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <stdexcept>
#include <variant>

#include <json.hpp>

#include "qppo/circuits.hpp"
#include "qppo/envs.hpp"
#include "qppo/experiment.hpp"
#include "qppo/ppo.hpp"
#include "qppo/qsim.hpp"

namespace py = pybind11;
using namespace qppo;

namespace {

qsim::Gate gate_from_tuple(const py::tuple& t) {
  const std::string kind = t[0].cast<std::string>();
  if (kind == "rx") return qsim::Gate::rx(t[1].cast<int>(), t[2].cast<double>());
  if (kind == "ry") return qsim::Gate::ry(t[1].cast<int>(), t[2].cast<double>());
  if (kind == "rz") return qsim::Gate::rz(t[1].cast<int>(), t[2].cast<double>());
  if (kind == "h") return qsim::Gate::h(t[1].cast<int>());
  if (kind == "cnot") return qsim::Gate::cnot(t[1].cast<int>(), t[2].cast<int>());
  if (kind == "cz") return qsim::Gate::cz(t[1].cast<int>(), t[2].cast<int>());
  throw std::invalid_argument("unknown gate kind '" + kind + "'");
}

circuits::ScalingMode scaling_from_string(const std::string& s) {
  if (s == "none") return circuits::ScalingMode::None;
  if (s == "global") return circuits::ScalingMode::Global;
  if (s == "local") return circuits::ScalingMode::Local;
  throw std::invalid_argument("scaling mode must be none/global/local");
}

circuits::Architecture arch_from_string(const std::string& s) {
  if (s == "standard") return circuits::Architecture::Standard;
  if (s == "koelle") return circuits::Architecture::Koelle;
  if (s == "jerbi") return circuits::Architecture::Jerbi;
  throw std::invalid_argument("architecture must be standard/koelle/jerbi");
}

Obs obs_from_list(const std::vector<double>& values) {
  Obs obs{};
  if (values.size() > 4) throw std::invalid_argument("observation has at most 4 entries");
  for (std::size_t i = 0; i < values.size(); ++i) obs[i] = values[i];
  return obs;
}

py::dict log_to_dict(const ppo::TrainingLog& log) {
  py::dict out;
  std::vector<long> timestep;
  std::vector<double> raw_return, policy_loss, value_loss, entropy, lr_actor, lr_scaling, beta;
  for (const auto& r : log.records) {
    timestep.push_back(r.timestep);
    raw_return.push_back(r.raw_return);
    policy_loss.push_back(r.policy_loss);
    value_loss.push_back(r.value_loss);
    entropy.push_back(r.entropy);
    lr_actor.push_back(r.lr_actor);
    lr_scaling.push_back(r.lr_scaling);
    beta.push_back(r.beta);
  }
  out["timestep"] = timestep;
  out["raw_return"] = raw_return;
  out["policy_loss"] = policy_loss;
  out["value_loss"] = value_loss;
  out["entropy"] = entropy;
  out["lr_actor"] = lr_actor;
  out["lr_scaling"] = lr_scaling;
  out["beta"] = beta;
  if (log.abort_reason) out["abort_reason"] = *log.abort_reason;
  return out;
}

}  // namespace

PYBIND11_MODULE(_qppo, m) {
  m.doc() = "Statevector-simulated quantum PPO: circuits, environments and training";

  // --- simulator ---
  m.def(
      "run_circuit",
      [](const std::vector<py::tuple>& gates, int n_qubits, const std::vector<int>& measured) {
        std::vector<qsim::Gate> parsed;
        parsed.reserve(gates.size());
        for (const auto& t : gates) parsed.push_back(gate_from_tuple(t));
        return qsim::run_circuit(parsed, n_qubits, measured);
      },
      py::arg("gates"), py::arg("n_qubits"), py::arg("measured_wires"),
      "Run a gate list on |0...0> and return Pauli-Z expectations. Gates are "
      "tuples like ('ry', wire, angle), ('h', wire) or ('cnot', control, target).");

  // --- circuits ---
  py::class_<circuits::CircuitConfig>(m, "CircuitConfig")
      .def(py::init([](const std::string& architecture, int n_layers,
                       const std::string& encoding, const std::string& input_scaling,
                       const std::string& output_scaling, const std::string& entanglement) {
             circuits::CircuitConfig config;
             config.architecture = arch_from_string(architecture);
             config.input_scaling = scaling_from_string(input_scaling);
             config.output_scaling = scaling_from_string(output_scaling);
             if (encoding == "binary") {
               config.encoding = circuits::EncodingMode::BinaryFL;
               config.measured_wires = {0, 1, 2, 3};
             } else if (encoding == "angle") {
               config.encoding = circuits::EncodingMode::AngleCP;
               config.measured_wires = {2, 3};
             } else {
               throw std::invalid_argument("encoding must be 'binary' or 'angle'");
             }
             config.n_layers = n_layers > 0
                                   ? n_layers
                                   : (config.architecture == circuits::Architecture::Jerbi ? 8 : 6);
             config.final_entanglement = entanglement == "partial"
                                             ? circuits::FinalEntanglement::Partial
                                             : circuits::FinalEntanglement::Full;
             config.validate();
             return config;
           }),
           py::arg("architecture") = "standard", py::arg("n_layers") = 0,
           py::arg("encoding") = "binary", py::arg("input_scaling") = "none",
           py::arg("output_scaling") = "none", py::arg("entanglement") = "full")
      .def_readonly("n_qubits", &circuits::CircuitConfig::n_qubits)
      .def_readonly("n_layers", &circuits::CircuitConfig::n_layers)
      .def("theta_count", [](const circuits::CircuitConfig& c) { return circuits::theta_count(c); })
      .def("lambda_count", [](const circuits::CircuitConfig& c) { return circuits::lambda_count(c); })
      .def("beta_count", [](const circuits::CircuitConfig& c) { return circuits::beta_count(c); });

  m.def("count_parameters", &circuits::count_parameters, py::arg("config"));
  m.def("remap_weight", &circuits::remap_weight, py::arg("theta"));
  m.def("encode_binary", &circuits::encode_binary, py::arg("state_index"));
  m.def(
      "rescale_cartpole",
      [](const std::vector<double>& s) { return circuits::rescale_cartpole(obs_from_list(s)); },
      py::arg("state"));
  m.def(
      "probs_plain",
      [](const std::vector<double>& expvals) { return circuits::probs_plain(expvals); },
      py::arg("expvals"));
  m.def(
      "probs_softmax",
      [](const std::vector<double>& expvals, const std::vector<double>& beta) {
        return circuits::probs_softmax(expvals, beta);
      },
      py::arg("expvals"), py::arg("beta"));
  m.def(
      "actor_forward",
      [](const circuits::CircuitConfig& config, const std::vector<double>& theta,
         const std::vector<double>& lambda, const std::vector<double>& beta,
         const std::vector<double>& obs) {
        circuits::CircuitParams params{theta, lambda, beta};
        const auto out = circuits::actor_forward(config, params, obs_from_list(obs));
        return py::make_tuple(out.probs, out.expvals);
      },
      py::arg("config"), py::arg("theta"), py::arg("lambda"), py::arg("beta"), py::arg("obs"),
      "Returns (action probabilities, measured expectations).");

  // --- environments ---
  py::class_<envs::FrozenLake>(m, "FrozenLake")
      .def(py::init<>())
      .def("reset", [](envs::FrozenLake& env, std::uint64_t seed) { return env.reset(seed)[0]; },
           py::arg("seed") = 0)
      .def(
          "step",
          [](envs::FrozenLake& env, int action) {
            const auto r = env.step(action);
            return py::make_tuple(static_cast<int>(r.obs[0]), r.reward, r.done);
          },
          py::arg("action"));

  py::class_<envs::CartPole>(m, "CartPole")
      .def(py::init<>())
      .def("reset", [](envs::CartPole& env, std::uint64_t seed) { return env.reset(seed); },
           py::arg("seed"))
      .def(
          "step",
          [](envs::CartPole& env, int action) {
            const auto r = env.step(action);
            return py::make_tuple(r.obs, r.reward, r.done);
          },
          py::arg("action"));

  // --- ppo pieces ---
  m.def(
      "lr_at",
      [](double lr_start, double lr_end, double half_life, double t, bool exp_decay) {
        ppo::LrSchedule schedule;
        schedule.mode = exp_decay ? ppo::ScheduleMode::ExpDecay : ppo::ScheduleMode::Fixed;
        schedule.lr_start = lr_start;
        schedule.lr_end = lr_end;
        schedule.half_life = half_life;
        return ppo::lr_at(schedule, t);
      },
      py::arg("lr_start"), py::arg("lr_end"), py::arg("half_life"), py::arg("t"),
      py::arg("exp_decay") = true);
  m.def(
      "compute_gae",
      [](const std::vector<double>& rewards, const std::vector<bool>& dones,
         const std::vector<double>& values, const std::vector<double>& next_values, int steps,
         int n_envs, double gamma, double gae_lambda) {
        std::vector<std::uint8_t> d(dones.begin(), dones.end());
        const auto out =
            ppo::compute_gae(rewards, d, values, next_values, steps, n_envs, gamma, gae_lambda);
        return py::make_tuple(out.advantages, out.returns);
      },
      py::arg("rewards"), py::arg("dones"), py::arg("values"), py::arg("next_values"),
      py::arg("steps"), py::arg("envs"), py::arg("gamma") = 0.99, py::arg("gae_lambda") = 0.95);
  m.def(
      "ewma", [](const std::vector<double>& series, double alpha) { return lab::ewma(series, alpha); },
      py::arg("series"), py::arg("alpha"));

  // --- training ---
  m.def(
      "train",
      [](const std::string& config_json, std::uint64_t seed) {
        const auto parsed = nlohmann::json::parse(config_json);
        const auto config = lab::ExperimentConfig::from_json(parsed);
        ppo::TrainSpec spec = config.base;
        spec.seed = seed;
        return log_to_dict(ppo::train(spec));
      },
      py::arg("config_json"), py::arg("seed") = 1,
      "Train one seed from an experiment-config JSON string; returns the log as "
      "a dict of columns.");
  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& output_root, int jobs) {
        const auto config = lab::ExperimentConfig::from_file(config_path);
        const auto artifacts = lab::run(config, output_root, jobs);
        py::dict out;
        out["run_dir"] = artifacts.run_dir.string();
        out["aggregate_csv"] = artifacts.aggregate_csv.string();
        out["plot_svg"] = artifacts.plot_svg.string();
        std::vector<std::string> seed_csvs;
        for (const auto& p : artifacts.seed_csvs) seed_csvs.push_back(p.string());
        out["seed_csvs"] = seed_csvs;
        out["failures"] = artifacts.failures;
        return out;
      },
      py::arg("config_path"), py::arg("output_root"), py::arg("jobs") = 1);
}
