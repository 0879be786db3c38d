// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

// Python bindings for episode generation, decoding, training and persistence.

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fovr/coldstart.hpp"
#include "fovr/config.hpp"
#include "fovr/decode.hpp"
#include "fovr/env.hpp"
#include "fovr/fov_policy.hpp"
#include "fovr/grpo.hpp"
#include "fovr/io.hpp"
#include "fovr/model.hpp"
#include "fovr/report.hpp"
#include "fovr/train.hpp"

namespace py = pybind11;
using namespace fovr;

namespace {

py::array_t<double> image_array(const env::Image& img) {
  py::array_t<double> out({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

py::array_t<double> to_numpy(const Array& a) {
  std::vector<py::ssize_t> shape(a.shape().begin(), a.shape().end());
  py::array_t<double> out(shape);
  std::copy(a.data().begin(), a.data().end(), out.mutable_data());
  return out;
}

Array from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Array(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

py::tuple box_tuple(const env::BoxAction& b) { return py::make_tuple(b.cx, b.cy, b.w, b.h); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Foveated interleaved decoding: synthetic environment, model, decoding and training";
  m.attr("VOCAB_SIZE") = tok::kVocabSize;
  m.attr("FOV_OPEN") = tok::kFovOpen;
  m.attr("EOS") = tok::kEos;
  m.def("version", &version_string);

  py::register_exception<io::FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // ------------------------------------------------------------ environment
  py::enum_<env::TaskKind>(m, "TaskKind")
      .value("identify", env::TaskKind::identify)
      .value("compare", env::TaskKind::compare);

  py::class_<env::BoxAction>(m, "Box")
      .def(py::init([](double cx, double cy, double w, double h) { return env::BoxAction{cx, cy, w, h}; }),
           py::arg("cx") = 0.0, py::arg("cy") = 0.0, py::arg("w") = 0.5, py::arg("h") = 0.5)
      .def_readwrite("cx", &env::BoxAction::cx)
      .def_readwrite("cy", &env::BoxAction::cy)
      .def_readwrite("w", &env::BoxAction::w)
      .def_readwrite("h", &env::BoxAction::h)
      .def("as_tuple", &box_tuple)
      .def(py::self == py::self)
      .def("__repr__", [](const env::BoxAction& b) {
        return "Box(" + std::to_string(b.cx) + ", " + std::to_string(b.cy) + ", " + std::to_string(b.w) + ", " +
               std::to_string(b.h) + ")";
      });

  py::class_<env::Episode>(m, "Episode")
      .def_readonly("seed", &env::Episode::seed)
      .def_readonly("kind", &env::Episode::kind)
      .def_property_readonly("high_res", [](const env::Episode& e) { return image_array(e.high_res); })
      .def_property_readonly("low_res", [](const env::Episode& e) { return image_array(e.low_res); })
      .def_readonly("question", &env::Episode::question)
      .def_readonly("answer", &env::Episode::answer)
      .def_readonly("glyphs", &env::Episode::glyphs)
      .def_readonly("oracle_boxes", &env::Episode::oracle_boxes)
      .def(py::self == py::self);

  m.def("generate_episode", [](std::uint64_t seed, env::TaskKind kind) { return env::generate_episode(seed, kind); },
        py::arg("seed"), py::arg("kind") = env::TaskKind::identify);
  m.def("make_split", [](int count, std::uint64_t seed, double identify_fraction) {
    return make_split(count, seed, identify_fraction);
  }, py::arg("count"), py::arg("seed"), py::arg("identify_fraction") = 0.75);
  m.def("iou", [](const env::BoxAction& a, const env::BoxAction& b) { return env::iou(a, b); });

  // ------------------------------------------------------------ model and policy
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("d", &ModelConfig::d)
      .def_readwrite("n_layers", &ModelConfig::n_layers)
      .def_readwrite("split", &ModelConfig::split)
      .def_readwrite("n_heads", &ModelConfig::n_heads)
      .def_readwrite("max_pos", &ModelConfig::max_pos)
      .def_readwrite("init_std", &ModelConfig::init_std)
      .def("validate", &ModelConfig::validate);

  py::class_<FovPolicyConfig>(m, "FovPolicyConfig")
      .def(py::init<>())
      .def_readwrite("hidden_in", &FovPolicyConfig::hidden_in)
      .def_readwrite("hidden_mid", &FovPolicyConfig::hidden_mid)
      .def_readwrite("sigma", &FovPolicyConfig::sigma)
      .def_readwrite("min_size", &FovPolicyConfig::min_size)
      .def_readwrite("max_size", &FovPolicyConfig::max_size)
      .def("validate", &FovPolicyConfig::validate);

  py::class_<TransformerModel>(m, "Model")
      .def(py::init<const ModelConfig&, std::uint64_t>(), py::arg("config") = ModelConfig{}, py::arg("seed") = 0)
      .def_property_readonly("config", &TransformerModel::config)
      .def("copy", [](const TransformerModel& t) { return TransformerModel(t); })
      .def_property_readonly("num_parameters", [](const TransformerModel& t) { return t.params().total_elements(); })
      .def("parameter_names", [](const TransformerModel& t) {
        std::vector<std::string> names;
        for (const auto& p : t.params()) names.push_back(p.name);
        return names;
      })
      .def("get_parameter", [](const TransformerModel& t, const std::string& name) {
        const auto i = t.params().find(name);
        if (!i) throw py::key_error(name);
        return to_numpy(t.params()[*i].value);
      })
      .def("set_parameter", [](TransformerModel& t, const std::string& name,
                               const py::array_t<double, py::array::c_style | py::array::forcecast>& v) {
        const auto i = t.params().find(name);
        if (!i) throw py::key_error(name);
        Array a = from_numpy(v);
        require_same_shape(t.params()[*i].value, a, "set_parameter");
        t.params()[*i].value = std::move(a);
      });

  py::class_<FovPolicy>(m, "FovPolicy")
      .def(py::init<const FovPolicyConfig&, std::uint64_t>(), py::arg("config") = FovPolicyConfig{},
           py::arg("seed") = 0)
      .def_property_readonly("config", &FovPolicy::config)
      .def("copy", [](const FovPolicy& p) { return FovPolicy(p); })
      .def("mean_box", [](const FovPolicy& p, const py::array_t<double, py::array::c_style | py::array::forcecast>& h) {
        return p.mean_box(from_numpy(h));
      })
      .def("log_prob", [](const FovPolicy& p, const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
                          const std::array<double, 4>& box) { return p.get_log_prob(from_numpy(h), box).first; });

  m.def("gaussian_log_density", &gaussian_log_density, py::arg("x"), py::arg("mean"), py::arg("sigma"));

  // ------------------------------------------------------------ decoding
  py::enum_<OverrideMode>(m, "OverrideMode")
      .value("learned", OverrideMode::learned)
      .value("fixed", OverrideMode::fixed)
      .value("random", OverrideMode::random);

  py::class_<BoxOverride>(m, "BoxOverride")
      .def(py::init([](const std::string& text) { return parse_box_override(text); }), py::arg("text") = "learned")
      .def_readonly("mode", &BoxOverride::mode)
      .def("__str__", [](const BoxOverride& o) { return to_string(o); });

  py::class_<Interventions>(m, "Interventions")
      .def(py::init<>())
      .def_readwrite("fov_cap", &Interventions::fov_cap)
      .def_readwrite("center", &Interventions::center)
      .def_readwrite("size", &Interventions::size)
      .def_readwrite("mask_fov", &Interventions::mask_fov);

  py::class_<DecodeConfig>(m, "DecodeConfig")
      .def(py::init<>())
      .def_readwrite("t_max", &DecodeConfig::t_max)
      .def_readwrite("k_max", &DecodeConfig::k_max)
      .def_readwrite("temperature", &DecodeConfig::temperature)
      .def_readwrite("sample_boxes", &DecodeConfig::sample_boxes)
      .def_readwrite("interventions", &DecodeConfig::interventions)
      .def("validate", &DecodeConfig::validate);

  py::class_<TrajectoryStats>(m, "TrajectoryStats")
      .def_readonly("n_fov", &TrajectoryStats::n_fov)
      .def_readonly("t_fov", &TrajectoryStats::t_fov)
      .def_readonly("rho", &TrajectoryStats::rho);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("tokens", &Trajectory::token_ids)
      .def_property_readonly("log_probs",
                             [](const Trajectory& t) {
                               std::vector<double> out;
                               for (const auto& s : t.tokens) out.push_back(s.log_prob);
                               return out;
                             })
      .def_property_readonly("boxes",
                             [](const Trajectory& t) {
                               std::vector<env::BoxAction> out;
                               for (const auto& s : t.fov_steps) out.push_back(s.sample.box);
                               return out;
                             })
      .def_property_readonly("ended_with_eos", [](const Trajectory& t) { return t.terminal == Terminal::eos; })
      .def_readonly("stats", &Trajectory::stats);

  m.def("decode", &decode, py::arg("model"), py::arg("policy"), py::arg("episode"), py::arg("config") = DecodeConfig{},
        py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("decode_batch",
        [](const TransformerModel& model, const FovPolicy& policy, const std::vector<env::Episode>& eps,
           const DecodeConfig& cfg, std::uint64_t seed) { return decode_batch(model, policy, eps, cfg, seed); },
        py::arg("model"), py::arg("policy"), py::arg("episodes"), py::arg("config") = DecodeConfig{},
        py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("trace_lines", &trace_lines, py::arg("trajectory"), py::arg("episode"));

  // ------------------------------------------------------------ rewards
  py::class_<Rewards>(m, "Rewards")
      .def(py::init([](double acc, double fmt) { return Rewards{acc, fmt}; }), py::arg("acc") = 0.0,
           py::arg("fmt") = 0.0)
      .def_readwrite("acc", &Rewards::acc)
      .def_readwrite("fmt", &Rewards::fmt);
  m.def("reward", [](const Trajectory& t, const env::Episode& e) { return reward(t, e); });
  m.def("advantages", [](const std::vector<Rewards>& r) {
    const Advantages a = advantages(r);
    return py::make_tuple(a.a, a.a_acc);
  });
  m.def("kl_estimate", &kl_estimate, py::arg("logp_new"), py::arg("logp_ref"));

  // ------------------------------------------------------------ configuration and training
  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("parse", [](const std::string& text) { return parse_config(text); })
      .def_static("load", [](const std::filesystem::path& p) { return load_config(p); })
      .def("set", [](RunConfig& c, const std::string& k, const std::string& v) { set_config_value(c, k, v); })
      .def("items", &RunConfig::items)
      .def("to_text", &RunConfig::to_text)
      .def("validate", &RunConfig::validate)
      .def("eval_decode", &RunConfig::eval_decode)
      .def("rollout_decode", &RunConfig::rollout_decode)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("model", &RunConfig::model)
      .def_readwrite("fov", &RunConfig::fov);

  py::class_<Summary>(m, "Summary").def_readonly("mean", &Summary::mean).def_readonly("std", &Summary::std);
  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("count", &EvalReport::count)
      .def_readonly("accuracy", &EvalReport::accuracy)
      .def_readonly("format_rate", &EvalReport::format_rate)
      .def_readonly("n_fov", &EvalReport::n_fov)
      .def_readonly("rho", &EvalReport::rho)
      .def_readonly("t_fov", &EvalReport::t_fov)
      .def_readonly("correct", &EvalReport::correct)
      .def("to_json", [](const EvalReport& r, std::uint64_t seed) { return report_json(r, seed); },
           py::arg("seed") = 0);

  m.def("evaluate", &evaluate, py::arg("model"), py::arg("policy"), py::arg("episodes"),
        py::arg("config") = DecodeConfig{}, py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());

  m.def("train_coldstart",
        [](TransformerModel& model, FovPolicy& policy, const std::vector<env::Episode>& episodes,
           const RunConfig& cfg) {
          std::vector<TargetSequence> targets;
          for (const auto& e : episodes) targets.push_back(build_target(e, cfg.data.rationale));
          const ColdstartSummary s = train_coldstart(model, policy, targets, cfg.coldstart, cfg.seed);
          return py::dict(py::arg("steps") = s.steps, py::arg("first_loss") = s.first_loss,
                          py::arg("last_loss") = s.last_loss);
        },
        py::arg("model"), py::arg("policy"), py::arg("episodes"), py::arg("config"));
  m.def("train_rl",
        [](TransformerModel& model, FovPolicy& policy, const TransformerModel& ref,
           const std::vector<env::Episode>& episodes, const RunConfig& cfg) {
          const RlSummary s = train_rl(model, policy, ref, episodes, cfg.rl, cfg.rollout_decode(), cfg.seed);
          return py::dict(py::arg("steps") = s.steps, py::arg("acc_mean") = s.acc_mean,
                          py::arg("rho_tail") = s.rho_tail);
        },
        py::arg("model"), py::arg("policy"), py::arg("ref_model"), py::arg("episodes"), py::arg("config"));

  // ------------------------------------------------------------ persistence
  m.def("save_checkpoint", [](const std::filesystem::path& p, const TransformerModel& model, const FovPolicy& policy) {
    io::save_checkpoint(p, io::make_checkpoint(model, policy));
  });
  m.def("load_checkpoint", [](const std::filesystem::path& p) {
    const io::Checkpoint ck = io::load_checkpoint(p);
    return py::make_tuple(io::model_from(ck), io::policy_from(ck));
  });
  m.def("write_dataset", [](const std::filesystem::path& p, const std::vector<env::Episode>& eps) {
    io::write_dataset(p, io::Dataset{io::kDatasetVersion, eps, {}});
  });
  m.def("read_dataset", [](const std::filesystem::path& p) { return io::read_dataset(p).episodes; });
}
