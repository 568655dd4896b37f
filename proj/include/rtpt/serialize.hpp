#pragma once

#include <json.hpp>

#include "rtpt/attack.hpp"
#include "rtpt/augment.hpp"
#include "rtpt/backend_dense.hpp"
#include "rtpt/dataset.hpp"
#include "rtpt/inference.hpp"

// JSON bindings for every config struct that crosses a file boundary
// (run configs, attack-cache sidecars, frozen per-run snapshots).

namespace rtpt {

using nlohmann::json;

inline void to_json(json& j, const ImageShape& s) {
  j = json::array({s.channels, s.height, s.width});
}
inline void from_json(const json& j, ImageShape& s) {
  s.channels = j.at(0).get<int>();
  s.height = j.at(1).get<int>();
  s.width = j.at(2).get<int>();
}

inline void to_json(json& j, const DenseBackendConfig& c) {
  j = json{{"name", c.name},
           {"seed", c.seed},
           {"input_shape", c.input_shape},
           {"feature_dim", c.feature_dim},
           {"token_dim", c.token_dim},
           {"activation", c.activation == Activation::kTanh ? "tanh" : "identity"},
           {"normalize_image_features", c.normalize_image_features},
           {"weight_scale", c.weight_scale}};
}
inline void from_json(const json& j, DenseBackendConfig& c) {
  c.name = j.value("name", c.name);
  c.seed = j.value("seed", c.seed);
  if (j.contains("input_shape")) j.at("input_shape").get_to(c.input_shape);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.token_dim = j.value("token_dim", c.token_dim);
  const std::string act = j.value("activation", "tanh");
  if (act == "tanh") {
    c.activation = Activation::kTanh;
  } else if (act == "identity") {
    c.activation = Activation::kIdentity;
  } else {
    throw ConfigError("unknown activation: " + act);
  }
  c.normalize_image_features = j.value("normalize_image_features", c.normalize_image_features);
  c.weight_scale = j.value("weight_scale", c.weight_scale);
}

inline void to_json(json& j, const AugmentConfig& c) {
  j = json{{"n_views", c.n_views},
           {"crop_scale", c.crop_scale},
           {"crop_ratio", c.crop_ratio},
           {"flip_prob", c.flip_prob},
           {"mixture_width", c.mixture_width},
           {"chain_depth_min", c.chain_depth_min},
           {"chain_depth_max", c.chain_depth_max},
           {"severity", c.severity},
           {"mix_alpha", c.mix_alpha},
           {"ops", c.ops}};
}
inline void from_json(const json& j, AugmentConfig& c) {
  c.n_views = j.value("n_views", c.n_views);
  if (j.contains("crop_scale")) j.at("crop_scale").get_to(c.crop_scale);
  if (j.contains("crop_ratio")) j.at("crop_ratio").get_to(c.crop_ratio);
  c.flip_prob = j.value("flip_prob", c.flip_prob);
  c.mixture_width = j.value("mixture_width", c.mixture_width);
  c.chain_depth_min = j.value("chain_depth_min", c.chain_depth_min);
  c.chain_depth_max = j.value("chain_depth_max", c.chain_depth_max);
  c.severity = j.value("severity", c.severity);
  c.mix_alpha = j.value("mix_alpha", c.mix_alpha);
  if (j.contains("ops")) j.at("ops").get_to(c.ops);
}

inline void to_json(json& j, const AttackSpec& s) {
  j = json{{"family", family_name(s.family)},
           {"epsilon", s.epsilon},
           {"steps", s.steps},
           {"step_size", s.step_size},
           {"prompt_template", s.prompt_template},
           {"seed", s.seed},
           {"random_start", s.random_start},
           {"cw_kappa", s.cw_kappa},
           {"deepfool_overshoot", s.deepfool_overshoot},
           {"deepfool_max_iters", s.deepfool_max_iters}};
}
inline void from_json(const json& j, AttackSpec& s) {
  if (j.contains("family")) s.family = family_from_name(j.at("family").get<std::string>());
  s.epsilon = j.value("epsilon", s.epsilon);
  s.steps = j.value("steps", s.steps);
  s.step_size = j.value("step_size", s.step_size);
  s.prompt_template = j.value("prompt_template", s.prompt_template);
  s.seed = j.value("seed", s.seed);
  s.random_start = j.value("random_start", s.random_start);
  s.cw_kappa = j.value("cw_kappa", s.cw_kappa);
  s.deepfool_overshoot = j.value("deepfool_overshoot", s.deepfool_overshoot);
  s.deepfool_max_iters = j.value("deepfool_max_iters", s.deepfool_max_iters);
}

inline void to_json(json& j, const AdamConfig& c) {
  j = json{{"name", "adam"},
           {"lr", c.lr},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"eps", c.eps},
           {"weight_decay", c.weight_decay}};
}
inline void from_json(const json& j, AdamConfig& c) {
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
}

inline void to_json(json& j, const AblationFlags& f) {
  j = json{{"ensemble", f.ensemble}, {"weighted", f.weighted}, {"entmin", f.entmin}};
}
inline void from_json(const json& j, AblationFlags& f) {
  f.ensemble = j.value("ensemble", f.ensemble);
  f.weighted = j.value("weighted", f.weighted);
  f.entmin = j.value("entmin", f.entmin);
}

inline void to_json(json& j, const MethodConfig& c) {
  std::string method;
  switch (c.method) {
    case Method::kZeroshot: method = "zeroshot"; break;
    case Method::kEnsemble: method = "ensemble"; break;
    case Method::kTpt: method = "tpt"; break;
    case Method::kRtpt: method = "rtpt"; break;
    case Method::kAblation: method = "ablation"; break;
  }
  j = json{{"method", method},
           {"ablation", c.ablation},
           {"optimizer", c.optimizer},
           {"tune_steps", c.tune_steps},
           {"rho", c.rho},
           {"neighbors", c.neighbors},
           {"weight_temperature", c.weight_temperature},
           {"augment", c.augment},
           {"prompt_template", c.prompt_template},
           {"temperature", c.temperature}};
}
inline void from_json(const json& j, MethodConfig& c) {
  if (j.contains("method")) c.method = method_from_name(j.at("method").get<std::string>());
  if (j.contains("ablation")) j.at("ablation").get_to(c.ablation);
  if (j.contains("optimizer")) j.at("optimizer").get_to(c.optimizer);
  c.tune_steps = j.value("tune_steps", c.tune_steps);
  c.rho = j.value("rho", c.rho);
  c.neighbors = j.value("neighbors", c.neighbors);
  c.weight_temperature = j.value("weight_temperature", c.weight_temperature);
  if (j.contains("augment")) j.at("augment").get_to(c.augment);
  c.prompt_template = j.value("prompt_template", c.prompt_template);
  c.temperature = j.value("temperature", c.temperature);
}

inline void to_json(json& j, const ToyDatasetConfig& c) {
  j = json{{"seed", c.seed},
           {"n_samples", c.n_samples},
           {"num_classes", c.num_classes},
           {"noise", c.noise},
           {"prototype_steps", c.prototype_steps},
           {"prototype_step_size", c.prototype_step_size},
           {"prototype_grid", c.prototype_grid},
           {"prototype_margin", c.prototype_margin},
           {"prompt_template", c.prompt_template},
           {"temperature", c.temperature}};
}
inline void from_json(const json& j, ToyDatasetConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.n_samples = j.value("n_samples", c.n_samples);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.noise = j.value("noise", c.noise);
  c.prototype_steps = j.value("prototype_steps", c.prototype_steps);
  c.prototype_step_size = j.value("prototype_step_size", c.prototype_step_size);
  c.prototype_grid = j.value("prototype_grid", c.prototype_grid);
  c.prototype_margin = j.value("prototype_margin", c.prototype_margin);
  c.prompt_template = j.value("prompt_template", c.prompt_template);
  c.temperature = j.value("temperature", c.temperature);
}

}  // namespace rtpt
