#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <string>
#include <vector>

#include "rtpt/adam.hpp"
#include "rtpt/augment.hpp"
#include "rtpt/backend.hpp"
#include "rtpt/classifier.hpp"
#include "rtpt/entropy.hpp"
#include "rtpt/errors.hpp"
#include "rtpt/grad.hpp"
#include "rtpt/reliability.hpp"

namespace rtpt {

enum class Method { kZeroshot, kEnsemble, kTpt, kRtpt, kAblation };

/// The three composition axes of the method grid: pool predictions over
/// augmented views, weight that pool by reliability, and tune the prompt by
/// entropy minimization first.
struct AblationFlags {
  bool ensemble = false;
  bool weighted = false;
  bool entmin = false;

  bool operator==(const AblationFlags&) const = default;
};

inline Method method_from_name(const std::string& name) {
  if (name == "zeroshot") return Method::kZeroshot;
  if (name == "ensemble") return Method::kEnsemble;
  if (name == "tpt") return Method::kTpt;
  if (name == "rtpt") return Method::kRtpt;
  if (name == "ablation") return Method::kAblation;
  throw ConfigError("unknown method: " + name);
}

struct MethodConfig {
  Method method = Method::kRtpt;
  AblationFlags ablation;  // consulted only when method == kAblation

  AdamConfig optimizer;  // lr 0.005, single step by default
  int tune_steps = 1;
  double rho = 0.1;                  // low-entropy selection fraction
  int neighbors = 20;                // K for reliability
  double weight_temperature = 0.1;   // softmax temperature over reliabilities
  AugmentConfig augment;             // carries n_views (default 63 -> batch 64)
  std::string prompt_template = "a photo of a";
  double temperature = 0.01;         // classifier tau

  AblationFlags flags() const {
    switch (method) {
      case Method::kZeroshot: return {false, false, false};
      case Method::kEnsemble: return {true, false, false};
      case Method::kTpt: return {false, false, true};
      case Method::kRtpt: return {true, true, true};
      case Method::kAblation: return ablation;
    }
    return {};
  }

  std::string name() const {
    switch (method) {
      case Method::kZeroshot: return "zeroshot";
      case Method::kEnsemble: return "ensemble";
      case Method::kTpt: return "tpt";
      case Method::kRtpt: return "rtpt";
      case Method::kAblation: {
        const AblationFlags f = ablation;
        std::string s = "ablation-";
        s += f.ensemble ? '1' : '0';
        s += f.weighted ? '1' : '0';
        s += f.entmin ? '1' : '0';
        return s;
      }
    }
    return "?";
  }

  static MethodConfig named(Method m) {
    MethodConfig cfg;
    cfg.method = m;
    return cfg;
  }
};

struct InferenceOutcome {
  std::string sample_id;
  int predicted_class = -1;
  Eigen::VectorXd prediction;
  Eigen::VectorXd view_weights;         // empty unless an ensemble was formed
  std::vector<double> objective_trace;  // tuning loss before/after each step
  double wall_time_ms = 0.0;
};

namespace detail {

/// dL/dz for every selected view under the configured tuning objective.
/// The marginal objective only arises on the entmin-without-ensemble row,
/// which reproduces plain test-time prompt tuning; every other tuned row
/// uses the pointwise objective.
inline std::vector<Eigen::VectorXd> tuning_logit_grads(
    const std::vector<Eigen::VectorXd>& selected_preds, bool marginal_objective) {
  const std::size_t b = selected_preds.size();
  std::vector<Eigen::VectorXd> grads;
  grads.reserve(b);
  if (marginal_objective) {
    Eigen::VectorXd pbar = Eigen::VectorXd::Zero(selected_preds[0].size());
    for (const auto& p : selected_preds) pbar += p;
    pbar /= static_cast<double>(b);
    for (const auto& p : selected_preds) {
      grads.push_back(marginal_entropy_logit_grad(p, pbar, b));
    }
  } else {
    for (const auto& p : selected_preds) {
      grads.push_back(entropy_logit_grad(p) / static_cast<double>(b));
    }
  }
  return grads;
}

inline double tuning_loss(const SelectedBatch& batch, bool marginal_objective) {
  return marginal_objective ? marginal_entropy(batch).total : pointwise_entropy(batch);
}

}  // namespace detail

/// Runs one test sample through the configured method:
///   1. augment into N+1 views (skipped when no stage needs them),
///   2. classify every view with the freshly initialized head,
///   3. select the low-entropy subset,
///   4. take the optimizer steps on the prompt against the tuning objective,
///   5. re-classify all views with the tuned head,
///   6. compute reliability weights from the cached image features,
///   7. pool the predictions.
/// The prompt starts from the template initialization on every call; nothing
/// about a previous sample can leak in.
inline InferenceOutcome run_inference(const EncoderBackend& backend,
                                      const std::vector<std::string>& class_names,
                                      const Image& x, const MethodConfig& cfg,
                                      std::uint64_t seed, std::string sample_id = "") {
  const auto t0 = std::chrono::steady_clock::now();
  const AblationFlags flags = cfg.flags();
  if (flags.weighted && !flags.ensemble) {
    throw ConfigError("weighted ensembling requires the ensemble stage");
  }

  InferenceOutcome out;
  out.sample_id = std::move(sample_id);

  const bool needs_views = flags.ensemble || flags.entmin;
  ViewBatch batch;
  if (needs_views) {
    batch = augment_views(x, cfg.augment, seed, out.sample_id);
  } else {
    batch.views.push_back(x);
    batch.seed = seed;
  }
  const std::size_t n_total = batch.views.size();

  // Image features are computed once and reused; prompt tuning only moves
  // the text side.
  std::vector<Eigen::VectorXd> features;
  features.reserve(n_total);
  for (const auto& view : batch.views) features.push_back(backend.encode_image(view));

  PromptContext prompt = backend.init_prompt(cfg.prompt_template);
  ClassHead head = build_class_head(backend, prompt, class_names, cfg.temperature);

  std::vector<Eigen::VectorXd> preds;
  preds.reserve(n_total);
  for (const auto& f : features) preds.push_back(classify(f, head));

  const bool tune = flags.entmin && cfg.optimizer.lr != 0.0 && cfg.tune_steps >= 1;
  if (tune) {
    const bool marginal_objective = !flags.ensemble;
    SelectedBatch selected = select_low_entropy(preds, cfg.rho);
    std::vector<Eigen::VectorXd> sel_features;
    sel_features.reserve(selected.size());
    for (int idx : selected.indices) {
      sel_features.push_back(features[static_cast<std::size_t>(idx)]);
    }

    AdamState adam(prompt);
    for (int step = 0; step < cfg.tune_steps; ++step) {
      out.objective_trace.push_back(detail::tuning_loss(selected, marginal_objective));
      auto dl_dz = detail::tuning_logit_grads(selected.predictions, marginal_objective);
      auto grads = prompt_gradient(backend, prompt, head, sel_features, dl_dz);
      adam.step(prompt, grads, cfg.optimizer);
      head = build_class_head(backend, prompt, class_names, cfg.temperature);
      for (std::size_t i = 0; i < selected.predictions.size(); ++i) {
        selected.predictions[i] = classify(sel_features[i], head);
      }
    }
    out.objective_trace.push_back(detail::tuning_loss(selected, marginal_objective));

    for (std::size_t i = 0; i < n_total; ++i) preds[i] = classify(features[i], head);
  }

  if (flags.ensemble) {
    Eigen::VectorXd w;
    if (flags.weighted && n_total >= 2) {
      auto rw = compute_reliability_weights(features, cfg.neighbors, cfg.weight_temperature);
      w = rw.w;
    } else {
      w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_total),
                                    1.0 / static_cast<double>(n_total));
    }
    out.view_weights = w;
    out.prediction = weighted_ensemble(preds, w);
  } else {
    out.prediction = preds[0];
  }
  out.predicted_class = argmax(out.prediction);

  const auto t1 = std::chrono::steady_clock::now();
  out.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

inline InferenceOutcome zeroshot_infer(const EncoderBackend& b,
                                       const std::vector<std::string>& names,
                                       const Image& x, MethodConfig cfg,
                                       std::uint64_t seed, std::string id = "") {
  cfg.method = Method::kZeroshot;
  return run_inference(b, names, x, cfg, seed, std::move(id));
}

inline InferenceOutcome ensemble_infer(const EncoderBackend& b,
                                       const std::vector<std::string>& names,
                                       const Image& x, MethodConfig cfg,
                                       std::uint64_t seed, std::string id = "") {
  cfg.method = Method::kEnsemble;
  return run_inference(b, names, x, cfg, seed, std::move(id));
}

inline InferenceOutcome tpt_infer(const EncoderBackend& b,
                                  const std::vector<std::string>& names, const Image& x,
                                  MethodConfig cfg, std::uint64_t seed,
                                  std::string id = "") {
  cfg.method = Method::kTpt;
  return run_inference(b, names, x, cfg, seed, std::move(id));
}

inline InferenceOutcome rtpt_infer(const EncoderBackend& b,
                                   const std::vector<std::string>& names, const Image& x,
                                   MethodConfig cfg, std::uint64_t seed,
                                   std::string id = "") {
  cfg.method = Method::kRtpt;
  return run_inference(b, names, x, cfg, seed, std::move(id));
}

inline InferenceOutcome ablation_infer(const EncoderBackend& b,
                                       const std::vector<std::string>& names,
                                       const Image& x, MethodConfig cfg,
                                       AblationFlags flags, std::uint64_t seed,
                                       std::string id = "") {
  cfg.method = Method::kAblation;
  cfg.ablation = flags;
  return run_inference(b, names, x, cfg, seed, std::move(id));
}

}  // namespace rtpt
