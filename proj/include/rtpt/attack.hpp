#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rtpt/classifier.hpp"
#include "rtpt/errors.hpp"
#include "rtpt/grad.hpp"
#include "rtpt/image.hpp"
#include "rtpt/rng.hpp"

namespace rtpt {

enum class AttackFamily { kFgsm, kPgd, kCw, kDeepfool };

inline const char* family_name(AttackFamily f) {
  switch (f) {
    case AttackFamily::kFgsm: return "fgsm";
    case AttackFamily::kPgd: return "pgd";
    case AttackFamily::kCw: return "cw";
    case AttackFamily::kDeepfool: return "deepfool";
  }
  return "?";
}

inline AttackFamily family_from_name(const std::string& name) {
  if (name == "fgsm") return AttackFamily::kFgsm;
  if (name == "pgd") return AttackFamily::kPgd;
  if (name == "cw") return AttackFamily::kCw;
  if (name == "deepfool") return AttackFamily::kDeepfool;
  throw ConfigError("unknown attack family: " + name);
}

/// Attack configuration. Epsilon and step size are expressed in /255 pixel
/// units against inputs in [0, 1], so epsilon = 1.0 bounds the perturbation
/// by 1/255.
struct AttackSpec {
  AttackFamily family = AttackFamily::kPgd;
  double epsilon = 1.0;
  int steps = 7;
  double step_size = 0.0;  // 0 -> 2 * eps / steps, never below eps / steps
  std::string prompt_template = "a photo of a []";
  std::uint64_t seed = 0;
  bool random_start = true;  // iterative families only
  double cw_kappa = 0.0;
  double deepfool_overshoot = 0.02;
  int deepfool_max_iters = 50;

  double eps_pixels() const { return epsilon / 255.0; }
  double step_pixels() const {
    if (steps < 1) throw ConfigError("attack step count must be >= 1");
    const double auto_step = std::max(2.0 * epsilon / steps, epsilon / steps);
    return (step_size > 0.0 ? step_size : auto_step) / 255.0;
  }

  void validate() const {
    if (epsilon < 0.0) throw ConfigError("attack epsilon must be >= 0");
    if (steps < 1) throw ConfigError("attack step count must be >= 1");
    if (step_size < 0.0) throw ConfigError("attack step size must be > 0");
  }

  /// Canonical experiment presets.
  static AttackSpec preset(const std::string& name) {
    AttackSpec s;
    if (name == "paper-rn50") {
      s.family = AttackFamily::kPgd;
      s.epsilon = 1.0;
      s.steps = 7;
    } else if (name == "paper-vit") {
      s.family = AttackFamily::kPgd;
      s.epsilon = 4.0;
      s.steps = 100;
    } else {
      throw ConfigError("unknown attack preset: " + name);
    }
    return s;
  }
};

struct AdversarialRecord {
  std::string sample_id;
  int clean_label = -1;
  Image image;
  AttackSpec spec;
  double achieved_linf = 0.0;
  int attacker_prediction = -1;
  std::uint64_t checksum = 0;
  std::vector<double> loss_trace;  // pgd only: CE after each projected step
};

namespace detail {

/// Projects onto the L-inf ball of radius eps around x, intersected with
/// the valid pixel range.
inline void project(Image& adv, const Image& x, double eps) {
  for (std::size_t i = 0; i < adv.data().size(); ++i) {
    const double lo = std::max(0.0, x.data()[i] - eps);
    const double hi = std::min(1.0, x.data()[i] + eps);
    adv.data()[i] = std::clamp(adv.data()[i], lo, hi);
  }
}

inline void random_start_in_ball(Image& adv, double eps, std::uint64_t seed) {
  auto rng = make_rng(seed, 0xadf0);
  std::uniform_real_distribution<double> noise(-eps, eps);
  for (double& v : adv.data()) v += noise(rng);
}

inline AdversarialRecord finish(const EncoderBackend& backend, const ClassHead& head,
                                const Image& x, Image adv, int label,
                                const AttackSpec& spec, std::string sample_id) {
  AdversarialRecord rec;
  rec.sample_id = std::move(sample_id);
  rec.clean_label = label;
  rec.spec = spec;
  rec.achieved_linf = linf_distance(adv, x);
  rec.attacker_prediction = argmax(classify(backend.encode_image(adv), head));
  rec.checksum = adv.checksum();
  rec.image = std::move(adv);
  return rec;
}

/// Gradient of (z_a - z_b) with respect to pixels.
inline Image logit_diff_pixel_grad(const EncoderBackend& backend, const ClassHead& head,
                                   const Image& x, int a, int b) {
  Eigen::VectorXd dl_dz = Eigen::VectorXd::Zero(head.num_classes());
  dl_dz[a] = 1.0;
  dl_dz[b] = -1.0;
  return pixel_gradient(backend, head, x, dl_dz);
}

}  // namespace detail

/// Single signed-gradient step on cross-entropy, clipped to the budget.
inline AdversarialRecord fgsm(const EncoderBackend& backend, const ClassHead& head,
                              const Image& x, int label, const AttackSpec& spec,
                              std::string sample_id = "") {
  spec.validate();
  const double eps = spec.eps_pixels();
  if (eps == 0.0) return detail::finish(backend, head, x, x, label, spec, std::move(sample_id));
  Eigen::VectorXd probs = classify(backend.encode_image(x), head);
  Image grad = pixel_gradient(backend, head, x, cross_entropy_logit_grad(probs, label));
  Image adv = x;
  for (std::size_t i = 0; i < adv.data().size(); ++i) {
    const double g = grad.data()[i];
    adv.data()[i] += eps * (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
  }
  adv.clamp01();
  return detail::finish(backend, head, x, std::move(adv), label, spec, std::move(sample_id));
}

/// Iterated signed-gradient ascent on cross-entropy with projection onto the
/// budget ball and pixel range after every step.
inline AdversarialRecord pgd(const EncoderBackend& backend, const ClassHead& head,
                             const Image& x, int label, const AttackSpec& spec,
                             std::string sample_id = "") {
  spec.validate();
  const double eps = spec.eps_pixels();
  if (eps == 0.0) return detail::finish(backend, head, x, x, label, spec, std::move(sample_id));
  const double alpha = spec.step_pixels();
  Image adv = x;
  if (spec.random_start) {
    detail::random_start_in_ball(adv, eps, spec.seed ^ fnv1a64(sample_id));
    detail::project(adv, x, eps);
  }
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(spec.steps) + 1);
  for (int step = 0; step < spec.steps; ++step) {
    Eigen::VectorXd probs = classify(backend.encode_image(adv), head);
    trace.push_back(-std::log(std::max(probs[label], 1e-300)));
    Image grad = pixel_gradient(backend, head, adv, cross_entropy_logit_grad(probs, label));
    for (std::size_t i = 0; i < adv.data().size(); ++i) {
      const double g = grad.data()[i];
      adv.data()[i] += alpha * (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
    }
    detail::project(adv, x, eps);
  }
  {
    Eigen::VectorXd probs = classify(backend.encode_image(adv), head);
    trace.push_back(-std::log(std::max(probs[label], 1e-300)));
  }
  AdversarialRecord rec =
      detail::finish(backend, head, x, std::move(adv), label, spec, std::move(sample_id));
  rec.loss_trace = std::move(trace);
  return rec;
}

/// Margin attack under the same projection: signed descent on
/// max(z_label - max_{c != label} z_c, -kappa) until the margin is broken.
inline AdversarialRecord cw_margin(const EncoderBackend& backend, const ClassHead& head,
                                   const Image& x, int label, const AttackSpec& spec,
                                   std::string sample_id = "") {
  spec.validate();
  const double eps = spec.eps_pixels();
  if (eps == 0.0) return detail::finish(backend, head, x, x, label, spec, std::move(sample_id));
  const double alpha = spec.step_pixels();
  Image adv = x;
  if (spec.random_start) {
    detail::random_start_in_ball(adv, eps, spec.seed ^ fnv1a64(sample_id));
    detail::project(adv, x, eps);
  }
  for (int step = 0; step < spec.steps; ++step) {
    Eigen::VectorXd z = cosine_logits(backend.encode_image(adv), head);
    int runner_up = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < head.num_classes(); ++c) {
      if (c != label && z[c] > best) {
        best = z[c];
        runner_up = c;
      }
    }
    if (z[label] - best <= -spec.cw_kappa) break;  // margin already broken
    Image grad = detail::logit_diff_pixel_grad(backend, head, adv, label, runner_up);
    for (std::size_t i = 0; i < adv.data().size(); ++i) {
      const double g = grad.data()[i];
      adv.data()[i] -= alpha * (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
    }
    detail::project(adv, x, eps);
  }
  return detail::finish(backend, head, x, std::move(adv), label, spec, std::move(sample_id));
}

/// Minimal-perturbation steps toward the nearest linearized class boundary
/// (L-inf geometry), then one final projection onto the budget.
inline AdversarialRecord deepfool(const EncoderBackend& backend, const ClassHead& head,
                                  const Image& x, int label, const AttackSpec& spec,
                                  std::string sample_id = "") {
  spec.validate();
  const double eps = spec.eps_pixels();
  if (eps == 0.0) return detail::finish(backend, head, x, x, label, spec, std::move(sample_id));
  Image adv = x;
  const int classes = head.num_classes();
  for (int iter = 0; iter < spec.deepfool_max_iters; ++iter) {
    Eigen::VectorXd z = cosine_logits(backend.encode_image(adv), head);
    if (argmax(z) != label) break;  // includes already-misclassified inputs
    double best_ratio = std::numeric_limits<double>::infinity();
    Image best_w;
    double best_f = 0.0, best_l1 = 0.0;
    for (int c = 0; c < classes; ++c) {
      if (c == label) continue;
      Image w = detail::logit_diff_pixel_grad(backend, head, adv, c, label);
      double l1 = 0.0;
      for (double v : w.data()) l1 += std::abs(v);
      if (l1 < 1e-12) continue;
      const double f = z[c] - z[label];  // negative while still classified as label
      const double ratio = std::abs(f) / l1;
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best_w = std::move(w);
        best_f = f;
        best_l1 = l1;
      }
    }
    if (!std::isfinite(best_ratio)) break;
    const double scaled =
        (std::abs(best_f) + 1e-6) / best_l1 * (1.0 + spec.deepfool_overshoot);
    for (std::size_t i = 0; i < adv.data().size(); ++i) {
      const double g = best_w.data()[i];
      adv.data()[i] += scaled * (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0));
    }
    adv.clamp01();  // keep iterates in the valid pixel box; budget applies at the end
  }
  detail::project(adv, x, eps);
  return detail::finish(backend, head, x, std::move(adv), label, spec, std::move(sample_id));
}

/// Dispatch on the spec's family.
inline AdversarialRecord run_attack(const EncoderBackend& backend, const ClassHead& head,
                                    const Image& x, int label, const AttackSpec& spec,
                                    std::string sample_id = "") {
  require_valid_input_image(x, backend.info().input_shape);
  switch (spec.family) {
    case AttackFamily::kFgsm: return fgsm(backend, head, x, label, spec, std::move(sample_id));
    case AttackFamily::kPgd: return pgd(backend, head, x, label, spec, std::move(sample_id));
    case AttackFamily::kCw: return cw_margin(backend, head, x, label, spec, std::move(sample_id));
    case AttackFamily::kDeepfool: return deepfool(backend, head, x, label, spec, std::move(sample_id));
  }
  throw ConfigError("unknown attack family");
}

}  // namespace rtpt
