#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rtpt/backend.hpp"
#include "rtpt/classifier.hpp"

namespace rtpt {

// Gradient plumbing between the classifier and the encoder VJP hooks.
// Logits are z_c = cos(f, g_c) / tau; callers supply dL/dz and get back
// gradients with respect to pixels or prompt tokens.

/// d cos(f, g) / d f for general (not necessarily unit) f.
inline Eigen::VectorXd cosine_grad_wrt_f(const Eigen::VectorXd& f,
                                         const Eigen::VectorXd& g) {
  const double fn = f.norm(), gn = g.norm();
  return g / (fn * gn) - f.dot(g) / (gn * fn * fn * fn) * f;
}

/// d cos(f, g) / d g.
inline Eigen::VectorXd cosine_grad_wrt_g(const Eigen::VectorXd& f,
                                         const Eigen::VectorXd& g) {
  return cosine_grad_wrt_f(g, f);
}

/// dL/df assembled from per-class dL/dz.
inline Eigen::VectorXd feature_grad_from_logit_grad(const Eigen::VectorXd& f,
                                                    const ClassHead& head,
                                                    const Eigen::VectorXd& dl_dz) {
  Eigen::VectorXd df = Eigen::VectorXd::Zero(f.size());
  for (int c = 0; c < head.num_classes(); ++c) {
    if (dl_dz[c] == 0.0) continue;
    df += dl_dz[c] * cosine_grad_wrt_f(f, head.text_features.col(c));
  }
  return df / head.temperature;
}

/// Gradient of a scalar loss with respect to input pixels, given dL/dz at
/// the classifier output for this image.
inline Image pixel_gradient(const EncoderBackend& backend, const ClassHead& head,
                            const Image& x, const Eigen::VectorXd& dl_dz) {
  Eigen::VectorXd f = backend.encode_image(x);
  return backend.encode_image_vjp(x, feature_grad_from_logit_grad(f, head, dl_dz));
}

/// Gradient of a scalar loss with respect to the prompt tokens. The loss may
/// touch several views; dl_dz[v] is dL/dz for view v whose (cached) image
/// feature is features[v]. Text features enter every view's logits, so the
/// per-class cotangents accumulate across views before the text VJP runs.
inline std::vector<Eigen::VectorXd> prompt_gradient(
    const EncoderBackend& backend, const PromptContext& prompt,
    const ClassHead& head, const std::vector<Eigen::VectorXd>& features,
    const std::vector<Eigen::VectorXd>& dl_dz) {
  std::vector<Eigen::VectorXd> grads(
      static_cast<std::size_t>(prompt.length()),
      Eigen::VectorXd::Zero(prompt.dim()));
  for (int c = 0; c < head.num_classes(); ++c) {
    Eigen::VectorXd dg = Eigen::VectorXd::Zero(head.text_features.rows());
    for (std::size_t v = 0; v < features.size(); ++v) {
      if (dl_dz[v][c] == 0.0) continue;
      dg += dl_dz[v][c] * cosine_grad_wrt_g(features[v], head.text_features.col(c));
    }
    dg /= head.temperature;
    if (dg.isZero(0.0)) continue;
    auto token_grads = backend.encode_text_vjp(prompt, head.class_names[c], dg);
    for (std::size_t t = 0; t < grads.size(); ++t) grads[t] += token_grads[t];
  }
  return grads;
}

/// dCE/dz for cross-entropy against a fixed label: p - onehot(label).
inline Eigen::VectorXd cross_entropy_logit_grad(const Eigen::VectorXd& probs,
                                                int label) {
  Eigen::VectorXd g = probs;
  g[label] -= 1.0;
  return g;
}

/// dH(p)/dz for Shannon entropy of p = softmax(z):
/// dH/dz_k = -p_k (log p_k + H(p)).
inline Eigen::VectorXd entropy_logit_grad(const Eigen::VectorXd& probs) {
  constexpr double kFloor = 1e-12;
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) h -= probs[i] * std::log(std::max(probs[i], kFloor));
  }
  Eigen::VectorXd g(probs.size());
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    const double logp = std::log(std::max(probs[k], kFloor));
    g[k] = -probs[k] * (logp + h);
  }
  return g;
}

/// dH(pbar)/dz^b for one member of a batch whose mean prediction is pbar:
/// dH/dz^b_k = -(1/B) p^b_k (log pbar_k - sum_c p^b_c log pbar_c).
inline Eigen::VectorXd marginal_entropy_logit_grad(const Eigen::VectorXd& probs_b,
                                                   const Eigen::VectorXd& pbar,
                                                   std::size_t batch_size) {
  constexpr double kFloor = 1e-12;
  Eigen::VectorXd logpbar(pbar.size());
  for (Eigen::Index i = 0; i < pbar.size(); ++i) {
    logpbar[i] = std::log(std::max(pbar[i], kFloor));
  }
  const double inner = probs_b.dot(logpbar);
  Eigen::VectorXd g(probs_b.size());
  for (Eigen::Index k = 0; k < probs_b.size(); ++k) {
    g[k] = -probs_b[k] * (logpbar[k] - inner) / static_cast<double>(batch_size);
  }
  return g;
}

}  // namespace rtpt
