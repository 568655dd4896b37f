#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rtpt/errors.hpp"
#include "rtpt/prompt.hpp"

namespace rtpt {

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 added to the gradient
};

/// Adam over the prompt context tokens. One state per tuned sample; the
/// usual single-step schedule makes the first update lr * g / (|g| + eps)
/// elementwise, i.e. a signed step of size lr.
class AdamState {
 public:
  explicit AdamState(const PromptContext& prompt)
      : m_(prompt.tokens.size()), v_(prompt.tokens.size()) {
    for (std::size_t i = 0; i < prompt.tokens.size(); ++i) {
      m_[i] = Eigen::VectorXd::Zero(prompt.tokens[i].size());
      v_[i] = Eigen::VectorXd::Zero(prompt.tokens[i].size());
    }
  }

  void step(PromptContext& prompt, const std::vector<Eigen::VectorXd>& grads,
            const AdamConfig& cfg) {
    if (grads.size() != prompt.tokens.size()) {
      throw InputError("gradient count does not match prompt token count");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t_);
    for (std::size_t i = 0; i < prompt.tokens.size(); ++i) {
      Eigen::VectorXd g = grads[i];
      if (cfg.weight_decay != 0.0) g += cfg.weight_decay * prompt.tokens[i];
      m_[i] = cfg.beta1 * m_[i] + (1.0 - cfg.beta1) * g;
      v_[i] = cfg.beta2 * v_[i] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      Eigen::VectorXd mhat = m_[i] / bc1;
      Eigen::VectorXd vhat = v_[i] / bc2;
      prompt.tokens[i] -=
          cfg.lr * (mhat.array() / (vhat.array().sqrt() + cfg.eps)).matrix();
    }
  }

 private:
  std::vector<Eigen::VectorXd> m_;
  std::vector<Eigen::VectorXd> v_;
  int t_ = 0;
};

}  // namespace rtpt
