#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "rtpt/backend.hpp"
#include "rtpt/errors.hpp"

namespace rtpt {

/// Zero-shot classification head: one unit-length text feature per class
/// plus the softmax temperature.
struct ClassHead {
  std::vector<std::string> class_names;
  Eigen::MatrixXd text_features;  // feature_dim x C, unit-norm columns
  double temperature = 0.01;

  int num_classes() const { return static_cast<int>(text_features.cols()); }
};

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

inline bool is_distribution(const Eigen::VectorXd& p, double tol = 1e-6) {
  if (p.size() == 0) return false;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p[i] >= -tol && p[i] <= 1.0 + tol)) return false;
    sum += p[i];
  }
  return std::abs(sum - 1.0) <= tol;
}

inline int argmax(const Eigen::VectorXd& v) {
  Eigen::Index idx = 0;
  v.maxCoeff(&idx);
  return static_cast<int>(idx);
}

/// Numerically stable softmax over similarity scores divided by temperature.
inline Eigen::VectorXd softmax_over_similarities(const Eigen::VectorXd& sims,
                                                 double temperature) {
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
  Eigen::VectorXd z = sims / temperature;
  const double zmax = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - zmax).exp();
  return e / e.sum();
}

inline Eigen::VectorXd cosine_similarities(const Eigen::VectorXd& f,
                                           const ClassHead& head) {
  const int c = head.num_classes();
  Eigen::VectorXd sims(c);
  for (int j = 0; j < c; ++j) sims[j] = cosine(f, head.text_features.col(j));
  return sims;
}

inline Eigen::VectorXd cosine_logits(const Eigen::VectorXd& f, const ClassHead& head) {
  if (head.temperature <= 0.0) throw ConfigError("temperature must be positive");
  return cosine_similarities(f, head) / head.temperature;
}

/// Probability vector over classes: softmax of cosine similarity over
/// temperature. Output sums to one.
inline Eigen::VectorXd classify(const Eigen::VectorXd& f, const ClassHead& head) {
  return softmax_over_similarities(cosine_similarities(f, head), head.temperature);
}

/// Builds the class head from the current prompt: one text feature per class
/// name, each encoded through G with the prompt context prepended.
inline ClassHead build_class_head(const EncoderBackend& backend,
                                  const PromptContext& prompt,
                                  const std::vector<std::string>& class_names,
                                  double temperature = 0.01) {
  if (class_names.empty()) throw InputError("class name list is empty");
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
  if (prompt.dim() != backend.info().token_dim) {
    throw ConfigError("prompt token dimension does not match backend");
  }
  ClassHead head;
  head.class_names = class_names;
  head.temperature = temperature;
  head.text_features.resize(backend.info().feature_dim,
                            static_cast<Eigen::Index>(class_names.size()));
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    head.text_features.col(static_cast<Eigen::Index>(c)) =
        backend.encode_text(prompt, class_names[c]);
  }
  return head;
}

}  // namespace rtpt
