#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rtpt/classifier.hpp"
#include "rtpt/errors.hpp"

namespace rtpt {

/// Full pairwise cosine similarity matrix of the view features.
/// Symmetric, unit diagonal for unit features, entries clamped to [-1, 1].
inline Eigen::MatrixXd similarity_matrix(const std::vector<Eigen::VectorXd>& features) {
  const auto n = static_cast<Eigen::Index>(features.size());
  if (n < 2) throw InputError("similarity matrix needs at least 2 features");
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = std::clamp(
          cosine(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]),
          -1.0, 1.0);
      s(i, j) = c;
      s(j, i) = c;
    }
  }
  return s;
}

/// Reliability of each view: mean similarity to its K most similar other
/// views (self excluded). Ties break toward the lower index.
inline Eigen::VectorXd reliability_scores(const Eigen::MatrixXd& s, int k) {
  const Eigen::Index n = s.rows();
  if (k < 1 || k > n - 1) throw ConfigError("neighbor count K must satisfy 1 <= K <= N");
  Eigen::VectorXd r(n);
  std::vector<int> candidates;
  candidates.reserve(static_cast<std::size_t>(n) - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    candidates.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) candidates.push_back(static_cast<int>(j));
    }
    std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end(),
                      [&](int a, int b) {
                        if (s(i, a) != s(i, b)) return s(i, a) > s(i, b);
                        return a < b;
                      });
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += s(i, candidates[static_cast<std::size_t>(j)]);
    r[i] = sum / static_cast<double>(k);
  }
  return r;
}

/// Softmax over reliabilities with temperature, max-subtracted for stability.
/// Strictly monotone: a higher reliability always gets a higher weight.
inline Eigen::VectorXd ensemble_weights(const Eigen::VectorXd& r, double temperature) {
  if (temperature <= 0.0) throw ConfigError("weight temperature must be positive");
  Eigen::VectorXd z = r / temperature;
  Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

/// Convex combination of per-view predictions.
inline Eigen::VectorXd weighted_ensemble(const std::vector<Eigen::VectorXd>& predictions,
                                         const Eigen::VectorXd& w) {
  if (predictions.empty() || static_cast<Eigen::Index>(predictions.size()) != w.size()) {
    throw InputError("prediction count does not match weight count");
  }
  if (std::abs(w.sum() - 1.0) > 1e-6 || w.minCoeff() < 0.0) {
    throw InputError("ensemble weights must be nonnegative and sum to 1");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(predictions[0].size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out += w[static_cast<Eigen::Index>(i)] * predictions[i];
  }
  return out;
}

/// Per-view reliabilities and the normalized ensembling weights derived from
/// them. K is clamped to the feasible range for small batches.
struct ReliabilityWeights {
  Eigen::VectorXd r;
  Eigen::VectorXd w;
  int k = 0;
  double temperature = 0.0;
};

inline ReliabilityWeights compute_reliability_weights(
    const std::vector<Eigen::VectorXd>& features, int k, double temperature) {
  ReliabilityWeights out;
  out.temperature = temperature;
  out.k = std::min<int>(k, static_cast<int>(features.size()) - 1);
  Eigen::MatrixXd s = similarity_matrix(features);
  out.r = reliability_scores(s, out.k);
  out.w = ensemble_weights(out.r, temperature);
  return out;
}

}  // namespace rtpt
