#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rtpt/classifier.hpp"
#include "rtpt/errors.hpp"

namespace rtpt {

// Probabilities are floored at 1e-12 inside logarithms; exact zeros
// contribute nothing (0 log 0 := 0).
inline constexpr double kLogFloor = 1e-12;

/// Shannon entropy -sum p ln p, natural log.
inline double shannon_entropy(const Eigen::VectorXd& p) {
  if (!is_distribution(p)) throw InputError("entropy input is not a distribution");
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(std::max(p[i], kLogFloor));
  }
  return std::max(h, 0.0);
}

/// KL(p || q) = sum p ln(p/q). A support violation (q_c = 0 with p_c > 0)
/// yields +infinity rather than an error.
inline double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (!is_distribution(p) || !is_distribution(q) || p.size() != q.size()) {
    throw InputError("kl inputs must be same-length distributions");
  }
  double d = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    d += p[i] * (std::log(std::max(p[i], kLogFloor)) - std::log(std::max(q[i], kLogFloor)));
  }
  return std::max(d, 0.0);
}

/// The low-entropy subset of a view batch used as the tuning objective's
/// support. Keeps the members' predictions alongside their original indices.
struct SelectedBatch {
  std::vector<int> indices;                  // ascending original indices
  double rho = 1.0;                          // selected fraction
  std::vector<Eigen::VectorXd> predictions;  // aligned with indices

  std::size_t size() const { return indices.size(); }
};

/// Keeps the floor(rho * n) lowest-entropy predictions (at least one).
/// Ties break toward the lower index.
inline SelectedBatch select_low_entropy(const std::vector<Eigen::VectorXd>& predictions,
                                        double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("selection fraction must be in (0, 1]");
  if (predictions.empty()) throw InputError("no predictions to select from");

  const std::size_t n = predictions.size();
  std::vector<std::pair<double, int>> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = {shannon_entropy(predictions[i]), static_cast<int>(i)};
  }
  std::sort(order.begin(), order.end());

  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(rho * static_cast<double>(n))));
  SelectedBatch batch;
  batch.rho = rho;
  batch.indices.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) batch.indices.push_back(order[i].second);
  std::sort(batch.indices.begin(), batch.indices.end());
  batch.predictions.reserve(keep);
  for (int idx : batch.indices) {
    batch.predictions.push_back(predictions[static_cast<std::size_t>(idx)]);
  }
  return batch;
}

/// Marginal entropy of a batch together with its exact decomposition into
/// mean pointwise entropy plus mean KL toward the mean prediction:
///   H(pbar) = mean_b H(p^b) + mean_b KL(p^b || pbar).
struct ObjectiveValue {
  double total = 0.0;                        // H(pbar)
  std::vector<double> per_view_entropy;      // H(p^b)
  std::vector<double> per_view_kl;           // KL(p^b || pbar)
  Eigen::VectorXd mean_prediction;           // pbar

  double mean_entropy() const {
    return std::accumulate(per_view_entropy.begin(), per_view_entropy.end(), 0.0) /
           static_cast<double>(per_view_entropy.size());
  }
  double mean_kl() const {
    return std::accumulate(per_view_kl.begin(), per_view_kl.end(), 0.0) /
           static_cast<double>(per_view_kl.size());
  }
};

inline ObjectiveValue marginal_entropy(const SelectedBatch& batch) {
  if (batch.predictions.empty()) throw InputError("marginal entropy of an empty batch");
  ObjectiveValue out;
  out.mean_prediction = Eigen::VectorXd::Zero(batch.predictions[0].size());
  for (const auto& p : batch.predictions) out.mean_prediction += p;
  out.mean_prediction /= static_cast<double>(batch.predictions.size());
  out.total = shannon_entropy(out.mean_prediction);
  out.per_view_entropy.reserve(batch.predictions.size());
  out.per_view_kl.reserve(batch.predictions.size());
  for (const auto& p : batch.predictions) {
    out.per_view_entropy.push_back(shannon_entropy(p));
    out.per_view_kl.push_back(kl_divergence(p, out.mean_prediction));
  }
  return out;
}

/// Mean of the members' Shannon entropies; the tuning loss that keeps the
/// entropy term of the marginal objective and drops the KL consistency term.
inline double pointwise_entropy(const SelectedBatch& batch) {
  if (batch.predictions.empty()) throw InputError("pointwise entropy of an empty batch");
  double sum = 0.0;
  for (const auto& p : batch.predictions) sum += shannon_entropy(p);
  return sum / static_cast<double>(batch.predictions.size());
}

}  // namespace rtpt
