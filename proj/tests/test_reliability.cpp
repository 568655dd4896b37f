#include "rtpt/reliability.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rtpt/rng.hpp"

namespace rtpt {
namespace {

Eigen::VectorXd unit_random(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  v.normalize();
  return v;
}

Eigen::VectorXd random_distribution(std::mt19937_64& rng, int classes) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd v(classes);
  double sum = 0.0;
  for (int i = 0; i < classes; ++i) {
    v[i] = -std::log(std::max(unit(rng), 1e-300));
    sum += v[i];
  }
  return v / sum;
}

TEST(SimilarityMatrix, IdenticalFeaturesGiveAllOnes) {
  Eigen::VectorXd f(3);
  f << 1.0, 0.0, 0.0;
  std::vector<Eigen::VectorXd> fs(4, f);
  const Eigen::MatrixXd s = similarity_matrix(fs);
  EXPECT_TRUE(s.isApproxToConstant(1.0, 1e-12));
}

TEST(SimilarityMatrix, OrthogonalFeaturesGiveIdentity) {
  std::vector<Eigen::VectorXd> fs;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(3);
    f[i] = 1.0;
    fs.push_back(f);
  }
  const Eigen::MatrixXd s = similarity_matrix(fs);
  EXPECT_TRUE(s.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-12));
}

TEST(SimilarityMatrix, MatchesPairwiseDotProductOracle) {
  auto rng = make_rng(21);
  std::vector<Eigen::VectorXd> fs;
  for (int i = 0; i < 65; ++i) fs.push_back(unit_random(rng, 32));
  const Eigen::MatrixXd s = similarity_matrix(fs);
  for (int i = 0; i < 65; ++i) {
    for (int j = 0; j < 65; ++j) {
      double dot = 0.0;  // explicit double loop, no library path
      for (int d = 0; d < 32; ++d) {
        dot += fs[static_cast<std::size_t>(i)][d] * fs[static_cast<std::size_t>(j)][d];
      }
      EXPECT_NEAR(s(i, j), std::clamp(dot, -1.0, 1.0), 1e-9);
    }
  }
  EXPECT_TRUE(s.isApprox(s.transpose(), 1e-9));
  for (int i = 0; i < 65; ++i) EXPECT_NEAR(s(i, i), 1.0, 1e-6);
}

TEST(SimilarityMatrix, NeedsAtLeastTwoFeatures) {
  std::vector<Eigen::VectorXd> one{Eigen::VectorXd::Ones(4).normalized()};
  EXPECT_THROW(similarity_matrix(one), InputError);
}

TEST(ReliabilityScores, ClosedFormThreeFeatures) {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  const Eigen::MatrixXd s = similarity_matrix({a, a, b});
  const Eigen::VectorXd r = reliability_scores(s, 1);
  EXPECT_NEAR(r[0], 1.0, 1e-12);
  EXPECT_NEAR(r[1], 1.0, 1e-12);
  EXPECT_NEAR(r[2], 0.0, 1e-12);  // tie between the two distant views -> index 0
}

TEST(ReliabilityScores, FullNeighborhoodIsRowMeanExcludingSelf) {
  auto rng = make_rng(22);
  std::vector<Eigen::VectorXd> fs;
  for (int i = 0; i < 9; ++i) fs.push_back(unit_random(rng, 8));
  const Eigen::MatrixXd s = similarity_matrix(fs);
  const Eigen::VectorXd r = reliability_scores(s, 8);
  for (int i = 0; i < 9; ++i) {
    EXPECT_NEAR(r[i], (s.row(i).sum() - s(i, i)) / 8.0, 1e-12);
  }
}

TEST(ReliabilityScores, MatchesSortThenAverageOracle) {
  auto rng = make_rng(23);
  std::vector<Eigen::VectorXd> fs;
  for (int i = 0; i < 65; ++i) fs.push_back(unit_random(rng, 16));
  const Eigen::MatrixXd s = similarity_matrix(fs);
  const int k = 20;
  const Eigen::VectorXd r = reliability_scores(s, k);
  for (int i = 0; i < 65; ++i) {
    std::vector<double> sims;
    for (int j = 0; j < 65; ++j) {
      if (j != i) sims.push_back(s(i, j));
    }
    std::sort(sims.begin(), sims.end(), std::greater<double>());
    double mean = 0.0;
    for (int j = 0; j < k; ++j) mean += sims[static_cast<std::size_t>(j)];
    EXPECT_NEAR(r[i], mean / k, 1e-9);
  }
}

TEST(ReliabilityScores, RejectsOutOfRangeNeighborCounts) {
  auto rng = make_rng(24);
  std::vector<Eigen::VectorXd> fs;
  for (int i = 0; i < 5; ++i) fs.push_back(unit_random(rng, 8));
  const Eigen::MatrixXd s = similarity_matrix(fs);
  EXPECT_THROW(reliability_scores(s, 0), ConfigError);
  EXPECT_THROW(reliability_scores(s, 5), ConfigError);
  EXPECT_NO_THROW(reliability_scores(s, 4));
}

TEST(ReliabilityScores, RelabelingEquivariance) {
  auto rng = make_rng(25);
  std::vector<Eigen::VectorXd> fs;
  for (int i = 0; i < 10; ++i) fs.push_back(unit_random(rng, 8));
  const Eigen::VectorXd r = reliability_scores(similarity_matrix(fs), 3);

  std::vector<int> perm(fs.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Eigen::VectorXd> permuted(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    permuted[static_cast<std::size_t>(perm[i])] = fs[i];
  }
  const Eigen::VectorXd rp = reliability_scores(similarity_matrix(permuted), 3);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    EXPECT_NEAR(rp[perm[i]], r[static_cast<Eigen::Index>(i)], 1e-12);
  }
}

TEST(EnsembleWeights, EqualReliabilitiesGiveUniform) {
  const Eigen::VectorXd w = ensemble_weights(Eigen::VectorXd::Constant(65, 0.4), 0.01);
  EXPECT_TRUE(w.isApproxToConstant(1.0 / 65.0, 1e-12));
}

TEST(EnsembleWeights, ExtremeGapSaturates) {
  Eigen::VectorXd r(2);
  r << 1.0, 0.0;
  const Eigen::VectorXd w = ensemble_weights(r, 0.01);
  EXPECT_NEAR(w[0], 1.0, 1e-12);
}

TEST(EnsembleWeights, MatchesDirectEvaluationOracle) {
  auto rng = make_rng(26);
  std::normal_distribution<double> normal(0.5, 0.2);
  Eigen::VectorXd r(33);
  for (int i = 0; i < 33; ++i) r[i] = normal(rng);
  const double t = 0.1;
  const Eigen::VectorXd w = ensemble_weights(r, t);
  long double denom = 0.0;
  for (int i = 0; i < 33; ++i) denom += std::exp(static_cast<long double>(r[i]) / t);
  for (int i = 0; i < 33; ++i) {
    EXPECT_NEAR(w[i], static_cast<double>(std::exp(static_cast<long double>(r[i]) / t) / denom),
                1e-12);
  }
}

TEST(EnsembleWeights, StrictlyMonotoneInReliability) {
  auto rng = make_rng(27);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd r(20);
  for (int i = 0; i < 20; ++i) r[i] = normal(rng);
  const Eigen::VectorXd w = ensemble_weights(r, 0.05);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      if (r[i] > r[j]) EXPECT_GT(w[i], w[j]);
    }
  }
}

TEST(EnsembleWeights, RejectsNonPositiveTemperature) {
  EXPECT_THROW(ensemble_weights(Eigen::VectorXd::Ones(3), 0.0), ConfigError);
  EXPECT_THROW(ensemble_weights(Eigen::VectorXd::Ones(3), -1.0), ConfigError);
}

TEST(WeightedEnsemble, OneHotWeightSelectsThatPrediction) {
  auto rng = make_rng(28);
  std::vector<Eigen::VectorXd> preds;
  for (int i = 0; i < 5; ++i) preds.push_back(random_distribution(rng, 7));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(5);
  w[3] = 1.0;
  const Eigen::VectorXd out = weighted_ensemble(preds, w);
  EXPECT_TRUE(out.isApprox(preds[3], 0.0));
}

TEST(WeightedEnsemble, UniformWeightIsArithmeticMean) {
  auto rng = make_rng(29);
  std::vector<Eigen::VectorXd> preds;
  for (int i = 0; i < 8; ++i) preds.push_back(random_distribution(rng, 4));
  const Eigen::VectorXd out =
      weighted_ensemble(preds, Eigen::VectorXd::Constant(8, 1.0 / 8.0));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (const auto& p : preds) mean += p / 8.0;
  EXPECT_TRUE(out.isApprox(mean, 1e-12));
}

TEST(WeightedEnsemble, MatchesElementwiseOracleAndStaysValid) {
  auto rng = make_rng(30);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    const int c = 2 + static_cast<int>(rng() % 5);
    std::vector<Eigen::VectorXd> preds;
    for (int i = 0; i < n; ++i) preds.push_back(random_distribution(rng, c));
    Eigen::VectorXd raw(n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) raw[i] = unit(rng);
    const Eigen::VectorXd w = raw / raw.sum();
    const Eigen::VectorXd out = weighted_ensemble(preds, w);
    ASSERT_TRUE(is_distribution(out, 1e-6));
    if (trial % 100 == 0) {
      for (int k = 0; k < c; ++k) {
        long double expect = 0.0;
        for (int i = 0; i < n; ++i) expect += static_cast<long double>(w[i]) * preds[static_cast<std::size_t>(i)][k];
        EXPECT_NEAR(out[k], static_cast<double>(expect), 1e-12);
      }
    }
  }
}

TEST(WeightedEnsemble, RejectsMismatchedLengths) {
  std::vector<Eigen::VectorXd> preds(3, Eigen::VectorXd::Constant(2, 0.5));
  EXPECT_THROW(weighted_ensemble(preds, Eigen::VectorXd::Constant(4, 0.25)), InputError);
  EXPECT_THROW(weighted_ensemble(preds, Eigen::VectorXd::Constant(3, 0.5)), InputError);
}

// A tight cluster plus one near-orthogonal outlier: the outlier must land
// below the uniform weight for every K and temperature in the sweep.
TEST(OutlierDownWeighting, OutlierFallsBelowUniform) {
  auto rng = make_rng(31);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd center = unit_random(rng, 32);
    Eigen::VectorXd ortho = unit_random(rng, 32);
    ortho -= ortho.dot(center) * center;
    ortho.normalize();

    std::vector<Eigen::VectorXd> fs;
    fs.push_back((0.995 * ortho + 0.1 * unit_random(rng, 32)).normalized());  // outlier at 0
    for (int i = 0; i < 64; ++i) {
      Eigen::VectorXd f = center;
      for (int d = 0; d < 32; ++d) f[d] += jitter(rng);
      fs.push_back(f.normalized());
    }
    for (int k : {10, 15, 20, 25, 30}) {
      for (double t : {0.01, 0.05, 0.1}) {
        const auto rw = compute_reliability_weights(fs, k, t);
        EXPECT_LT(rw.w[0], 1.0 / 65.0)
            << "outlier not down-weighted at K=" << k << " T=" << t;
      }
    }
  }
}

}  // namespace
}  // namespace rtpt
