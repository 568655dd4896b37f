#include "rtpt/augment.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace rtpt {
namespace {

using testutil::random_image;

const ImageShape kShape{3, 16, 16};

TEST(AugmentViews, ZeroViewsKeepsOnlyOriginal) {
  auto rng = make_rng(60);
  const Image x = random_image(rng, kShape);
  AugmentConfig cfg;
  cfg.n_views = 0;
  const ViewBatch batch = augment_views(x, cfg, 123);
  ASSERT_EQ(batch.views.size(), 1u);
  EXPECT_TRUE(batch.views[0].bitwise_equal(x));
  EXPECT_EQ(batch.n_views(), 0);
}

TEST(AugmentViews, DeterministicInImageConfigSeed) {
  auto rng = make_rng(61);
  const Image x = random_image(rng, kShape);
  AugmentConfig cfg;
  cfg.n_views = 16;
  const ViewBatch a = augment_views(x, cfg, 99);
  const ViewBatch b = augment_views(x, cfg, 99);
  ASSERT_EQ(a.views.size(), b.views.size());
  for (std::size_t i = 0; i < a.views.size(); ++i) {
    EXPECT_TRUE(a.views[i].bitwise_equal(b.views[i])) << "view " << i;
  }
}

TEST(AugmentViews, FullBatchStaysInRange) {
  auto rng = make_rng(62);
  const Image x = random_image(rng, kShape, 0.0, 1.0);
  AugmentConfig cfg;
  cfg.n_views = 63;
  const ViewBatch batch = augment_views(x, cfg, 7);
  ASSERT_EQ(batch.views.size(), 64u);
  for (const auto& view : batch.views) {
    ASSERT_EQ(view.shape(), kShape);
    for (double v : view.data()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(AugmentViews, OriginalAtIndexZeroIsUntouched) {
  auto rng = make_rng(63);
  const Image x = random_image(rng, kShape);
  const Image copy = x;
  AugmentConfig cfg;
  cfg.n_views = 8;
  const ViewBatch batch = augment_views(x, cfg, 5);
  EXPECT_TRUE(batch.views[0].bitwise_equal(copy));
  EXPECT_TRUE(x.bitwise_equal(copy));  // input itself never mutated
}

TEST(AugmentViews, DistinctSeedsProduceDistinctBatches) {
  auto rng = make_rng(64);
  const Image x = random_image(rng, kShape);
  AugmentConfig cfg;
  cfg.n_views = 4;
  for (int pair = 0; pair < 100; ++pair) {
    const std::uint64_t s1 = rng(), s2 = rng();
    if (s1 == s2) continue;
    const ViewBatch a = augment_views(x, cfg, s1);
    const ViewBatch b = augment_views(x, cfg, s2);
    bool any_differ = false;
    for (std::size_t i = 1; i < a.views.size() && !any_differ; ++i) {
      any_differ = !a.views[i].bitwise_equal(b.views[i]);
    }
    EXPECT_TRUE(any_differ) << "seeds " << s1 << " vs " << s2;
  }
}

TEST(AugmentViews, IdentityConfigReproducesInputBitwise) {
  auto rng = make_rng(65);
  const Image x = random_image(rng, kShape);
  const ViewBatch batch = augment_views(x, AugmentConfig::identity(5), 11);
  ASSERT_EQ(batch.views.size(), 6u);
  for (const auto& view : batch.views) EXPECT_TRUE(view.bitwise_equal(x));
}

TEST(AugmentViews, ErrorPaths) {
  auto rng = make_rng(66);
  const Image x = random_image(rng, kShape);
  AugmentConfig cfg;
  cfg.n_views = -1;
  EXPECT_THROW(augment_views(x, cfg, 0), ConfigError);

  Image bad = x;
  bad.data()[0] = 1.7;
  EXPECT_THROW(augment_views(bad, AugmentConfig{}, 0), InputError);

  AugmentConfig unknown_op;
  unknown_op.n_views = 1;
  unknown_op.ops = {"sharpen-everything"};
  EXPECT_THROW(augment_views(x, unknown_op, 0), ConfigError);
}

TEST(AugmentOps, GeometricOpsStayInsideRangeAndShape) {
  auto rng = make_rng(67);
  const Image x = random_image(rng, kShape, 0.0, 1.0);
  for (const Image& out :
       {detail::rotate(x, 17.0), detail::shear_x(x, 0.2), detail::shear_y(x, -0.2),
        detail::translate(x, 3.0, -2.0), detail::hflip(x)}) {
    ASSERT_EQ(out.shape(), kShape);
    for (double v : out.data()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(AugmentOps, HflipIsAnInvolution) {
  auto rng = make_rng(68);
  const Image x = random_image(rng, kShape);
  EXPECT_TRUE(detail::hflip(detail::hflip(x)).bitwise_equal(x));
}

TEST(AugmentOps, AutocontrastStretchesToFullRange) {
  Image x(kShape, 0.5);
  x.at(0, 0, 0) = 0.4;
  x.at(0, 0, 1) = 0.6;
  const Image out = detail::autocontrast(x);
  EXPECT_NEAR(out.at(0, 0, 0), 0.0, 1e-12);
  EXPECT_NEAR(out.at(0, 0, 1), 1.0, 1e-12);
}

TEST(AugmentOps, SolarizeInvertsAboveThreshold) {
  Image x(kShape, 0.9);
  const Image out = detail::solarize(x, 0.7);
  EXPECT_NEAR(out.at(0, 0, 0), 0.1, 1e-12);
  const Image keep = detail::solarize(x, 0.95);
  EXPECT_NEAR(keep.at(0, 0, 0), 0.9, 1e-12);
}

}  // namespace
}  // namespace rtpt
