#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rtpt/errors.hpp"
#include "rtpt/image.hpp"
#include "rtpt/rng.hpp"

namespace rtpt {

struct AugmentConfig {
  int n_views = 63;  // augmented views; the batch adds the original at index 0

  // Random resized crop + horizontal flip applied to every view first.
  std::array<double, 2> crop_scale{0.45, 1.0};
  std::array<double, 2> crop_ratio{3.0 / 4.0, 4.0 / 3.0};
  double flip_prob = 0.5;

  // AugMix mixture on top of the cropped view. An empty op set or
  // chain_depth_max <= 0 disables the mixture stage entirely.
  int mixture_width = 3;
  int chain_depth_min = 1;
  int chain_depth_max = 3;
  double severity = 5.0;  // 0..10 magnitude scale for the ops below
  double mix_alpha = 1.0;
  std::vector<std::string> ops{"autocontrast", "equalize",  "posterize",
                               "rotate",       "solarize",  "shear_x",
                               "shear_y",      "translate_x", "translate_y"};

  /// Disables every stochastic stage so each view equals the input.
  static AugmentConfig identity(int n_views) {
    AugmentConfig cfg;
    cfg.n_views = n_views;
    cfg.crop_scale = {1.0, 1.0};
    cfg.crop_ratio = {1.0, 1.0};
    cfg.flip_prob = 0.0;
    cfg.ops.clear();
    return cfg;
  }
};

/// Original test image at index 0 followed by n_views augmented views.
struct ViewBatch {
  std::vector<Image> views;
  std::uint64_t seed = 0;
  std::string source_id;

  int n_views() const { return static_cast<int>(views.size()) - 1; }
};

namespace detail {

constexpr double kFill = 0.5;  // gray fill for out-of-frame affine samples

inline double bilinear_at(const Image& img, int c, double y, double x) {
  const int h = img.shape().height, w = img.shape().width;
  if (x < -1.0 || x > static_cast<double>(w) || y < -1.0 || y > static_cast<double>(h)) {
    return kFill;
  }
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto px = [&](int yy, int xx) -> double {
    if (xx < 0 || xx >= w || yy < 0 || yy >= h) return kFill;
    return img.at(c, yy, xx);
  };
  const double top = px(y0, x0) * (1.0 - fx) + px(y0, x0 + 1) * fx;
  const double bot = px(y0 + 1, x0) * (1.0 - fx) + px(y0 + 1, x0 + 1) * fx;
  return top * (1.0 - fy) + bot * fy;
}

/// Warps by the inverse map (dx, dy) -> (a11 dx + a12 dy + tx, a21 dx + a22 dy + ty)
/// around the image center.
inline Image affine_sample(const Image& img, double a11, double a12, double a21,
                           double a22, double tx, double ty) {
  const auto& s = img.shape();
  Image out(s);
  const double cx = (s.width - 1) * 0.5, cy = (s.height - 1) * 0.5;
  for (int c = 0; c < s.channels; ++c) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double sx = a11 * dx + a12 * dy + tx + cx;
        const double sy = a21 * dx + a22 * dy + ty + cy;
        out.at(c, y, x) = bilinear_at(img, c, sy, sx);
      }
    }
  }
  return out;
}

inline Image rotate(const Image& img, double degrees) {
  const double rad = degrees * M_PI / 180.0;
  const double co = std::cos(rad), si = std::sin(rad);
  return affine_sample(img, co, si, -si, co, 0.0, 0.0);
}

inline Image shear_x(const Image& img, double k) {
  return affine_sample(img, 1.0, -k, 0.0, 1.0, 0.0, 0.0);
}

inline Image shear_y(const Image& img, double k) {
  return affine_sample(img, 1.0, 0.0, -k, 1.0, 0.0, 0.0);
}

inline Image translate(const Image& img, double tx, double ty) {
  return affine_sample(img, 1.0, 0.0, 0.0, 1.0, -tx, -ty);
}

inline Image autocontrast(const Image& img) {
  const auto& s = img.shape();
  Image out = img;
  for (int c = 0; c < s.channels; ++c) {
    double lo = 1.0, hi = 0.0;
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        lo = std::min(lo, img.at(c, y, x));
        hi = std::max(hi, img.at(c, y, x));
      }
    }
    if (hi - lo < 1e-9) continue;
    const double scale = 1.0 / (hi - lo);
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        out.at(c, y, x) = (img.at(c, y, x) - lo) * scale;
      }
    }
  }
  return out;
}

inline Image equalize(const Image& img) {
  constexpr int kBins = 256;
  const auto& s = img.shape();
  Image out = img;
  const int npix = s.height * s.width;
  for (int c = 0; c < s.channels; ++c) {
    std::array<int, kBins> hist{};
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        const int b = std::min(kBins - 1, static_cast<int>(img.at(c, y, x) * kBins));
        ++hist[static_cast<std::size_t>(b)];
      }
    }
    std::array<double, kBins> cdf{};
    int running = 0;
    for (int b = 0; b < kBins; ++b) {
      running += hist[static_cast<std::size_t>(b)];
      cdf[static_cast<std::size_t>(b)] = static_cast<double>(running) / npix;
    }
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        const int b = std::min(kBins - 1, static_cast<int>(img.at(c, y, x) * kBins));
        out.at(c, y, x) = cdf[static_cast<std::size_t>(b)];
      }
    }
  }
  return out;
}

inline Image posterize(const Image& img, int bits) {
  const double levels = std::pow(2.0, bits);
  Image out = img;
  for (double& v : out.data()) {
    v = std::min(std::floor(v * levels) / levels, 1.0);
  }
  return out;
}

inline Image solarize(const Image& img, double threshold) {
  Image out = img;
  for (double& v : out.data()) {
    if (v >= threshold) v = 1.0 - v;
  }
  return out;
}

inline Image apply_op(const Image& img, const std::string& op, double severity,
                      std::mt19937_64& rng) {
  const double level = std::clamp(severity / 10.0, 0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
  const double mag = unit(rng) * level;  // jitter the magnitude per application
  if (op == "autocontrast") return autocontrast(img);
  if (op == "equalize") return equalize(img);
  if (op == "posterize") {
    return posterize(img, std::max(1, 8 - static_cast<int>(std::round(4.0 * mag))));
  }
  if (op == "rotate") return rotate(img, sign * 30.0 * mag);
  if (op == "solarize") return solarize(img, 1.0 - mag);
  if (op == "shear_x") return shear_x(img, sign * 0.3 * mag);
  if (op == "shear_y") return shear_y(img, sign * 0.3 * mag);
  if (op == "translate_x") {
    return translate(img, sign * mag * img.shape().width / 3.0, 0.0);
  }
  if (op == "translate_y") {
    return translate(img, 0.0, sign * mag * img.shape().height / 3.0);
  }
  throw ConfigError("unknown augmentation op: " + op);
}

inline Image random_resized_crop(const Image& img, const AugmentConfig& cfg,
                                 std::mt19937_64& rng) {
  const auto& s = img.shape();
  if (cfg.crop_scale[0] == 1.0 && cfg.crop_scale[1] == 1.0 &&
      cfg.crop_ratio[0] == 1.0 && cfg.crop_ratio[1] == 1.0) {
    return img;  // full-frame crop, no resampling
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double area = static_cast<double>(s.height) * s.width;
  double cw = s.width, ch = s.height;
  double x0 = 0.0, y0 = 0.0;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target =
        area * (cfg.crop_scale[0] + unit(rng) * (cfg.crop_scale[1] - cfg.crop_scale[0]));
    const double log_lo = std::log(cfg.crop_ratio[0]);
    const double log_hi = std::log(cfg.crop_ratio[1]);
    const double aspect = std::exp(log_lo + unit(rng) * (log_hi - log_lo));
    const double w = std::sqrt(target * aspect);
    const double h = std::sqrt(target / aspect);
    if (w <= s.width && h <= s.height) {
      cw = w;
      ch = h;
      x0 = unit(rng) * (s.width - w);
      y0 = unit(rng) * (s.height - h);
      break;
    }
  }
  Image out(s);
  for (int c = 0; c < s.channels; ++c) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        const double sx = x0 + (x + 0.5) * cw / s.width - 0.5;
        const double sy = y0 + (y + 0.5) * ch / s.height - 0.5;
        out.at(c, y, x) = bilinear_at(img, c, sy, sx);
      }
    }
  }
  return out;
}

inline Image hflip(const Image& img) {
  const auto& s = img.shape();
  Image out(s);
  for (int c = 0; c < s.channels; ++c) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        out.at(c, y, x) = img.at(c, y, s.width - 1 - x);
      }
    }
  }
  return out;
}

inline Image augment_one(const Image& x, const AugmentConfig& cfg,
                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image base = random_resized_crop(x, cfg, rng);
  if (cfg.flip_prob > 0.0 && unit(rng) < cfg.flip_prob) base = hflip(base);
  if (cfg.ops.empty() || cfg.chain_depth_max <= 0 || cfg.mixture_width <= 0) {
    base.clamp01();
    return base;
  }

  // AugMix: convex mixture of op chains blended back with the base view.
  std::gamma_distribution<double> gamma(cfg.mix_alpha, 1.0);
  std::vector<double> ws(static_cast<std::size_t>(cfg.mixture_width));
  double wsum = 0.0;
  for (double& w : ws) {
    w = std::max(gamma(rng), 1e-12);
    wsum += w;
  }
  for (double& w : ws) w /= wsum;
  const double ga = std::max(gamma(rng), 1e-12);
  const double gb = std::max(gamma(rng), 1e-12);
  const double m = ga / (ga + gb);  // Beta(alpha, alpha)

  Image mix(x.shape(), 0.0);
  std::uniform_int_distribution<int> depth_dist(cfg.chain_depth_min, cfg.chain_depth_max);
  std::uniform_int_distribution<std::size_t> op_dist(0, cfg.ops.size() - 1);
  for (int k = 0; k < cfg.mixture_width; ++k) {
    Image chain = base;
    const int depth = std::max(1, depth_dist(rng));
    for (int d = 0; d < depth; ++d) {
      chain = apply_op(chain, cfg.ops[op_dist(rng)], cfg.severity, rng);
    }
    for (std::size_t i = 0; i < mix.data().size(); ++i) {
      mix.data()[i] += ws[static_cast<std::size_t>(k)] * chain.data()[i];
    }
  }
  Image out(x.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = m * base.data()[i] + (1.0 - m) * mix.data()[i];
  }
  out.clamp01();
  return out;
}

}  // namespace detail

/// Produces the batch {x, view_1, ..., view_N}. Deterministic in
/// (image, cfg, seed); each view draws from its own stream so batches are
/// reproducible regardless of evaluation order.
inline ViewBatch augment_views(const Image& x, const AugmentConfig& cfg,
                               std::uint64_t seed, std::string source_id = "") {
  if (cfg.n_views < 0) throw ConfigError("n_views must be >= 0");
  if (!x.in_unit_range()) throw InputError("augmentation input must lie in [0, 1]");
  ViewBatch batch;
  batch.seed = seed;
  batch.source_id = std::move(source_id);
  batch.views.reserve(static_cast<std::size_t>(cfg.n_views) + 1);
  batch.views.push_back(x);
  for (int i = 1; i <= cfg.n_views; ++i) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(i));
    batch.views.push_back(detail::augment_one(x, cfg, rng));
  }
  return batch;
}

}  // namespace rtpt
