#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rtpt/classifier.hpp"
#include "rtpt/errors.hpp"
#include "rtpt/grad.hpp"
#include "rtpt/image.hpp"
#include "rtpt/rng.hpp"

namespace rtpt {

struct Sample {
  std::string id;
  Image image;
  int label = -1;
};

struct Dataset {
  std::string name;
  std::string split = "test";  // adaptation is test-time only
  std::vector<std::string> class_names;
  std::vector<Sample> samples;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return samples.size(); }

  /// Content hash over ids, labels and pixels. Distinguishes differently
  /// configured datasets that share a name, e.g. two toy variants.
  std::string fingerprint() const {
    std::uint64_t h = fnv1a64(name);
    for (const auto& s : samples) {
      h = fnv1a64(s.id, h);
      h = fnv1a64(&s.label, sizeof(s.label), h);
      const std::uint64_t img = s.image.checksum();
      h = fnv1a64(&img, sizeof(img), h);
    }
    return to_hex(h);
  }
};

struct ToyDatasetConfig {
  std::uint64_t seed = 11;
  int n_samples = 500;
  int num_classes = 10;
  double noise = 0.12;  // pixel-space sigma added to class prototypes
  int prototype_steps = 250;
  double prototype_step_size = 0.05;
  // Cosine margin (true class vs best other) at which prototype synthesis
  // stops. Keeps the benchmark inside the attackable regime instead of
  // saturating confidence; 0 disables the early stop.
  double prototype_margin = 0.06;
  // Prototypes are optimized on a coarse grid and upsampled bilinearly, so
  // the class pattern is spatially smooth and survives crop/resample
  // augmentation the way natural image content does.
  int prototype_grid = 8;
  std::string prompt_template = "a photo of a";
  double temperature = 0.01;
};

namespace detail {

inline std::vector<std::string> toy_class_names(int count) {
  static const std::vector<std::string> kWords = {
      "alpha", "bravo",  "charlie", "delta",  "echo",   "foxtrot", "golf",
      "hotel", "india",  "juliett", "kilo",   "lima",   "mike",    "november",
      "oscar", "papa",   "quebec",  "romeo",  "sierra", "tango",   "uniform",
      "victor", "whiskey", "xray",  "yankee", "zulu"};
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    if (i < static_cast<int>(kWords.size())) {
      names.push_back(kWords[static_cast<std::size_t>(i)]);
    } else {
      names.push_back("class-" + std::to_string(i));
    }
  }
  return names;
}

/// Bilinear upsampling from a coarse grid to the full image size. Linear in
/// the grid values, so its transpose below gives the exact gradient.
inline Image upsample_bilinear(const Image& grid, const ImageShape& out_shape) {
  Image out(out_shape);
  const auto& gs = grid.shape();
  for (int c = 0; c < out_shape.channels; ++c) {
    for (int y = 0; y < out_shape.height; ++y) {
      for (int x = 0; x < out_shape.width; ++x) {
        const double sy = std::clamp((y + 0.5) * gs.height / out_shape.height - 0.5, 0.0,
                                     static_cast<double>(gs.height - 1));
        const double sx = std::clamp((x + 0.5) * gs.width / out_shape.width - 0.5, 0.0,
                                     static_cast<double>(gs.width - 1));
        const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
        const int y1 = std::min(y0 + 1, gs.height - 1), x1 = std::min(x0 + 1, gs.width - 1);
        const double fy = sy - y0, fx = sx - x0;
        out.at(c, y, x) = grid.at(c, y0, x0) * (1 - fy) * (1 - fx) +
                          grid.at(c, y0, x1) * (1 - fy) * fx +
                          grid.at(c, y1, x0) * fy * (1 - fx) +
                          grid.at(c, y1, x1) * fy * fx;
      }
    }
  }
  return out;
}

inline Image upsample_bilinear_vjp(const Image& cotangent, const ImageShape& grid_shape) {
  Image grad(grid_shape, 0.0);
  const auto& os = cotangent.shape();
  for (int c = 0; c < os.channels; ++c) {
    for (int y = 0; y < os.height; ++y) {
      for (int x = 0; x < os.width; ++x) {
        const double sy = std::clamp((y + 0.5) * grid_shape.height / os.height - 0.5, 0.0,
                                     static_cast<double>(grid_shape.height - 1));
        const double sx = std::clamp((x + 0.5) * grid_shape.width / os.width - 0.5, 0.0,
                                     static_cast<double>(grid_shape.width - 1));
        const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
        const int y1 = std::min(y0 + 1, grid_shape.height - 1);
        const int x1 = std::min(x0 + 1, grid_shape.width - 1);
        const double fy = sy - y0, fx = sx - x0;
        const double g = cotangent.at(c, y, x);
        grad.at(c, y0, x0) += g * (1 - fy) * (1 - fx);
        grad.at(c, y0, x1) += g * (1 - fy) * fx;
        grad.at(c, y1, x0) += g * fy * (1 - fx);
        grad.at(c, y1, x1) += g * fy * fx;
      }
    }
  }
  return grad;
}

/// Finds a smooth pixel-space prototype whose prediction confidently lands
/// on the target class: normalized-gradient descent on cross-entropy over
/// the coarse grid values, with a cosine-decayed step.
inline Image synthesize_prototype(const EncoderBackend& backend, const ClassHead& head,
                                  int target, std::uint64_t seed,
                                  const ToyDatasetConfig& cfg) {
  const ImageShape full = backend.info().input_shape;
  const int side = std::max(2, std::min({cfg.prototype_grid, full.height, full.width}));
  const ImageShape grid_shape{full.channels, side, side};

  for (int attempt = 0; attempt < 3; ++attempt) {
    auto rng = make_rng(seed, 0x70726f74ULL + static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> init(0.25, 0.75);
    Image grid(grid_shape);
    for (double& v : grid.data()) v = init(rng);

    for (int step = 0; step < cfg.prototype_steps; ++step) {
      const Image x = upsample_bilinear(grid, full);
      const Eigen::VectorXd sims = cosine_similarities(backend.encode_image(x), head);
      if (cfg.prototype_margin > 0.0) {
        double best_other = -2.0;
        for (int c = 0; c < head.num_classes(); ++c) {
          if (c != target) best_other = std::max(best_other, sims[c]);
        }
        if (sims[target] - best_other >= cfg.prototype_margin) break;
      }
      const Eigen::VectorXd probs = softmax_over_similarities(sims, head.temperature);
      Image pixel_grad_img =
          pixel_gradient(backend, head, x, cross_entropy_logit_grad(probs, target));
      Image grid_grad = upsample_bilinear_vjp(pixel_grad_img, grid_shape);
      double gmax = 0.0;
      for (double v : grid_grad.data()) gmax = std::max(gmax, std::abs(v));
      if (gmax < 1e-14) break;
      const double lr = cfg.prototype_step_size *
                        0.5 * (1.0 + std::cos(M_PI * step / cfg.prototype_steps));
      for (std::size_t i = 0; i < grid.data().size(); ++i) {
        grid.data()[i] -= lr * grid_grad.data()[i] / gmax;
      }
      grid.clamp01();
    }

    Image x = upsample_bilinear(grid, full);
    if (argmax(classify(backend.encode_image(x), head)) == target) return x;
  }
  throw Error("toy prototype synthesis failed to separate class " + std::to_string(target));
}

}  // namespace detail

/// Synthetic class-separable benchmark: per-class pixel prototypes aligned
/// with the backend's zero-shot head, plus Gaussian pixel noise. Labels are
/// balanced round-robin and everything is deterministic in the seed.
inline Dataset make_toy_dataset(const ToyDatasetConfig& cfg, const EncoderBackend& backend) {
  if (cfg.num_classes < 2) throw ConfigError("toy dataset needs at least 2 classes");
  if (cfg.n_samples < 1) throw ConfigError("toy dataset needs at least 1 sample");
  Dataset ds;
  ds.name = "toy";
  ds.class_names = detail::toy_class_names(cfg.num_classes);

  PromptContext prompt = backend.init_prompt(cfg.prompt_template);
  ClassHead head = build_class_head(backend, prompt, ds.class_names, cfg.temperature);

  std::vector<Image> prototypes;
  prototypes.reserve(static_cast<std::size_t>(cfg.num_classes));
  for (int c = 0; c < cfg.num_classes; ++c) {
    prototypes.push_back(detail::synthesize_prototype(
        backend, head, c, derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(c)), cfg));
  }

  ds.samples.reserve(static_cast<std::size_t>(cfg.n_samples));
  for (int i = 0; i < cfg.n_samples; ++i) {
    const int label = i % cfg.num_classes;
    Sample s;
    s.label = label;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "toy-%06d", i);
    s.id = buf;
    s.image = prototypes[static_cast<std::size_t>(label)];
    if (cfg.noise > 0.0) {
      auto rng = make_rng(cfg.seed, 1000 + static_cast<std::uint64_t>(i));
      std::normal_distribution<double> noise(0.0, cfg.noise);
      for (double& v : s.image.data()) v += noise(rng);
      s.image.clamp01();
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Folder-layout adapter: <root>/classnames.txt plus one directory per class
// holding binary P6 PPM images that already match the backend input shape.

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw InputError("expected binary P6 ppm: " + path);
  auto next_int = [&in, &path]() {
    int v;
    while (in >> std::ws) {
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (in >> v) return v;
      break;
    }
    throw InputError("malformed ppm header: " + path);
  };
  const int w = next_int(), h = next_int(), maxval = next_int();
  if (maxval != 255) throw InputError("only maxval 255 ppm supported: " + path);
  in.get();  // single whitespace after header
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw InputError("truncated ppm: " + path);
  Image img(ImageShape{3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(c, y, x) = raw[static_cast<std::size_t>((y * w + x) * 3 + c)] / 255.0;
      }
    }
  }
  return img;
}

inline void write_ppm(const Image& img, const std::string& path) {
  const auto& s = img.shape();
  if (s.channels != 3) throw InputError("ppm export needs 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open image for writing: " + path);
  out << "P6\n" << s.width << " " << s.height << "\n255\n";
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        out.put(static_cast<char>(std::lround(v * 255.0)));
      }
    }
  }
}

inline Dataset load_folder_dataset(const std::string& root, const ImageShape& expected) {
  namespace fs = std::filesystem;
  const fs::path base(root);
  const fs::path names_file = base / "classnames.txt";
  if (!fs::exists(names_file)) {
    throw InputError("dataset root is missing classnames.txt: " + root);
  }
  Dataset ds;
  ds.name = base.filename().string();
  std::ifstream names(names_file);
  std::string line;
  while (std::getline(names, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ds.class_names.push_back(line);
  }
  if (ds.class_names.size() < 2) throw InputError("classnames.txt needs >= 2 classes");
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
    const fs::path dir = base / ds.class_names[c];
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      Sample s;
      s.id = ds.class_names[c] + "/" + f.filename().string();
      s.label = static_cast<int>(c);
      s.image = read_ppm(f.string());
      if (!(s.image.shape() == expected)) {
        throw InputError("image shape mismatch for " + s.id);
      }
      ds.samples.push_back(std::move(s));
    }
  }
  if (ds.samples.empty()) throw InputError("no samples found under " + root);
  return ds;
}

}  // namespace rtpt
