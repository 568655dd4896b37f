#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rtpt/backend.hpp"
#include "rtpt/errors.hpp"
#include "rtpt/rng.hpp"

namespace rtpt {

enum class Activation { kTanh, kIdentity };

struct DenseBackendConfig {
  std::string name = "toy";
  std::uint64_t seed = 1;
  ImageShape input_shape{3, 32, 32};
  int feature_dim = 32;
  int token_dim = 16;
  Activation activation = Activation::kTanh;
  bool normalize_image_features = true;
  double weight_scale = 2.0;
};

/// Deterministic encoder pair for desk-scale work: a single dense layer with
/// an optional tanh on each branch, followed by L2 normalization. Token and
/// class-name embeddings are unit vectors derived from a hash of the word, so
/// any vocabulary works without a stored table. Both gradient paths (pixels
/// and prompt tokens) are exact vector-Jacobian products.
///
/// The same class also backs checkpoint-loaded encoders (see
/// save_checkpoint / load_checkpoint below); only the weight source differs.
class DenseBackend final : public EncoderBackend {
 public:
  explicit DenseBackend(const DenseBackendConfig& cfg) : cfg_(cfg) {
    const int p = cfg.input_shape.numel();
    if (p <= 0 || cfg.feature_dim <= 0 || cfg.token_dim <= 0) {
      throw ConfigError("dense backend dimensions must be positive");
    }
    w_img_ = random_matrix(cfg.feature_dim, p, derive_seed(cfg.seed, 1));
    b_img_ = random_vector(cfg.feature_dim, derive_seed(cfg.seed, 2)) * 0.1;
    w_txt_ = random_matrix(cfg.feature_dim, cfg.token_dim, derive_seed(cfg.seed, 3));
    b_txt_ = random_vector(cfg.feature_dim, derive_seed(cfg.seed, 4)) * 0.1;
    init_info();
  }

  DenseBackend(const DenseBackendConfig& cfg, Eigen::MatrixXd w_img,
               Eigen::VectorXd b_img, Eigen::MatrixXd w_txt, Eigen::VectorXd b_txt)
      : cfg_(cfg),
        w_img_(std::move(w_img)),
        b_img_(std::move(b_img)),
        w_txt_(std::move(w_txt)),
        b_txt_(std::move(b_txt)) {
    init_info();
  }

  const BackendInfo& info() const override { return info_; }
  const DenseBackendConfig& config() const { return cfg_; }

  PromptContext init_prompt(const std::string& templ) const override {
    PromptContext prompt;
    prompt.init_template = templ;
    for (const std::string& word : split_words(templ)) {
      if (word == "[]") continue;  // class-name placeholder, not a context token
      prompt.tokens.push_back(token_embedding(word, 0x70726d70ULL));
    }
    if (prompt.tokens.empty()) {
      throw ConfigError("prompt template has no context tokens: " + templ);
    }
    return prompt;
  }

  Eigen::VectorXd encode_image(const Image& x) const override {
    require_valid_input_image(x, cfg_.input_shape);
    // Center pixels so pre-activations stay in the responsive range of tanh.
    Eigen::VectorXd u = w_img_ * (x.flat().array() - 0.5).matrix() + b_img_;
    Eigen::VectorXd h = apply_activation(u);
    if (cfg_.normalize_image_features) h.normalize();
    return h;
  }

  Eigen::VectorXd encode_text(const PromptContext& prompt,
                              const std::string& class_name) const override {
    Eigen::VectorXd u = w_txt_ * pooled_tokens(prompt, class_name) + b_txt_;
    Eigen::VectorXd h = apply_activation(u);
    h.normalize();  // text features are always unit-length
    return h;
  }

  Image encode_image_vjp(const Image& x,
                         const Eigen::VectorXd& cotangent) const override {
    require_valid_input_image(x, cfg_.input_shape);
    Eigen::VectorXd u = w_img_ * (x.flat().array() - 0.5).matrix() + b_img_;
    Eigen::VectorXd h = apply_activation(u);
    Eigen::VectorXd dh = cotangent;
    if (cfg_.normalize_image_features) dh = normalize_vjp(h, cotangent);
    Eigen::VectorXd du = activation_vjp(u, h, dh);
    Image grad(cfg_.input_shape);
    grad.flat() = w_img_.transpose() * du;
    return grad;
  }

  std::vector<Eigen::VectorXd> encode_text_vjp(
      const PromptContext& prompt, const std::string& class_name,
      const Eigen::VectorXd& cotangent) const override {
    Eigen::VectorXd u = w_txt_ * pooled_tokens(prompt, class_name) + b_txt_;
    Eigen::VectorXd h = apply_activation(u);
    Eigen::VectorXd dh = normalize_vjp(h, cotangent);
    Eigen::VectorXd du = activation_vjp(u, h, dh);
    Eigen::VectorXd dpooled = w_txt_.transpose() * du;
    // Mean pooling over M prompt tokens plus the class token.
    const double scale = 1.0 / (static_cast<double>(prompt.tokens.size()) + 1.0);
    std::vector<Eigen::VectorXd> grads(prompt.tokens.size(), dpooled * scale);
    return grads;
  }

  /// Deterministic unit embedding for a vocabulary word.
  Eigen::VectorXd token_embedding(const std::string& word,
                                  std::uint64_t stream) const {
    auto rng = make_rng(cfg_.seed ^ fnv1a64(word), stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(cfg_.token_dim);
    for (int i = 0; i < cfg_.token_dim; ++i) v[i] = normal(rng);
    v.normalize();
    return v;
  }

  void save_checkpoint(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 8);
    write_u32(out, static_cast<std::uint32_t>(cfg_.name.size()));
    out.write(cfg_.name.data(), static_cast<std::streamsize>(cfg_.name.size()));
    write_u64(out, cfg_.seed);
    for (int v : {cfg_.input_shape.channels, cfg_.input_shape.height,
                  cfg_.input_shape.width, cfg_.feature_dim, cfg_.token_dim,
                  static_cast<int>(cfg_.activation),
                  cfg_.normalize_image_features ? 1 : 0}) {
      write_u32(out, static_cast<std::uint32_t>(v));
    }
    write_matrix(out, w_img_);
    write_vector(out, b_img_);
    write_matrix(out, w_txt_);
    write_vector(out, b_txt_);
  }

  static std::shared_ptr<DenseBackend> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != kMagic) {
      throw IntegrityError("bad checkpoint magic: " + path);
    }
    DenseBackendConfig cfg;
    std::uint32_t name_len = read_u32(in);
    cfg.name.resize(name_len);
    in.read(cfg.name.data(), name_len);
    cfg.seed = read_u64(in);
    cfg.input_shape.channels = static_cast<int>(read_u32(in));
    cfg.input_shape.height = static_cast<int>(read_u32(in));
    cfg.input_shape.width = static_cast<int>(read_u32(in));
    cfg.feature_dim = static_cast<int>(read_u32(in));
    cfg.token_dim = static_cast<int>(read_u32(in));
    cfg.activation = static_cast<Activation>(read_u32(in));
    cfg.normalize_image_features = read_u32(in) != 0;
    Eigen::MatrixXd w_img = read_matrix(in);
    Eigen::VectorXd b_img = read_vector(in);
    Eigen::MatrixXd w_txt = read_matrix(in);
    Eigen::VectorXd b_txt = read_vector(in);
    if (!in) throw IntegrityError("truncated checkpoint: " + path);
    return std::make_shared<DenseBackend>(cfg, std::move(w_img), std::move(b_img),
                                          std::move(w_txt), std::move(b_txt));
  }

  // Exposed for analytic-gradient oracles in tests.
  const Eigen::MatrixXd& image_weights() const { return w_img_; }
  const Eigen::VectorXd& image_bias() const { return b_img_; }
  const Eigen::MatrixXd& text_weights() const { return w_txt_; }
  const Eigen::VectorXd& text_bias() const { return b_txt_; }

 private:
  static constexpr const char* kMagic = "RTPTDEN1";

  void init_info() {
    info_.name = cfg_.name;
    info_.feature_dim = cfg_.feature_dim;
    info_.token_dim = cfg_.token_dim;
    info_.input_shape = cfg_.input_shape;
    info_.prompt_grad = true;
    info_.pixel_grad = true;
  }

  Eigen::VectorXd apply_activation(const Eigen::VectorXd& u) const {
    if (cfg_.activation == Activation::kIdentity) return u;
    return u.array().tanh();
  }

  // d<act(u), dh>/du given h = act(u).
  Eigen::VectorXd activation_vjp(const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& h,
                                 const Eigen::VectorXd& dh) const {
    (void)u;
    if (cfg_.activation == Activation::kIdentity) return dh;
    return ((1.0 - h.array().square()) * dh.array()).matrix();
  }

  // d<h/|h|, cot>/dh = (cot - <f,cot> f) / |h| with f = h/|h|.
  static Eigen::VectorXd normalize_vjp(const Eigen::VectorXd& h,
                                       const Eigen::VectorXd& cot) {
    const double norm = h.norm();
    Eigen::VectorXd f = h / norm;
    return (cot - f.dot(cot) * f) / norm;
  }

  Eigen::VectorXd pooled_tokens(const PromptContext& prompt,
                                const std::string& class_name) const {
    if (prompt.length() < 1) throw ConfigError("prompt context must have >= 1 token");
    if (prompt.dim() != cfg_.token_dim) {
      throw ConfigError("prompt token dimension does not match backend");
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(cfg_.token_dim);
    for (const auto& t : prompt.tokens) sum += t;
    sum += token_embedding(class_name, 0x636c7373ULL);
    return sum / (static_cast<double>(prompt.tokens.size()) + 1.0);
  }

  Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    const double scale = cfg_.weight_scale / std::sqrt(static_cast<double>(cols));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = normal(rng) * scale;
    }
    return m;
  }

  static Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  }

  static std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> words;
    std::istringstream stream(s);
    std::string w;
    while (stream >> w) words.push_back(w);
    return words;
  }

  static void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  }
  static std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  }
  static void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    write_u32(out, static_cast<std::uint32_t>(m.rows()));
    write_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
  }
  static void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
    write_u32(out, static_cast<std::uint32_t>(v.size()));
    write_u32(out, 1);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double) * v.size()));
  }
  static Eigen::MatrixXd read_matrix(std::istream& in) {
    std::uint32_t rows = read_u32(in), cols = read_u32(in);
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    return m;
  }
  static Eigen::VectorXd read_vector(std::istream& in) {
    std::uint32_t rows = read_u32(in), cols = read_u32(in);
    (void)cols;
    Eigen::VectorXd v(rows);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
    return v;
  }

  DenseBackendConfig cfg_;
  Eigen::MatrixXd w_img_;
  Eigen::VectorXd b_img_;
  Eigen::MatrixXd w_txt_;
  Eigen::VectorXd b_txt_;
  BackendInfo info_;
};

inline std::shared_ptr<DenseBackend> make_toy_backend(
    const DenseBackendConfig& cfg = {}) {
  return std::make_shared<DenseBackend>(cfg);
}

}  // namespace rtpt
