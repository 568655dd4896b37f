#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "rtpt/image.hpp"
#include "rtpt/prompt.hpp"

namespace rtpt {

struct BackendInfo {
  std::string name;
  int feature_dim = 0;      // shared image/text feature dimension
  int token_dim = 0;        // prompt token embedding dimension
  ImageShape input_shape;
  bool prompt_grad = false; // supports gradients w.r.t. prompt tokens
  bool pixel_grad = false;  // supports gradients w.r.t. input pixels
};

/// Encoder-pair contract: an image encoder F and a text encoder G whose
/// prompt portion is tunable. Implementations must be deterministic for
/// fixed weights and immutable after construction, so a single instance can
/// be shared read-only across threads.
///
/// Gradients are exposed as vector-Jacobian products: for a cotangent u,
/// `encode_image_vjp` returns d<F(x), u>/dx and `encode_text_vjp` returns
/// d<G(prompt, name), u>/d(prompt tokens). Any scalar loss that reaches the
/// encoders only through their output features can be differentiated by
/// composing its feature-level gradient with these hooks.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual const BackendInfo& info() const = 0;

  /// Builds the prompt context for a template string such as
  /// "a photo of a" or "a photo of a []". A "[]" placeholder token marks
  /// where the class name goes and does not become a context token.
  virtual PromptContext init_prompt(const std::string& templ) const = 0;

  virtual Eigen::VectorXd encode_image(const Image& x) const = 0;
  virtual Eigen::VectorXd encode_text(const PromptContext& prompt,
                                      const std::string& class_name) const = 0;

  virtual Image encode_image_vjp(const Image& x,
                                 const Eigen::VectorXd& cotangent) const = 0;
  virtual std::vector<Eigen::VectorXd> encode_text_vjp(
      const PromptContext& prompt, const std::string& class_name,
      const Eigen::VectorXd& cotangent) const = 0;
};

using BackendPtr = std::shared_ptr<const EncoderBackend>;

}  // namespace rtpt
