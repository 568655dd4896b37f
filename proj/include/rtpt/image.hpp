#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <vector>

#include "rtpt/errors.hpp"
#include "rtpt/rng.hpp"

namespace rtpt {

struct ImageShape {
  int channels = 0;
  int height = 0;
  int width = 0;

  int numel() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// Dense pixel tensor in channel-major (c, y, x) order. Values are expected
/// to live in [0, 1]; helpers below enforce or verify that.
class Image {
 public:
  Image() = default;
  explicit Image(ImageShape shape, double fill = 0.0)
      : shape_(shape), data_(static_cast<std::size_t>(shape.numel()), fill) {}

  const ImageShape& shape() const { return shape_; }
  int numel() const { return shape_.numel(); }

  double& at(int c, int y, int x) {
    return data_[static_cast<std::size_t>((c * shape_.height + y) * shape_.width + x)];
  }
  double at(int c, int y, int x) const {
    return data_[static_cast<std::size_t>((c * shape_.height + y) * shape_.width + x)];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }
  Eigen::Map<Eigen::VectorXd> flat() {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }

  bool in_unit_range() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return v >= 0.0 && v <= 1.0; });
  }

  void clamp01() {
    for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
  }

  bool bitwise_equal(const Image& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

  std::uint64_t checksum() const {
    return fnv1a64(data_.data(), data_.size() * sizeof(double));
  }

 private:
  ImageShape shape_;
  std::vector<double> data_;
};

inline void require_valid_input_image(const Image& img, const ImageShape& expected) {
  if (!(img.shape() == expected)) {
    throw InputError("image shape does not match backend input shape");
  }
  if (!img.in_unit_range()) {
    throw InputError("image pixels must lie in [0, 1]");
  }
}

/// Largest absolute pixel difference between two same-shaped images.
inline double linf_distance(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

}  // namespace rtpt
