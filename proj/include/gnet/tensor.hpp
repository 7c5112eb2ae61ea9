#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gnet/error.hpp"

namespace gnet {

/// Dense rank-3 feature map in channel-major, then row-major layout:
/// element (c, y, x) lives at flat index c*height*width + y*width + x.
/// All values are 32-bit floats; every operator in the runtime consumes
/// and produces this type.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  Tensor(int channels, int height, int width)
      : channels_(channels), height_(height), width_(width),
        data_(checked_size(channels, height, width), 0.0f) {}

  /// Adopts an existing flat buffer; its length must match the shape.
  Tensor(int channels, int height, int width, std::vector<float> data)
      : channels_(channels), height_(height), width_(width),
        data_(std::move(data)) {
    if (data_.size() != checked_size(channels, height, width)) {
      throw Error(ErrorKind::Shape,
                  "tensor data length does not match channels*height*width");
    }
  }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }
  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }

  const float* data() const { return data_.data(); }
  float* data() { return data_.data(); }

  const std::vector<float>& values() const { return data_; }

  /// Start of channel c's height*width plane.
  const float* plane(int c) const { return data_.data() + index(c, 0, 0); }
  float* plane(int c) { return data_.data() + index(c, 0, 0); }

  std::string shape_string() const {
    return std::to_string(channels_) + "x" + std::to_string(height_) + "x" +
           std::to_string(width_);
  }

 private:
  static std::size_t checked_size(int channels, int height, int width) {
    if (channels < 1 || height < 1 || width < 1) {
      throw Error(ErrorKind::Shape, "tensor dimensions must be positive");
    }
    return static_cast<std::size_t>(channels) * height * width;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

}  // namespace gnet
