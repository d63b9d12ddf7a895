#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "istd/error.hpp"

namespace istd {

// Dense H x W x C float tensor, channel-last: index = (row * W + col) * C + ch.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int height, int width, int channels, float fill = 0.0f)
      : height_(height), width_(width), channels_(channels) {
    require(height >= 0 && width >= 0 && channels >= 0, "tensor dims must be non-negative");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }
  Tensor(int height, int width, int channels, std::vector<float> values)
      : height_(height), width_(width), channels_(channels), data_(std::move(values)) {
    require(data_.size() == static_cast<std::size_t>(height) * width * channels,
            "tensor data length does not match " + shape_string());
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height_) * width_; }

  std::size_t index(int row, int col, int ch) const noexcept {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }
  float& at(int row, int col, int ch = 0) noexcept { return data_[index(row, col, ch)]; }
  float at(int row, int col, int ch = 0) const noexcept { return data_[index(row, col, ch)]; }

  std::span<float> pixel(int row, int col) noexcept {
    return {data_.data() + index(row, col, 0), static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(int row, int col) const noexcept {
    return {data_.data() + index(row, col, 0), static_cast<std::size_t>(channels_)};
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  const std::vector<float>& vector() const noexcept { return data_; }

  bool same_shape(const Tensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool same_spatial(const Tensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  std::string shape_string() const {
    return std::to_string(height_) + "x" + std::to_string(width_) + "x" + std::to_string(channels_);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

}  // namespace istd
