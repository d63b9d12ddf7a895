#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "istd/rng.hpp"
#include "istd/tensor.hpp"
#include "oracles.hpp"

namespace testutil {

inline istd::Tensor random_tensor(int h, int w, int c, std::uint64_t seed, double lo = -1.0,
                                  double hi = 1.0) {
  istd::SplitMix64 rng(seed);
  istd::Tensor t(h, w, c);
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

inline std::vector<float> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                        double hi = 1.0) {
  istd::SplitMix64 rng(seed);
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

inline oracle::Field to_field(const istd::Tensor& t) {
  oracle::Field f(t.height(), t.width(), t.channels());
  for (std::size_t i = 0; i < t.size(); ++i) f.v[i] = t.values()[i];
  return f;
}

inline double max_abs_diff(const istd::Tensor& t, const oracle::Field& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(t.values()[i]) - f.v[i]));
  return m;
}

inline double max_abs_diff(const istd::Tensor& a, const istd::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.values()[i]) - b.values()[i]));
  return m;
}

inline bool bitwise_equal(const istd::Tensor& a, const istd::Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("istd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
