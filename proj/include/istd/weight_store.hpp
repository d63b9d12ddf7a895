#pragma once

// Named-tensor container and its on-disk format.
//
// File layout, all integers little-endian:
//   magic      "CSPW"
//   version    u32 = 1
//   count      u32
//   count x {
//     name_len u16, name (UTF-8, name_len bytes)
//     rank     u8, dims rank x u32
//     dtype    u8 (0 = float32)
//     payload  product(dims) x f32 LE
//   }
// Entries keep insertion order, so load -> save reproduces the input bytes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/tensor.hpp"

namespace istd {

struct Param {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }
  friend bool operator==(const Param&, const Param&) = default;
};

inline std::string dims_string(std::span<const std::uint32_t> dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

class WeightStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void set(const std::string& name, Param p) {
    require(p.values.size() == p.element_count(),
            "tensor '" + name + "' has " + std::to_string(p.values.size()) +
                " values for dims " + dims_string(p.dims));
    require(!name.empty() && name.size() <= 0xFFFF, "tensor name length out of range");
    require(p.dims.size() <= 0xFF, "tensor rank out of range");
    if (auto it = index_.find(name); it != index_.end()) {
      entries_[it->second].second = std::move(p);
      return;
    }
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(p));
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  const Param& get(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::weight_missing, "missing tensor '" + name + "'");
    return entries_[it->second].second;
  }

  // Looks a tensor up and checks its dims in one step.
  const Param& get(const std::string& name, std::span<const std::uint32_t> dims) const {
    const Param& p = get(name);
    if (!std::equal(p.dims.begin(), p.dims.end(), dims.begin(), dims.end()))
      fail(ErrorKind::weight_shape, "tensor '" + name + "' has dims " + dims_string(p.dims) +
                                        ", expected " + dims_string(dims));
    return p;
  }
  const Param& get(const std::string& name, std::initializer_list<std::uint32_t> dims) const {
    return get(name, std::span<const std::uint32_t>(dims.begin(), dims.size()));
  }

  float scalar(const std::string& name) const {
    const Param& p = get(name);
    if (p.values.size() != 1)
      fail(ErrorKind::weight_shape, "tensor '" + name + "' is not a scalar");
    return p.values.front();
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::pair<std::string, Param>>& entries() const noexcept { return entries_; }

  friend bool operator==(const WeightStore& a, const WeightStore& b) {
    return a.entries_ == b.entries_;
  }

  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    auto put = [&out](const void* src, std::size_t n) {
      const auto* b = static_cast<const std::uint8_t*>(src);
      out.insert(out.end(), b, b + n);
    };
    auto put_u8 = [&](std::uint8_t v) { out.push_back(v); };
    auto put_u16 = [&](std::uint16_t v) {
      put_u8(static_cast<std::uint8_t>(v & 0xFF));
      put_u8(static_cast<std::uint8_t>(v >> 8));
    };
    auto put_u32 = [&](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) put_u8(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    };

    put("CSPW", 4);
    put_u32(kVersion);
    put_u32(static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, p] : entries_) {
      put_u16(static_cast<std::uint16_t>(name.size()));
      put(name.data(), name.size());
      put_u8(static_cast<std::uint8_t>(p.dims.size()));
      for (auto d : p.dims) put_u32(d);
      put_u8(0);
      for (float v : p.values) put_u32(std::bit_cast<std::uint32_t>(v));
    }
    return out;
  }

  static WeightStore deserialize(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n, const char* what) {
      if (bytes.size() - pos < n)
        fail(ErrorKind::truncated, std::string("weight file truncated while reading ") + what);
    };
    auto u8 = [&](const char* what) {
      need(1, what);
      return bytes[pos++];
    };
    auto u16 = [&](const char* what) {
      need(2, what);
      const auto v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
      pos += 2;
      return v;
    };
    auto u32 = [&](const char* what) {
      need(4, what);
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
      pos += 4;
      return v;
    };

    need(4, "magic");
    if (std::memcmp(bytes.data(), "CSPW", 4) != 0)
      fail(ErrorKind::bad_magic, "not a weight file (bad magic)");
    pos = 4;
    if (const auto version = u32("version"); version != kVersion)
      fail(ErrorKind::bad_version, "unsupported weight file version " + std::to_string(version));
    const std::uint32_t count = u32("entry count");

    WeightStore store;
    for (std::uint32_t e = 0; e < count; ++e) {
      const std::uint16_t len = u16("name length");
      need(len, "name");
      std::string name(reinterpret_cast<const char*>(bytes.data() + pos), len);
      pos += len;
      Param p;
      p.dims.resize(u8("rank"));
      for (auto& d : p.dims) d = u32("dims");
      if (const auto dtype = u8("dtype"); dtype != 0)
        fail(ErrorKind::bad_version, "tensor '" + name + "' has unsupported dtype " +
                                         std::to_string(dtype));
      // Multiply with a running bound so absurd dims cannot overflow.
      const std::size_t room = (bytes.size() - pos) / 4;
      std::size_t n = 1;
      for (auto d : p.dims) {
        if (d != 0 && n > room / d)
          fail(ErrorKind::truncated, "weight file truncated in payload of '" + name + "'");
        n *= d;
      }
      p.values.resize(n);
      for (auto& v : p.values) v = std::bit_cast<float>(u32("payload"));
      if (store.contains(name))
        fail(ErrorKind::weight_unknown, "duplicate tensor name '" + name + "'");
      store.set(name, std::move(p));
    }
    if (pos != bytes.size())
      fail(ErrorKind::truncated, "weight file has " + std::to_string(bytes.size() - pos) +
                                     " trailing bytes");
    return store;
  }

 private:
  std::vector<std::pair<std::string, Param>> entries_;
  std::map<std::string, std::size_t> index_;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "short write to '" + path + "'");
}

inline void save_weights(const WeightStore& store, const std::string& path) {
  write_file_bytes(path, store.serialize());
}

inline WeightStore load_weights(const std::string& path) {
  return WeightStore::deserialize(read_file_bytes(path));
}

inline Param param_from_tensor(const Tensor& t) {
  return {{static_cast<std::uint32_t>(t.height()), static_cast<std::uint32_t>(t.width()),
           static_cast<std::uint32_t>(t.channels())},
          t.vector()};
}

inline Tensor tensor_from_param(const Param& p) {
  require(p.dims.size() == 3, "expected a rank-3 tensor, got dims " + dims_string(p.dims));
  return Tensor(static_cast<int>(p.dims[0]), static_cast<int>(p.dims[1]),
                static_cast<int>(p.dims[2]), p.values);
}

}  // namespace istd
