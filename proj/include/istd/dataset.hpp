#pragma once

// Dataset layout:
//   <root>/images/<stem>.png   8- or 16-bit grayscale
//   <root>/masks/<stem>.png    any nonzero pixel is target
// Samples are ordered by plain byte-wise comparison of stems ("a10" < "a2").

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "istd/error.hpp"
#include "istd/metrics.hpp"
#include "istd/png_io.hpp"
#include "istd/tensor.hpp"
#include "istd/weight_store.hpp"

namespace istd {

enum class DatasetMode {
  scored,  // images only; masks loaded when present
  masked,  // every image needs a mask
};

struct DatasetEntry {
  std::string stem;
  std::filesystem::path image;
  std::optional<std::filesystem::path> mask;
};

struct Sample {
  std::string id;
  Tensor image;
  std::optional<Mask> mask;
};

inline std::vector<std::string> png_stems(const std::filesystem::path& dir) {
  std::vector<std::string> stems;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png")
      stems.push_back(e.path().stem().string());
  std::sort(stems.begin(), stems.end());
  return stems;
}

inline std::vector<DatasetEntry> list_dataset(const std::filesystem::path& root, DatasetMode mode) {
  const auto images = root / "images";
  const auto masks = root / "masks";
  if (!std::filesystem::is_directory(images))
    fail(ErrorKind::input, "dataset '" + root.string() + "' has no images/ directory");
  std::vector<DatasetEntry> out;
  for (const auto& stem : png_stems(images)) {
    DatasetEntry e{stem, images / (stem + ".png"), std::nullopt};
    const auto m = masks / (stem + ".png");
    if (std::filesystem::is_regular_file(m))
      e.mask = m;
    else if (mode == DatasetMode::masked)
      fail(ErrorKind::input, "missing mask for '" + stem + "'");
    out.push_back(std::move(e));
  }
  return out;
}

inline Sample load_sample(const DatasetEntry& e) {
  Sample s{e.stem, to_tensor(read_png(e.image.string())), std::nullopt};
  if (e.mask) {
    Mask m = to_mask(read_png(e.mask->string()));
    if (m.height != s.image.height() || m.width != s.image.width())
      fail(ErrorKind::input, "mask for '" + e.stem + "' does not match its image size");
    s.mask = std::move(m);
  }
  return s;
}

// --- score maps ------------------------------------------------------------

inline constexpr const char* kScoreEntry = "score";

inline void save_score_dump(const Tensor& score, const std::string& path) {
  WeightStore s;
  s.set(kScoreEntry, param_from_tensor(score));
  save_weights(s, path);
}

inline Tensor load_score_dump(const std::string& path) {
  return tensor_from_param(load_weights(path).get(kScoreEntry));
}

// Prediction for `stem` in `dir`: the exact float dump (<stem>.cspw) when
// present, otherwise <stem>.png normalized by its container max.
inline Tensor load_score_map(const std::filesystem::path& dir, const std::string& stem) {
  const auto dump = dir / (stem + ".cspw");
  if (std::filesystem::is_regular_file(dump)) return load_score_dump(dump.string());
  const auto png = dir / (stem + ".png");
  if (!std::filesystem::is_regular_file(png))
    fail(ErrorKind::input, "no prediction for '" + stem + "' in '" + dir.string() + "'");
  return to_tensor(read_png(png.string()));
}

// Binary prediction: dumps are thresholded at `threshold`, PNGs are read as
// masks (nonzero is target).
inline Mask load_prediction_mask(const std::filesystem::path& dir, const std::string& stem,
                                 double threshold) {
  const auto dump = dir / (stem + ".cspw");
  if (std::filesystem::is_regular_file(dump))
    return binarize(load_score_dump(dump.string()), threshold);
  const auto png = dir / (stem + ".png");
  if (!std::filesystem::is_regular_file(png))
    fail(ErrorKind::input, "no prediction for '" + stem + "' in '" + dir.string() + "'");
  return to_mask(read_png(png.string()));
}

}  // namespace istd
