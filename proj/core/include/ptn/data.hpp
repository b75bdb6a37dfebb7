#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ptn/eval.hpp"
#include "ptn/model.hpp"
#include "ptn/rng.hpp"

namespace ptn {

enum class SplitTag { train, valid, test };
const char* to_string(SplitTag tag) noexcept;

// A matrix of categorical observations with per-column cardinalities.
// Loaders reject out-of-contract input loudly; there is no clamping.
class DiscreteDataset {
 public:
  DiscreteDataset() = default;
  DiscreteDataset(std::size_t columns, std::vector<int> cardinalities, std::vector<int> values,
                  SplitTag tag = SplitTag::train);

  static DiscreteDataset from_rows(const std::vector<std::vector<int>>& rows,
                                   std::span<const int> cardinality_override = {},
                                   SplitTag tag = SplitTag::train);

  std::size_t rows() const noexcept { return columns_ == 0 ? 0 : values_.size() / columns_; }
  std::size_t columns() const noexcept { return columns_; }
  const std::vector<int>& cardinalities() const noexcept { return cardinalities_; }
  SplitTag split() const noexcept { return split_; }

  std::span<const int> row(std::size_t r) const {
    return {values_.data() + r * columns_, columns_};
  }
  SampleView view() const { return SampleView(values_.data(), rows(), columns_); }
  SampleView view(std::size_t first, std::size_t count) const {
    return SampleView(values_.data() + first * columns_, count, columns_);
  }
  const std::vector<int>& values() const noexcept { return values_; }

  // Copy of the first `count` rows (or all of them, if fewer).
  DiscreteDataset head(std::size_t count) const;

 private:
  std::size_t columns_ = 0;
  std::vector<int> cardinalities_;
  std::vector<int> values_;  // row-major
  SplitTag split_ = SplitTag::train;
};

// Loads delimiter-separated non-negative integer rows, one sample per
// line. The delimiter is auto-detected between comma and whitespace
// unless given. Cardinalities are inferred as per-column max + 1 and
// never shrink below an explicit override; values outside an override
// are a parse error. Ragged rows and non-integer tokens name the
// offending 1-based line.
DiscreteDataset load_csv01(const std::filesystem::path& path,
                           std::optional<char> delimiter = std::nullopt,
                           std::span<const int> cardinality_override = {},
                           SplitTag tag = SplitTag::train);

// Reads IDX-format images (magic 0x00000803) and labels (0x00000801),
// flattens each image and thresholds it into {0, 1}: pixel >= threshold
// maps to 1. Labels are validated against the image count and dropped;
// density estimation here is unsupervised.
DiscreteDataset load_mnist_binarized(const std::filesystem::path& images_path,
                                     const std::filesystem::path& labels_path,
                                     int threshold = 128, SplitTag tag = SplitTag::train);

// Single-file checkpoint: a human-readable header (format version, mode,
// shape, seed, one metadata line) followed by the raw little-endian
// float64 core payload. Round-trips bit-exactly.
void save_checkpoint(const MpsModel& model, const std::filesystem::path& path,
                     const std::string& metadata_json = "{}", std::uint64_t seed = 0);
MpsModel load_checkpoint(const std::filesystem::path& path);

// Random teacher model plus `samples` exact draws from it.
std::pair<MpsModel, DiscreteDataset> synth_teacher(std::uint64_t seed, std::size_t n_variables,
                                                   int dim, std::size_t rank,
                                                   PositivityMode mode, std::size_t samples);

}  // namespace ptn
