#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crowd_al/model.hpp"

namespace crowd_al {

/// Numeric table: one row per instance, final CSV column split off as target.
struct RawDataset {
  Matrix features;
  Vector targets;
  std::vector<std::string> header;  // empty when the file has no header row

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

/// Comma-separated, optional header (detected by a non-numeric first row).
/// Throws FormatError naming row and column for bad cells or ragged rows.
RawDataset load_csv(const std::filesystem::path& path);
RawDataset parse_csv(const std::string& text);

/// Smooth nonlinear regression problem used when no dataset file is given.
/// Targets are 20 + 5·tanh(aᵀx) + bᵀx with Gaussian residual noise of sd 1.
RawDataset make_synthetic_dataset(std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace crowd_al
