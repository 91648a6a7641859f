#pragma once

// On-disk container for a corrupted dataset.
//
// Binary layout (all integers and floats little-endian):
//   bytes 0-3   magic "SPFD"
//   u32         format version (1)
//   u64         d
//   u64         N
//   f64         eps
//   u8          model kind (0 = sparse mean, 1 = spiked covariance)
//   N * d f64   samples, row-major
//   ceil(N/8)   inlier mask, bit i of byte i/8 (LSB first)
//
// A plain-text sidecar at `<path>.meta` holds the generating model and any
// extra key = value lines the caller supplies (for example the corruption spec
// and seed).

#include <filesystem>
#include <map>
#include <string>

#include "sparsefilter/contamination.h"

namespace sparsefilter {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Throws IoError with the path on any failure.
void write_dataset(const std::filesystem::path& path, const CorruptedDataset& data,
                   const std::map<std::string, std::string>& extra = {});

// Throws IoError on malformed or truncated input.
CorruptedDataset read_dataset(const std::filesystem::path& path);

// Sidecar key = value pairs, including the extra entries written with the dataset.
std::map<std::string, std::string> read_sidecar(const std::filesystem::path& path);

}  // namespace sparsefilter
