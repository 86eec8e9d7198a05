#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "recon/types.hpp"

namespace recon::io {

enum class Normalization { percentile99, fixed_window };

struct Window {
  double lo = 0.0;
  double hi = 1.0;
};

// Writes path_base.png (16-bit grayscale), path_base.raw (row-major
// little-endian float64), and path_base.json (dims, dtype, window).
// percentile99 maps the 99th-percentile value to white; fixed_window uses
// the window argument. Returns the window actually applied.
Window export_image(const RVec& img, Grid2 grid, const std::string& path_base,
                    Normalization norm, Window window = {});

// 8-bit color PNG; channels share one display window ([0, joint 99th
// percentile]).
void export_rgb_png(const RVec& r, const RVec& g, const RVec& b, Grid2 grid,
                    const std::string& path);

// Reads the raw+sidecar pair written by export_image.
std::pair<RVec, Grid2> read_raw_image(const std::string& path_base);

// CSV with a position column followed by one column per named series.
void write_profile_csv(const std::string& path, const std::string& position_name,
                       const RVec& positions,
                       const std::vector<std::pair<std::string, RVec>>& series);

// Generic numeric table, one header row, %.17g cells.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<RVec>& rows);

// manifest.json listing every artifact (relative path, size, CRC-32).
void write_manifest(const std::string& dir, std::vector<std::string> relative_paths);

std::uint32_t file_crc32(const std::string& path);

}  // namespace recon::io
