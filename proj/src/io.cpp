#include "recon/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>
#include <png.h>
#include <zlib.h>

#include "recon/errors.hpp"

using json = nlohmann::ordered_json;

namespace recon::io {

namespace {

void write_png(const std::string& path, Grid2 g, int bit_depth, int color_type,
               std::vector<png_bytep>& rows, bool swap16) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("png write failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(g.nx), png_uint_32(g.ny), bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (swap16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("close failed: " + path);
}

double percentile99(RVec values) {
  if (values.empty()) return 0.0;
  const double rank = std::ceil(0.99 * double(values.size())) - 1.0;
  const std::size_t idx = rank <= 0.0 ? 0 : std::min(values.size() - 1, std::size_t(rank));
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[idx];
}

const char* norm_name(Normalization n) {
  return n == Normalization::percentile99 ? "percentile99" : "fixed_window";
}

}  // namespace

Window export_image(const RVec& img, Grid2 grid, const std::string& path_base,
                    Normalization norm, Window window) {
  if (img.size() != grid.voxels() || img.empty())
    throw ArgumentError("image does not match grid");
  double min_v = img[0];
  for (const double v : img) {
    if (!std::isfinite(v)) throw ArgumentError("image contains non-finite values");
    min_v = std::min(min_v, v);
  }
  Window w = window;
  if (norm == Normalization::percentile99) {
    w.lo = std::min(0.0, min_v);
    w.hi = percentile99(img);
  }
  if (!(w.hi > w.lo)) w.hi = w.lo + 1.0;

  std::vector<std::uint16_t> pix(img.size());
  const double scale = 65535.0 / (w.hi - w.lo);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double t = std::clamp((img[i] - w.lo) * scale, 0.0, 65535.0);
    pix[i] = std::uint16_t(std::lround(t));
  }
  std::vector<png_bytep> rows(grid.ny);
  for (int y = 0; y < grid.ny; ++y)
    rows[y] = reinterpret_cast<png_bytep>(pix.data() + std::size_t(y) * grid.nx);
  write_png(path_base + ".png", grid, 16, PNG_COLOR_TYPE_GRAY, rows, true);

  const std::string raw_path = path_base + ".raw";
  std::ofstream rf(raw_path, std::ios::binary);
  if (!rf) throw IoError("cannot open for writing: " + raw_path);
  rf.write(reinterpret_cast<const char*>(img.data()),
           std::streamsize(img.size() * sizeof(double)));
  if (!rf) throw IoError("write failed: " + raw_path);
  rf.close();

  json side;
  side["width"] = grid.nx;
  side["height"] = grid.ny;
  side["dtype"] = "float64";
  side["byte_order"] = "little-endian";
  side["order"] = "row-major";
  side["normalization"] = norm_name(norm);
  side["window"] = {{"lo", w.lo}, {"hi", w.hi}};
  const std::string side_path = path_base + ".json";
  std::ofstream sf(side_path, std::ios::binary);
  if (!sf) throw IoError("cannot open for writing: " + side_path);
  sf << side.dump(2) << "\n";
  if (!sf) throw IoError("write failed: " + side_path);
  return w;
}

void export_rgb_png(const RVec& r, const RVec& g, const RVec& b, Grid2 grid,
                    const std::string& path) {
  const std::size_t n = grid.voxels();
  if (r.size() != n || g.size() != n || b.size() != n || n == 0)
    throw ArgumentError("channels do not match grid");
  RVec all;
  all.reserve(3 * n);
  all.insert(all.end(), r.begin(), r.end());
  all.insert(all.end(), g.begin(), g.end());
  all.insert(all.end(), b.begin(), b.end());
  for (const double v : all)
    if (!std::isfinite(v)) throw ArgumentError("image contains non-finite values");
  const double hi = std::max(percentile99(std::move(all)), 1e-12);

  std::vector<std::uint8_t> pix(3 * n);
  const auto to8 = [&](double v) {
    return std::uint8_t(std::lround(std::clamp(v / hi, 0.0, 1.0) * 255.0));
  };
  for (std::size_t i = 0; i < n; ++i) {
    pix[3 * i] = to8(r[i]);
    pix[3 * i + 1] = to8(g[i]);
    pix[3 * i + 2] = to8(b[i]);
  }
  std::vector<png_bytep> rows(grid.ny);
  for (int y = 0; y < grid.ny; ++y)
    rows[y] = pix.data() + std::size_t(y) * grid.nx * 3;
  write_png(path, grid, 8, PNG_COLOR_TYPE_RGB, rows, false);
}

std::pair<RVec, Grid2> read_raw_image(const std::string& path_base) {
  const std::string side_path = path_base + ".json";
  std::ifstream sf(side_path, std::ios::binary);
  if (!sf) throw IoError("cannot open: " + side_path);
  json side;
  try {
    side = json::parse(sf);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(side_path, e.byte, e.what());
  }
  Grid2 grid;
  try {
    grid.nx = side.at("width").get<int>();
    grid.ny = side.at("height").get<int>();
    if (side.at("dtype").get<std::string>() != "float64")
      throw FormatError(side_path, 0, "unsupported dtype");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side_path, 0, e.what());
  }
  if (grid.nx < 1 || grid.ny < 1) throw FormatError(side_path, 0, "invalid dimensions");

  const std::string raw_path = path_base + ".raw";
  std::ifstream rf(raw_path, std::ios::binary);
  if (!rf) throw IoError("cannot open: " + raw_path);
  RVec img(grid.voxels());
  rf.read(reinterpret_cast<char*>(img.data()), std::streamsize(img.size() * sizeof(double)));
  if (std::size_t(rf.gcount()) != img.size() * sizeof(double))
    throw FormatError(raw_path, std::size_t(rf.gcount()), "truncated raw image");
  rf.get();
  if (!rf.eof()) throw FormatError(raw_path, img.size() * sizeof(double), "trailing bytes");
  return {std::move(img), grid};
}

namespace {

void write_csv_row(std::ofstream& out, const RVec& row) {
  char cell[40];
  for (std::size_t i = 0; i < row.size(); ++i) {
    std::snprintf(cell, sizeof cell, "%.17g", row[i]);
    if (i) out << ',';
    out << cell;
  }
  out << '\n';
}

}  // namespace

void write_profile_csv(const std::string& path, const std::string& position_name,
                       const RVec& positions,
                       const std::vector<std::pair<std::string, RVec>>& series) {
  for (const auto& [name, vals] : series)
    if (vals.size() != positions.size())
      throw ArgumentError("series '" + name + "' length does not match positions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << position_name;
  for (const auto& [name, vals] : series) out << ',' << name;
  out << '\n';
  RVec row(1 + series.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    row[0] = positions[i];
    for (std::size_t s = 0; s < series.size(); ++s) row[1 + s] = series[s].second[i];
    write_csv_row(out, row);
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<RVec>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw ArgumentError("row width does not match header");
    write_csv_row(out, row);
  }
  if (!out) throw IoError("write failed: " + path);
}

std::uint32_t file_crc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  uLong crc = crc32(0L, Z_NULL, 0);
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), uInt(in.gcount()));
    if (in.eof()) break;
  }
  return std::uint32_t(crc);
}

void write_manifest(const std::string& dir, std::vector<std::string> relative_paths) {
  std::sort(relative_paths.begin(), relative_paths.end());
  json man;
  man["files"] = json::array();
  for (const auto& rel : relative_paths) {
    const std::string full = dir + "/" + rel;
    std::ifstream f(full, std::ios::binary | std::ios::ate);
    if (!f) throw IoError("manifest target missing: " + full);
    const std::uint64_t bytes = std::uint64_t(f.tellg());
    f.close();
    char crc_hex[16];
    std::snprintf(crc_hex, sizeof crc_hex, "%08x", file_crc32(full));
    man["files"].push_back({{"path", rel}, {"bytes", bytes}, {"crc32", crc_hex}});
  }
  const std::string man_path = dir + "/manifest.json";
  std::ofstream out(man_path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + man_path);
  out << man.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + man_path);
}

}  // namespace recon::io
