#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace posthoc {

// 8-bit raster, row-major, channels interleaved (1 = gray, 3 = RGB).
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

// Binary PGM (P5) and PPM (P6) with maxval up to 255. Header comments
// starting with '#' are honored. Anything else is a validation error.
RasterImage load_pnm(const std::filesystem::path& path);
RasterImage parse_pnm(const std::string& bytes, const std::string& origin);

// Serialization used by tests and the synthetic tooling.
std::string encode_pnm(const RasterImage& image);

// Rec. 601 luma, rounded to the nearest integer. Identity for gray input.
std::vector<std::uint8_t> to_luma(const RasterImage& image);

// Sum over channels of the Shannon entropy (nats) of a 32-bin intensity
// histogram. A constant image scores 0 regardless of its color.
double histogram_entropy(const RasterImage& image);

// Number of FAST corners (segment test, 16-pixel Bresenham circle of radius
// 3, at least 9 contiguous pixels all brighter than center + 20 or all
// darker than center - 20) on the luma plane. Pixels within 3 of the border
// are skipped; no non-maximum suppression.
int fast_corner_count(const RasterImage& image);
int fast_corner_count_gray(const std::vector<std::uint8_t>& gray, int width,
                           int height);

}  // namespace posthoc
