#include "posthoc/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "posthoc/errors.hpp"
#include "posthoc/text_io.hpp"

namespace posthoc {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(const std::string& bytes, std::size_t& pos,
                       const std::string& origin) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() &&
         !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
         bytes[pos] != '#') {
    ++pos;
  }
  if (start == pos) {
    throw ValidationError(origin + ": truncated PNM header");
  }
  return bytes.substr(start, pos - start);
}

int header_int(const std::string& bytes, std::size_t& pos,
               const std::string& origin, const std::string& what) {
  const auto token = next_token(bytes, pos, origin);
  for (const char c : token) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ValidationError(origin + ": " + what + " must be a decimal integer");
    }
  }
  try {
    return std::stoi(token);
  } catch (const std::exception&) {
    throw ValidationError(origin + ": " + what + " out of range");
  }
}

}  // namespace

RasterImage parse_pnm(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 2 || bytes[0] != 'P' ||
      (bytes[1] != '5' && bytes[1] != '6')) {
    throw ValidationError(origin +
                          ": unsupported format (expected binary P5 or P6)");
  }
  RasterImage image;
  image.channels = bytes[1] == '5' ? 1 : 3;

  std::size_t pos = 2;
  image.width = header_int(bytes, pos, origin, "width");
  image.height = header_int(bytes, pos, origin, "height");
  const int maxval = header_int(bytes, pos, origin, "maxval");
  if (image.width <= 0 || image.height <= 0) {
    throw ValidationError(origin + ": dimensions must be positive");
  }
  if (maxval <= 0 || maxval > 255) {
    throw ValidationError(origin + ": only maxval <= 255 is supported");
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw ValidationError(origin + ": malformed header/raster separator");
  }
  ++pos;

  const std::size_t expected = image.pixel_count() *
                               static_cast<std::size_t>(image.channels);
  if (bytes.size() - pos < expected) {
    throw ValidationError(origin + ": raster is shorter than the header claims");
  }
  image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + expected));
  return image;
}

RasterImage load_pnm(const std::filesystem::path& path) {
  return parse_pnm(read_text_file(path), path.string());
}

std::string encode_pnm(const RasterImage& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw ValidationError("encode_pnm: channels must be 1 or 3");
  }
  std::string out = image.channels == 1 ? "P5" : "P6";
  out += "\n" + std::to_string(image.width) + " " +
         std::to_string(image.height) + "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  return out;
}

std::vector<std::uint8_t> to_luma(const RasterImage& image) {
  if (image.channels == 1) return image.pixels;
  std::vector<std::uint8_t> luma(image.pixel_count());
  for (std::size_t i = 0; i < luma.size(); ++i) {
    const double r = image.pixels[3 * i];
    const double g = image.pixels[3 * i + 1];
    const double b = image.pixels[3 * i + 2];
    const double value = 0.299 * r + 0.587 * g + 0.114 * b;
    luma[i] = static_cast<std::uint8_t>(std::lround(value));
  }
  return luma;
}

double histogram_entropy(const RasterImage& image) {
  if (image.pixels.empty()) {
    throw ValidationError("histogram_entropy: empty image");
  }
  double total = 0.0;
  const auto n = static_cast<double>(image.pixel_count());
  for (int c = 0; c < image.channels; ++c) {
    std::size_t histogram[32] = {0};
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
      const std::uint8_t v =
          image.pixels[i * static_cast<std::size_t>(image.channels) +
                       static_cast<std::size_t>(c)];
      histogram[v >> 3] += 1;
    }
    double entropy = 0.0;
    for (const auto count : histogram) {
      if (count == 0) continue;
      const double p = static_cast<double>(count) / n;
      entropy -= p * std::log(p);
    }
    total += entropy;
  }
  return total;
}

int fast_corner_count_gray(const std::vector<std::uint8_t>& gray, int width,
                           int height) {
  if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) !=
      gray.size()) {
    throw ValidationError("fast_corner_count: size mismatch");
  }
  // 16-pixel Bresenham circle of radius 3, clockwise from 12 o'clock.
  static constexpr int kOffsets[16][2] = {
      {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
      {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};
  constexpr int kThreshold = 20;
  constexpr int kArc = 9;

  if (width < 7 || height < 7) return 0;
  int corners = 0;
  for (int y = 3; y < height - 3; ++y) {
    for (int x = 3; x < width - 3; ++x) {
      const int center = gray[static_cast<std::size_t>(y) *
                                  static_cast<std::size_t>(width) +
                              static_cast<std::size_t>(x)];
      const int hi = center + kThreshold;
      const int lo = center - kThreshold;
      int ring[16];
      for (int k = 0; k < 16; ++k) {
        ring[k] = gray[static_cast<std::size_t>(y + kOffsets[k][1]) *
                           static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(x + kOffsets[k][0])];
      }
      // Longest circular run of brighter-than / darker-than pixels.
      int bright_run = 0;
      int dark_run = 0;
      int best_bright = 0;
      int best_dark = 0;
      for (int k = 0; k < 16 + kArc - 1; ++k) {
        const int v = ring[k % 16];
        bright_run = v > hi ? bright_run + 1 : 0;
        dark_run = v < lo ? dark_run + 1 : 0;
        best_bright = std::max(best_bright, bright_run);
        best_dark = std::max(best_dark, dark_run);
        if (best_bright >= kArc || best_dark >= kArc) break;
      }
      if (best_bright >= kArc || best_dark >= kArc) ++corners;
    }
  }
  return corners;
}

int fast_corner_count(const RasterImage& image) {
  const auto gray = to_luma(image);
  return fast_corner_count_gray(gray, image.width, image.height);
}

}  // namespace posthoc
