#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "procrecon/render.hpp"

namespace procrecon {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit image with 1 (gray or palette index) or 3 (RGB) interleaved channels.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;
};

enum class PngLoad {
  Gray,   // any colour type converted to luminance, alpha composited over black
  Rgb,    // expanded to RGB, alpha composited over black
  Index,  // raw palette indices (or gray values for non-palette files)
};

Image8 read_png(const std::filesystem::path& path, PngLoad mode);
void write_png(const std::filesystem::path& path, const Image8& image);
/// Palette PNG; `palette` holds RGB triples.
void write_png_indexed(const std::filesystem::path& path, const Image8& indices,
                       const std::vector<std::uint8_t>& palette);

/// Coverage = value / 255.
SilhouetteMask load_mask_png(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const SilhouetteMask& mask);

}  // namespace procrecon
