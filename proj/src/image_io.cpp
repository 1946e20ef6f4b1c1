#include "procrecon/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

namespace procrecon {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

// libpng reports errors by longjmp back into the calling frame; the message is kept here so
// the caller can rethrow it as a C++ exception outside libpng.
struct PngError {
  char message[256] = "unknown error";
};

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof err->message, "%s", msg);
  png_longjmp(png, 1);
}
void png_warn(png_structp, png_const_charp) {}

void write_rows(const std::filesystem::path& path, const Image8& image, int color_type,
                const std::vector<std::uint8_t>* palette) {
  if (image.width <= 0 || image.height <= 0 ||
      image.data.size() != static_cast<std::size_t>(image.width) * image.height * image.channels)
    throw IoError("write_png: image size does not match its data");
  FilePtr f = open_file(path, "wb");
  PngError err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  std::vector<png_color> colors;
  if (palette != nullptr)
    for (std::size_t i = 0; i + 2 < palette->size(); i += 3)
      colors.push_back({(*palette)[i], (*palette)[i + 1], (*palette)[i + 2]});
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string() + ": png: " + err.message);
  }
  {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, image.width, image.height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    if (palette != nullptr) png_set_PLTE(png, info, colors.data(), static_cast<int>(colors.size()));
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y)
      png_write_row(png, const_cast<png_bytep>(image.data.data() + y * stride));
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image8 read_png(const std::filesystem::path& path, PngLoad mode) {
  FilePtr f = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) throw IoError(path.string() + " is not a PNG");
  PngError err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  Image8 img;
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path.string() + ": png: " + err.message);
  }
  {
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (mode == PngLoad::Index && color == PNG_COLOR_TYPE_PALETTE) {
      if (depth < 8) png_set_packing(png);
    } else {
      if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
      if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
      png_color_16 black{};
      png_set_background(png, &black, PNG_BACKGROUND_GAMMA_SCREEN, 0, 1.0);
      const bool colored = (color & PNG_COLOR_MASK_COLOR) != 0 || color == PNG_COLOR_TYPE_PALETTE;
      if (mode == PngLoad::Rgb && !colored) png_set_gray_to_rgb(png);
      if (mode != PngLoad::Rgb && colored) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.resize(stride * img.height);
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = raw.data() + y * stride;
    png_read_image(png, rows.data());
    img.data = std::move(raw);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  const int want = mode == PngLoad::Rgb ? 3 : 1;
  if (img.channels != want)
    throw IoError(path.string() + ": unsupported PNG layout (" + std::to_string(img.channels) + " channels)");
  return img;
}

void write_png(const std::filesystem::path& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3) throw IoError("write_png: only 1 or 3 channels supported");
  write_rows(path, image, image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, nullptr);
}

void write_png_indexed(const std::filesystem::path& path, const Image8& indices, const std::vector<std::uint8_t>& palette) {
  if (indices.channels != 1) throw IoError("write_png_indexed: index image must have one channel");
  write_rows(path, indices, PNG_COLOR_TYPE_PALETTE, &palette);
}

SilhouetteMask load_mask_png(const std::filesystem::path& path) {
  Image8 img = read_png(path, PngLoad::Gray);
  SilhouetteMask m(img.width, img.height);
  for (std::size_t i = 0; i < m.coverage.size(); ++i) m.coverage[i] = img.data[i] / 255.0;
  return m;
}

void save_mask_png(const std::filesystem::path& path, const SilhouetteMask& mask) {
  Image8 img{mask.width, mask.height, 1, std::vector<std::uint8_t>(mask.pixel_count())};
  for (std::size_t i = 0; i < mask.coverage.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(mask.coverage[i], 0.0, 1.0) * 255.0));
  write_png(path, img);
}

}  // namespace procrecon
