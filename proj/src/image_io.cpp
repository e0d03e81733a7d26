#include "phasenet/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasenet/container.hpp"

namespace phasenet {
namespace {

struct ReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

void read_callback(png_structp png, png_bytep out, png_size_t n) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (n > cursor->bytes->size() - cursor->pos) png_error(png, "unexpected end of file");
  std::memcpy(out, cursor->bytes->data() + cursor->pos, n);
  cursor->pos += n;
}

void write_callback(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void flush_callback(png_structp) {}

// libpng reports errors through this hook; the message is kept so the
// longjmp target can rethrow it as an exception.
void error_callback(png_structp png, png_const_charp message) {
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  *buffer = message;
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw std::runtime_error("cannot decode " + path.string() + ": not a PNG file");

  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, error_callback, warning_callback);
  if (!png) throw std::runtime_error("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{&bytes, 0};
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> pixels;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("cannot decode " + path.string() + ": " + error);
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3)
    throw std::runtime_error("cannot decode " + path.string() + ": unsupported channel layout");
  Image img(height, width, channels);
  const double scale = out_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = static_cast<std::size_t>(x) * channels + c;
        const double v = out_depth == 16 ? (rows[y][2 * i] << 8 | rows[y][2 * i + 1]) : rows[y][i];
        img(y, x, c) = v / scale;
      }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_png: bit depth must be 8 or 16");
  if (image.channels() != 1 && image.channels() != 3)
    throw std::invalid_argument("write_png: only 1- or 3-channel images are supported");
  if (image.height() < 1 || image.width() < 1) throw std::invalid_argument("write_png: empty image");

  const int channels = image.channels();
  const int bytes_per_sample = bit_depth / 8;
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  const std::size_t row_bytes = static_cast<std::size_t>(image.width()) * channels * bytes_per_sample;
  std::vector<std::uint8_t> pixels(row_bytes * image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(image(y, x, c), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(v * scale));
        std::uint8_t* p = pixels.data() + y * row_bytes + (static_cast<std::size_t>(x) * channels + c) * bytes_per_sample;
        if (bit_depth == 16) {
          p[0] = static_cast<std::uint8_t>(q >> 8);
          p[1] = static_cast<std::uint8_t>(q & 0xff);
        } else {
          p[0] = static_cast<std::uint8_t>(q);
        }
      }

  std::string error;
  std::vector<std::uint8_t> encoded;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, error_callback, warning_callback);
  if (!png) throw std::runtime_error("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(image.height());
  for (int y = 0; y < image.height(); ++y) rows[y] = pixels.data() + y * row_bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("cannot encode " + path.string() + ": " + error);
  }
  png_set_write_fn(png, &encoded, write_callback, flush_callback);
  png_set_IHDR(png, info, image.width(), image.height(), bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  write_file_atomic(path, encoded);
}

}  // namespace phasenet
