// SPDX-License-Identifier: Apache-2.0
#include "gof/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <vector>

#include <png.h>

#include "gof/errors.hpp"

namespace gof {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<uint8_t>(std::lround(v * 255.0));
}

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw InputError("cannot open image '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("libpng initialization failed");
  }
  std::vector<uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path + "' is not a readable PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_expand(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const size_t row_bytes = png_get_rowbytes(png, info);
  if (row_bytes != static_cast<size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path + "': unsupported PNG layout");
  }
  pixels.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<int>(width), static_cast<int>(height), 3);
  for (size_t i = 0; i < pixels.size(); ++i) img.data[i] = pixels[i] / 255.0;
  return img;
}

void write_png(const Image& image, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw InputError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw InputError("libpng initialization failed");
  }
  std::vector<uint8_t> bytes(image.data.size());
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(image.data[i]);
  std::vector<png_bytep> rows(image.height);
  const size_t stride = static_cast<size_t>(image.width) * image.channels;
  for (int y = 0; y < image.height; ++y) rows[y] = bytes.data() + y * stride;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("failed writing '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width, image.height, 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Next whitespace-delimited token of a PNM header, skipping comments.
std::string pnm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

Image read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open image '" + path + "'");
  const std::string magic = pnm_token(is);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw FormatError("'" + path + "' is not a PGM/PPM file");
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(pnm_token(is));
    height = std::stoi(pnm_token(is));
    maxval = std::stoi(pnm_token(is));
  } catch (const std::exception&) {
    throw FormatError("'" + path + "': malformed PPM header");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    throw FormatError("'" + path + "': unsupported PPM dimensions or depth");
  }
  const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  const size_t count = static_cast<size_t>(width) * height * channels;
  std::vector<int> raw(count);
  if (magic == "P5" || magic == "P6") {
    std::vector<unsigned char> bytes(count);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<size_t>(is.gcount()) != count) throw FormatError("'" + path + "': truncated PPM data");
    for (size_t i = 0; i < count; ++i) raw[i] = bytes[i];
  } else {
    for (size_t i = 0; i < count; ++i) {
      if (!(is >> raw[i])) throw FormatError("'" + path + "': truncated PPM data");
    }
  }
  Image img(width, height, 3);
  for (size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) {
      const int v = raw[p * channels + (channels == 3 ? c : 0)];
      img.data[p * 3 + c] = std::clamp(v, 0, maxval) / static_cast<double>(maxval);
    }
  }
  return img;
}

void write_ppm(const Image& image, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  os << (image.channels == 1 ? "P5\n" : "P6\n") << image.width << ' ' << image.height << "\n255\n";
  std::vector<char> bytes(image.data.size());
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<char>(to_byte(image.data[i]));
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw InputError("failed writing '" + path + "'");
}

}  // namespace

Image read_image(const std::string& path) {
  if (ends_with(path, ".png")) return read_png(path);
  if (ends_with(path, ".ppm") || ends_with(path, ".pgm") || ends_with(path, ".pnm")) return read_ppm(path);
  throw InputError("unsupported image format: '" + path + "'");
}

void write_image(const Image& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw InputError("write_image: only 1- or 3-channel images are supported");
  }
  if (ends_with(path, ".png")) return write_png(image, path);
  if (ends_with(path, ".ppm") || ends_with(path, ".pgm")) return write_ppm(image, path);
  throw InputError("unsupported image format: '" + path + "'");
}

Image depth_visualization(const Image& depth, const Image& accumulation, double min_accumulation) {
  Image out(depth.width, depth.height, 1);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (size_t i = 0; i < depth.pixel_count(); ++i) {
    if (accumulation.data[i] <= min_accumulation) continue;
    lo = std::min(lo, depth.data[i]);
    hi = std::max(hi, depth.data[i]);
  }
  if (!(hi >= lo)) return out;
  const double range = hi > lo ? hi - lo : 1.0;
  for (size_t i = 0; i < depth.pixel_count(); ++i) {
    if (accumulation.data[i] <= min_accumulation) continue;
    out.data[i] = (depth.data[i] - lo) / range;
  }
  return out;
}

Image normal_visualization(const Image& normal) {
  Image out(normal.width, normal.height, 3);
  for (size_t i = 0; i < normal.data.size(); ++i) out.data[i] = 0.5 * (normal.data[i] + 1.0);
  return out;
}

}  // namespace gof
