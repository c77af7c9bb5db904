#include "rvos/image_io.hpp"

#include <png.h>

#include <cmath>
#include <vector>

#include "rvos/errors.hpp"

namespace rvos {

namespace {

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, png_uint_32 format, int& h,
                                   int& w) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw LoadError("cannot read PNG " + path.string() + ": " + img.message);
  img.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw LoadError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  h = static_cast<int>(img.height);
  w = static_cast<int>(img.width);
  return buf;
}

void write_png(const std::filesystem::path& path, png_uint_32 format, int h, int w,
               const std::vector<std::uint8_t>& buf) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
    throw LoadError("cannot write PNG " + path.string() + ": " + img.message);
}

}  // namespace

void write_rgb_png(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(image.height * image.width * 3));
  for (Eigen::Index i = 0; i < image.pixels.size(); ++i) {
    const double v = std::clamp(image.pixels.data()[i], 0.0, 1.0);
    buf[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  write_png(path, PNG_FORMAT_RGB, image.height, image.width, buf);
}

Image read_rgb_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto buf = read_png(path, PNG_FORMAT_RGB, h, w);
  Image image(h, w);
  for (Eigen::Index i = 0; i < image.pixels.size(); ++i)
    image.pixels.data()[i] = buf[static_cast<std::size_t>(i)] / 255.0;
  return image;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(mask.size()));
  for (Eigen::Index i = 0; i < mask.size(); ++i) buf[static_cast<std::size_t>(i)] = mask.data()[i] ? 255 : 0;
  write_png(path, PNG_FORMAT_GRAY, static_cast<int>(mask.rows()), static_cast<int>(mask.cols()), buf);
}

Mask read_mask_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto buf = read_png(path, PNG_FORMAT_GRAY, h, w);
  Mask mask(h, w);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = buf[static_cast<std::size_t>(i)] >= 128 ? 1 : 0;
  return mask;
}

}  // namespace rvos
