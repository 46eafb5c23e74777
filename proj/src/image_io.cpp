#include "rbt/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include "rbt/error.hpp"

namespace rbt {

RasterImage RasterImage::zeros(int width, int height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::kInvalidArgument, "negative image size");
  RasterImage img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * height, 0.0f);
  return img;
}

void RasterImage::validate() const {
  if (width < 0 || height < 0 || pixels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidArgument, "image size does not match pixel count");
  }
  for (float v : pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorCode::kInvalidArgument, "intensity outside [0,1]");
  }
}

RasterImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::kIo, "cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kIo, "cannot decode PNG " + path.string() + ": " + msg);
  }
  auto img = RasterImage::zeros(static_cast<int>(image.width), static_cast<int>(image.height));
  std::transform(buf.begin(), buf.end(), img.pixels.begin(), [](png_byte b) { return b / 255.0f; });
  return img;
}

namespace {

std::uint8_t to_byte(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw Error(ErrorCode::kMalformedFile, "truncated IDX header in " + path.string());
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                              static_cast<char>(v)};
  out.write(b.data(), 4);
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace

void write_png(const std::filesystem::path& path, const RasterImage& img) {
  img.validate();
  std::vector<png_byte> buf(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), buf.begin(), to_byte);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, "cannot write PNG " + path.string() + ": " + image.message);
  }
}

std::vector<RasterImage> read_idx_images(const std::filesystem::path& path) {
  auto in = open_binary(path);
  if (read_be32(in, path) != 0x00000803) throw Error(ErrorCode::kMalformedFile, path.string() + " is not an IDX image file");
  const auto n = read_be32(in, path);
  const auto rows = read_be32(in, path);
  const auto cols = read_be32(in, path);
  if (rows > 65536 || cols > 65536) throw Error(ErrorCode::kMalformedFile, "implausible IDX image size");
  std::vector<RasterImage> out;
  out.reserve(n);
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw Error(ErrorCode::kMalformedFile, "truncated IDX image data in " + path.string());
    }
    auto img = RasterImage::zeros(static_cast<int>(cols), static_cast<int>(rows));
    std::transform(buf.begin(), buf.end(), img.pixels.begin(), [](unsigned char b) { return b / 255.0f; });
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  auto in = open_binary(path);
  if (read_be32(in, path) != 0x00000801) throw Error(ErrorCode::kMalformedFile, path.string() + " is not an IDX label file");
  std::vector<std::uint8_t> out(read_be32(in, path));
  if (!in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()))) {
    throw Error(ErrorCode::kMalformedFile, "truncated IDX labels in " + path.string());
  }
  return out;
}

void write_idx_images(const std::filesystem::path& path, const std::vector<RasterImage>& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const int rows = images.empty() ? 0 : images.front().height;
  const int cols = images.empty() ? 0 : images.front().width;
  write_be32(out, 0x00000803);
  write_be32(out, static_cast<std::uint32_t>(images.size()));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  for (const auto& img : images) {
    if (img.width != cols || img.height != rows) throw Error(ErrorCode::kInvalidArgument, "IDX images must share a size");
    for (float v : img.pixels) out.put(static_cast<char>(to_byte(v)));
  }
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_be32(out, 0x00000801);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

RasterImage load_image(const std::string& ref) {
  std::string file = ref;
  std::size_t index = 0;
  bool indexed = false;
  if (auto hash = ref.rfind('#'); hash != std::string::npos) {
    try {
      index = std::stoul(ref.substr(hash + 1));
      file = ref.substr(0, hash);
      indexed = true;
    } catch (const std::exception&) {
    }
  }
  std::string ext = std::filesystem::path(file).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
    if (indexed) throw Error(ErrorCode::kInvalidArgument, "PNG references take no index: " + ref);
    return read_png(file);
  }
  if (ext == ".idx" || ext == ".idx3-ubyte" || ext == ".ubyte") {
    auto images = read_idx_images(file);
    if (index >= images.size()) throw Error(ErrorCode::kInvalidArgument, "IDX index out of range: " + ref);
    return std::move(images[index]);
  }
  throw Error(ErrorCode::kInvalidArgument, "unsupported image type: " + ref);
}

}  // namespace rbt
