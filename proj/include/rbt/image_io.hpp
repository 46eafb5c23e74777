#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rbt {

// Row-major grayscale image with intensities in [0,1].
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  static RasterImage zeros(int width, int height);
  float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  // Throws InvalidArgument when the size or an intensity is out of contract.
  void validate() const;
};

RasterImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RasterImage& img);

// IDX containers: images use magic 0x00000803 (n, rows, cols, u8 pixels),
// labels use 0x00000801 (n, u8 labels).
std::vector<RasterImage> read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const std::vector<RasterImage>& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

// Chooses the decoder from the extension. An IDX reference may carry a
// "#index" suffix selecting one image; without it the first image is used.
RasterImage load_image(const std::string& ref);

}  // namespace rbt
