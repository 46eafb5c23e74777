#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbt/glossary.hpp"
#include "rbt/image_io.hpp"

namespace rbt::morpho {

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 1 = foreground

  static BinaryMask empty(int width, int height);
  bool at(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height && bits[static_cast<std::size_t>(y) * width + x];
  }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v; }
  std::size_t count() const;
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

struct MorphoMeasures {
  double thickness = 0;  // px
  double slant = 0;      // horizontal shear per row; rightward lean positive
  double height = 0;     // px
  double width = 0;      // px, after de-shearing
};

inline constexpr double kDefaultThreshold = 0.5;

// Pixels with intensity >= threshold. Requires 0 < threshold < 1.
BinaryMask binarize(const RasterImage& img, double threshold = kDefaultThreshold);

// 8-connected component labels (-1 on background).
std::vector<int> label_components(const BinaryMask& mask, int* count = nullptr);

// Zhang-Suen thinning; pixels outside the image count as background.
BinaryMask skeletonize(const BinaryMask& mask);

// Exact Euclidean distance from each foreground pixel centre to the nearest
// background pixel centre (outside the image counts as background); 0 on background.
std::vector<double> distance_transform(const BinaryMask& mask);

// -cov(x, y) / var(y) over foreground pixels, with y growing downward.
double shear_coefficient(const BinaryMask& mask);

// Shifts each row by slant * (y - centroid_y), nearest-pixel.
BinaryMask deshear(const BinaryMask& mask, double slant);

MorphoMeasures measure(const BinaryMask& mask);
MorphoMeasures measure(const RasterImage& img, double threshold = kDefaultThreshold);

// Class term plus one band term per measure group ("thickness", "slant", "height").
std::vector<std::string> label(const MorphoMeasures& m, const Glossary& g, const GlossaryTerm& class_term);
std::vector<std::string> label(const RasterImage& img, const Glossary& g, const GlossaryTerm& class_term,
                               double threshold = kDefaultThreshold);

}  // namespace rbt::morpho
