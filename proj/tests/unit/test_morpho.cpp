#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/morpho_fixtures.hpp"
#include "rbt/error.hpp"
#include "rbt/image_io.hpp"
#include "rbt/morpho.hpp"

namespace rbt::morpho {
namespace {

BinaryMask random_blob(std::mt19937& rng, int size = 24) {
  auto m = BinaryMask::empty(size, size);
  std::uniform_int_distribution<int> pos(3, size - 4);
  const int strokes = 1 + static_cast<int>(rng() % 3);
  for (int s = 0; s < strokes; ++s) {
    int x = pos(rng), y = pos(rng);
    const int len = 4 + static_cast<int>(rng() % 10);
    const int dx = static_cast<int>(rng() % 3) - 1;
    const int dy = static_cast<int>(rng() % 3) - 1;
    for (int k = 0; k < len; ++k) {
      for (int oy = 0; oy < 2; ++oy)
        for (int ox = 0; ox < 2; ++ox) {
          const int px = std::clamp(x + ox, 0, size - 1);
          const int py = std::clamp(y + oy, 0, size - 1);
          m.set(px, py, true);
        }
      x = std::clamp(x + dx, 1, size - 3);
      y = std::clamp(y + (dx == 0 && dy == 0 ? 1 : dy), 1, size - 3);
    }
  }
  return m;
}

BinaryMask dilate(const BinaryMask& m) {
  auto out = m;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y) || m.at(x - 1, y) || m.at(x + 1, y) || m.at(x, y - 1) || m.at(x, y + 1)) out.set(x, y, true);
  return out;
}

void flood(const BinaryMask& m, std::vector<bool>& seen, int x, int y) {
  if (!m.at(x, y) || seen[y * m.width + x]) return;
  seen[y * m.width + x] = true;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) flood(m, seen, x + dx, y + dy);
}

int components_by_flood_fill(const BinaryMask& m) {
  std::vector<bool> seen(m.bits.size(), false);
  int n = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y) && !seen[y * m.width + x]) {
        ++n;
        flood(m, seen, x, y);
      }
  return n;
}

double slant_by_sums(const BinaryMask& m) {
  double n = 0, sx = 0, sy = 0, sxy = 0, syy = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        n += 1;
        sx += x;
        sy += y;
        sxy += double(x) * y;
        syy += double(y) * y;
      }
  return -(sxy - sx * sy / n) / (syy - sy * sy / n);
}

TEST(Morpho, BinarizeContract) {
  EXPECT_EQ(binarize(RasterImage::zeros(5, 5)).count(), 0u);
  auto img = bar(5, 20);
  auto mask = binarize(img);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_EQ(mask.bits[i], img.pixels[i] >= 0.5f);
  EXPECT_EQ(mask.count(), 100u);
  EXPECT_THROW(binarize(img, 1.0 + 1e-9), Error);
  EXPECT_THROW(binarize(img, 0.0), Error);
}

TEST(Morpho, DistanceTransformMatchesPaddedBruteForce) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = random_blob(rng, 16);
    auto dt = distance_transform(m);
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        double best = m.at(x, y) ? 1e9 : 0.0;
        if (m.at(x, y)) {
          for (int by = -1; by <= m.height; ++by)
            for (int bx = -1; bx <= m.width; ++bx)
              if (!m.at(bx, by)) best = std::min(best, std::hypot(bx - x, by - y));
        }
        ASSERT_NEAR(dt[y * m.width + x], best, 1e-12);
      }
    }
  }
}

TEST(Morpho, VerticalBarMeasures) {
  auto m = measure(bar(5, 20));
  EXPECT_GE(m.thickness, 4.0);
  EXPECT_LE(m.thickness, 6.0);
  EXPECT_GE(m.slant, -0.05);
  EXPECT_LE(m.slant, 0.05);
  EXPECT_EQ(m.height, 20.0);
  EXPECT_EQ(m.width, 5.0);
}

TEST(Morpho, ShearedBarLeansRightAndKeepsHeight) {
  const auto upright = measure(bar(5, 20));
  const auto sheared = measure(bar(5, 20, 0.3));
  EXPECT_GT(sheared.slant, 0.0);
  EXPECT_GT(sheared.slant, upright.slant);
  EXPECT_NEAR(sheared.height, upright.height, 1.0);
}

TEST(Morpho, SlantSignAndMonotonicity) {
  std::vector<double> mags;
  for (double s : {-0.4, -0.2, 0.2, 0.4}) {
    const double slant = measure(bar(4, 18, s)).slant;
    EXPECT_EQ(slant > 0, s > 0) << s;
  }
  double prev = 0;
  for (double s : {0.1, 0.2, 0.3, 0.4}) {
    for (double sign : {-1.0, 1.0}) {
      const double slant = std::abs(measure(bar(4, 18, sign * s)).slant);
      EXPECT_GT(slant, prev - 1e-12) << s;
    }
    prev = std::abs(measure(bar(4, 18, s)).slant);
  }
}

TEST(Morpho, SlantMatchesDirectMoments) {
  std::mt19937 rng(5);
  for (int i = 0; i < 50; ++i) {
    auto m = random_blob(rng);
    if (components_by_flood_fill(m) == 0) continue;
    EXPECT_NEAR(shear_coefficient(m), slant_by_sums(m), 1e-9);
  }
}

TEST(Morpho, MirrorNegatesSlant) {
  std::mt19937 rng(9);
  for (int i = 0; i < 100; ++i) {
    auto m = random_blob(rng);
    EXPECT_NEAR(shear_coefficient(mirror(m)), -shear_coefficient(m), 1e-6);
  }
}

TEST(Morpho, DilationIncreasesThickness) {
  std::mt19937 rng(13);
  for (int w : {1, 2, 3, 5}) {
    auto m = binarize(bar(w, 16));
    EXPECT_GT(measure(dilate(m)).thickness, measure(m).thickness) << w;
  }
  for (int i = 0; i < 30; ++i) {
    auto m = random_blob(rng, 28);
    EXPECT_GT(measure(dilate(m)).thickness, measure(m).thickness) << i;
  }
}

TEST(Morpho, SkeletonIsSubsetAndPreservesComponents) {
  std::mt19937 rng(17);
  std::vector<BinaryMask> cases{binarize(bar(5, 20)), binarize(bar(2, 2)), binarize(bar(7, 9, 0.4))};
  for (int i = 0; i < 60; ++i) cases.push_back(random_blob(rng));
  for (const auto& m : cases) {
    auto sk = skeletonize(m);
    for (std::size_t k = 0; k < m.bits.size(); ++k) ASSERT_LE(sk.bits[k], m.bits[k]);
    EXPECT_EQ(components_by_flood_fill(sk), components_by_flood_fill(m));
    int n = 0;
    label_components(m, &n);
    EXPECT_EQ(n, components_by_flood_fill(m));
  }
}

TEST(Morpho, EmptyImageHasNoForeground) {
  try {
    measure(RasterImage::zeros(28, 28));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoForeground);
  }
}

TEST(Morpho, LabelThickUprightDigit) {
  const auto& g = testing::glossary("mnist");
  auto terms = label(bar(9, 18), g, g.term("mnist.digit.3"));
  EXPECT_EQ(terms, (std::vector<std::string>{"mnist.digit.3", "mnist.thick.vthick", "mnist.slant.upright",
                                              "mnist.height.high"}));
}

TEST(Morpho, ExactlyOneBandTermPerGroup) {
  const auto& g = testing::glossary("mnist");
  std::mt19937 rng(21);
  for (int i = 0; i < 60; ++i) {
    auto m = random_blob(rng, 28);
    auto terms = label(measure(m), g, g.term("mnist.digit.1"));
    ASSERT_EQ(terms.size(), 4u);
    for (const char* measure_name : {"thickness", "slant", "height"}) {
      const auto* group = g.group_for_measure(measure_name);
      int hits = 0;
      for (const auto& t : terms) hits += g.group_of(t) == group;
      EXPECT_EQ(hits, 1);
    }
  }
}

TEST(Morpho, BandEdgeIsLowerInclusive) {
  const auto& g = testing::glossary("mnist");
  MorphoMeasures m{4.0, 0.1, 17.0, 5.0};
  auto terms = label(m, g, g.term("mnist.digit.1"));
  EXPECT_EQ(terms[1], "mnist.thick.thick");
  EXPECT_EQ(terms[2], "mnist.slant.right");
  EXPECT_EQ(terms[3], "mnist.height.high");
}

TEST(Morpho, ValueOutsideAllBands) {
  auto g = Glossary::parse(R"({"terms":[{"id":"d","phrase":"is a 1"},
      {"id":"t","phrase":"is fat","group":"th"},{"id":"s","phrase":"is straight","group":"sl"},
      {"id":"h","phrase":"is tall","group":"he"}],
    "groups":[{"id":"th","kind":"disjoint-ordered-bands","measure":"thickness","members":["t"],"bands":[{"lower":10,"upper":null}]},
              {"id":"sl","kind":"disjoint-ordered-bands","measure":"slant","members":["s"],"bands":[{"lower":null,"upper":null}]},
              {"id":"he","kind":"disjoint-ordered-bands","measure":"height","members":["h"],"bands":[{"lower":0,"upper":null}]}]})");
  try {
    label(bar(3, 10), g, g.term("d"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValueOutsideAllBands);
  }
}

TEST(ImageIo, PngAndIdxRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "rbt_image_io";
  std::filesystem::create_directories(dir);
  auto img = bar(5, 20, 0.2);
  img.at(0, 0) = 0.4f;
  write_png(dir / "bar.png", img);
  auto back = read_png(dir / "bar.png");
  ASSERT_EQ(back.width, img.width);
  ASSERT_EQ(back.height, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_NEAR(back.pixels[i], img.pixels[i], 1.0 / 255);

  write_idx_images(dir / "set.idx", {bar(3, 10), img});
  write_idx_labels(dir / "labels.idx", {7, 3});
  auto images = read_idx_images(dir / "set.idx");
  ASSERT_EQ(images.size(), 2u);
  EXPECT_EQ(binarize(images[1]), binarize(img));
  EXPECT_EQ(read_idx_labels(dir / "labels.idx"), (std::vector<std::uint8_t>{7, 3}));
  EXPECT_EQ(binarize(load_image((dir / "set.idx").string() + "#1")), binarize(img));
  EXPECT_EQ(binarize(load_image((dir / "bar.png").string())), binarize(img));
  EXPECT_THROW(read_idx_labels(dir / "set.idx"), Error);
  EXPECT_THROW(load_image((dir / "set.idx").string() + "#5"), Error);
}

}  // namespace
}  // namespace rbt::morpho
