#include "rbt/morpho.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rbt/error.hpp"
#include "rbt/text.hpp"

namespace rbt::morpho {

BinaryMask BinaryMask::empty(int width, int height) {
  return {width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
}

std::size_t BinaryMask::count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }

BinaryMask binarize(const RasterImage& img, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "binarize threshold must lie in (0,1)");
  }
  img.validate();
  auto mask = BinaryMask::empty(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) mask.bits[i] = img.pixels[i] >= threshold;
  return mask;
}

std::vector<int> label_components(const BinaryMask& mask, int* count) {
  std::vector<int> labels(mask.bits.size(), -1);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y0 = 0; y0 < mask.height; ++y0) {
    for (int x0 = 0; x0 < mask.width; ++x0) {
      if (!mask.at(x0, y0) || labels[static_cast<std::size_t>(y0) * mask.width + x0] >= 0) continue;
      labels[static_cast<std::size_t>(y0) * mask.width + x0] = next;
      stack.emplace_back(x0, y0);
      while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            if (!mask.at(nx, ny)) continue;
            auto& l = labels[static_cast<std::size_t>(ny) * mask.width + nx];
            if (l < 0) {
              l = next;
              stack.emplace_back(nx, ny);
            }
          }
      }
      ++next;
    }
  }
  if (count) *count = next;
  return labels;
}

BinaryMask skeletonize(const BinaryMask& mask) {
  BinaryMask cur = mask;
  std::vector<std::pair<int, int>> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      doomed.clear();
      for (int y = 0; y < cur.height; ++y) {
        for (int x = 0; x < cur.width; ++x) {
          if (!cur.at(x, y)) continue;
          // Neighbours P2..P9 clockwise from north.
          const std::array<int, 8> p{cur.at(x, y - 1), cur.at(x + 1, y - 1), cur.at(x + 1, y),
                                     cur.at(x + 1, y + 1), cur.at(x, y + 1), cur.at(x - 1, y + 1),
                                     cur.at(x - 1, y), cur.at(x - 1, y - 1)};
          int b = 0;
          int a = 0;
          for (int k = 0; k < 8; ++k) {
            b += p[k];
            a += !p[k] && p[(k + 1) % 8];
          }
          if (b < 2 || b > 6 || a != 1) continue;
          const bool keep = pass == 0 ? (p[0] && p[2] && p[4]) || (p[2] && p[4] && p[6])
                                      : (p[0] && p[2] && p[6]) || (p[0] && p[4] && p[6]);
          if (!keep) doomed.emplace_back(x, y);
        }
      }
      for (auto [x, y] : doomed) cur.set(x, y, false);
      changed = changed || !doomed.empty();
    }
  }

  // Zhang-Suen erases 2x2 blocks outright; give any component it emptied
  // back its deepest pixel so no stroke disappears from the skeleton.
  int components = 0;
  const auto labels = label_components(mask, &components);
  std::vector<bool> kept(static_cast<std::size_t>(components), false);
  for (std::size_t i = 0; i < cur.bits.size(); ++i) {
    if (cur.bits[i]) kept[static_cast<std::size_t>(labels[i])] = true;
  }
  if (std::find(kept.begin(), kept.end(), false) != kept.end()) {
    const auto dist = distance_transform(mask);
    std::vector<std::ptrdiff_t> deepest(kept.size(), -1);
    for (std::size_t i = 0; i < cur.bits.size(); ++i) {
      if (labels[i] < 0) continue;
      auto& d = deepest[static_cast<std::size_t>(labels[i])];
      if (d < 0 || dist[i] > dist[static_cast<std::size_t>(d)]) d = static_cast<std::ptrdiff_t>(i);
    }
    for (std::size_t c = 0; c < kept.size(); ++c) {
      if (!kept[c]) cur.bits[static_cast<std::size_t>(deepest[c])] = 1;
    }
  }
  return cur;
}

std::vector<double> distance_transform(const BinaryMask& mask) {
  std::vector<std::pair<int, int>> background;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (!mask.at(x, y)) background.emplace_back(x, y);

  std::vector<double> out(mask.bits.size(), 0.0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      // Nearest virtual background pixel just outside the frame.
      long best = std::min({x + 1, y + 1, mask.width - x, mask.height - y});
      best *= best;
      for (auto [bx, by] : background) {
        const long dx = bx - x;
        const long dy = by - y;
        best = std::min(best, dx * dx + dy * dy);
      }
      out[static_cast<std::size_t>(y) * mask.width + x] = std::sqrt(static_cast<double>(best));
    }
  }
  return out;
}

namespace {

struct Moments {
  double n = 0;
  double mx = 0;
  double my = 0;
  double cxy = 0;
  double cyy = 0;
};

Moments moments(const BinaryMask& mask) {
  Moments m;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) {
        m.n += 1;
        m.mx += x;
        m.my += y;
      }
  if (m.n == 0) return m;
  m.mx /= m.n;
  m.my /= m.n;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) {
        m.cxy += (x - m.mx) * (y - m.my);
        m.cyy += (y - m.my) * (y - m.my);
      }
  return m;
}

void require_foreground(const BinaryMask& mask) {
  if (mask.count() == 0) throw Error(ErrorCode::kNoForeground, "image has no foreground pixels");
}

}  // namespace

double shear_coefficient(const BinaryMask& mask) {
  require_foreground(mask);
  const auto m = moments(mask);
  if (m.cyy == 0) return 0.0;
  return -m.cxy / m.cyy;
}

BinaryMask deshear(const BinaryMask& mask, double slant) {
  const auto m = moments(mask);
  auto out = BinaryMask::empty(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    const long shift = std::lround(slant * (y - m.my));
    for (int x = 0; x < mask.width; ++x) {
      const long src = x - shift;
      if (src >= 0 && src < mask.width && mask.at(static_cast<int>(src), y)) out.set(x, y, true);
    }
  }
  return out;
}

MorphoMeasures measure(const BinaryMask& mask) {
  require_foreground(mask);
  MorphoMeasures out;
  out.slant = shear_coefficient(mask);

  const auto skeleton = skeletonize(mask);
  const auto dist = distance_transform(mask);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < skeleton.bits.size(); ++i) {
    if (skeleton.bits[i]) {
      sum += dist[i];
      ++n;
    }
  }
  out.thickness = 2.0 * sum / static_cast<double>(n);

  // The de-shear may push pixels past the frame, so extents are taken over
  // sheared coordinates directly rather than from deshear().
  const auto m = moments(mask);
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  int ymin = mask.height;
  int ymax = -1;
  for (int y = 0; y < mask.height; ++y) {
    const double shift = static_cast<double>(std::lround(out.slant * (y - m.my)));
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      xmin = std::min(xmin, x + shift);
      xmax = std::max(xmax, x + shift);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  out.width = xmax - xmin + 1;
  out.height = ymax - ymin + 1;
  return out;
}

MorphoMeasures measure(const RasterImage& img, double threshold) { return measure(binarize(img, threshold)); }

std::vector<std::string> label(const MorphoMeasures& m, const Glossary& g, const GlossaryTerm& class_term) {
  std::vector<std::string> out{class_term.id};
  const std::array<std::pair<const char*, double>, 3> values{{{"thickness", m.thickness},
                                                               {"slant", m.slant},
                                                               {"height", m.height}}};
  for (const auto& [name, value] : values) {
    const auto* group = g.group_for_measure(name);
    if (!group) throw Error(ErrorCode::kInvalidArgument, std::string("glossary has no band group for ") + name);
    auto k = g.band_index(*group, value);
    if (!k) {
      throw Error(ErrorCode::kValueOutsideAllBands,
                  std::string(name) + " " + text::format_number(value) + " lies outside group '" + group->id + "'");
    }
    out.push_back(group->members[*k]);
  }
  return out;
}

std::vector<std::string> label(const RasterImage& img, const Glossary& g, const GlossaryTerm& class_term,
                               double threshold) {
  return label(measure(img, threshold), g, class_term);
}

}  // namespace rbt::morpho
