#include "faceatlas/fixture.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

namespace faceatlas {

namespace {

constexpr double kFaceHalfWidth = 0.20;
constexpr double kFaceHalfHeight = 0.30;
constexpr double kFaceDepth = 0.12;

double surface_depth(double x, double y) {
  const double u = (x - kFixtureFaceCenter.x) / kFaceHalfWidth;
  const double v = (y - kFixtureFaceCenter.y) / kFaceHalfHeight;
  double z = -kFaceDepth * std::sqrt(std::max(0.0, 1.0 - u * u - v * v));
  const double nx = x - 0.5;
  const double ny = y - 0.56;
  z -= 0.04 * std::exp(-(nx * nx + ny * ny) / (2.0 * 0.02 * 0.02));
  return z;
}

struct Placed {
  int index;
  double x;
  double y;
};

// Midline vertices from the forehead top down to the chin.
constexpr std::pair<int, double> kMidline[] = {
    {10, 0.24},   {151, 0.29},  {9, 0.34},    {8, 0.38},    {168, 0.42},  {6, 0.45},
    {197, 0.48},  {195, 0.51},  {5, 0.53},    {4, 0.55},    {1, 0.565},   {19, 0.58},
    {94, 0.595},  {2, 0.605},   {164, 0.625}, {0, 0.645},   {11, 0.655},  {12, 0.665},
    {13, 0.672},  {14, 0.678},  {15, 0.685},  {16, 0.695},  {17, 0.71},   {18, 0.725},
    {200, 0.745}, {199, 0.76},  {175, 0.775}, {152, 0.79}};

constexpr Placed kFeatures[] = {
    {107, 0.46, 0.40},  {336, 0.54, 0.40},                                         // medial brows
    {33, 0.38, 0.45},   {133, 0.46, 0.45},  {159, 0.42, 0.437}, {145, 0.42, 0.463},  // left eye
    {362, 0.54, 0.45},  {263, 0.62, 0.45},  {386, 0.58, 0.437}, {374, 0.58, 0.463},  // right eye
    {61, 0.44, 0.67},   {291, 0.56, 0.67},                                          // mouth corners
    {105, 0.42, 0.385}, {334, 0.58, 0.385}, {70, 0.37, 0.395},  {300, 0.63, 0.395},  // brows
    {234, 0.31, 0.50},  {454, 0.69, 0.50},                                          // face edge
    {98, 0.47, 0.59},   {327, 0.53, 0.59},                                          // alae
};

Vec2 rotate_about(Vec2 p, Vec2 pivot, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  const Vec2 d = p - pivot;
  return pivot + Vec2{c * d.x - s * d.y, s * d.x + c * d.y};
}

}  // namespace

LandmarkFrame synthetic_face(const FixtureOptions& opts) {
  LandmarkFrame frame;
  frame.timestamp_us = opts.timestamp_us;
  frame.width = opts.width;
  frame.height = opts.height;
  frame.vertices.resize(kMeshVertexCount);

  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < kMeshVertexCount; ++i) {
    const double r = 0.95 * std::sqrt((static_cast<double>(i) + 0.5) / kMeshVertexCount);
    const double phi = golden * static_cast<double>(i);
    const double x = kFixtureFaceCenter.x + kFaceHalfWidth * r * std::cos(phi);
    const double y = kFixtureFaceCenter.y + kFaceHalfHeight * r * std::sin(phi);
    frame.vertices[i] = {x, y, surface_depth(x, y)};
  }
  for (const auto& [index, y] : kMidline) {
    frame.vertices[static_cast<std::size_t>(index)] = {0.5, y, surface_depth(0.5, y)};
  }
  for (const auto& f : kFeatures) {
    frame.vertices[static_cast<std::size_t>(f.index)] = {f.x, f.y, surface_depth(f.x, f.y)};
  }

  // Face-space geometry is authored for a square frame; map through
  // isotropic coordinates so non-square frames keep the face undistorted.
  const double radians = opts.roll_degrees * std::numbers::pi / 180.0;
  const double aspect = static_cast<double>(opts.width) / static_cast<double>(opts.height);
  const Vec2 iso_center{kFixtureFaceCenter.x * aspect, kFixtureFaceCenter.y};
  const auto place = [&](Vec2 face) {
    const Vec2 iso = iso_center + (face - kFixtureFaceCenter);
    const Vec2 rolled = rotate_about(iso, iso_center, radians);
    return from_isotropic(rolled, opts.width, opts.height) + opts.translation;
  };
  for (auto& v : frame.vertices) {
    const Vec2 p = place({v.x, v.y});
    v.x = p.x;
    v.y = p.y;
  }

  if (opts.with_hair) {
    auto mask = std::make_shared<HairMask>();
    mask->width = opts.width;
    mask->height = opts.height;
    mask->bits.assign(static_cast<std::size_t>(opts.width) * static_cast<std::size_t>(opts.height), 0);
    const double h = static_cast<double>(opts.height);
    for (int row = 0; row < opts.height; ++row) {
      for (int col = 0; col < opts.width; ++col) {
        // Pixel centre -> face space (undo translation and roll).
        const Vec2 norm{(col + 0.5) / opts.width - opts.translation.x,
                        (row + 0.5) / h - opts.translation.y};
        const Vec2 iso = to_isotropic(norm, opts.width, opts.height);
        const Vec2 face = rotate_about(iso, iso_center, -radians) - iso_center + kFixtureFaceCenter;
        if (face.y < opts.hairline_y) {
          mask->bits[static_cast<std::size_t>(row) * static_cast<std::size_t>(opts.width) +
                     static_cast<std::size_t>(col)] = 1;
        }
      }
    }
    frame.hair_mask = std::move(mask);
  }
  return frame;
}

SemanticsConfig default_semantics() {
  SemanticsConfig cfg;
  cfg.medial_brow_left = 107;
  cfg.medial_brow_right = 336;
  cfg.eye_contour_left = {33, 133, 159, 145};
  cfg.eye_contour_right = {362, 263, 386, 374};
  cfg.forehead_top = 10;
  for (const auto& [index, y] : kMidline) cfg.midline_indices.push_back(index);
  cfg.hairline_fallback_factor = 1.10;
  return cfg;
}

LandmarkFrame perturb(const LandmarkFrame& frame, std::mt19937_64& rng, double sigma) {
  LandmarkFrame out = frame;
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : out.vertices) {
    v.x += noise(rng);
    v.y += noise(rng);
  }
  return out;
}

LandmarkFrame roll_frame(const LandmarkFrame& frame, double degrees, Vec2 pivot) {
  LandmarkFrame out = frame;
  const double radians = degrees * std::numbers::pi / 180.0;
  for (auto& v : out.vertices) {
    const Vec2 iso = to_isotropic({v.x, v.y}, frame.width, frame.height);
    const Vec2 p = from_isotropic(rotate_about(iso, pivot, radians), frame.width, frame.height);
    v.x = p.x;
    v.y = p.y;
  }
  return out;
}

LandmarkFrame translate_frame(const LandmarkFrame& frame, Vec2 offset) {
  LandmarkFrame out = frame;
  for (auto& v : out.vertices) {
    v.x += offset.x;
    v.y += offset.y;
  }
  if (frame.hair_mask) {
    const HairMask& src = *frame.hair_mask;
    const auto dc = static_cast<long>(std::lround(offset.x * src.width));
    const auto dr = static_cast<long>(std::lround(offset.y * src.height));
    auto mask = std::make_shared<HairMask>();
    mask->width = src.width;
    mask->height = src.height;
    mask->bits.assign(src.bits.size(), 0);
    for (long r = 0; r < src.height; ++r) {
      for (long c = 0; c < src.width; ++c) {
        const long sr = r - dr;
        const long sc = c - dc;
        if (sr < 0 || sc < 0 || sr >= src.height || sc >= src.width) continue;
        mask->bits[static_cast<std::size_t>(r * src.width + c)] =
            src.bits[static_cast<std::size_t>(sr * src.width + sc)];
      }
    }
    out.hair_mask = std::move(mask);
  }
  return out;
}

}  // namespace faceatlas
