#include "faceatlas/geometry.hpp"

#include <algorithm>
#include <string>

namespace faceatlas {

namespace {

bool is_valid_index(int i) { return i >= 0 && static_cast<std::size_t>(i) < kMeshVertexCount; }

Vec2 rotate_by(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace

void LandmarkFrame::validate() const {
  if (width <= 0 || height <= 0) {
    throw InvalidFrame("frame dimensions must be positive");
  }
  if (vertices.size() != kMeshVertexCount) {
    throw InvalidFrame("expected " + std::to_string(kMeshVertexCount) + " vertices, got " +
                       std::to_string(vertices.size()));
  }
  for (const auto& v : vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
      throw InvalidFrame("non-finite vertex coordinate");
    }
  }
  if (hair_mask) {
    if (hair_mask->width != width || hair_mask->height != height) {
      throw InvalidFrame("hair mask dimensions differ from frame dimensions");
    }
    if (hair_mask->bits.size() !=
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw InvalidFrame("hair mask raster has the wrong size");
    }
  }
}

void SemanticsConfig::validate() const {
  auto check = [](int i, const char* what) {
    if (!is_valid_index(i)) {
      throw std::invalid_argument(std::string("semantics: index out of range in ") + what);
    }
  };
  check(medial_brow_left, "medial_brow_left");
  check(medial_brow_right, "medial_brow_right");
  check(forehead_top, "forehead_top");
  if (eye_contour_left.empty() || eye_contour_right.empty()) {
    throw std::invalid_argument("semantics: eye contours must be non-empty");
  }
  for (int i : eye_contour_left) check(i, "eye_contour_left");
  for (int i : eye_contour_right) check(i, "eye_contour_right");
  for (int i : midline_indices) check(i, "midline_indices");
  if (midline_indices.empty()) {
    throw std::invalid_argument("semantics: midline_indices must be non-empty");
  }
  for (int i : eye_contour_left) {
    if (std::find(eye_contour_right.begin(), eye_contour_right.end(), i) !=
        eye_contour_right.end()) {
      throw std::invalid_argument("semantics: left and right eye contours overlap");
    }
  }
  if (medial_brow_left == medial_brow_right) {
    throw std::invalid_argument("semantics: medial brow indices must differ");
  }
  if (!(hairline_fallback_factor > 0.0)) {
    throw std::invalid_argument("semantics: hairline_fallback_factor must be positive");
  }
}

Vec2 RigidTransform::rotate(Vec2 v) const { return rotate_by(v, angle); }

Vec2 RigidTransform::apply(Vec2 p) const { return rotate_by(p, angle) + translation; }

Vec2 RigidTransform::apply_inverse(Vec2 p) const { return rotate_by(p - translation, -angle); }

Vec2 to_isotropic(Vec2 normalized, int width, int height) {
  return {normalized.x * static_cast<double>(width) / static_cast<double>(height), normalized.y};
}

Vec2 from_isotropic(Vec2 iso, int width, int height) {
  return {iso.x * static_cast<double>(height) / static_cast<double>(width), iso.y};
}

Vec2 AlignedFrame::to_image_normalized(Vec2 aligned) const {
  return from_isotropic(transform.apply_inverse(aligned), width, height);
}

Vec2 AlignedFrame::to_pixels(Vec2 aligned) const {
  const Vec2 iso = transform.apply_inverse(aligned);
  return {iso.x * static_cast<double>(height), iso.y * static_cast<double>(height)};
}

AlignedFrame align_frame(const LandmarkFrame& frame, const SemanticsConfig& cfg) {
  frame.validate();
  const auto iso_of = [&](int i) {
    const Vec3& v = frame.vertices[static_cast<std::size_t>(i)];
    return to_isotropic({v.x, v.y}, frame.width, frame.height);
  };
  const Vec2 brow_left = iso_of(cfg.medial_brow_left);
  const Vec2 brow_right = iso_of(cfg.medial_brow_right);
  const Vec2 across = brow_right - brow_left;
  if (norm(across) < kDegeneracyEpsilon) {
    throw DegenerateFace("medial brow vertices coincide; midline direction undefined");
  }
  const Vec2 rhd1 = 0.5 * (brow_left + brow_right);

  AlignedFrame out;
  out.width = frame.width;
  out.height = frame.height;
  out.transform.angle = -std::atan2(across.y, across.x);
  out.transform.translation = kAlignedAnchor - rotate_by(rhd1, out.transform.angle);
  out.midline_x = kAlignedAnchor.x;
  out.vertices.reserve(kMeshVertexCount);
  out.depth.reserve(kMeshVertexCount);
  for (const auto& v : frame.vertices) {
    out.vertices.push_back(
        out.transform.apply(to_isotropic({v.x, v.y}, frame.width, frame.height)));
    out.depth.push_back(v.z);
  }
  return out;
}

namespace {

Vec2 brow_midpoint(const AlignedFrame& aligned, const SemanticsConfig& cfg) {
  return 0.5 * (aligned.vertices[static_cast<std::size_t>(cfg.medial_brow_left)] +
                aligned.vertices[static_cast<std::size_t>(cfg.medial_brow_right)]);
}

Hairline fallback_hairline(const AlignedFrame& aligned, const SemanticsConfig& cfg) {
  const Vec2 rhd1 = brow_midpoint(aligned, cfg);
  const Vec2 top = aligned.vertices[static_cast<std::size_t>(cfg.forehead_top)];
  const double reach = cfg.hairline_fallback_factor * distance(rhd1, top);
  return {{aligned.midline_x, rhd1.y - reach}, Confidence::Estimated};
}

enum class Sample { Outside, Skin, Hair };

Sample sample_mask(const HairMask& mask, const AlignedFrame& aligned, Vec2 p) {
  const Vec2 iso = aligned.transform.apply_inverse(p);
  const double h = static_cast<double>(aligned.height);
  const double col = std::floor(iso.x * h);
  const double row = std::floor(iso.y * h);
  if (col < 0.0 || row < 0.0 || col >= mask.width || row >= mask.height) {
    return Sample::Outside;
  }
  return mask.at(static_cast<int>(col), static_cast<int>(row)) ? Sample::Hair : Sample::Skin;
}

}  // namespace

Hairline extract_hairline(const LandmarkFrame& frame, const AlignedFrame& aligned,
                          const SemanticsConfig& cfg) {
  if (!frame.hair_mask) {
    return fallback_hairline(aligned, cfg);
  }
  const HairMask& mask = *frame.hair_mask;
  const Vec2 start{aligned.midline_x, brow_midpoint(aligned, cfg).y};
  // Quarter-pixel steps up the midline, then bisect onto the first hair pixel edge.
  const double step = 0.25 / static_cast<double>(aligned.height);
  const auto at = [&](double t) { return Vec2{start.x, start.y - t}; };

  Sample first = sample_mask(mask, aligned, start);
  if (first == Sample::Hair) {
    return {start, Confidence::Measured};
  }
  if (first == Sample::Outside) {
    return fallback_hairline(aligned, cfg);
  }
  for (long k = 0;; ++k) {
    const double lo = static_cast<double>(k) * step;
    const double hi = lo + step;
    const Sample s = sample_mask(mask, aligned, at(hi));
    if (s == Sample::Outside) break;
    if (s == Sample::Hair) {
      double a = lo;
      double b = hi;
      for (int i = 0; i < 48; ++i) {
        const double mid = 0.5 * (a + b);
        if (sample_mask(mask, aligned, at(mid)) == Sample::Hair) {
          b = mid;
        } else {
          a = mid;
        }
      }
      return {at(0.5 * (a + b)), Confidence::Measured};
    }
  }
  return fallback_hairline(aligned, cfg);
}

Vec2 centroid(std::span<const Vec2> points) {
  Vec2 sum;
  for (const auto& p : points) sum = sum + p;
  return (1.0 / static_cast<double>(points.size())) * sum;
}

ReferencePoints extract_reference_points(const AlignedFrame& aligned, const Hairline& hairline,
                                         const SemanticsConfig& cfg) {
  const auto contour_centroid = [&](const std::vector<int>& indices) {
    std::vector<Vec2> pts;
    pts.reserve(indices.size());
    for (int i : indices) pts.push_back(aligned.vertices[static_cast<std::size_t>(i)]);
    return centroid(pts);
  };
  ReferencePoints refs;
  refs.rhd1 = brow_midpoint(aligned, cfg);
  refs.rhd2 = hairline.point;
  refs.rhd2_confidence = hairline.confidence;
  refs.rhd3_left = contour_centroid(cfg.eye_contour_left);
  refs.rhd3_right = contour_centroid(cfg.eye_contour_right);
  if (distance(refs.rhd1, refs.rhd2) < kDegeneracyEpsilon) {
    throw DegenerateFace("Yintang and hairline reference coincide");
  }
  return refs;
}

CunUnit unit_cun(const ReferencePoints& refs) {
  const double d = std::abs(refs.rhd1.y - refs.rhd2.y);
  if (!(d >= kDegeneracyEpsilon)) {
    throw DegenerateFace("Yintang-to-hairline distance below epsilon");
  }
  return {d / 3.0};
}

Vec2 mirror_point(Vec2 p, const AlignedFrame& aligned) {
  return {2.0 * aligned.midline_x - p.x, p.y};
}

MidlineFit fit_midline(const AlignedFrame& aligned, const SemanticsConfig& cfg) {
  const auto n = static_cast<double>(cfg.midline_indices.size());
  double sy = 0.0, sx = 0.0, syy = 0.0, sxy = 0.0;
  for (int i : cfg.midline_indices) {
    const Vec2 p = aligned.vertices[static_cast<std::size_t>(i)];
    const double y = p.y - kAlignedAnchor.y;
    sy += y;
    sx += p.x;
    syy += y * y;
    sxy += y * p.x;
  }
  MidlineFit fit;
  const double denom = n * syy - sy * sy;
  if (std::abs(denom) > 1e-15) {
    fit.slope = (n * sxy - sy * sx) / denom;
  }
  fit.offset = (sx - fit.slope * sy) / n;
  for (int i : cfg.midline_indices) {
    const Vec2 p = aligned.vertices[static_cast<std::size_t>(i)];
    const double predicted = fit.offset + fit.slope * (p.y - kAlignedAnchor.y);
    fit.max_residual = std::max(fit.max_residual, std::abs(p.x - predicted));
  }
  return fit;
}

}  // namespace faceatlas
