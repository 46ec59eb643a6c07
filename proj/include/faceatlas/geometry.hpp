#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace faceatlas {

inline constexpr std::size_t kMeshVertexCount = 468;

/// Below this length (normalized units) two landmarks are treated as coincident.
inline constexpr double kDegeneracyEpsilon = 1e-6;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(Vec3, Vec3) = default;
};

class DegenerateFace : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidFrame : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary raster, row-major, `true` marks a hair pixel.
struct HairMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool at(int col, int row) const {
    return bits[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(col)] != 0;
  }
};

/// One timestamped face-mesh observation. Vertices are normalized image
/// coordinates (origin top-left, y down); z is relative depth.
struct LandmarkFrame {
  std::int64_t timestamp_us = 0;
  int width = 0;
  int height = 0;
  std::vector<Vec3> vertices;
  std::shared_ptr<const HairMask> hair_mask;

  /// Throws InvalidFrame when the structural invariants do not hold.
  void validate() const;
};

/// Vertex-index assignments for the anatomy the engine needs. "left" and
/// "right" refer to the viewer's side of the image (left = smaller x).
struct SemanticsConfig {
  int medial_brow_left = 107;
  int medial_brow_right = 336;
  std::vector<int> eye_contour_left;
  std::vector<int> eye_contour_right;
  int forehead_top = 10;
  std::vector<int> midline_indices;
  /// RHD1->forehead_top distance multiplier used when no hairline is measured.
  double hairline_fallback_factor = 1.10;

  void validate() const;
};

enum class Confidence { Measured, Estimated };

/// Rotation about the origin followed by translation; no scale.
struct RigidTransform {
  double angle = 0.0;  // radians
  Vec2 translation;

  Vec2 apply(Vec2 p) const;
  Vec2 apply_inverse(Vec2 p) const;
  Vec2 rotate(Vec2 v) const;
};

/// Where the medial-brow midpoint (RHD1) lands in aligned space.
inline constexpr Vec2 kAlignedAnchor{0.5, 0.4};

// Aligned space is built on "isotropic" image coordinates: (x * w / h, y).
// For square frames this coincides with normalized coordinates.
Vec2 to_isotropic(Vec2 normalized, int width, int height);
Vec2 from_isotropic(Vec2 iso, int width, int height);

struct AlignedFrame {
  RigidTransform transform;  // isotropic image space -> aligned space
  std::vector<Vec2> vertices;
  std::vector<double> depth;
  double midline_x = kAlignedAnchor.x;
  int width = 0;
  int height = 0;

  Vec2 to_image_normalized(Vec2 aligned) const;
  Vec2 to_pixels(Vec2 aligned) const;
};

struct Hairline {
  Vec2 point;  // aligned space
  Confidence confidence = Confidence::Estimated;
};

struct ReferencePoints {
  Vec2 rhd1;
  Vec2 rhd2;
  Vec2 rhd3_left;
  Vec2 rhd3_right;
  Confidence rhd2_confidence = Confidence::Estimated;
};

struct CunUnit {
  double uc = 0.0;
};

AlignedFrame align_frame(const LandmarkFrame& frame, const SemanticsConfig& cfg);

Hairline extract_hairline(const LandmarkFrame& frame, const AlignedFrame& aligned,
                          const SemanticsConfig& cfg);

ReferencePoints extract_reference_points(const AlignedFrame& aligned, const Hairline& hairline,
                                         const SemanticsConfig& cfg);

CunUnit unit_cun(const ReferencePoints& refs);

Vec2 mirror_point(Vec2 p, const AlignedFrame& aligned);

Vec2 centroid(std::span<const Vec2> points);

/// Least-squares line x = offset + slope * (y - anchor.y) through the
/// configured midline vertices in aligned space. Diagnostic only; the
/// evaluation midline is always x = midline_x.
struct MidlineFit {
  double offset = 0.0;
  double slope = 0.0;
  double max_residual = 0.0;
};

MidlineFit fit_midline(const AlignedFrame& aligned, const SemanticsConfig& cfg);

}  // namespace faceatlas
