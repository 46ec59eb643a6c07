#pragma once

// Deterministic synthetic face meshes for tests, benchmarks and demos. The
// semantic vertices sit where default_semantics() expects them; the rest of
// the 468 vertices fill an ellipsoidal face surface.

#include <cstdint>
#include <random>

#include "faceatlas/geometry.hpp"

namespace faceatlas {

struct FixtureOptions {
  int width = 640;
  int height = 640;
  std::int64_t timestamp_us = 0;
  bool with_hair = false;
  double hairline_y = 0.22;  // face-space y of the anterior hairline
  double roll_degrees = 0.0;  // in-plane rotation about the face centre
  Vec2 translation;           // normalized units, applied after roll
};

/// Face centre used as the pivot for roll.
inline constexpr Vec2 kFixtureFaceCenter{0.5, 0.5};

LandmarkFrame synthetic_face(const FixtureOptions& opts = {});

/// Semantic indices matching synthetic_face() (MediaPipe-style numbering).
SemanticsConfig default_semantics();

/// Adds isotropic Gaussian noise (normalized units) to x and y of every vertex.
LandmarkFrame perturb(const LandmarkFrame& frame, std::mt19937_64& rng, double sigma);

/// Rotates x/y in place about `pivot` (isotropic coordinates). The hair mask is left as is.
LandmarkFrame roll_frame(const LandmarkFrame& frame, double degrees, Vec2 pivot);

/// Shifts every vertex by `offset`; a hair mask moves by the nearest whole pixel.
LandmarkFrame translate_frame(const LandmarkFrame& frame, Vec2 offset);

}  // namespace faceatlas
