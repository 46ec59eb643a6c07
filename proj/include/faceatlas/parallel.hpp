#pragma once

// Batch evaluation of many frames against one compiled atlas. The OpenMP
// kernel and the serial reference must produce identical results; the
// serial version is kept for tests and as the benchmark baseline.

#include <span>
#include <vector>

#include "faceatlas/adl.hpp"
#include "faceatlas/evaluator.hpp"
#include "faceatlas/geometry.hpp"

namespace faceatlas {

std::vector<EvaluatedAtlas> evaluate_frames_serial(const AtlasProgram& program,
                                                   std::span<const LandmarkFrame> frames,
                                                   const SemanticsConfig& cfg);

/// OpenMP over frames. `threads` <= 0 uses the runtime default.
std::vector<EvaluatedAtlas> evaluate_frames(const AtlasProgram& program,
                                            std::span<const LandmarkFrame> frames,
                                            const SemanticsConfig& cfg, int threads = 0);

}  // namespace faceatlas
