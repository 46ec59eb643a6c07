#include "faceatlas/parallel.hpp"

namespace faceatlas {

std::vector<EvaluatedAtlas> evaluate_frames_serial(const AtlasProgram& program,
                                                   std::span<const LandmarkFrame> frames,
                                                   const SemanticsConfig& cfg) {
  std::vector<EvaluatedAtlas> out;
  out.reserve(frames.size());
  for (const auto& frame : frames) {
    out.push_back(evaluate_atlas(program, frame, cfg));
  }
  return out;
}

}  // namespace faceatlas
