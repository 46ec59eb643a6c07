#include <exception>

#include <omp.h>

#include "faceatlas/parallel.hpp"

namespace faceatlas {

std::vector<EvaluatedAtlas> evaluate_frames(const AtlasProgram& program,
                                            std::span<const LandmarkFrame> frames,
                                            const SemanticsConfig& cfg, int threads) {
  std::vector<EvaluatedAtlas> out(frames.size());
  const auto n = static_cast<std::ptrdiff_t>(frames.size());
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  // Exceptions may not cross the parallel region; keep the first one.
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 4) num_threads(nthreads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          evaluate_atlas(program, frames[static_cast<std::size_t>(i)], cfg);
    } catch (...) {
#pragma omp critical(faceatlas_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace faceatlas
