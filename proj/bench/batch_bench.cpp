// Batch frame evaluation: serial reference vs the OpenMP kernel.
//
//   batch_bench --benchmark_counters_tabular=true

#include <random>

#include <benchmark/benchmark.h>

#include "faceatlas/adl.hpp"
#include "faceatlas/fixture.hpp"
#include "faceatlas/frame_io.hpp"
#include "faceatlas/parallel.hpp"

namespace {

using namespace faceatlas;

const AtlasProgram& program() {
  static const AtlasProgram p =
      compile_atlas(parse_atlas(read_text_file(std::string(FACEATLAS_DATA_DIR) + "/sample_atlas.csv")));
  return p;
}

std::vector<LandmarkFrame> make_frames(std::size_t n) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> roll(-15.0, 15.0);
  std::vector<LandmarkFrame> frames;
  frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    FixtureOptions opts;
    opts.timestamp_us = static_cast<std::int64_t>(i) * 16667;
    opts.with_hair = true;
    opts.roll_degrees = roll(rng);
    frames.push_back(perturb(synthetic_face(opts), rng, 0.001));
  }
  return frames;
}

void BM_Serial(benchmark::State& state) {
  const auto frames = make_frames(static_cast<std::size_t>(state.range(0)));
  const SemanticsConfig cfg = default_semantics();
  for (auto _ : state) {
    auto out = evaluate_frames_serial(program(), frames, cfg);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OpenMP(benchmark::State& state) {
  const auto frames = make_frames(static_cast<std::size_t>(state.range(0)));
  const SemanticsConfig cfg = default_semantics();
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    auto out = evaluate_frames(program(), frames, cfg, threads);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = threads;
}

}  // namespace

BENCHMARK(BM_Serial)->Arg(64)->Arg(512)->UseRealTime();
BENCHMARK(BM_OpenMP)->ArgsProduct({{64, 512}, {1, 2, 4, 8}})->UseRealTime();

BENCHMARK_MAIN();
