#include <chrono>
#include <cstdio>

#include "faceatlas/pipeline.hpp"

namespace faceatlas {

namespace {
using Clock = std::chrono::steady_clock;
}

BenchReport bench(std::string_view atlas_text, const LandmarkFrame& fixture,
                  const SemanticsConfig& cfg, std::size_t iterations) {
  BenchReport report;
  report.iterations = iterations;

  AtlasProgram program = compile_atlas(parse_atlas(atlas_text));
  report.atlas_rows = program.size();
  const std::size_t warmup = std::max<std::size_t>(10, iterations / 20);

  for (std::size_t i = 0; i < warmup; ++i) {
    program = compile_atlas(parse_atlas(atlas_text));
  }
  std::vector<double> setup;
  setup.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto t0 = Clock::now();
    AtlasProgram p = compile_atlas(parse_atlas(atlas_text));
    setup.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
    if (p.size() != report.atlas_rows) throw std::logic_error("atlas changed between iterations");
  }
  report.parse_compile = summarize(std::move(setup));

  for (std::size_t i = 0; i < warmup; ++i) {
    report.evaluated_points = evaluate_atlas(program, fixture, cfg).points.size();
  }
  StageRecorder recorder;
  for (std::size_t i = 0; i < iterations; ++i) {
    StageTimes stages;
    const auto t0 = Clock::now();
    const EvaluatedAtlas atlas = evaluate_atlas(program, fixture, cfg, nullptr, &stages);
    recorder.add(stages, std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
    report.evaluated_points = atlas.points.size();
  }
  report.frame = recorder.summary();
  return report;
}

nlohmann::json to_json(const BenchReport& r) {
  return {{"iterations", r.iterations},
          {"atlas_rows", r.atlas_rows},
          {"evaluated_points", r.evaluated_points},
          {"parse_compile", to_json(r.parse_compile)},
          {"frame", to_json(r.frame)}};
}

std::string summary_line(const BenchReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "parse+compile %zu rows: median %.3f ms | evaluate %zu points: median %.3f ms "
                "(p95 %.3f ms) over %zu iterations",
                r.atlas_rows, r.parse_compile.median_us / 1000.0, r.evaluated_points,
                r.frame.end_to_end.median_us / 1000.0, r.frame.end_to_end.p95_us / 1000.0,
                r.iterations);
  return buf;
}

}  // namespace faceatlas
