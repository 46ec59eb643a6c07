#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faceatlas/adl.hpp"
#include "faceatlas/evaluator.hpp"
#include "faceatlas/flow_limiter.hpp"
#include "faceatlas/frame_io.hpp"
#include "faceatlas/geometry.hpp"

namespace faceatlas {

// ---- timing ----------------------------------------------------------------

struct DurationSummary {
  std::size_t count = 0;
  double median_us = 0.0;
  double p95_us = 0.0;
  double mean_us = 0.0;
};

DurationSummary summarize(std::vector<double> samples_us);

struct StageTiming {
  DurationSummary hairline;
  DurationSummary alignment;
  DurationSummary evaluation;
  DurationSummary end_to_end;
};

/// Collects per-frame samples and turns them into a StageTiming.
class StageRecorder {
 public:
  void add(const StageTimes& stages, double end_to_end_us);
  StageTiming summary() const;
  std::size_t size() const { return e2e_.size(); }

 private:
  std::vector<double> hairline_, alignment_, evaluation_, e2e_;
};

nlohmann::json to_json(const DurationSummary& d);
nlohmann::json to_json(const StageTiming& t);

// ---- deterministic simulation ----------------------------------------------------

struct SimEvent {
  enum class Kind { Arrival, Completion, Close };
  std::int64_t time = 0;
  Kind kind = Kind::Arrival;
  std::int64_t item = 0;  // frame timestamp
  std::size_t in_flight_after = 0;
};

struct SimulationResult {
  std::size_t admitted = 0;
  std::size_t dropped = 0;
  std::size_t completed = 0;
  std::size_t peak_in_flight = 0;
  std::vector<std::int64_t> processed;  // completion order
  std::vector<std::int64_t> dropped_items;
  std::vector<SimEvent> events;
};

/// Virtual-clock run of one admitter and one processor around a FlowLimiter.
/// Frames arrive at `arrivals` (also their timestamps); each takes
/// `service_time(ts)` to process. At equal times completions precede
/// arrivals. The stream closes right after the last arrival.
SimulationResult simulate_stream(std::span<const std::int64_t> arrivals,
                                 const std::function<std::int64_t(std::int64_t)>& service_time,
                                 std::size_t max_in_flight);

// ---- threaded stream ----------------------------------------------------------

struct RunOptions {
  std::size_t max_in_flight = 1;
  /// Sleep so frames arrive at their timestamps (scaled by `speed`).
  bool paced = false;
  double speed = 1.0;
};

struct RunSummary {
  std::size_t admitted = 0;
  std::size_t dropped = 0;
  std::size_t completed = 0;
  std::size_t malformed = 0;
  std::size_t degenerate = 0;
  std::size_t peak_in_flight = 0;
  double wall_seconds = 0.0;
  double completed_per_second = 0.0;
  StageTiming timing;
};

nlohmann::json to_json(const RunSummary& s);

using FrameSource = std::function<std::optional<FrameReader::Item>()>;
using AtlasSink = std::function<void(const EvaluatedAtlas&)>;

/// Streams frames through an admitter thread (the caller) and a processor
/// thread joined by a FlowLimiter. The sink runs on the processor thread,
/// in admission order.
RunSummary run_stream(const FrameSource& source, const AtlasProgram& program,
                      const SemanticsConfig& cfg, const RunOptions& options, const AtlasSink& sink);

// ---- pose sweep -----------------------------------------------------------------

enum class PoseAxis { X, Y, Z };

/// Rigid 3D rotation of all vertices about their centroid (in isotropic
/// coordinates), followed by orthographic projection. Axis labels follow the
/// experiment: pitch = X, roll = Y, yaw = Z (Z is the in-plane axis).
LandmarkFrame pose_transform(const LandmarkFrame& fixture, PoseAxis axis, double degrees);

struct PoseSpec {
  std::string name;
  PoseAxis axis = PoseAxis::X;
  double degrees = 0.0;
};

/// frontal (0), pitch (X +10), roll (Y +10), yaw (Z +10).
std::vector<PoseSpec> standard_poses(double degrees = 10.0);

struct ClassErrors {
  double mean_px[3] = {0.0, 0.0, 0.0};
  std::size_t count[3] = {0, 0, 0};
};

struct PoseResult {
  PoseSpec pose;
  bool degenerate = false;
  ClassErrors errors;
};

struct PoseSweepReport {
  std::vector<PoseResult> poses;
  ClassErrors overall;  // mean over every non-degenerate pose, per class
  double runtime_seconds = 0.0;
};

/// Ground truth is the frontal evaluation carried rigidly through each pose
/// (point depth interpolated from nearby vertices); measurement is a fresh
/// evaluation of the posed mesh. The hair mask is ignored so every pose uses
/// the same vertex-derived hairline.
PoseSweepReport accuracy_experiment(const AtlasProgram& program, const LandmarkFrame& fixture,
                                    const SemanticsConfig& cfg,
                                    const std::vector<PoseSpec>& poses = standard_poses());

nlohmann::json to_json(const PoseSweepReport& r);

// ---- benchmark --------------------------------------------------------------------

struct BenchReport {
  std::size_t iterations = 0;
  std::size_t atlas_rows = 0;
  std::size_t evaluated_points = 0;
  DurationSummary parse_compile;
  StageTiming frame;
};

BenchReport bench(std::string_view atlas_text, const LandmarkFrame& fixture,
                  const SemanticsConfig& cfg, std::size_t iterations);

nlohmann::json to_json(const BenchReport& r);
std::string summary_line(const BenchReport& r);

}  // namespace faceatlas
