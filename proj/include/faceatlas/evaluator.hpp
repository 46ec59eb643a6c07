#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faceatlas/adl.hpp"
#include "faceatlas/geometry.hpp"

namespace faceatlas {

enum class Side { Center, Left, Right };

std::string_view to_string(Side s);
std::string_view to_string(Confidence c);

struct ResolvedPoint {
  Vec2 aligned;
  Confidence confidence = Confidence::Measured;
};

/// Per-call evaluation state: the aligned frame, its references and the
/// table of already-evaluated points. Each (point, side) is written once.
class EvalEnvironment {
 public:
  EvalEnvironment(const AtlasProgram& program, AlignedFrame aligned, ReferencePoints refs,
                  CunUnit cun);

  const AtlasProgram& program() const { return *program_; }
  const AlignedFrame& aligned() const { return aligned_; }
  const ReferencePoints& references() const { return refs_; }
  CunUnit cun() const { return cun_; }
  Confidence cun_confidence() const { return refs_.rhd2_confidence; }

  void insert(std::size_t point, Side side, ResolvedPoint p);
  /// Aborts via std::logic_error if the point has not been evaluated yet.
  const ResolvedPoint& lookup(std::size_t point, Side side) const;
  bool has(std::size_t point, Side side) const;

 private:
  const AtlasProgram* program_;
  AlignedFrame aligned_;
  ReferencePoints refs_;
  CunUnit cun_;
  std::vector<std::optional<ResolvedPoint>> table_;  // 3 slots per point
};

struct EvaluatedPoint {
  PointId id;
  Side side = Side::Center;
  Vec2 position_px;
  Vec2 position_norm;
  Vec2 position_aligned;
  Confidence confidence = Confidence::Measured;
  std::string channel;
  std::string name_en;
};

struct EvaluatedAtlas {
  std::int64_t timestamp_us = 0;
  int width = 0;
  int height = 0;
  std::vector<EvaluatedPoint> points;
  double uc = 0.0;
  bool degenerate = false;
  std::string degenerate_reason;
  RigidTransform transform;
  double midline_x = kAlignedAnchor.x;
};

/// Per-stage wall-clock durations of one evaluate_atlas call, microseconds.
struct StageTimes {
  double alignment_us = 0.0;
  double hairline_us = 0.0;
  double evaluation_us = 0.0;
};

/// Value of `e` for the instance on `side` (Center for non-symmetric points).
/// `confidence` is downgraded to Estimated when any input is estimated.
double evaluate_expression(const Expr& e, const EvalEnvironment& env, Side side,
                           Confidence* confidence = nullptr);

/// Restricts evaluation output to a subset of points; dependencies outside
/// the subset are still evaluated but not emitted.
struct Selection {
  std::vector<bool> emit;  // indexed like AtlasProgram::points()
};

EvaluatedAtlas evaluate_atlas(const AtlasProgram& program, const LandmarkFrame& frame,
                              const SemanticsConfig& cfg, const Selection* selection = nullptr,
                              StageTimes* times = nullptr);

nlohmann::json to_json(const EvaluatedAtlas& atlas);
EvaluatedAtlas evaluated_atlas_from_json(const nlohmann::json& j);

}  // namespace faceatlas
