#include <algorithm>
#include <chrono>
#include <map>
#include <numbers>

#include <Eigen/Geometry>

#include "faceatlas/parallel.hpp"
#include "faceatlas/pipeline.hpp"

namespace faceatlas {

namespace {

Eigen::Matrix3d pose_rotation(PoseAxis axis, double degrees) {
  const double radians = degrees * std::numbers::pi / 180.0;
  const Eigen::Vector3d unit = axis == PoseAxis::X   ? Eigen::Vector3d::UnitX()
                               : axis == PoseAxis::Y ? Eigen::Vector3d::UnitY()
                                                     : Eigen::Vector3d::UnitZ();
  return Eigen::AngleAxisd(radians, unit).toRotationMatrix();
}

Eigen::Vector3d iso3(const Vec3& v, int width, int height) {
  const Vec2 p = to_isotropic({v.x, v.y}, width, height);
  return {p.x, p.y, v.z};
}

Eigen::Vector3d vertex_centroid(const LandmarkFrame& frame) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& v : frame.vertices) c += iso3(v, frame.width, frame.height);
  return c / static_cast<double>(frame.vertices.size());
}

/// Inverse-square-distance weighted depth of the 4 nearest vertices.
double interpolate_depth(const LandmarkFrame& frame, Vec2 iso) {
  constexpr std::size_t k = 4;
  std::vector<std::pair<double, double>> nearest;  // (d^2, z)
  nearest.reserve(frame.vertices.size());
  for (const auto& v : frame.vertices) {
    const Vec2 p = to_isotropic({v.x, v.y}, frame.width, frame.height);
    const double dx = p.x - iso.x;
    const double dy = p.y - iso.y;
    nearest.emplace_back(dx * dx + dy * dy, v.z);
  }
  std::partial_sort(nearest.begin(), nearest.begin() + k, nearest.end());
  if (nearest.front().first < 1e-24) return nearest.front().second;
  double wsum = 0.0;
  double zsum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = 1.0 / nearest[i].first;
    wsum += w;
    zsum += w * nearest[i].second;
  }
  return zsum / wsum;
}

std::string_view axis_name(PoseAxis a) {
  return a == PoseAxis::X ? "X" : a == PoseAxis::Y ? "Y" : "Z";
}

nlohmann::json to_json(const ClassErrors& e) {
  nlohmann::json j = nlohmann::json::object();
  for (int c = 0; c < 3; ++c) {
    j[std::string(to_string(static_cast<Complexity>(c)))] = {{"mean_px", e.mean_px[c]},
                                                             {"count", e.count[c]}};
  }
  return j;
}

}  // namespace

LandmarkFrame pose_transform(const LandmarkFrame& fixture, PoseAxis axis, double degrees) {
  LandmarkFrame out = fixture;
  const Eigen::Matrix3d rot = pose_rotation(axis, degrees);
  const Eigen::Vector3d center = vertex_centroid(fixture);
  for (auto& v : out.vertices) {
    const Eigen::Vector3d p = rot * (iso3(v, fixture.width, fixture.height) - center) + center;
    const Vec2 xy = from_isotropic({p.x(), p.y()}, fixture.width, fixture.height);
    v = {xy.x, xy.y, p.z()};
  }
  return out;
}

std::vector<PoseSpec> standard_poses(double degrees) {
  return {{"frontal", PoseAxis::X, 0.0},
          {"pitch", PoseAxis::X, degrees},
          {"roll", PoseAxis::Y, degrees},
          {"yaw", PoseAxis::Z, degrees}};
}

PoseSweepReport accuracy_experiment(const AtlasProgram& program, const LandmarkFrame& fixture,
                                    const SemanticsConfig& cfg, const std::vector<PoseSpec>& poses) {
  const auto t0 = std::chrono::steady_clock::now();
  LandmarkFrame base = fixture;
  base.hair_mask.reset();

  const EvaluatedAtlas frontal = evaluate_atlas(program, base, cfg);
  if (frontal.degenerate) {
    throw DegenerateFace("accuracy experiment needs a non-degenerate frontal fixture: " +
                         frontal.degenerate_reason);
  }
  const double h = static_cast<double>(base.height);

  struct Truth {
    Eigen::Vector3d iso;
    Complexity complexity;
  };
  std::map<std::pair<PointId, Side>, Truth> truth;
  for (const auto& p : frontal.points) {
    const Vec2 iso{p.position_px.x / h, p.position_px.y / h};
    const auto index = program.find(p.id);
    truth[{p.id, p.side}] = {{iso.x, iso.y, interpolate_depth(base, iso)},
                             program.points()[*index].complexity};
  }
  const Eigen::Vector3d center = vertex_centroid(base);

  std::vector<LandmarkFrame> posed;
  posed.reserve(poses.size());
  for (const auto& pose : poses) posed.push_back(pose_transform(base, pose.axis, pose.degrees));
  const std::vector<EvaluatedAtlas> measured = evaluate_frames(program, posed, cfg);

  PoseSweepReport report;
  double overall_sum[3] = {0, 0, 0};
  for (std::size_t k = 0; k < poses.size(); ++k) {
    PoseResult result;
    result.pose = poses[k];
    if (measured[k].degenerate) {
      result.degenerate = true;
      report.poses.push_back(result);
      continue;
    }
    const Eigen::Matrix3d rot = pose_rotation(poses[k].axis, poses[k].degrees);
    double sum[3] = {0, 0, 0};
    for (const auto& p : measured[k].points) {
      auto it = truth.find({p.id, p.side});
      if (it == truth.end()) continue;
      const Eigen::Vector3d moved = rot * (it->second.iso - center) + center;
      const Vec2 expected_px{moved.x() * h, moved.y() * h};
      const double err = distance(expected_px, p.position_px);
      const int c = static_cast<int>(it->second.complexity);
      sum[c] += err;
      result.errors.count[c] += 1;
      overall_sum[c] += err;
      report.overall.count[c] += 1;
    }
    for (int c = 0; c < 3; ++c) {
      if (result.errors.count[c]) {
        result.errors.mean_px[c] = sum[c] / static_cast<double>(result.errors.count[c]);
      }
    }
    report.poses.push_back(result);
  }
  for (int c = 0; c < 3; ++c) {
    if (report.overall.count[c]) {
      report.overall.mean_px[c] = overall_sum[c] / static_cast<double>(report.overall.count[c]);
    }
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

nlohmann::json to_json(const PoseSweepReport& r) {
  nlohmann::json poses = nlohmann::json::array();
  for (const auto& p : r.poses) {
    poses.push_back({{"pose", p.pose.name},
                     {"axis", std::string(axis_name(p.pose.axis))},
                     {"degrees", p.pose.degrees},
                     {"degenerate", p.degenerate},
                     {"classes", to_json(p.errors)}});
  }
  return {{"ground_truth", "frontal evaluation rigidly transported through each pose"},
          {"poses", std::move(poses)},
          {"overall", to_json(r.overall)},
          {"runtime_seconds", r.runtime_seconds}};
}

}  // namespace faceatlas
