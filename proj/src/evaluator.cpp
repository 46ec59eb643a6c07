#include "faceatlas/evaluator.hpp"

#include <cctype>
#include <chrono>
#include <stdexcept>

namespace faceatlas {

std::string_view to_string(Side s) {
  switch (s) {
    case Side::Center: return "center";
    case Side::Left: return "left";
    case Side::Right: return "right";
  }
  return "?";
}

std::string_view to_string(Confidence c) {
  return c == Confidence::Measured ? "measured" : "estimated";
}

namespace {

std::size_t slot(std::size_t point, Side side) { return point * 3 + static_cast<std::size_t>(side); }

void downgrade(Confidence* acc, Confidence c) {
  if (acc && c == Confidence::Estimated) *acc = Confidence::Estimated;
}

// The mesh stops short of the ears, so anything placed there is extrapolated.
bool off_mesh_region(std::string_view region) {
  return region.size() == 3 && std::tolower(static_cast<unsigned char>(region[0])) == 'e' &&
         std::tolower(static_cast<unsigned char>(region[1])) == 'a' &&
         std::tolower(static_cast<unsigned char>(region[2])) == 'r';
}

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

}  // namespace

EvalEnvironment::EvalEnvironment(const AtlasProgram& program, AlignedFrame aligned,
                                 ReferencePoints refs, CunUnit cun)
    : program_(&program),
      aligned_(std::move(aligned)),
      refs_(refs),
      cun_(cun),
      table_(program.size() * 3) {}

void EvalEnvironment::insert(std::size_t point, Side side, ResolvedPoint p) {
  auto& cell = table_.at(slot(point, side));
  if (cell) throw std::logic_error("point evaluated twice");
  cell = p;
}

bool EvalEnvironment::has(std::size_t point, Side side) const {
  return table_.at(slot(point, side)).has_value();
}

const ResolvedPoint& EvalEnvironment::lookup(std::size_t point, Side side) const {
  const auto& cell = table_.at(slot(point, side));
  if (!cell) {
    throw std::logic_error("lookup of unevaluated point " +
                           program_->points()[point].def.id.str() + " (" +
                           std::string(to_string(side)) + ")");
  }
  return *cell;
}

double evaluate_expression(const Expr& e, const EvalEnvironment& env, Side side,
                           Confidence* confidence) {
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Num>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, Cun>) {
          downgrade(confidence, env.cun_confidence());
          return env.cun().uc;
        } else if constexpr (std::is_same_v<T, Coord>) {
          Vec2 p;
          if (const auto* mesh = std::get_if<MeshRef>(&n.ref)) {
            p = env.aligned().vertices.at(static_cast<std::size_t>(mesh->index));
          } else if (std::holds_alternative<HairlineRef>(n.ref)) {
            p = env.references().rhd2;
            downgrade(confidence, env.references().rhd2_confidence);
          } else {
            const auto& ref = std::get<PointRef>(n.ref);
            const auto index = env.program().find(ref.id);
            if (!index) throw std::logic_error("unresolved reference " + ref.id.str());
            Side target = Side::Center;
            if (env.program().points()[*index].def.is_symmetric) {
              target = ref.side == SideQualifier::Left    ? Side::Left
                       : ref.side == SideQualifier::Right ? Side::Right
                       : side == Side::Center             ? Side::Right
                                                          : side;
            }
            const ResolvedPoint& rp = env.lookup(*index, target);
            downgrade(confidence, rp.confidence);
            p = rp.aligned;
          }
          return n.axis == Axis::X ? p.x : p.y;
        } else if constexpr (std::is_same_v<T, Neg>) {
          return -evaluate_expression(*n.operand, env, side, confidence);
        } else {
          const double l = evaluate_expression(*n.lhs, env, side, confidence);
          const double r = evaluate_expression(*n.rhs, env, side, confidence);
          switch (n.op) {
            case BinaryOp::Add: return l + r;
            case BinaryOp::Sub: return l - r;
            case BinaryOp::Mul: return l * r;
          }
          return 0.0;
        }
      },
      e.node);
}

EvaluatedAtlas evaluate_atlas(const AtlasProgram& program, const LandmarkFrame& frame,
                              const SemanticsConfig& cfg, const Selection* selection,
                              StageTimes* times) {
  EvaluatedAtlas out;
  out.timestamp_us = frame.timestamp_us;
  out.width = frame.width;
  out.height = frame.height;

  StageTimes local;
  auto t0 = Clock::now();
  std::optional<EvalEnvironment> env;
  try {
    AlignedFrame aligned = align_frame(frame, cfg);
    local.alignment_us = micros_since(t0);
    t0 = Clock::now();
    const Hairline hairline = extract_hairline(frame, aligned, cfg);
    local.hairline_us = micros_since(t0);
    t0 = Clock::now();
    const ReferencePoints refs = extract_reference_points(aligned, hairline, cfg);
    const CunUnit cun = unit_cun(refs);
    env.emplace(program, std::move(aligned), refs, cun);
  } catch (const DegenerateFace& e) {
    out.degenerate = true;
    out.degenerate_reason = e.what();
    if (times) *times = local;
    return out;
  }

  const AlignedFrame& aligned = env->aligned();
  out.uc = env->cun().uc;
  out.transform = aligned.transform;
  out.midline_x = aligned.midline_x;

  const auto& points = program.points();
  for (std::size_t i : program.order()) {
    const AcupointDef& def = points[i].def;
    const Side side = def.is_symmetric ? Side::Right : Side::Center;
    ResolvedPoint rp;
    rp.confidence = off_mesh_region(def.region) ? Confidence::Estimated : Confidence::Measured;
    rp.aligned.x = evaluate_expression(*def.expr_x, *env, side, &rp.confidence);
    rp.aligned.y = evaluate_expression(*def.expr_y, *env, side, &rp.confidence);
    env->insert(i, side, rp);
    if (def.is_symmetric) {
      env->insert(i, Side::Left, {mirror_point(rp.aligned, aligned), rp.confidence});
    }
  }

  const double w = static_cast<double>(frame.width);
  const double h = static_cast<double>(frame.height);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (selection && !selection->emit.at(i)) continue;
    const AcupointDef& def = points[i].def;
    const auto emit = [&](Side side) {
      const ResolvedPoint& rp = env->lookup(i, side);
      EvaluatedPoint ep;
      ep.id = def.id;
      ep.side = side;
      ep.position_aligned = rp.aligned;
      ep.position_px = aligned.to_pixels(rp.aligned);
      ep.position_norm = {ep.position_px.x / w, ep.position_px.y / h};
      ep.confidence = rp.confidence;
      ep.channel = def.id.channel;
      ep.name_en = def.name_en;
      out.points.push_back(std::move(ep));
    };
    if (def.is_symmetric) {
      emit(Side::Right);
      emit(Side::Left);
    } else {
      emit(Side::Center);
    }
  }
  local.evaluation_us = micros_since(t0);
  if (times) *times = local;
  return out;
}

nlohmann::json to_json(const EvaluatedAtlas& atlas) {
  using nlohmann::json;
  json points = json::array();
  for (const auto& p : atlas.points) {
    points.push_back({{"id", p.id.str()},
                      {"side", std::string(to_string(p.side))},
                      {"name", p.name_en},
                      {"channel", p.channel},
                      {"px", {p.position_px.x, p.position_px.y}},
                      {"norm", {p.position_norm.x, p.position_norm.y}},
                      {"conf", std::string(to_string(p.confidence))}});
  }
  return {{"ts", atlas.timestamp_us},
          {"uc", atlas.uc},
          {"degenerate", atlas.degenerate},
          {"points", std::move(points)}};
}

EvaluatedAtlas evaluated_atlas_from_json(const nlohmann::json& j) {
  EvaluatedAtlas atlas;
  atlas.timestamp_us = j.at("ts").get<std::int64_t>();
  atlas.uc = j.at("uc").get<double>();
  atlas.degenerate = j.at("degenerate").get<bool>();
  for (const auto& p : j.at("points")) {
    EvaluatedPoint ep;
    auto id = PointId::parse(p.at("id").get<std::string>());
    if (!id) throw std::invalid_argument("bad point id in atlas JSON");
    ep.id = *id;
    const auto side = p.at("side").get<std::string>();
    ep.side = side == "left" ? Side::Left : side == "right" ? Side::Right : Side::Center;
    ep.name_en = p.at("name").get<std::string>();
    ep.channel = p.at("channel").get<std::string>();
    ep.position_px = {p.at("px").at(0).get<double>(), p.at("px").at(1).get<double>()};
    ep.position_norm = {p.at("norm").at(0).get<double>(), p.at("norm").at(1).get<double>()};
    ep.confidence =
        p.at("conf").get<std::string>() == "measured" ? Confidence::Measured : Confidence::Estimated;
    atlas.points.push_back(std::move(ep));
  }
  return atlas;
}

}  // namespace faceatlas
