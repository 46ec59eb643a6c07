#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faceatlas/adl.hpp"
#include "faceatlas/evaluator.hpp"

namespace faceatlas {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  std::string hex() const;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct ChannelSpec {
  std::string code;
  std::string display_name;
  std::vector<PointId> flow;  // empty in the file = ascending point index
  Rgb color_hint;
};

class UnknownPoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `Code,DisplayName,Flow,ColorHint` (Flow is ';'-separated ids,
/// ColorHint is #RRGGBB). Throws AtlasError with per-row diagnostics.
std::vector<ChannelSpec> parse_channels(std::string_view text);

/// Fills empty flows with the channel's points in ascending index order and
/// checks every flow entry exists in the program. Throws UnknownPoint.
/// Channels present in the program but absent from `specs` get a default
/// spec with a neutral colour.
std::vector<ChannelSpec> bind_channels(std::vector<ChannelSpec> specs, const AtlasProgram& program);

struct Polyline {
  std::string channel;
  Side side = Side::Center;
  std::vector<PointId> ids;
  std::vector<Vec2> points_px;
  std::vector<Vec2> points_norm;
};

/// One chain per side (Left, Right) when any flow point is symmetric, one
/// Center chain otherwise; a point missing from the atlas splits the chain.
std::vector<Polyline> channel_polylines(const ChannelSpec& spec, const AtlasProgram& program,
                                        const EvaluatedAtlas& atlas);

struct ChannelSelection {
  std::vector<PointId> ids;
  std::vector<std::string> channels;  // selected channel codes, program order
  std::vector<std::string> unknown;   // requested codes the program lacks
  Selection mask;
};

/// Empty `codes` selects every channel.
ChannelSelection select_channels(const std::set<std::string>& codes, const AtlasProgram& program);

/// Keeps only points whose channel is part of the selection.
EvaluatedAtlas filter_atlas(const EvaluatedAtlas& atlas, const ChannelSelection& selection);

nlohmann::json to_json(const Polyline& p);

}  // namespace faceatlas
