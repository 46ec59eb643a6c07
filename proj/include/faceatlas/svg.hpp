#pragma once

#include <string>
#include <vector>

#include "faceatlas/adl.hpp"
#include "faceatlas/channels.hpp"
#include "faceatlas/evaluator.hpp"

namespace faceatlas {

struct SvgOptions {
  double point_radius = 4.0;
  bool labels = true;
};

/// Overlay in pixel coordinates of the source frame: channel polylines as
/// paths, points as circles (hollow when estimated), ids as text.
std::string render_svg(const EvaluatedAtlas& atlas, const AtlasProgram& program,
                       const std::vector<ChannelSpec>& channels, const SvgOptions& options = {});

std::string xml_escape(std::string_view text);

}  // namespace faceatlas
