#include <map>

#include <fmt/format.h>

#include "faceatlas/svg.hpp"

namespace faceatlas {

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_svg(const EvaluatedAtlas& atlas, const AtlasProgram& program,
                       const std::vector<ChannelSpec>& channels, const SvgOptions& options) {
  std::map<std::string, std::string> colour;
  for (const auto& c : channels) colour[c.code] = c.color_hint.hex();
  const auto colour_of = [&](const std::string& code) {
    auto it = colour.find(code);
    return it == colour.end() ? std::string("#C0C0C0") : it->second;
  };

  std::string out = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n",
      atlas.width, atlas.height);
  if (atlas.degenerate) {
    out += fmt::format("  <text x=\"8\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
                       xml_escape("degenerate: " + atlas.degenerate_reason));
    out += "</svg>\n";
    return out;
  }

  out += "  <g id=\"channels\" fill=\"none\" stroke-width=\"1.5\">\n";
  for (const auto& spec : channels) {
    for (const auto& line : channel_polylines(spec, program, atlas)) {
      if (line.points_px.size() < 2) continue;
      std::string d;
      for (std::size_t i = 0; i < line.points_px.size(); ++i) {
        d += fmt::format("{}{:.2f} {:.2f}", i ? " L" : "M", line.points_px[i].x, line.points_px[i].y);
      }
      out += fmt::format("    <path class=\"{}\" stroke=\"{}\" d=\"{}\"/>\n", xml_escape(spec.code),
                         spec.color_hint.hex(), d);
    }
  }
  out += "  </g>\n  <g id=\"points\">\n";
  for (const auto& p : atlas.points) {
    const std::string c = colour_of(p.channel);
    const bool hollow = p.confidence == Confidence::Estimated;
    out += fmt::format(
        "    <circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\" stroke=\"{}\"/>\n",
        p.position_px.x, p.position_px.y, options.point_radius, hollow ? "none" : c, c);
  }
  out += "  </g>\n";
  if (options.labels) {
    out += "  <g id=\"labels\" font-family=\"sans-serif\" font-size=\"10\">\n";
    for (const auto& p : atlas.points) {
      std::string label = p.id.str();
      if (p.side == Side::Left) label += ".L";
      if (p.side == Side::Right) label += ".R";
      out += fmt::format("    <text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n",
                         p.position_px.x + options.point_radius + 1, p.position_px.y - 2,
                         xml_escape(label));
    }
    out += "  </g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace faceatlas
