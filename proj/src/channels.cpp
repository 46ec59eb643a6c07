#include "faceatlas/channels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "csv.hpp"

namespace faceatlas {

std::string Rgb::hex() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
  return buf;
}

namespace {

bool parse_hex_color(std::string_view s, Rgb& out) {
  if (s.size() != 7 || s[0] != '#') return false;
  unsigned v[3];
  for (int i = 0; i < 3; ++i) {
    unsigned byte = 0;
    for (int k = 0; k < 2; ++k) {
      const char c = s[1 + 2 * i + k];
      byte <<= 4;
      if (c >= '0' && c <= '9') byte |= static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') byte |= static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') byte |= static_cast<unsigned>(c - 'A' + 10);
      else return false;
    }
    v[i] = byte;
  }
  out = {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]),
         static_cast<std::uint8_t>(v[2])};
  return true;
}

}  // namespace

std::vector<ChannelSpec> parse_channels(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  csv::Reader reader(text);
  std::vector<Diagnostic> diags;
  std::vector<ChannelSpec> specs;
  const std::vector<std::string> want = {"Code", "DisplayName", "Flow", "ColorHint"};
  bool have_header = false;
  std::set<std::string> seen;
  try {
    while (auto rec = reader.next()) {
      if (rec->blank()) continue;
      if (!have_header) {
        have_header = true;
        if (rec->fields != want) {
          throw BadHeader({{rec->line, "BadHeader", "expected header Code,DisplayName,Flow,ColorHint"}});
        }
        continue;
      }
      if (rec->fields.size() != 4) {
        diags.push_back({rec->line, "RowError",
                         "expected 4 fields, found " + std::to_string(rec->fields.size())});
        continue;
      }
      ChannelSpec spec;
      spec.code = csv::trim(rec->fields[0]);
      spec.display_name = csv::trim(rec->fields[1]);
      std::vector<std::string> problems;
      if (spec.code.empty() || spec.code.size() > 4 ||
          !std::all_of(spec.code.begin(), spec.code.end(), [](char c) { return c >= 'A' && c <= 'Z'; })) {
        problems.push_back("invalid channel code '" + spec.code + "'");
      } else if (!seen.insert(spec.code).second) {
        problems.push_back("duplicate channel " + spec.code);
      }
      std::set<PointId> in_flow;
      const std::string& flow = rec->fields[2];
      std::size_t pos = 0;
      while (pos <= flow.size() && !csv::trim(flow).empty()) {
        const std::size_t semi = flow.find(';', pos);
        const std::string item =
            csv::trim(std::string_view(flow).substr(pos, semi == std::string::npos ? std::string::npos : semi - pos));
        if (auto id = PointId::parse(item)) {
          if (!in_flow.insert(*id).second) {
            problems.push_back("flow repeats " + id->str());
          }
          spec.flow.push_back(*id);
        } else {
          problems.push_back("invalid flow entry '" + item + "'");
        }
        if (semi == std::string::npos) break;
        pos = semi + 1;
      }
      if (!parse_hex_color(csv::trim(rec->fields[3]), spec.color_hint)) {
        problems.push_back("ColorHint must be #RRGGBB, found '" + rec->fields[3] + "'");
      }
      if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        diags.push_back({rec->line, "RowError", msg});
        continue;
      }
      specs.push_back(std::move(spec));
    }
  } catch (const csv::Error& e) {
    diags.push_back({e.line(), "RowError", e.what()});
  }
  if (!have_header) {
    throw BadHeader({{1, "BadHeader", "missing header Code,DisplayName,Flow,ColorHint"}});
  }
  if (!diags.empty()) throw RowError(std::move(diags));
  return specs;
}

std::vector<ChannelSpec> bind_channels(std::vector<ChannelSpec> specs, const AtlasProgram& program) {
  for (auto& spec : specs) {
    if (spec.flow.empty()) {
      for (const auto& cp : program.points()) {
        if (cp.def.id.channel == spec.code) spec.flow.push_back(cp.def.id);
      }
      std::sort(spec.flow.begin(), spec.flow.end(),
                [](const PointId& a, const PointId& b) { return a.index < b.index; });
      continue;
    }
    for (const auto& id : spec.flow) {
      if (!program.find(id)) {
        throw UnknownPoint("channel " + spec.code + " flow references " + id.str() +
                           ", which the atlas does not define");
      }
    }
  }
  for (const auto& code : program.channels()) {
    const bool known = std::any_of(specs.begin(), specs.end(),
                                   [&](const ChannelSpec& s) { return s.code == code; });
    if (known) continue;
    ChannelSpec spec;
    spec.code = code;
    spec.display_name = code;
    spec.color_hint = {0xC0, 0xC0, 0xC0};
    for (const auto& cp : program.points()) {
      if (cp.def.id.channel == code) spec.flow.push_back(cp.def.id);
    }
    std::sort(spec.flow.begin(), spec.flow.end(),
              [](const PointId& a, const PointId& b) { return a.index < b.index; });
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<Polyline> channel_polylines(const ChannelSpec& spec, const AtlasProgram& program,
                                        const EvaluatedAtlas& atlas) {
  std::vector<Polyline> out;
  if (atlas.degenerate) return out;

  std::map<std::pair<PointId, Side>, const EvaluatedPoint*> present;
  for (const auto& p : atlas.points) {
    if (std::isfinite(p.position_px.x) && std::isfinite(p.position_px.y)) {
      present[{p.id, p.side}] = &p;
    }
  }
  const auto is_symmetric = [&](const PointId& id) {
    auto i = program.find(id);
    return i && program.points()[*i].def.is_symmetric;
  };
  const bool bilateral = std::any_of(spec.flow.begin(), spec.flow.end(), is_symmetric);
  const std::vector<Side> sides =
      bilateral ? std::vector<Side>{Side::Left, Side::Right} : std::vector<Side>{Side::Center};

  for (Side side : sides) {
    Polyline chain;
    const auto close = [&] {
      if (!chain.ids.empty()) out.push_back(std::move(chain));
      chain = Polyline{};
    };
    for (const auto& id : spec.flow) {
      const Side lookup_side = is_symmetric(id) ? side : Side::Center;
      auto it = present.find({id, lookup_side});
      if (it == present.end()) {
        close();
        continue;
      }
      chain.channel = spec.code;
      chain.side = side;
      chain.ids.push_back(id);
      chain.points_px.push_back(it->second->position_px);
      chain.points_norm.push_back(it->second->position_norm);
    }
    close();
  }
  return out;
}

ChannelSelection select_channels(const std::set<std::string>& codes, const AtlasProgram& program) {
  ChannelSelection sel;
  for (const auto& code : codes) {
    if (std::find(program.channels().begin(), program.channels().end(), code) ==
        program.channels().end()) {
      sel.unknown.push_back(code);
    }
  }
  for (const auto& ch : program.channels()) {
    if (codes.empty() || codes.count(ch)) sel.channels.push_back(ch);
  }
  sel.mask.emit.assign(program.size(), false);
  for (std::size_t i = 0; i < program.size(); ++i) {
    const auto& id = program.points()[i].def.id;
    if (codes.empty() || codes.count(id.channel)) {
      sel.mask.emit[i] = true;
      sel.ids.push_back(id);
    }
  }
  return sel;
}

EvaluatedAtlas filter_atlas(const EvaluatedAtlas& atlas, const ChannelSelection& selection) {
  EvaluatedAtlas out = atlas;
  out.points.clear();
  for (const auto& p : atlas.points) {
    if (std::find(selection.channels.begin(), selection.channels.end(), p.channel) !=
        selection.channels.end()) {
      out.points.push_back(p);
    }
  }
  return out;
}

nlohmann::json to_json(const Polyline& p) {
  nlohmann::json ids = nlohmann::json::array();
  nlohmann::json px = nlohmann::json::array();
  nlohmann::json norm = nlohmann::json::array();
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    ids.push_back(p.ids[i].str());
    px.push_back({p.points_px[i].x, p.points_px[i].y});
    norm.push_back({p.points_norm[i].x, p.points_norm[i].y});
  }
  return {{"channel", p.channel},
          {"side", std::string(to_string(p.side))},
          {"ids", std::move(ids)},
          {"px", std::move(px)},
          {"norm", std::move(norm)}};
}

}  // namespace faceatlas
