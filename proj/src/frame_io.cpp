#include "faceatlas/frame_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace faceatlas {

using nlohmann::json;

std::string encode_mask_rle(const HairMask& mask) {
  std::string out;
  std::uint8_t current = 0;
  std::size_t run = 0;
  bool first = true;
  const auto flush = [&] {
    if (!first) out.push_back(',');
    out += std::to_string(run);
    first = false;
  };
  for (std::uint8_t bit : mask.bits) {
    const std::uint8_t b = bit ? 1 : 0;
    if (b != current) {
      flush();
      current = b;
      run = 0;
    }
    ++run;
  }
  flush();
  return out;
}

HairMask decode_mask_rle(std::string_view rle, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw InvalidFrame("mask dimensions must be positive");
  }
  HairMask mask;
  mask.width = width;
  mask.height = height;
  const auto total = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  mask.bits.reserve(total);
  std::uint8_t value = 0;
  std::size_t pos = 0;
  while (pos <= rle.size()) {
    const std::size_t comma = rle.find(',', pos);
    const std::string_view field =
        rle.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    std::size_t run = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), run);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
      throw InvalidFrame("malformed hair mask run length");
    }
    if (run > total - mask.bits.size()) {
      throw InvalidFrame("hair mask runs exceed the raster size");
    }
    mask.bits.insert(mask.bits.end(), run, value);
    value ^= 1;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (mask.bits.size() != total) {
    throw InvalidFrame("hair mask runs do not cover the raster");
  }
  return mask;
}

json frame_to_json(const LandmarkFrame& frame) {
  json v = json::array();
  for (const auto& p : frame.vertices) {
    v.push_back({p.x, p.y, p.z});
  }
  json j = {{"ts", frame.timestamp_us}, {"w", frame.width}, {"h", frame.height}, {"v", std::move(v)}};
  if (frame.hair_mask) {
    j["hair"] = encode_mask_rle(*frame.hair_mask);
  }
  return j;
}

LandmarkFrame frame_from_json(const json& j) {
  if (!j.is_object()) throw InvalidFrame("frame must be a JSON object");
  const auto require = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw InvalidFrame(std::string("frame is missing \"") + key + "\"");
    return *it;
  };
  LandmarkFrame frame;
  try {
    frame.timestamp_us = require("ts").get<std::int64_t>();
    frame.width = require("w").get<int>();
    frame.height = require("h").get<int>();
    const json& v = require("v");
    if (!v.is_array()) throw InvalidFrame("\"v\" must be an array");
    frame.vertices.reserve(v.size());
    for (const auto& p : v) {
      if (!p.is_array() || p.size() < 2 || p.size() > 3) {
        throw InvalidFrame("each vertex must be [x,y] or [x,y,z]");
      }
      frame.vertices.push_back(
          {p[0].get<double>(), p[1].get<double>(), p.size() == 3 ? p[2].get<double>() : 0.0});
    }
    if (auto it = j.find("hair"); it != j.end() && !it->is_null()) {
      frame.hair_mask = std::make_shared<const HairMask>(
          decode_mask_rle(it->get<std::string>(), frame.width, frame.height));
    }
  } catch (const json::exception& e) {
    throw InvalidFrame(std::string("frame field has the wrong type: ") + e.what());
  }
  frame.validate();
  return frame;
}

LandmarkFrame parse_frame_line(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) throw InvalidFrame("frame line is not valid JSON");
  return frame_from_json(j);
}

std::string frame_to_line(const LandmarkFrame& frame) { return frame_to_json(frame).dump(); }

std::optional<FrameReader::Item> FrameReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Item item;
    item.line = line_;
    try {
      item.frame = parse_frame_line(line);
    } catch (const std::exception& e) {
      item.error = e.what();
    }
    return item;
  }
  return std::nullopt;
}

SemanticsConfig semantics_from_json(const json& j) {
  SemanticsConfig cfg;
  try {
    cfg.medial_brow_left = j.at("medial_brow_left").get<int>();
    cfg.medial_brow_right = j.at("medial_brow_right").get<int>();
    cfg.eye_contour_left = j.at("eye_contour_left").get<std::vector<int>>();
    cfg.eye_contour_right = j.at("eye_contour_right").get<std::vector<int>>();
    cfg.forehead_top = j.at("forehead_top").get<int>();
    cfg.midline_indices = j.at("midline_indices").get<std::vector<int>>();
    cfg.hairline_fallback_factor = j.value("hairline_fallback_factor", 1.10);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("semantics: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json semantics_to_json(const SemanticsConfig& cfg) {
  return {{"medial_brow_left", cfg.medial_brow_left},
          {"medial_brow_right", cfg.medial_brow_right},
          {"eye_contour_left", cfg.eye_contour_left},
          {"eye_contour_right", cfg.eye_contour_right},
          {"forehead_top", cfg.forehead_top},
          {"midline_indices", cfg.midline_indices},
          {"hairline_fallback_factor", cfg.hairline_fallback_factor}};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SemanticsConfig load_semantics(const std::string& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("semantics: " + path + " is not valid JSON");
  return semantics_from_json(j);
}

}  // namespace faceatlas
