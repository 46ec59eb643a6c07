#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "faceatlas/geometry.hpp"

namespace faceatlas {

// Hair masks travel as comma-separated run lengths over the row-major
// raster, alternating skin/hair and always starting with a skin run
// (which may be 0), e.g. "3,2,4" = 3 skin, 2 hair, 4 skin pixels.
std::string encode_mask_rle(const HairMask& mask);
HairMask decode_mask_rle(std::string_view rle, int width, int height);

/// {"ts","w","h","v":[[x,y,z],...],"hair"?}
nlohmann::json frame_to_json(const LandmarkFrame& frame);
LandmarkFrame frame_from_json(const nlohmann::json& j);

LandmarkFrame parse_frame_line(std::string_view line);
std::string frame_to_line(const LandmarkFrame& frame);

/// Reads a JSONL stream one frame at a time. Blank lines are skipped;
/// malformed lines surface as an error message instead of a frame.
class FrameReader {
 public:
  explicit FrameReader(std::istream& in) : in_(in) {}

  struct Item {
    std::optional<LandmarkFrame> frame;
    std::string error;
    long line = 0;
  };

  std::optional<Item> next();

 private:
  std::istream& in_;
  long line_ = 0;
};

SemanticsConfig semantics_from_json(const nlohmann::json& j);
nlohmann::json semantics_to_json(const SemanticsConfig& cfg);
SemanticsConfig load_semantics(const std::string& path);

/// Reads a whole file; throws std::runtime_error when it cannot be opened.
std::string read_text_file(const std::string& path);

}  // namespace faceatlas
