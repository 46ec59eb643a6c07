#pragma once

// Acupoint definition language: coordinate expressions, the CSV atlas file,
// and the compiled program (reference graph, evaluation order, complexity).

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace faceatlas {

struct PointId {
  std::string channel;  // [A-Z]{1,4}
  int index = 0;        // >= 1

  std::string str() const { return channel + std::to_string(index); }

  friend auto operator<=>(const PointId&, const PointId&) = default;
  friend bool operator==(const PointId&, const PointId&) = default;

  /// Parses "ST2"; returns nullopt when the text is not a valid id.
  static std::optional<PointId> parse(std::string_view text);
};

enum class Axis { X, Y };
enum class SideQualifier { None, Left, Right };

struct PointRef {
  PointId id;
  SideQualifier side = SideQualifier::None;
  friend bool operator==(const PointRef&, const PointRef&) = default;
};

struct MeshRef {
  int index = 0;
  friend bool operator==(const MeshRef&, const MeshRef&) = default;
};

/// `M_HAIRLINE`: the hairline/midline point measured by the runtime.
struct HairlineRef {
  friend bool operator==(const HairlineRef&, const HairlineRef&) = default;
};

using Ref = std::variant<PointRef, MeshRef, HairlineRef>;

std::string ref_to_string(const Ref& ref);

enum class BinaryOp { Add, Sub, Mul };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Num {
  double value = 0.0;
};
struct Cun {};
struct Coord {
  Axis axis = Axis::X;
  Ref ref;
};
struct Neg {
  ExprPtr operand;
};
struct Binary {
  BinaryOp op = BinaryOp::Add;
  ExprPtr lhs;
  ExprPtr rhs;
};

/// Immutable expression node; subtrees are shared, never mutated.
struct Expr {
  std::variant<Num, Cun, Coord, Neg, Binary> node;
};

namespace expr {
ExprPtr num(double v);
ExprPtr cun();
ExprPtr coord(Axis axis, Ref ref);
ExprPtr neg(ExprPtr e);
ExprPtr add(ExprPtr l, ExprPtr r);
ExprPtr sub(ExprPtr l, ExprPtr r);
ExprPtr mul(ExprPtr l, ExprPtr r);
}  // namespace expr

bool equal(const Expr& a, const Expr& b);
inline bool equal(const ExprPtr& a, const ExprPtr& b) { return equal(*a, *b); }

/// Canonical text with minimal parentheses; parse_expression(to_string(e))
/// reproduces e.
std::string to_string(const Expr& e);

/// Structural dump used in diagnostics and tests, e.g.
/// Add(Coord(Y,ST1),Mul(Num(0.5),Cun)).
std::string to_debug_string(const Expr& e);

// ---- errors ---------------------------------------------------------------

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : std::runtime_error(message), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class SyntaxError : public ParseError {
 public:
  SyntaxError(std::size_t offset, std::string found, std::set<std::string> expected);
  const std::set<std::string>& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  std::string found_;
  std::set<std::string> expected_;
};

class UnknownFunction : public ParseError {
 public:
  UnknownFunction(std::size_t offset, std::string name);
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Reference that is lexically valid but semantically out of range
/// (mesh index >= 468, point index 0, ...).
class BadReference : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Product of two length-valued subexpressions.
class DimensionError : public ParseError {
 public:
  using ParseError::ParseError;
};

ExprPtr parse_expression(std::string_view src);

/// Rejects products whose operands are both lengths (contain a coordinate
/// or the cun). Throws DimensionError.
void check_dimensions(const Expr& e);

// ---- atlas file ---------------------------------------------------------------

struct Diagnostic {
  long line = 0;  // 1-based source line, 0 when not tied to a line
  std::string kind;
  std::string message;
};

std::string format_diagnostic(const Diagnostic& d);

class AtlasError : public std::runtime_error {
 public:
  AtlasError(std::string kind, std::vector<Diagnostic> diagnostics);
  const std::string& kind() const { return kind_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::string kind_;
  std::vector<Diagnostic> diagnostics_;
};

class BadHeader : public AtlasError {
 public:
  explicit BadHeader(std::vector<Diagnostic> d) : AtlasError("BadHeader", std::move(d)) {}
};
class RowError : public AtlasError {
 public:
  explicit RowError(std::vector<Diagnostic> d) : AtlasError("RowError", std::move(d)) {}
};
class CycleError : public AtlasError {
 public:
  CycleError(std::vector<PointId> cycle, std::vector<Diagnostic> d)
      : AtlasError("CycleError", std::move(d)), cycle_(std::move(cycle)) {}
  const std::vector<PointId>& cycle() const { return cycle_; }

 private:
  std::vector<PointId> cycle_;
};
class UndefinedReference : public AtlasError {
 public:
  explicit UndefinedReference(std::vector<Diagnostic> d)
      : AtlasError("UndefinedReference", std::move(d)) {}
};
class SideAccessError : public AtlasError {
 public:
  explicit SideAccessError(std::vector<Diagnostic> d)
      : AtlasError("SideAccessError", std::move(d)) {}
};

struct AcupointDef {
  PointId id;
  std::string name_en;
  std::string region;
  ExprPtr expr_x;
  ExprPtr expr_y;
  bool is_symmetric = false;
  std::string comments;
  long line = 0;
};

inline constexpr std::string_view kAtlasHeader =
    "Channel,ID,NameE,Region,FaceMeshX,FaceMeshY,IsSymmetry,Comments";

/// Parses a whole atlas document. Every row is checked before throwing, so a
/// RowError carries one diagnostic per failing row.
std::vector<AcupointDef> parse_atlas(std::string_view text);

std::string serialize_atlas(const std::vector<AcupointDef>& defs);

// ---- compiled program -------------------------------------------------------

enum class Complexity { Direct, OneTimeProportional, MultiTimeProportional };

std::string_view to_string(Complexity c);

struct CompiledPoint {
  AcupointDef def;
  Complexity complexity = Complexity::Direct;
  std::vector<std::size_t> dependencies;  // indices of referenced definitions
  bool uses_cun = false;
  bool uses_hairline = false;
};

class AtlasProgram {
 public:
  const std::vector<CompiledPoint>& points() const { return points_; }
  /// Indices into points(), dependencies first, ties broken by file order.
  const std::vector<std::size_t>& order() const { return order_; }
  const std::vector<std::string>& channels() const { return channels_; }
  std::optional<std::size_t> find(const PointId& id) const;
  std::size_t size() const { return points_.size(); }

  /// Canonical JSON (sorted keys) for determinism checks and inspection.
  nlohmann::json to_json() const;

 private:
  friend AtlasProgram compile_atlas(std::vector<AcupointDef> defs);
  std::vector<CompiledPoint> points_;
  std::vector<std::size_t> order_;
  std::vector<std::string> channels_;
  std::map<PointId, std::size_t> index_;
};

AtlasProgram compile_atlas(std::vector<AcupointDef> defs);

/// Reference-channel code; rows in this channel count as reference points.
inline constexpr std::string_view kReferenceChannel = "RHD";

struct Census {
  // [row][class]: row 0 = reference points, row 1 = acupoints.
  std::size_t counts[2][3] = {{0, 0, 0}, {0, 0, 0}};

  std::size_t reference_total() const { return counts[0][0] + counts[0][1] + counts[0][2]; }
  std::size_t acupoint_total() const { return counts[1][0] + counts[1][1] + counts[1][2]; }
  std::size_t total() const { return reference_total() + acupoint_total(); }
  friend bool operator==(const Census&, const Census&) = default;
};

Census census(const AtlasProgram& program);

/// Renders the census as a fixed-width table (quantity x complexity class).
std::string format_census(const Census& c);

}  // namespace faceatlas
