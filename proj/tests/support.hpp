#pragma once

// Shared helpers for the test binaries: data paths, random generators and
// independent oracles.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "faceatlas/adl.hpp"
#include "faceatlas/fixture.hpp"
#include "faceatlas/frame_io.hpp"

namespace support {

using namespace faceatlas;

inline std::string data_path(const std::string& name) {
  return std::string(FACEATLAS_DATA_DIR) + "/" + name;
}

inline std::string sample_atlas_text() { return read_text_file(data_path("sample_atlas.csv")); }

inline AtlasProgram sample_program() { return compile_atlas(parse_atlas(sample_atlas_text())); }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// ---- random expressions ------------------------------------------------------

inline Ref random_ref(std::mt19937_64& rng) {
  switch (uniform_int(rng, 0, 5)) {
    case 0:
      return MeshRef{uniform_int(rng, 0, 467)};
    case 1:
      return HairlineRef{};
    default: {
      static const char* kChannels[] = {"ST", "RHD", "GB", "B", "LIVR"};
      PointRef r;
      r.id.channel = kChannels[uniform_int(rng, 0, 4)];
      r.id.index = uniform_int(rng, 1, 120);
      r.side = static_cast<SideQualifier>(uniform_int(rng, 0, 2));
      return r;
    }
  }
}

inline double random_number(std::mt19937_64& rng) {
  switch (uniform_int(rng, 0, 3)) {
    case 0:
      return uniform_int(rng, 0, 20);
    case 1:
      return uniform_int(rng, 0, 1000) / 100.0;
    case 2:
      return uniform(rng, 0.0, 1.0);
    default:
      return std::ldexp(uniform(rng, 0.5, 1.0), uniform_int(rng, -30, 30));
  }
}

/// Any AST the grammar can express (numbers are non-negative; negation is
/// a node). Dimensions are not checked.
inline ExprPtr random_expr(std::mt19937_64& rng, int depth) {
  const int pick = depth <= 0 ? uniform_int(rng, 0, 2) : uniform_int(rng, 0, 7);
  switch (pick) {
    case 0:
      return expr::num(random_number(rng));
    case 1:
      return expr::cun();
    case 2:
      return expr::coord(uniform_int(rng, 0, 1) ? Axis::Y : Axis::X, random_ref(rng));
    case 3:
      return expr::neg(random_expr(rng, depth - 1));
    case 4:
    case 5:
      return expr::add(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    case 6:
      return expr::sub(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
    default:
      return expr::mul(random_expr(rng, depth - 1), random_expr(rng, depth - 1));
  }
}

inline std::string fmt_weight(double w) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, w);
  return std::string(buf, res.ptr);
}

// ---- atlases ---------------------------------------------------------------------

struct Row {
  std::string channel;
  int index = 0;
  std::string x;
  std::string y;
  bool symmetric = false;
  std::string name;

  std::string id() const { return channel + std::to_string(index); }
};

inline std::string atlas_text(const std::vector<Row>& rows) {
  std::string out(kAtlasHeader);
  out += "\n";
  for (const auto& r : rows) {
    out += r.channel + "," + std::to_string(r.index) + "," + (r.name.empty() ? r.id() : r.name) +
           ",Face," + r.x + "," + r.y + "," + (r.symmetric ? "TRUE" : "FALSE") + ",-\n";
  }
  return out;
}

/// Synthetic 73-row atlas with the full-atlas class split: reference
/// points 3/1/0 and acupoints 38/16/15. Direct rows blend two random
/// mesh vertices.
inline std::string full_size_atlas_text() {
  std::vector<Row> rows;
  rows.push_back({"RHD", 1, "0.5*GetX(M107)+0.5*GetX(M336)", "0.5*GetY(M107)+0.5*GetY(M336)", false});
  rows.push_back({"RHD", 2, "GetX(M_HAIRLINE)", "GetY(M_HAIRLINE)", false});
  rows.push_back({"RHD", 3, "0.25*(GetX(M362)+GetX(M263)+GetX(M386)+GetX(M374))",
                  "0.25*(GetY(M362)+GetY(M263)+GetY(M386)+GetY(M374))", true});
  rows.push_back({"RHD", 4, "GetX(RHD1)", "GetY(RHD1)-1.5*U", false});

  const char* channels[] = {"ST", "GB", "BL", "LI", "SI", "TE", "GV", "CV", "EX"};
  std::map<std::string, int> next_index;
  const auto next_id = [&](int k) {
    const std::string c = channels[k % 9];
    return std::pair{c, ++next_index[c]};
  };
  std::mt19937_64 rng(20240917);
  const auto mesh = [&] { return uniform_int(rng, 0, 467); };

  std::vector<Row> direct, one_time;
  for (int i = 0; i < 38; ++i) {
    auto [c, idx] = next_id(i);
    const int a = mesh();
    const int b = mesh();
    const double w = 0.25 + 0.5 * (i % 5) / 4.0;
    const auto combo = [&](char axis) {
      return fmt_weight(w) + "*Get" + axis + "(M" + std::to_string(a) + ")+" + fmt_weight(1 - w) +
             "*Get" + axis + "(M" + std::to_string(b) + ")";
    };
    direct.push_back({c, idx, combo('X'), combo('Y'), i % 2 == 0});
  }
  for (int i = 0; i < 16; ++i) {
    auto [c, idx] = next_id(i + 38);
    const Row& base = direct[static_cast<std::size_t>(i * 2 + 1) % direct.size()];
    const bool sym = i % 2 == 0;
    const std::string ref = base.id();
    one_time.push_back({c, idx, "GetX(" + ref + ")+0.3*U", "GetY(" + ref + ")+" + fmt_weight(0.2 + 0.1 * (i % 4)) + "*U",
                        sym});
  }
  std::vector<Row> multi;
  for (int i = 0; i < 15; ++i) {
    auto [c, idx] = next_id(i + 54);
    const Row& base = one_time[static_cast<std::size_t>(i) % one_time.size()];
    // A symmetric base needs a side qualifier from a centre definition.
    const bool sym = base.symmetric ? i % 3 != 0 : false;
    std::string ref = base.id();
    if (base.symmetric && !sym) ref += ".R";
    multi.push_back({c, idx, "GetX(" + ref + ")-0.2*U", "GetY(" + ref + ")+0.5*U", sym});
  }
  rows.insert(rows.end(), direct.begin(), direct.end());
  rows.insert(rows.end(), one_time.begin(), one_time.end());
  rows.insert(rows.end(), multi.begin(), multi.end());
  return atlas_text(rows);
}

// ---- brute-force complexity oracle ----------------------------------------------

inline void collect_refs(const Expr& e, std::set<std::string>& points, bool& uses_cun) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Cun>) {
          uses_cun = true;
        } else if constexpr (std::is_same_v<T, Coord>) {
          if (const auto* p = std::get_if<PointRef>(&n.ref)) points.insert(p->id.str());
        } else if constexpr (std::is_same_v<T, Neg>) {
          collect_refs(*n.operand, points, uses_cun);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_refs(*n.lhs, points, uses_cun);
          collect_refs(*n.rhs, points, uses_cun);
        }
      },
      e.node);
}

/// Class by exhaustive path enumeration: the longest chain of
/// non-mesh-only definitions starting at each point (no memoisation).
inline std::map<std::string, Complexity> brute_force_classes(const std::vector<AcupointDef>& defs) {
  std::map<std::string, std::pair<std::set<std::string>, bool>> graph;
  for (const auto& d : defs) {
    std::set<std::string> refs;
    bool cun = false;
    collect_refs(*d.expr_x, refs, cun);
    collect_refs(*d.expr_y, refs, cun);
    graph[d.id.str()] = {refs, cun};
  }
  std::function<int(const std::string&)> longest = [&](const std::string& id) -> int {
    const auto& [refs, cun] = graph.at(id);
    if (refs.empty() && !cun) return 0;
    int best = 0;
    for (const auto& r : refs) best = std::max(best, longest(r));
    return 1 + best;
  };
  std::map<std::string, Complexity> out;
  for (const auto& d : defs) {
    const int depth = longest(d.id.str());
    out[d.id.str()] = depth == 0   ? Complexity::Direct
                      : depth == 1 ? Complexity::OneTimeProportional
                                   : Complexity::MultiTimeProportional;
  }
  return out;
}

/// Random acyclic atlas: row i may only reference rows before it.
inline std::vector<Row> random_atlas_rows(std::mt19937_64& rng, int n) {
  std::vector<Row> rows;
  for (int i = 0; i < n; ++i) {
    Row r;
    r.channel = i < 2 ? "RHD" : (i % 2 ? "ST" : "GB");
    r.index = i + 1;
    r.symmetric = uniform_int(rng, 0, 2) == 0;
    const auto term = [&](char axis) -> std::string {
      const int kind = i == 0 ? uniform_int(rng, 0, 1) : uniform_int(rng, 0, 3);
      if (kind == 0) return "Get" + std::string(1, axis) + "(M" + std::to_string(uniform_int(rng, 0, 467)) + ")";
      if (kind == 1) return "0.1*U";
      const Row& target = rows[static_cast<std::size_t>(uniform_int(rng, 0, i - 1))];
      std::string ref = target.id();
      if (target.symmetric && !r.symmetric) ref += uniform_int(rng, 0, 1) ? ".L" : ".R";
      return "Get" + std::string(1, axis) + "(" + ref + ")";
    };
    const int terms_x = uniform_int(rng, 1, 2);
    const int terms_y = uniform_int(rng, 1, 2);
    r.x = term('X');
    for (int k = 1; k < terms_x; ++k) r.x += "+" + term('X');
    r.y = term('Y');
    for (int k = 1; k < terms_y; ++k) r.y += "+" + term('Y');
    rows.push_back(r);
  }
  std::shuffle(rows.begin(), rows.end(), rng);  // file order independent of dependencies
  return rows;
}

}  // namespace support
