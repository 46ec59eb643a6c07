#include <algorithm>
#include <cstdio>
#include <functional>
#include <queue>

#include "faceatlas/adl.hpp"

namespace faceatlas {

namespace {

struct RefScan {
  std::vector<PointRef> points;
  bool cun = false;
  bool hairline = false;
};

void scan(const Expr& e, RefScan& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Cun>) {
          out.cun = true;
        } else if constexpr (std::is_same_v<T, Coord>) {
          if (const auto* p = std::get_if<PointRef>(&n.ref)) {
            out.points.push_back(*p);
          } else if (std::holds_alternative<HairlineRef>(n.ref)) {
            out.hairline = true;
          }
        } else if constexpr (std::is_same_v<T, Neg>) {
          scan(*n.operand, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          scan(*n.lhs, out);
          scan(*n.rhs, out);
        }
      },
      e.node);
}

}  // namespace

std::string_view to_string(Complexity c) {
  switch (c) {
    case Complexity::Direct: return "Direct";
    case Complexity::OneTimeProportional: return "OneTimeProportional";
    case Complexity::MultiTimeProportional: return "MultiTimeProportional";
  }
  return "?";
}

std::optional<std::size_t> AtlasProgram::find(const PointId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

AtlasProgram compile_atlas(std::vector<AcupointDef> defs) {
  AtlasProgram prog;
  {
    std::vector<Diagnostic> dups;
    for (std::size_t i = 0; i < defs.size(); ++i) {
      if (!defs[i].expr_x || !defs[i].expr_y) {
        throw std::invalid_argument("compile_atlas: definition " + defs[i].id.str() +
                                    " has no expression");
      }
      if (!prog.index_.emplace(defs[i].id, i).second) {
        dups.push_back({defs[i].line, "RowError", "duplicate identifier " + defs[i].id.str()});
      }
    }
    if (!dups.empty()) throw RowError(std::move(dups));
  }

  std::vector<Diagnostic> undefined;
  std::vector<Diagnostic> side_errors;
  prog.points_.reserve(defs.size());
  for (auto& def : defs) {
    RefScan refs;
    scan(*def.expr_x, refs);
    scan(*def.expr_y, refs);
    CompiledPoint cp;
    cp.uses_cun = refs.cun;
    cp.uses_hairline = refs.hairline;
    for (const auto& r : refs.points) {
      auto it = prog.index_.find(r.id);
      if (it == prog.index_.end()) {
        undefined.push_back({def.line, "UndefinedReference",
                             def.id.str() + " references undefined point " + r.id.str()});
        continue;
      }
      const AcupointDef& target = defs[it->second];
      if (!def.is_symmetric && target.is_symmetric && r.side == SideQualifier::None) {
        side_errors.push_back({def.line, "SideAccessError",
                               def.id.str() + " is not symmetric; reference to symmetric point " +
                                   r.id.str() + " needs a .L or .R qualifier"});
      } else if (!target.is_symmetric && r.side != SideQualifier::None) {
        side_errors.push_back({def.line, "SideAccessError",
                               def.id.str() + " qualifies a side on non-symmetric point " +
                                   r.id.str()});
      }
      if (std::find(cp.dependencies.begin(), cp.dependencies.end(), it->second) ==
          cp.dependencies.end()) {
        cp.dependencies.push_back(it->second);
      }
    }
    std::sort(cp.dependencies.begin(), cp.dependencies.end());
    cp.def = std::move(def);
    prog.points_.push_back(std::move(cp));
  }
  if (!undefined.empty()) throw UndefinedReference(std::move(undefined));
  if (!side_errors.empty()) throw SideAccessError(std::move(side_errors));

  // Kahn's algorithm; the ready set is ordered by file position.
  const std::size_t n = prog.points_.size();
  std::vector<std::size_t> remaining(n);
  std::vector<std::vector<std::size_t>> dependents(n);
  for (std::size_t i = 0; i < n; ++i) {
    remaining[i] = prog.points_[i].dependencies.size();
    for (std::size_t d : prog.points_[i].dependencies) dependents[d].push_back(i);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (remaining[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    prog.order_.push_back(i);
    for (std::size_t j : dependents[i]) {
      if (--remaining[j] == 0) ready.push(j);
    }
  }
  if (prog.order_.size() != n) {
    // Every unordered node lies on or behind a cycle; walk dependencies
    // among unordered nodes until a node repeats.
    std::vector<int> visit_pos(n, -1);
    std::vector<std::size_t> path;
    std::size_t cur = 0;
    while (remaining[cur] == 0) ++cur;
    while (visit_pos[cur] < 0) {
      visit_pos[cur] = static_cast<int>(path.size());
      path.push_back(cur);
      for (std::size_t d : prog.points_[cur].dependencies) {
        if (remaining[d] != 0) {
          cur = d;
          break;
        }
      }
    }
    std::vector<PointId> cycle;
    std::string text;
    for (std::size_t k = static_cast<std::size_t>(visit_pos[cur]); k < path.size(); ++k) {
      cycle.push_back(prog.points_[path[k]].def.id);
      text += prog.points_[path[k]].def.id.str() + " -> ";
    }
    text += prog.points_[cur].def.id.str();
    throw CycleError(cycle, {{prog.points_[cur].def.line, "CycleError", "reference cycle " + text}});
  }

  for (std::size_t i : prog.order_) {
    CompiledPoint& cp = prog.points_[i];
    if (cp.dependencies.empty()) {
      cp.complexity = cp.uses_cun ? Complexity::OneTimeProportional : Complexity::Direct;
    } else {
      const bool all_direct =
          std::all_of(cp.dependencies.begin(), cp.dependencies.end(),
                      [&](std::size_t d) { return prog.points_[d].complexity == Complexity::Direct; });
      cp.complexity = all_direct ? Complexity::OneTimeProportional : Complexity::MultiTimeProportional;
    }
  }

  for (const auto& cp : prog.points_) {
    if (std::find(prog.channels_.begin(), prog.channels_.end(), cp.def.id.channel) ==
        prog.channels_.end()) {
      prog.channels_.push_back(cp.def.id.channel);
    }
  }
  return prog;
}

nlohmann::json AtlasProgram::to_json() const {
  using nlohmann::json;
  json points = json::array();
  for (const auto& cp : points_) {
    json deps = json::array();
    for (std::size_t d : cp.dependencies) deps.push_back(points_[d].def.id.str());
    points.push_back({{"id", cp.def.id.str()},
                      {"name", cp.def.name_en},
                      {"region", cp.def.region},
                      {"x", to_string(*cp.def.expr_x)},
                      {"y", to_string(*cp.def.expr_y)},
                      {"symmetric", cp.def.is_symmetric},
                      {"comments", cp.def.comments},
                      {"class", std::string(faceatlas::to_string(cp.complexity))},
                      {"uses_cun", cp.uses_cun},
                      {"uses_hairline", cp.uses_hairline},
                      {"deps", std::move(deps)}});
  }
  json order = json::array();
  for (std::size_t i : order_) order.push_back(points_[i].def.id.str());
  return {{"channels", channels_}, {"order", std::move(order)}, {"points", std::move(points)}};
}

Census census(const AtlasProgram& program) {
  Census c;
  for (const auto& cp : program.points()) {
    const int row = cp.def.id.channel == kReferenceChannel ? 0 : 1;
    c.counts[row][static_cast<int>(cp.complexity)] += 1;
  }
  return c;
}

std::string format_census(const Census& c) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-18s %8s %10s %12s %7s\n", "Quantity", "Direct", "One-time",
                "Multi-time", "Total");
  out += buf;
  const char* labels[2] = {"Reference points", "Acupoints"};
  for (int row = 0; row < 2; ++row) {
    std::snprintf(buf, sizeof buf, "%-18s %8zu %10zu %12zu %7zu\n", labels[row], c.counts[row][0],
                  c.counts[row][1], c.counts[row][2],
                  c.counts[row][0] + c.counts[row][1] + c.counts[row][2]);
    out += buf;
  }
  return out;
}

}  // namespace faceatlas
