#include <algorithm>
#include <cctype>
#include <sstream>

#include "csv.hpp"
#include "faceatlas/adl.hpp"

namespace faceatlas {

namespace {

const std::vector<std::string>& header_columns() {
  static const std::vector<std::string> cols = {"Channel",   "ID",        "NameE",      "Region",
                                                "FaceMeshX", "FaceMeshY", "IsSymmetry", "Comments"};
  return cols;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::string parse_error_text(const std::string& column, const ParseError& e) {
  return column + ": " + e.what();
}

}  // namespace

std::string format_diagnostic(const Diagnostic& d) {
  std::string out;
  if (d.line > 0) out += "line " + std::to_string(d.line) + ": ";
  out += d.kind + ": " + d.message;
  return out;
}

AtlasError::AtlasError(std::string kind, std::vector<Diagnostic> diagnostics)
    : std::runtime_error([&] {
        std::string msg = kind;
        for (const auto& d : diagnostics) msg += "\n  " + format_diagnostic(d);
        return msg;
      }()),
      kind_(std::move(kind)),
      diagnostics_(std::move(diagnostics)) {}

std::vector<AcupointDef> parse_atlas(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  csv::Reader reader(text);

  std::optional<csv::Record> header;
  try {
    while (auto rec = reader.next()) {
      if (rec->blank()) continue;
      header = std::move(rec);
      break;
    }
  } catch (const csv::Error& e) {
    throw BadHeader({{e.line(), "BadHeader", e.what()}});
  }
  if (!header) {
    throw BadHeader({{1, "BadHeader", "missing header row; expected " + std::string(kAtlasHeader)}});
  }
  {
    std::vector<Diagnostic> diags;
    const auto& want = header_columns();
    for (const auto& c : want) {
      if (std::find(header->fields.begin(), header->fields.end(), c) == header->fields.end()) {
        diags.push_back({header->line, "BadHeader", "missing column '" + c + "'"});
      }
    }
    for (const auto& c : header->fields) {
      if (std::find(want.begin(), want.end(), c) == want.end()) {
        diags.push_back({header->line, "BadHeader", "unexpected column '" + c + "'"});
      }
    }
    if (diags.empty() && header->fields != want) {
      diags.push_back({header->line, "BadHeader",
                       "columns out of order; expected " + std::string(kAtlasHeader)});
    }
    if (!diags.empty()) throw BadHeader(std::move(diags));
  }

  std::vector<AcupointDef> defs;
  std::vector<Diagnostic> diags;
  std::map<PointId, long> seen;
  while (true) {
    std::optional<csv::Record> rec;
    try {
      rec = reader.next();
    } catch (const csv::Error& e) {
      diags.push_back({e.line(), "RowError", e.what()});
      break;
    }
    if (!rec) break;
    if (rec->blank()) continue;
    const long line = rec->line;
    auto& f = rec->fields;
    if (f.size() != header_columns().size()) {
      diags.push_back({line, "RowError", "expected 8 fields, found " + std::to_string(f.size())});
      continue;
    }
    std::vector<std::string> problems;
    AcupointDef def;
    def.line = line;
    const std::string channel = csv::trim(f[0]);
    const std::string index = csv::trim(f[1]);
    auto id = PointId::parse(channel + index);
    if (!id || id->channel != channel) {
      problems.push_back("invalid identifier '" + channel + index +
                         "' (channel must be 1-4 uppercase letters, ID a positive integer)");
    } else {
      def.id = *id;
    }
    def.name_en = csv::trim(f[2]);
    def.region = csv::trim(f[3]);
    const auto parse_axis = [&](const std::string& column, const std::string& src) -> ExprPtr {
      try {
        ExprPtr e = parse_expression(src);
        check_dimensions(*e);
        return e;
      } catch (const ParseError& e) {
        problems.push_back(parse_error_text(column, e));
      }
      return nullptr;
    };
    def.expr_x = parse_axis("FaceMeshX", f[4]);
    def.expr_y = parse_axis("FaceMeshY", f[5]);
    const std::string sym = upper(csv::trim(f[6]));
    if (sym == "TRUE") {
      def.is_symmetric = true;
    } else if (sym == "FALSE") {
      def.is_symmetric = false;
    } else {
      problems.push_back("IsSymmetry must be TRUE or FALSE, found '" + f[6] + "'");
    }
    def.comments = csv::trim(f[7]) == "-" ? std::string() : f[7];

    if (id && id->channel == channel) {
      auto [it, inserted] = seen.emplace(*id, line);
      if (!inserted) {
        problems.push_back("duplicate identifier " + id->str() + " (first defined on line " +
                           std::to_string(it->second) + ")");
      }
    }
    if (!problems.empty()) {
      std::string msg;
      for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
      diags.push_back({line, "RowError", msg});
      continue;
    }
    defs.push_back(std::move(def));
  }
  if (!diags.empty()) throw RowError(std::move(diags));
  return defs;
}

std::string serialize_atlas(const std::vector<AcupointDef>& defs) {
  std::string out(kAtlasHeader);
  out.push_back('\n');
  for (const auto& d : defs) {
    const std::vector<std::string> fields = {d.id.channel,
                                             std::to_string(d.id.index),
                                             d.name_en,
                                             d.region,
                                             to_string(*d.expr_x),
                                             to_string(*d.expr_y),
                                             d.is_symmetric ? "TRUE" : "FALSE",
                                             d.comments.empty() ? "-" : d.comments};
    out += csv::format_record(fields);
    out.push_back('\n');
  }
  return out;
}

}  // namespace faceatlas
