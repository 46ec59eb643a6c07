#pragma once

// Minimal RFC 4180 reader shared by the atlas and channel file parsers.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace faceatlas::csv {

class Error : public std::runtime_error {
 public:
  Error(long line, const std::string& what) : std::runtime_error(what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

struct Record {
  long line = 0;  // line on which the record starts
  std::vector<std::string> fields;

  bool blank() const { return fields.size() == 1 && fields[0].empty(); }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  /// Next record, or nullopt at end of input. Throws Error on an
  /// unterminated quoted field.
  std::optional<Record> next() {
    if (pos_ >= text_.size()) return std::nullopt;
    Record rec;
    rec.line = line_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field.push_back('"');
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"' && field.empty() && !was_quoted) {
        quoted = true;
        was_quoted = true;
      } else if (c == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') {
        // CRLF: the '\n' branch ends the record
      } else if (c == '\n') {
        ++line_;
        if (!field.empty() && field.back() == '\r' && !was_quoted) field.pop_back();
        rec.fields.push_back(std::move(field));
        return rec;
      } else {
        field.push_back(c);
      }
    }
    if (quoted) throw Error(rec.line, "unterminated quoted field");
    if (!field.empty() && field.back() == '\r' && !was_quoted) field.pop_back();
    rec.fields.push_back(std::move(field));
    return rec;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  long line_ = 1;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string quote_if_needed(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_record(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += quote_if_needed(fields[i]);
  }
  return out;
}

}  // namespace faceatlas::csv
