#include <cctype>
#include <cstdio>
#include <charconv>
#include <cmath>
#include <system_error>

#include "faceatlas/adl.hpp"
#include "faceatlas/geometry.hpp"

namespace faceatlas {

namespace {

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string join_expected(const std::set<std::string>& expected) {
  std::string out;
  for (const auto& e : expected) {
    if (!out.empty()) out += ", ";
    out += "'" + e + "'";
  }
  return out;
}

}  // namespace

std::optional<PointId> PointId::parse(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && is_upper(text[i])) ++i;
  if (i == 0 || i > 4 || i == text.size()) return std::nullopt;
  const std::string_view digits = text.substr(i);
  for (char c : digits) {
    if (!is_digit(c)) return std::nullopt;
  }
  int index = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc{} || index < 1) return std::nullopt;
  return PointId{std::string(text.substr(0, i)), index};
}

std::string ref_to_string(const Ref& ref) {
  struct Visitor {
    std::string operator()(const PointRef& r) const {
      switch (r.side) {
        case SideQualifier::Left: return r.id.str() + ".L";
        case SideQualifier::Right: return r.id.str() + ".R";
        case SideQualifier::None: break;
      }
      return r.id.str();
    }
    std::string operator()(const MeshRef& r) const { return "M" + std::to_string(r.index); }
    std::string operator()(const HairlineRef&) const { return "M_HAIRLINE"; }
  };
  return std::visit(Visitor{}, ref);
}

namespace expr {
ExprPtr num(double v) { return std::make_shared<const Expr>(Expr{Num{v}}); }
ExprPtr cun() { return std::make_shared<const Expr>(Expr{Cun{}}); }
ExprPtr coord(Axis axis, Ref ref) {
  return std::make_shared<const Expr>(Expr{Coord{axis, std::move(ref)}});
}
ExprPtr neg(ExprPtr e) { return std::make_shared<const Expr>(Expr{Neg{std::move(e)}}); }
ExprPtr add(ExprPtr l, ExprPtr r) {
  return std::make_shared<const Expr>(Expr{Binary{BinaryOp::Add, std::move(l), std::move(r)}});
}
ExprPtr sub(ExprPtr l, ExprPtr r) {
  return std::make_shared<const Expr>(Expr{Binary{BinaryOp::Sub, std::move(l), std::move(r)}});
}
ExprPtr mul(ExprPtr l, ExprPtr r) {
  return std::make_shared<const Expr>(Expr{Binary{BinaryOp::Mul, std::move(l), std::move(r)}});
}
}  // namespace expr

bool equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* n = std::get_if<Num>(&a.node)) return n->value == std::get<Num>(b.node).value;
  if (std::holds_alternative<Cun>(a.node)) return true;
  if (const auto* c = std::get_if<Coord>(&a.node)) {
    const auto& d = std::get<Coord>(b.node);
    return c->axis == d.axis && c->ref == d.ref;
  }
  if (const auto* n = std::get_if<Neg>(&a.node)) {
    return equal(*n->operand, *std::get<Neg>(b.node).operand);
  }
  const auto& x = std::get<Binary>(a.node);
  const auto& y = std::get<Binary>(b.node);
  return x.op == y.op && equal(*x.lhs, *y.lhs) && equal(*x.rhs, *y.rhs);
}

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

int precedence(const Expr& e) {
  if (const auto* b = std::get_if<Binary>(&e.node)) {
    return b->op == BinaryOp::Mul ? 2 : 1;
  }
  return 3;
}

void print(const Expr& e, int min_prec, std::string& out) {
  const bool parens = precedence(e) < min_prec;
  if (parens) out.push_back('(');
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Num>) {
          out += format_number(n.value);
        } else if constexpr (std::is_same_v<T, Cun>) {
          out.push_back('U');
        } else if constexpr (std::is_same_v<T, Coord>) {
          out += n.axis == Axis::X ? "GetX(" : "GetY(";
          out += ref_to_string(n.ref);
          out.push_back(')');
        } else if constexpr (std::is_same_v<T, Neg>) {
          out.push_back('-');
          print(*n.operand, 3, out);
        } else {
          if (n.op == BinaryOp::Mul) {
            print(*n.lhs, 2, out);
            out.push_back('*');
            print(*n.rhs, 3, out);
          } else {
            print(*n.lhs, 1, out);
            out.push_back(n.op == BinaryOp::Add ? '+' : '-');
            print(*n.rhs, 2, out);
          }
        }
      },
      e.node);
  if (parens) out.push_back(')');
}

void debug_print(const Expr& e, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Num>) {
          out += "Num(" + format_number(n.value) + ")";
        } else if constexpr (std::is_same_v<T, Cun>) {
          out += "Cun";
        } else if constexpr (std::is_same_v<T, Coord>) {
          out += n.axis == Axis::X ? "Coord(X," : "Coord(Y,";
          out += ref_to_string(n.ref) + ")";
        } else if constexpr (std::is_same_v<T, Neg>) {
          out += "Neg(";
          debug_print(*n.operand, out);
          out += ")";
        } else {
          out += n.op == BinaryOp::Add ? "Add(" : n.op == BinaryOp::Sub ? "Sub(" : "Mul(";
          debug_print(*n.lhs, out);
          out += ",";
          debug_print(*n.rhs, out);
          out += ")";
        }
      },
      e.node);
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, 0, out);
  return out;
}

std::string to_debug_string(const Expr& e) {
  std::string out;
  debug_print(e, out);
  return out;
}

SyntaxError::SyntaxError(std::size_t offset, std::string found, std::set<std::string> expected)
    : ParseError(offset, "syntax error at offset " + std::to_string(offset) + ": found " + found +
                             ", expected one of " + join_expected(expected)),
      found_(std::move(found)),
      expected_(std::move(expected)) {}

UnknownFunction::UnknownFunction(std::size_t offset, std::string name)
    : ParseError(offset, "unknown function '" + name + "' at offset " + std::to_string(offset) +
                             " (only GetX and GetY exist)"),
      name_(std::move(name)) {}

// ---- lexer / parser ---------------------------------------------------------

namespace {

enum class Tok { Number, Ident, LParen, RParen, Plus, Minus, Star, End };

struct Token {
  Tok kind = Tok::End;
  std::size_t offset = 0;
  std::string_view text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    Token t;
    t.offset = pos_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    switch (c) {
      case '(': return single(t, Tok::LParen);
      case ')': return single(t, Tok::RParen);
      case '+': return single(t, Tok::Plus);
      case '-': return single(t, Tok::Minus);
      case '*': return single(t, Tok::Star);
      default: break;
    }
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      return number(t);
    }
    if (is_ident_start(c)) {
      std::size_t end = pos_;
      while (end < src_.size() && is_ident_char(src_[end])) ++end;
      // Optional side qualifier: ".L" / ".R" not followed by more identifier text.
      if (end + 1 < src_.size() && src_[end] == '.' && (src_[end + 1] == 'L' || src_[end + 1] == 'R') &&
          (end + 2 >= src_.size() || !is_ident_char(src_[end + 2]))) {
        end += 2;
      }
      t.kind = Tok::Ident;
      t.text = src_.substr(pos_, end - pos_);
      pos_ = end;
      return t;
    }
    throw SyntaxError(pos_, describe_char(c), {"number", "U", "GetX", "GetY", "(", "-"});
  }

 private:
  Token single(Token t, Tok kind) {
    t.kind = kind;
    t.text = src_.substr(pos_, 1);
    ++pos_;
    return t;
  }

  Token number(Token t) {
    std::size_t end = pos_;
    while (end < src_.size() && is_digit(src_[end])) ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && is_digit(src_[end])) ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t exp = end + 1;
      if (exp < src_.size() && (src_[exp] == '+' || src_[exp] == '-')) ++exp;
      if (exp < src_.size() && is_digit(src_[exp])) {
        while (exp < src_.size() && is_digit(src_[exp])) ++exp;
        end = exp;
      }
    }
    t.kind = Tok::Number;
    t.text = src_.substr(pos_, end - pos_);
    const auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
    if (ec != std::errc{} || ptr != t.text.data() + t.text.size() || !std::isfinite(t.number)) {
      throw SyntaxError(pos_, "number '" + std::string(t.text) + "' out of range", {"number"});
    }
    pos_ = end;
    return t;
  }

  static std::string describe_char(char c) {
    if (std::isprint(static_cast<unsigned char>(c))) return std::string("'") + c + "'";
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02X", static_cast<unsigned>(static_cast<unsigned char>(c)));
    return buf;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + std::string(t.text) + "'";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) { advance(); }

  ExprPtr parse() {
    ExprPtr e = expression();
    if (cur_.kind != Tok::End) {
      throw SyntaxError(cur_.offset, describe(cur_), {"+", "-", "*", "end of input"});
    }
    return e;
  }

 private:
  static constexpr int kMaxDepth = 200;

  void advance() { cur_ = lexer_.next(); }

  ExprPtr expression() {
    DepthGuard guard(*this);
    ExprPtr lhs = term();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const bool plus = cur_.kind == Tok::Plus;
      advance();
      ExprPtr rhs = term();
      lhs = plus ? expr::add(std::move(lhs), std::move(rhs)) : expr::sub(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = factor();
    while (cur_.kind == Tok::Star) {
      advance();
      lhs = expr::mul(std::move(lhs), factor());
    }
    return lhs;
  }

  ExprPtr factor() {
    DepthGuard guard(*this);
    const Token t = cur_;
    switch (t.kind) {
      case Tok::Number:
        advance();
        return expr::num(t.number);
      case Tok::Minus:
        advance();
        return expr::neg(factor());
      case Tok::LParen: {
        advance();
        ExprPtr inner = expression();
        expect(Tok::RParen, ")");
        return inner;
      }
      case Tok::Ident:
        return identifier();
      default:
        throw SyntaxError(t.offset, describe(t), {"number", "U", "GetX", "GetY", "(", "-"});
    }
  }

  ExprPtr identifier() {
    const Token t = cur_;
    advance();
    if (t.text == "U") return expr::cun();
    if (t.text == "GetX" || t.text == "GetY") {
      const Axis axis = t.text == "GetX" ? Axis::X : Axis::Y;
      expect(Tok::LParen, "(");
      Ref ref = reference();
      expect(Tok::RParen, ")");
      return expr::coord(axis, std::move(ref));
    }
    if (cur_.kind == Tok::LParen) throw UnknownFunction(t.offset, std::string(t.text));
    throw SyntaxError(t.offset, describe(t), {"number", "U", "GetX", "GetY", "(", "-"});
  }

  Ref reference() {
    const Token t = cur_;
    if (t.kind != Tok::Ident) throw SyntaxError(t.offset, describe(t), {"reference"});
    advance();
    std::string_view text = t.text;
    if (text == "M_HAIRLINE") return HairlineRef{};
    SideQualifier side = SideQualifier::None;
    if (text.size() > 2 && text[text.size() - 2] == '.') {
      side = text.back() == 'L' ? SideQualifier::Left : SideQualifier::Right;
      text.remove_suffix(2);
    }
    if (text.size() > 1 && text[0] == 'M' && is_digit(text[1])) {
      std::size_t i = 1;
      while (i < text.size() && is_digit(text[i])) ++i;
      if (i == text.size()) {
        if (side != SideQualifier::None) {
          throw BadReference(t.offset, "mesh reference '" + std::string(t.text) +
                                           "' cannot carry a side qualifier");
        }
        int index = -1;
        const auto [ptr, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), index);
        if (ec != std::errc{} || index < 0 || static_cast<std::size_t>(index) >= kMeshVertexCount) {
          throw BadReference(t.offset, "mesh index in '" + std::string(t.text) +
                                           "' must be below " + std::to_string(kMeshVertexCount));
        }
        return MeshRef{index};
      }
    }
    auto id = PointId::parse(text);
    if (!id) {
      // Distinguish lexically valid ids with an invalid index from garbage.
      std::size_t i = 0;
      while (i < text.size() && is_upper(text[i])) ++i;
      bool digits = i > 0 && i <= 4 && i < text.size();
      for (std::size_t k = i; digits && k < text.size(); ++k) digits = is_digit(text[k]);
      if (digits) {
        throw BadReference(t.offset, "point index in '" + std::string(t.text) + "' must be >= 1");
      }
      throw SyntaxError(t.offset, describe(t), {"reference"});
    }
    return PointRef{*id, side};
  }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) throw SyntaxError(cur_.offset, describe(cur_), {what});
    advance();
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxDepth) {
        throw SyntaxError(parser.cur_.offset, "nesting deeper than " + std::to_string(kMaxDepth),
                          {"shallower expression"});
      }
    }
    ~DepthGuard() { --parser.depth_; }
    Parser& parser;
  };

  Lexer lexer_;
  Token cur_;
  int depth_ = 0;
};

enum class Dim { Scalar, Length };

Dim dimension_of(const Expr& e) {
  return std::visit(
      [](const auto& n) -> Dim {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Num>) {
          return Dim::Scalar;
        } else if constexpr (std::is_same_v<T, Cun> || std::is_same_v<T, Coord>) {
          return Dim::Length;
        } else if constexpr (std::is_same_v<T, Neg>) {
          return dimension_of(*n.operand);
        } else {
          const Dim l = dimension_of(*n.lhs);
          const Dim r = dimension_of(*n.rhs);
          if (n.op == BinaryOp::Mul && l == Dim::Length && r == Dim::Length) {
            throw DimensionError(0, "product of two lengths in '" + to_string(*n.lhs) + "*" +
                                        to_string(*n.rhs) + "'");
          }
          return (l == Dim::Length || r == Dim::Length) ? Dim::Length : Dim::Scalar;
        }
      },
      e.node);
}

}  // namespace

ExprPtr parse_expression(std::string_view src) {
  if (src.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw SyntaxError(src.size(), "end of input", {"number", "U", "GetX", "GetY", "(", "-"});
  }
  return Parser(src).parse();
}

void check_dimensions(const Expr& e) { dimension_of(e); }

}  // namespace faceatlas
