#pragma once

// Single-line reward expressions over `state` and `agent_feats[k]`.
//
// Grammar, lowest to highest precedence (all binary operators left-assoc):
//
//   expr     := or
//   or       := and ('or' and)*
//   and      := not ('and' not)*
//   not      := 'not' not | additive
//   additive := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := '-' unary | primary
//   primary  := number | 'state' | feats '[' integer ']' | 'if_' '(' expr ')' | '(' expr ')'
//   feats    := 'agent_feats' | 'feature'
//
// `and`/`or` return operand values like Python: `a and b` is b when a is
// nonzero, otherwise a; `a or b` is a when a is nonzero, otherwise b.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dlm/error.hpp"
#include "dlm/features.hpp"
#include "dlm/rmab.hpp"

namespace dlm::dsl {

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kAnd, kOr };
enum class UnaryOp { kNeg, kNot, kIf };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
  double value;
};
struct StateRef {};
struct FeatureRef {
  int index;
};
struct Unary {
  UnaryOp op;
  NodePtr operand;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};

struct Node {
  std::variant<Number, StateRef, FeatureRef, Unary, Binary> value;
};

inline NodePtr number(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("numeric literals must be finite and nonnegative");
  return std::make_shared<const Node>(Node{Number{v}});
}
inline NodePtr state() { return std::make_shared<const Node>(Node{StateRef{}}); }
inline NodePtr feature(int index) {
  if (index < 0 || index >= static_cast<int>(kNumFeatures)) throw ConfigError("feature index out of range");
  return std::make_shared<const Node>(Node{FeatureRef{index}});
}
inline NodePtr unary(UnaryOp op, NodePtr operand) {
  return std::make_shared<const Node>(Node{Unary{op, std::move(operand)}});
}
inline NodePtr binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  return std::make_shared<const Node>(Node{Binary{op, std::move(lhs), std::move(rhs)}});
}

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.value.index() != b.value.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.value);
        if constexpr (std::is_same_v<T, Number>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, StateRef>) {
          return true;
        } else if constexpr (std::is_same_v<T, FeatureRef>) {
          return x.index == y.index;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return x.op == y.op && structurally_equal(*x.operand, *y.operand);
        } else {
          return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) && structurally_equal(*x.rhs, *y.rhs);
        }
      },
      a.value);
}

}  // namespace dlm::dsl

namespace dlm {

/// Immutable, shareable reward expression AST.
class RewardExpr {
 public:
  explicit RewardExpr(dsl::NodePtr root) : root_(std::move(root)) {
    if (!root_) throw ConfigError("empty reward expression");
  }

  const dsl::Node& root() const { return *root_; }
  const dsl::NodePtr& root_ptr() const { return root_; }

  friend bool operator==(const RewardExpr& a, const RewardExpr& b) {
    return a.root_ == b.root_ || dsl::structurally_equal(*a.root_, *b.root_);
  }

 private:
  dsl::NodePtr root_;
};

namespace dsl {

namespace detail {

enum class Tok { kNumber, kState, kFeats, kIf, kAnd, kOr, kNot, kPlus, kMinus, kStar, kSlash,
                 kLParen, kRParen, kLBracket, kRBracket, kEnd };

struct Token {
  Tok kind;
  std::size_t pos;
  std::string_view text;
  double number = 0.0;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() &&
                                                        std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          i = j;
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      const std::string text(src.substr(start, i - start));
      double v = std::strtod(text.c_str(), nullptr);
      if (!std::isfinite(v)) throw ParseError("numeric literal out of range", start);
      if (i < src.size() && is_ident_start(src[i])) throw ParseError("malformed number", start);
      out.push_back({Tok::kNumber, start, src.substr(start, i - start), v});
      continue;
    }
    if (is_ident_start(c)) {
      while (i < src.size() && is_ident(src[i])) ++i;
      const std::string_view word = src.substr(start, i - start);
      Tok kind;
      if (word == "state") kind = Tok::kState;
      else if (word == "agent_feats" || word == "feature") kind = Tok::kFeats;
      else if (word == "if_") kind = Tok::kIf;
      else if (word == "and") kind = Tok::kAnd;
      else if (word == "or") kind = Tok::kOr;
      else if (word == "not") kind = Tok::kNot;
      else if (word == "return") throw ParseError("'return' is not allowed; write a bare expression", start);
      else throw ParseError("unknown name '" + std::string(word) + "'", start);
      out.push_back({kind, start, word});
      continue;
    }
    Tok kind;
    switch (c) {
      case '+': kind = Tok::kPlus; break;
      case '-': kind = Tok::kMinus; break;
      case '*':
        if (i + 1 < src.size() && src[i + 1] == '*') throw ParseError("power operator '**' is not allowed", start);
        kind = Tok::kStar;
        break;
      case '/':
        if (i + 1 < src.size() && src[i + 1] == '/') throw ParseError("floor division '//' is not allowed", start);
        kind = Tok::kSlash;
        break;
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      case '[': kind = Tok::kLBracket; break;
      case ']': kind = Tok::kRBracket; break;
      case '&':
      case '|':
      case '^':
      case '~':
        throw ParseError(std::string("bitwise operator '") + c + "' is not allowed; use and/or", start);
      case '<':
      case '>':
        if (i + 1 < src.size() && src[i + 1] == c)
          throw ParseError(std::string("bitwise operator '") + c + c + "' is not allowed", start);
        throw ParseError("comparison operators are not allowed", start);
      case '=':
      case '!':
        throw ParseError("comparison or assignment is not allowed", start);
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
    out.push_back({kind, start, src.substr(start, 1)});
    ++i;
  }
  out.push_back({Tok::kEnd, src.size(), {}});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

  NodePtr parse_all() {
    if (peek().kind == Tok::kEnd) throw ParseError("empty expression", peek().pos);
    NodePtr e = parse_or();
    if (peek().kind != Tok::kEnd) throw ParseError("unexpected token '" + std::string(peek().text) + "'", peek().pos);
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& advance() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  void expect(Tok k, const char* what) {
    if (!accept(k)) {
      const auto& t = peek();
      throw ParseError(std::string("expected ") + what + (t.kind == Tok::kEnd ? " before end of input" : ""),
                       t.pos);
    }
  }

  NodePtr parse_or() {
    NodePtr lhs = parse_and();
    while (accept(Tok::kOr)) lhs = binary(BinaryOp::kOr, lhs, parse_and());
    return lhs;
  }
  NodePtr parse_and() {
    NodePtr lhs = parse_not();
    while (accept(Tok::kAnd)) lhs = binary(BinaryOp::kAnd, lhs, parse_not());
    return lhs;
  }
  NodePtr parse_not() {
    if (accept(Tok::kNot)) return unary(UnaryOp::kNot, parse_not());
    return parse_additive();
  }
  NodePtr parse_additive() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept(Tok::kPlus)) lhs = binary(BinaryOp::kAdd, lhs, parse_term());
      else if (accept(Tok::kMinus)) lhs = binary(BinaryOp::kSub, lhs, parse_term());
      else return lhs;
    }
  }
  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept(Tok::kStar)) lhs = binary(BinaryOp::kMul, lhs, parse_unary());
      else if (accept(Tok::kSlash)) lhs = binary(BinaryOp::kDiv, lhs, parse_unary());
      else return lhs;
    }
  }
  NodePtr parse_unary() {
    if (accept(Tok::kMinus)) return unary(UnaryOp::kNeg, parse_unary());
    return parse_primary();
  }
  NodePtr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::kNumber:
        advance();
        return number(t.number);
      case Tok::kState:
        advance();
        return state();
      case Tok::kFeats: {
        advance();
        expect(Tok::kLBracket, "'[' after feature name");
        const Token& idx = peek();
        if (idx.kind != Tok::kNumber || idx.text.find_first_not_of("0123456789") != std::string_view::npos)
          throw ParseError("feature index must be an integer literal", idx.pos);
        advance();
        if (idx.number > 42.0) throw ParseError("feature index " + std::string(idx.text) + " out of range [0, 42]", idx.pos);
        expect(Tok::kRBracket, "']'");
        return feature(static_cast<int>(idx.number));
      }
      case Tok::kIf: {
        advance();
        expect(Tok::kLParen, "'(' after if_");
        NodePtr inner = parse_or();
        expect(Tok::kRParen, "')'");
        return unary(UnaryOp::kIf, inner);
      }
      case Tok::kLParen: {
        advance();
        NodePtr inner = parse_or();
        expect(Tok::kRParen, "')'");
        return inner;
      }
      case Tok::kEnd:
        throw ParseError("unexpected end of input", t.pos);
      default:
        throw ParseError("unexpected token '" + std::string(t.text) + "'", t.pos);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

constexpr int kPrecOr = 1, kPrecAnd = 2, kPrecNot = 3, kPrecAdd = 4, kPrecMul = 5, kPrecNeg = 6, kPrecAtom = 7;

inline int precedence(const Node& n) {
  if (const auto* b = std::get_if<Binary>(&n.value)) {
    switch (b->op) {
      case BinaryOp::kOr: return kPrecOr;
      case BinaryOp::kAnd: return kPrecAnd;
      case BinaryOp::kAdd:
      case BinaryOp::kSub: return kPrecAdd;
      case BinaryOp::kMul:
      case BinaryOp::kDiv: return kPrecMul;
    }
  }
  if (const auto* u = std::get_if<Unary>(&n.value)) {
    if (u->op == UnaryOp::kNot) return kPrecNot;
    if (u->op == UnaryOp::kNeg) return kPrecNeg;
  }
  return kPrecAtom;
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline void render_into(const Node& n, int min_prec, std::string& out) {
  const bool paren = precedence(n) < min_prec;
  if (paren) out += '(';
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Number>) {
          out += format_number(x.value);
        } else if constexpr (std::is_same_v<T, StateRef>) {
          out += "state";
        } else if constexpr (std::is_same_v<T, FeatureRef>) {
          out += "agent_feats[" + std::to_string(x.index) + "]";
        } else if constexpr (std::is_same_v<T, Unary>) {
          switch (x.op) {
            case UnaryOp::kNeg:
              out += '-';
              render_into(*x.operand, kPrecNeg, out);
              break;
            case UnaryOp::kNot:
              out += "not ";
              render_into(*x.operand, kPrecNot, out);
              break;
            case UnaryOp::kIf:
              out += "if_(";
              render_into(*x.operand, 0, out);
              out += ')';
              break;
          }
        } else {
          const int p = precedence(n);
          const char* sym = "";
          switch (x.op) {
            case BinaryOp::kAdd: sym = " + "; break;
            case BinaryOp::kSub: sym = " - "; break;
            case BinaryOp::kMul: sym = " * "; break;
            case BinaryOp::kDiv: sym = " / "; break;
            case BinaryOp::kAnd: sym = " and "; break;
            case BinaryOp::kOr: sym = " or "; break;
          }
          render_into(*x.lhs, p, out);
          out += sym;
          render_into(*x.rhs, p + 1, out);
        }
      },
      n.value);
  if (paren) out += ')';
}

inline double eval_node(const Node& n, double st, const FeatureVector& f) {
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Number>) {
          return x.value;
        } else if constexpr (std::is_same_v<T, StateRef>) {
          return st;
        } else if constexpr (std::is_same_v<T, FeatureRef>) {
          return static_cast<double>(f[static_cast<std::size_t>(x.index)]);
        } else if constexpr (std::is_same_v<T, Unary>) {
          const double v = eval_node(*x.operand, st, f);
          switch (x.op) {
            case UnaryOp::kNeg: return -v;
            case UnaryOp::kNot: return v != 0.0 ? 0.0 : 1.0;
            case UnaryOp::kIf: return v != 0.0 ? 1.0 : 0.0;
          }
          return v;
        } else {
          const double a = eval_node(*x.lhs, st, f);
          switch (x.op) {
            case BinaryOp::kAnd: return a != 0.0 ? eval_node(*x.rhs, st, f) : a;
            case BinaryOp::kOr: return a != 0.0 ? a : eval_node(*x.rhs, st, f);
            default: break;
          }
          const double b = eval_node(*x.rhs, st, f);
          switch (x.op) {
            case BinaryOp::kAdd: return a + b;
            case BinaryOp::kSub: return a - b;
            case BinaryOp::kMul: return a * b;
            case BinaryOp::kDiv:
              if (b == 0.0) throw DomainError("division by zero in reward expression");
              return a / b;
            default: return 0.0;
          }
        }
      },
      n.value);
}

inline void collect_features(const Node& n, std::set<int>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, FeatureRef>) {
          out.insert(x.index);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect_features(*x.operand, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_features(*x.lhs, out);
          collect_features(*x.rhs, out);
        }
      },
      n.value);
}

}  // namespace detail

/// Parses one reward expression. Throws ParseError with the byte offset of
/// the offending token.
inline RewardExpr parse(std::string_view source) { return RewardExpr(detail::Parser(source).parse_all()); }

/// Canonical single-line form: minimal parentheses, spaced binary operators.
inline std::string render(const RewardExpr& expr) {
  std::string out;
  detail::render_into(expr.root(), 0, out);
  return out;
}

inline double evaluate(const RewardExpr& expr, int state, const FeatureVector& features) {
  const double v = detail::eval_node(expr.root(), state ? 1.0 : 0.0, features);
  if (!std::isfinite(v)) throw DomainError("reward expression evaluated to a non-finite value");
  return v;
}

inline std::set<int> used_features(const RewardExpr& expr) {
  std::set<int> out;
  detail::collect_features(expr.root(), out);
  return out;
}

/// Feature assignments that earn strictly more than the minimum reward at
/// state 1. Bit j of each mask is the value of `indices[j]`; all features
/// outside `indices` are 0.
struct BonusSet {
  std::vector<int> indices;  // sorted, unique
  std::vector<std::uint32_t> masks;  // ascending

  friend bool operator==(const BonusSet&, const BonusSet&) = default;
};

inline constexpr std::size_t kMaxBonusIndices = 16;

inline BonusSet bonus_set(const RewardExpr& expr, const std::set<int>& indices) {
  if (indices.size() > kMaxBonusIndices) throw ConfigError("bonus_set supports at most 16 indices");
  BonusSet out;
  out.indices.assign(indices.begin(), indices.end());
  for (int k : out.indices)
    if (k < 0 || k >= static_cast<int>(kNumFeatures)) throw ConfigError("feature index out of range");
  const std::uint32_t n = 1u << out.indices.size();
  std::vector<double> values(n);
  for (std::uint32_t m = 0; m < n; ++m) {
    FeatureVector f;
    for (std::size_t j = 0; j < out.indices.size(); ++j)
      f[static_cast<std::size_t>(out.indices[j])] = (m >> j) & 1u;
    values[m] = evaluate(expr, 1, f);
  }
  const double lo = *std::min_element(values.begin(), values.end());
  const double tol = 1e-12 * std::max(1.0, std::abs(lo));
  for (std::uint32_t m = 0; m < n; ++m)
    if (values[m] > lo + tol) out.masks.push_back(m);
  return out;
}

}  // namespace dsl
}  // namespace dlm
