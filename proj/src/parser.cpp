#include "codesign/parser.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <vector>

#include "codesign/error.hpp"

namespace codesign {
namespace {

enum class Tok { kNumber, kIdent, kString, kPunct, kEnd };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError("column " + std::to_string(i + 1) + ": " + what + " in '" +
                     std::string(s) + "'");
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::string buf(s.substr(i));
      char* end = nullptr;
      double v = std::strtod(buf.c_str(), &end);
      i += static_cast<std::size_t>(end - buf.c_str());
      out.push_back({Tok::kNumber, std::string(s.substr(start, i - start)), v, start});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' ||
                              s[i] == '.' || s[i] == '#')) {
        ++i;
      }
      out.push_back({Tok::kIdent, std::string(s.substr(start, i - start)), 0.0, start});
    } else if (c == '"') {
      ++i;
      while (i < s.size() && s[i] != '"') ++i;
      if (i >= s.size()) fail("unterminated string");
      out.push_back({Tok::kString, std::string(s.substr(start + 1, i - start - 1)), 0.0, start});
      ++i;
    } else {
      std::string two(s.substr(i, 2));
      if (two == "<=" || two == ">=" || two == "==") {
        out.push_back({Tok::kPunct, two, 0.0, start});
        i += 2;
      } else if (std::string_view("()+-*/^,{}:=").find(c) != std::string_view::npos) {
        out.push_back({Tok::kPunct, std::string(1, c), 0.0, start});
        ++i;
      } else {
        fail(std::string("unexpected character '") + c + "'");
      }
    }
  }
  out.push_back({Tok::kEnd, "", 0.0, s.size()});
  return out;
}

// Exact fraction for a constant exponent (denominators up to 10^6).
std::pair<long, long> to_fraction(double v) {
  for (long den = 1; den <= 1'000'000; ++den) {
    double num = std::round(v * static_cast<double>(den));
    if (std::abs(num / static_cast<double>(den) - v) <= 1e-12 * std::max(1.0, std::abs(v))) {
      return {static_cast<long>(num), den};
    }
  }
  throw ParseError("exponent " + std::to_string(v) + " is not a simple fraction");
}

class Parser {
 public:
  Parser(std::string_view text, const DesignSpace& space, const ParamMap& params)
      : text_(text), toks_(tokenize(text)), space_(space), params_(params) {}

  Expr expression() {
    Expr e = additive();
    return e;
  }

  const Token& peek() const { return toks_[pos_]; }
  bool at_punct(std::string_view p) const {
    return peek().kind == Tok::kPunct && peek().text == p;
  }
  bool at_end() const { return peek().kind == Tok::kEnd; }
  Token take() { return toks_[pos_++]; }

  void expect(std::string_view p) {
    if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("column " + std::to_string(peek().pos + 1) + ": " + what + " in '" +
                     std::string(text_) + "'");
  }

  // Optional "label:" prefix.
  std::optional<std::string> label() {
    if ((peek().kind == Tok::kIdent || peek().kind == Tok::kString) &&
        toks_[pos_ + 1].kind == Tok::kPunct && toks_[pos_ + 1].text == ":") {
      std::string l = take().text;
      ++pos_;
      return l;
    }
    return std::nullopt;
  }

 private:
  Expr additive() {
    std::vector<Expr> terms{multiplicative()};
    while (at_punct("+") || at_punct("-")) {
      bool minus = take().text == "-";
      Expr t = multiplicative();
      terms.push_back(minus ? -t : t);
    }
    return Expr::sum(std::move(terms));
  }

  Expr multiplicative() {
    Expr acc = unary();
    std::vector<Expr> factors{acc};
    while (at_punct("*") || at_punct("/")) {
      bool div = take().text == "/";
      Expr rhs = unary();
      if (div) {
        factors = {Expr::quotient(Expr::product(std::move(factors)), rhs)};
      } else {
        factors.push_back(rhs);
      }
    }
    return Expr::product(std::move(factors));
  }

  Expr unary() {
    if (at_punct("-")) {
      ++pos_;
      Expr e = unary();
      if (auto c = e.as<node::Constant>()) return Expr::constant(-c->value);
      return -e;
    }
    if (at_punct("+")) {
      ++pos_;
      return unary();
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!at_punct("^")) return base;
    ++pos_;
    Expr exponent = unary();  // right associative, allows x^-2
    if (!exponent.is_constant_valued()) fail("exponent must be constant");
    auto [num, den] = to_fraction(evaluate_constant(exponent));
    return Expr::power(base, num, den);
  }

  std::string name() {
    if (peek().kind == Tok::kIdent || peek().kind == Tok::kString) return take().text;
    fail("expected a name");
  }

  Expr primary() {
    const Token& t = peek();
    if (t.kind == Tok::kNumber) {
      ++pos_;
      return Expr::constant(t.number);
    }
    if (at_punct("(")) {
      ++pos_;
      Expr e = additive();
      expect(")");
      return e;
    }
    if (t.kind != Tok::kIdent) fail("expected an operand");
    std::string id = take().text;
    if (!at_punct("(")) {
      auto it = params_.find(id);
      if (it == params_.end()) fail("unknown name '" + id + "'");
      return Expr::constant(it->second);
    }
    ++pos_;
    if (id == "feat") {
      std::string m = name();
      expect(",");
      std::string f = name();
      double mult = 1.0;
      if (at_punct(",")) {
        ++pos_;
        Expr me = additive();
        if (!me.is_constant_valued()) fail("feature multiplier must be constant");
        mult = evaluate_constant(me);
      }
      expect(")");
      try {
        return Expr::feature(space_, m, f, mult);
      } catch (const LookupError& e) {
        fail(e.what());
      }
    }
    if (id == "sel") {
      std::string m = name();
      std::optional<std::size_t> mi = space_.module_index(m);
      if (!mi) fail("unknown module '" + m + "'");
      std::vector<std::string> comps;
      if (at_punct(",")) {
        ++pos_;
        expect("{");
        if (!at_punct("}")) {
          comps.push_back(name());
          while (at_punct(",")) {
            ++pos_;
            comps.push_back(name());
          }
        }
        expect("}");
      } else {
        comps = space_.module(*mi).component_names();
      }
      expect(")");
      try {
        return Expr::selector(space_, m, comps);
      } catch (const LookupError& e) {
        fail(e.what());
      }
    }
    if (id == "log" || id == "sqrt") {
      Expr arg = additive();
      expect(")");
      return id == "log" ? Expr::log(arg) : Expr::power(arg, 1, 2);
    }
    fail("unknown function '" + id + "'");
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const DesignSpace& space_;
  const ParamMap& params_;
};

}  // namespace

Expr parse_expr(std::string_view text, const DesignSpace& space, const ParamMap& params) {
  Parser p(text, space, params);
  Expr e = p.expression();
  if (!p.at_end()) p.fail("trailing input");
  return e;
}

Constraint parse_constraint(std::string_view text, const DesignSpace& space,
                            const ParamMap& params, ConstraintClass klass,
                            const std::string& default_label) {
  Parser p(text, space, params);
  Constraint c;
  c.klass = klass;
  c.label = p.label().value_or(default_label);
  Expr lhs = p.expression();
  std::string rel;
  if (p.at_punct("<=") || p.at_punct(">=") || p.at_punct("==") || p.at_punct("=")) {
    rel = p.take().text;
  } else {
    p.fail("expected one of <=, >=, ==");
  }
  Expr rhs = p.expression();
  if (!p.at_end()) p.fail("trailing input");
  if (c.label.empty()) c.label = std::string(text);

  c.sense = (rel == "<=" || rel == ">=") ? Sense::kLessEqual : Sense::kEqual;
  bool flip = rel == ">=";
  if (rhs.is_constant_valued()) {
    double r = evaluate_constant(rhs);
    c.lhs = flip ? -lhs : lhs;
    c.rhs = flip ? -r : r;
  } else if (lhs.is_constant_valued()) {
    double l = evaluate_constant(lhs);
    // l <= rhs  <=>  -rhs <= -l ;  l >= rhs  <=>  rhs <= l
    c.lhs = flip ? rhs : -rhs;
    c.rhs = flip ? l : -l;
    if (c.sense == Sense::kEqual) {
      c.lhs = rhs;
      c.rhs = l;
    }
  } else {
    c.lhs = flip ? rhs - lhs : lhs - rhs;
    c.rhs = 0.0;
  }
  return c;
}

Objective parse_objective(std::string_view text, const DesignSpace& space,
                          const ParamMap& params, const std::string& default_label) {
  Parser p(text, space, params);
  Objective o;
  o.label = p.label().value_or(default_label);
  o.expr = p.expression();
  if (!p.at_end()) p.fail("trailing input");
  if (o.label.empty()) o.label = std::string(text);
  return o;
}

}  // namespace codesign
