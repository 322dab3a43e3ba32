#include "codesign/expr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "codesign/error.hpp"

namespace codesign {
namespace {

std::vector<std::size_t> merge_modules(const std::vector<Expr>& children) {
  std::vector<std::size_t> out;
  for (const auto& c : children) out.insert(out.end(), c.modules().begin(), c.modules().end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> modules_of(const Expr::Data& data) {
  return std::visit(
      [](const auto& n) -> std::vector<std::size_t> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Constant>) {
          return {};
        } else if constexpr (std::is_same_v<T, node::FeatureTerm> ||
                             std::is_same_v<T, node::SelectorTerm> ||
                             std::is_same_v<T, node::UnaryPerModule>) {
          return {n.module};
        } else if constexpr (std::is_same_v<T, node::Sum>) {
          return merge_modules(n.terms);
        } else if constexpr (std::is_same_v<T, node::Product>) {
          return merge_modules(n.factors);
        } else if constexpr (std::is_same_v<T, node::Quotient>) {
          return merge_modules(n.parts);
        } else if constexpr (std::is_same_v<T, node::Power>) {
          return merge_modules(n.base);
        } else if constexpr (std::is_same_v<T, node::Log>) {
          return merge_modules(n.arg);
        } else {
          auto m = n.modules;
          std::sort(m.begin(), m.end());
          return m;
        }
      },
      data);
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  std::string s = os.str();
  // Shortest form that still round-trips.
  for (int p = 1; p < 17; ++p) {
    std::ostringstream t;
    t.precision(p);
    t << v;
    if (std::stod(t.str()) == v) return t.str();
  }
  return s;
}

std::string quote_name(const std::string& name) {
  bool plain = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
  if (plain && !std::isdigit(static_cast<unsigned char>(name[0]))) return name;
  return "\"" + name + "\"";
}

}  // namespace

Expr::Expr(Data data) {
  auto mods = modules_of(data);
  node_ = std::make_shared<const Node>(Node{std::move(data), std::move(mods)});
}

Expr Expr::constant(double value) { return Expr(node::Constant{value}); }

Expr Expr::feature(std::size_t module, std::size_t feature, double multiplier) {
  return Expr(node::FeatureTerm{module, feature, multiplier});
}

Expr Expr::feature(const DesignSpace& space, std::string_view module,
                   std::string_view feature, double multiplier) {
  std::size_t i = space.require_module(module);
  return Expr::feature(i, space.module(i).require_feature(feature), multiplier);
}

Expr Expr::selector(std::size_t module, std::vector<std::size_t> subset, double multiplier) {
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  return Expr(node::SelectorTerm{module, std::move(subset), multiplier});
}

Expr Expr::selector(const DesignSpace& space, std::string_view module,
                    const std::vector<std::string>& components, double multiplier) {
  std::size_t i = space.require_module(module);
  std::vector<std::size_t> subset;
  for (const auto& c : components) subset.push_back(space.module(i).require_component(c));
  return Expr::selector(i, std::move(subset), multiplier);
}

Expr Expr::sum(std::vector<Expr> terms) {
  if (terms.size() == 1) return terms.front();
  return Expr(node::Sum{std::move(terms)});
}

Expr Expr::product(std::vector<Expr> factors) {
  if (factors.size() == 1) return factors.front();
  return Expr(node::Product{std::move(factors)});
}

Expr Expr::quotient(Expr numerator, Expr denominator) {
  if (auto c = denominator.as<node::Constant>(); c != nullptr && c->value == 0.0) {
    throw DomainError("quotient with constant zero denominator");
  }
  return Expr(node::Quotient{{std::move(numerator), std::move(denominator)}});
}

Expr Expr::power(Expr base, long num, long den) {
  if (den == 0) throw DomainError("power with zero denominator exponent");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Expr(node::Power{{std::move(base)}, num, den});
}

Expr Expr::log(Expr arg) { return Expr(node::Log{{std::move(arg)}}); }

Expr Expr::unary(std::size_t module, std::string name, UnaryFn fn) {
  return Expr(node::UnaryPerModule{module, std::move(name), std::move(fn)});
}

Expr Expr::cross(std::vector<std::size_t> modules, std::string name, CrossFn fn) {
  auto sorted = modules;
  std::sort(sorted.begin(), sorted.end());
  if (modules.size() < 2 || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DomainError("cross term '" + name + "' needs at least two distinct modules");
  }
  return Expr(node::CrossTerm{std::move(modules), std::move(name), std::move(fn)});
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::sum({a, b}); }
Expr operator-(const Expr& a) { return Expr::product({Expr::constant(-1.0), a}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::sum({a, -b}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::product({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::quotient(a, b); }
Expr operator*(double c, const Expr& a) { return Expr::product({Expr::constant(c), a}); }

namespace {

struct Evaluator {
  const DesignSpace* space;
  const DesignVector* x;

  // Selected component of module m, or nullopt for an unselected optional one.
  std::optional<std::size_t> selected(std::size_t m) const {
    int c = x->choice(m);
    if (c != DesignVector::kNone) return static_cast<std::size_t>(c);
    if (!space->module(m).optional()) {
      throw DomainError("required module '" + space->module(m).module_id() +
                        "' is unselected");
    }
    return std::nullopt;
  }

  double operator()(const Expr& e) const { return std::visit(*this, e.data()); }

  double operator()(const node::Constant& n) const { return n.value; }

  double operator()(const node::FeatureTerm& n) const {
    auto j = selected(n.module);
    if (!j) return 0.0;
    return n.multiplier * space->module(n.module).value(*j, n.feature);
  }

  double operator()(const node::SelectorTerm& n) const {
    auto j = selected(n.module);
    if (!j) return 0.0;
    return std::binary_search(n.subset.begin(), n.subset.end(), *j) ? n.multiplier : 0.0;
  }

  double operator()(const node::Sum& n) const {
    double s = 0.0;
    for (const auto& t : n.terms) s += (*this)(t);
    return s;
  }

  double operator()(const node::Product& n) const {
    double p = 1.0;
    for (const auto& f : n.factors) p *= (*this)(f);
    return p;
  }

  double operator()(const node::Quotient& n) const {
    double den = (*this)(n.parts[1]);
    if (den == 0.0) throw DomainError("division by zero");
    return (*this)(n.parts[0]) / den;
  }

  double operator()(const node::Power& n) const {
    double b = (*this)(n.base[0]);
    if (n.den != 1 && b < 0.0) throw DomainError("fractional power of a negative value");
    if (n.num < 0 && b == 0.0) throw DomainError("negative power of zero");
    if (n.den == 1) return std::pow(b, static_cast<double>(n.num));
    return std::pow(b, static_cast<double>(n.num) / static_cast<double>(n.den));
  }

  double operator()(const node::Log& n) const {
    double a = (*this)(n.arg[0]);
    if (!(a > 0.0)) throw DomainError("log of a nonpositive value");
    return std::log(a);
  }

  double operator()(const node::UnaryPerModule& n) const {
    auto j = selected(n.module);
    if (!j) return 0.0;
    return n.fn(ColumnView(space->module(n.module), *j));
  }

  double operator()(const node::CrossTerm& n) const {
    std::vector<ColumnView> cols;
    cols.reserve(n.modules.size());
    for (std::size_t m : n.modules) {
      auto j = selected(m);
      if (!j) return 0.0;
      cols.emplace_back(space->module(m), *j);
    }
    return n.fn(cols);
  }
};

struct Printer {
  const DesignSpace* space;

  std::string operator()(const Expr& e) const { return std::visit(*this, e.data()); }

  std::string module_name(std::size_t m) const {
    return space != nullptr ? quote_name(space->module(m).module_id())
                            : "#" + std::to_string(m);
  }

  std::string operator()(const node::Constant& n) const {
    return n.value < 0 ? "(" + format_number(n.value) + ")" : format_number(n.value);
  }
  std::string operator()(const node::FeatureTerm& n) const {
    std::string f = "feat(" + module_name(n.module) + ", " +
                    quote_name(space->module(n.module).features()[n.feature].name) + ")";
    if (n.multiplier == 1.0) return f;
    return "(" + format_number(n.multiplier) + " * " + f + ")";
  }
  std::string operator()(const node::SelectorTerm& n) const {
    std::string s = "sel(" + module_name(n.module) + ", {";
    for (std::size_t k = 0; k < n.subset.size(); ++k) {
      if (k > 0) s += ", ";
      s += quote_name(space->module(n.module).component_names()[n.subset[k]]);
    }
    s += "})";
    if (n.multiplier == 1.0) return s;
    return "(" + format_number(n.multiplier) + " * " + s + ")";
  }
  std::string join(const std::vector<Expr>& xs, const char* op) const {
    std::string s = "(";
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (k > 0) s += op;
      s += (*this)(xs[k]);
    }
    return s + ")";
  }
  std::string operator()(const node::Sum& n) const { return join(n.terms, " + "); }
  std::string operator()(const node::Product& n) const { return join(n.factors, " * "); }
  std::string operator()(const node::Quotient& n) const { return join(n.parts, " / "); }
  std::string operator()(const node::Power& n) const {
    std::string e = n.den == 1 ? std::to_string(n.num)
                               : "(" + std::to_string(n.num) + "/" + std::to_string(n.den) + ")";
    return (*this)(n.base[0]) + "^" + e;
  }
  std::string operator()(const node::Log& n) const { return "log(" + (*this)(n.arg[0]) + ")"; }
  std::string operator()(const node::UnaryPerModule& n) const {
    return n.name + "[" + module_name(n.module) + "]";
  }
  std::string operator()(const node::CrossTerm& n) const {
    std::string s = n.name + "[";
    for (std::size_t k = 0; k < n.modules.size(); ++k) {
      if (k > 0) s += ", ";
      s += module_name(n.modules[k]);
    }
    return s + "]";
  }
};

}  // namespace

double evaluate(const Expr& expr, const DesignSpace& space, const DesignVector& x) {
  return Evaluator{&space, &x}(expr);
}

double evaluate_constant(const Expr& expr) {
  if (!expr.is_constant_valued()) throw DomainError("expression is not constant-valued");
  static const DesignSpace kEmpty;
  static const DesignVector kNoDesign;
  return Evaluator{&kEmpty, &kNoDesign}(expr);
}

std::string to_string(const Expr& expr, const DesignSpace& space) {
  return Printer{&space}(expr);
}

}  // namespace codesign
