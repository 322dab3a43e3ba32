#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "codesign/catalog.hpp"

namespace codesign {

// Read access to the selected column of one module, by feature name.
class ColumnView {
 public:
  ColumnView(const FeatureMatrix& module, std::size_t component)
      : module_(&module), component_(component) {}

  double operator[](std::string_view feature) const {
    return module_->value(component_, module_->require_feature(feature));
  }
  double at(std::size_t feature) const { return module_->value(component_, feature); }
  const FeatureMatrix& module() const { return *module_; }
  std::size_t component() const { return component_; }

 private:
  const FeatureMatrix* module_;
  std::size_t component_;
};

using UnaryFn = std::function<double(const ColumnView&)>;
using CrossFn = std::function<double(std::span<const ColumnView>)>;

class Expr;

namespace node {

struct Constant {
  double value;
};
// multiplier * [F_module]_feature * x_module
struct FeatureTerm {
  std::size_t module;
  std::size_t feature;
  double multiplier;
};
// multiplier * sum_{j in subset} [x_module]_j
struct SelectorTerm {
  std::size_t module;
  std::vector<std::size_t> subset;  // sorted, unique
  double multiplier;
};
struct Sum {
  std::vector<Expr> terms;
};
struct Product {
  std::vector<Expr> factors;
};
struct Quotient {
  std::vector<Expr> parts;  // {numerator, denominator}
};
// base^(num/den), den > 0, fraction reduced.
struct Power {
  std::vector<Expr> base;  // exactly one element
  long num;
  long den;
};
struct Log {
  std::vector<Expr> arg;  // exactly one element
};
// Named scalar function of one module's selected column.
struct UnaryPerModule {
  std::size_t module;
  std::string name;
  UnaryFn fn;
};
// Named function of the selected columns of two or more distinct modules.
struct CrossTerm {
  std::vector<std::size_t> modules;
  std::string name;
  CrossFn fn;
};

}  // namespace node

// Immutable expression tree over a design vector. Cheap to copy (shared
// ownership of nodes). Module references are indices into the DesignSpace
// the expression was built against.
class Expr {
 public:
  using Data = std::variant<node::Constant, node::FeatureTerm, node::SelectorTerm,
                            node::Sum, node::Product, node::Quotient, node::Power,
                            node::Log, node::UnaryPerModule, node::CrossTerm>;

  Expr() : Expr(node::Constant{0.0}) {}

  static Expr constant(double value);
  static Expr feature(const DesignSpace& space, std::string_view module,
                      std::string_view feature, double multiplier = 1.0);
  static Expr feature(std::size_t module, std::size_t feature, double multiplier = 1.0);
  static Expr selector(const DesignSpace& space, std::string_view module,
                       const std::vector<std::string>& components, double multiplier = 1.0);
  static Expr selector(std::size_t module, std::vector<std::size_t> subset,
                       double multiplier = 1.0);
  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);
  static Expr quotient(Expr numerator, Expr denominator);
  static Expr power(Expr base, long num, long den = 1);
  static Expr log(Expr arg);
  static Expr unary(std::size_t module, std::string name, UnaryFn fn);
  static Expr cross(std::vector<std::size_t> modules, std::string name, CrossFn fn);

  const Data& data() const { return node_->data; }
  // Sorted indices of the modules this expression depends on.
  const std::vector<std::size_t>& modules() const { return node_->modules; }
  bool is_constant_valued() const { return node_->modules.empty(); }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&node_->data);
  }

 private:
  struct Node {
    Data data;
    std::vector<std::size_t> modules;
  };
  explicit Expr(Data data);

  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator*(double c, const Expr& a);

// Exact value of `expr` at design x. An unselected optional module contributes
// 0 to every term that reads it. Throws DomainError for log or fractional
// power of a nonpositive value, division by zero, or a required module that is
// unselected.
double evaluate(const Expr& expr, const DesignSpace& space, const DesignVector& x);

// Value of a constant-valued expression (no module dependencies).
double evaluate_constant(const Expr& expr);

// Human-readable infix rendering, parseable back for the parser's subset.
std::string to_string(const Expr& expr, const DesignSpace& space);

}  // namespace codesign
