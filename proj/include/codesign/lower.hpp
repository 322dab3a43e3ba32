#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "codesign/blp_instance.hpp"
#include "codesign/spec.hpp"

namespace codesign {

enum class Transformation {
  kLinearPassthrough,
  kColumnwise,
  kLogRational,
  kLifted,
  kSurrogateLowerBound,
  kSurrogateUpperBound,
};

// exact: lowered value equals the original value on every design.
// exact-argmax-preserving: a monotone transform (log) of the original.
// conservative: a surrogate bound; lowered-feasible implies feasible.
enum class Exactness { kExact, kExactArgmaxPreserving, kConservative };

const char* to_string(Transformation t);
const char* to_string(Exactness e);

struct LoweringEntry {
  std::string label;
  std::string role;  // objective | constraint | compat | restriction
  Transformation transformation = Transformation::kLinearPassthrough;
  Exactness exactness = Exactness::kExact;
  std::optional<SurrogateKind> surrogate;
  std::vector<std::string> rows;  // names of the rows it produced
  std::string note;
};

struct LoweringReport {
  std::vector<LoweringEntry> entries;

  bool all_exact() const;  // no conservative entries
};

// A linear function of the primary design variables: coefs . x + offset.
struct LinearForm {
  std::vector<double> coefs;  // one per primary variable (space.total_dim())
  double offset = 0.0;
};

// Linear passthrough: sums of scaled feature and selector terms.
// Returns nullopt when a nonlinear node is present.
std::optional<LinearForm> lower_linear(const Expr& expr, const DesignSpace& space);

// Sums of single-module terms, each precomputed per catalog column. Returns
// nullopt if some term reads two or more modules. Throws LoweringError when
// a term is undefined on a column (names module, component and term).
std::optional<LinearForm> lower_columnwise(const Expr& expr, const DesignSpace& space);

// k + c * prod_i g_i(x_i)^e_i with every g_i strictly positive on its catalog.
struct LogRationalForm {
  double additive = 0.0;  // k
  double scale = 1.0;     // c, nonzero
  LinearForm log_form;    // log(prod g_i^e_i) as a linear form (offset 0)
};

// Returns nullopt when the expression is not of that shape (for example a
// multi-module sum). Throws LoweringError naming the offending module and
// component when some g_i is nonpositive.
std::optional<LogRationalForm> lower_log_rational(const Expr& expr, const DesignSpace& space);

inline constexpr std::size_t kDefaultLiftingCap = 100'000;

// Joint-choice coefficients over a set of modules.
struct LiftedTerm {
  std::vector<std::size_t> modules;  // ascending
  std::vector<double> cells;         // mixed radix, first module most significant
};

// Additive split into columnwise part plus lifted joint-choice tables.
struct LiftedForm {
  LinearForm primary;
  std::vector<LiftedTerm> lifted;
};

// Throws CapacityError above `cap` cells per table, LoweringError for
// tables over optional modules.
LiftedForm lift_cross_terms(const Expr& expr, const DesignSpace& space,
                            std::size_t cap = kDefaultLiftingCap);

// Compat rows in terms of primary variable indices.
BlpRow lower_compat(const CompatRule& rule, const DesignSpace& space);

// sum_{j in subset} x_{i,j} = 1
BlpRow lower_restriction(const Restriction& restriction, const DesignSpace& space);

struct LoweringOptions {
  std::size_t lifting_cap = kDefaultLiftingCap;
  bool use_surrogates = true;
};

struct LoweringResult {
  BlpInstance instance;
  LoweringReport report;
};

// Rewrites the spec into a binary linear program. Route order per objective
// and constraint: linear, columnwise, log-rational, registered surrogate,
// joint-choice lifting. Throws LoweringError listing unlowerable expressions.
LoweringResult lower(const DesignSpec& spec, const LoweringOptions& options = {});

// Primary-variable choices of a design (lifted cells are derived).
inline std::vector<int> blp_choices(const DesignVector& x) { return x.choices(); }

}  // namespace codesign
