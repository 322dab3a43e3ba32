#include "codesign/lower.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "codesign/error.hpp"

namespace codesign {

const char* to_string(Transformation t) {
  switch (t) {
    case Transformation::kLinearPassthrough:
      return "linear-passthrough";
    case Transformation::kColumnwise:
      return "columnwise";
    case Transformation::kLogRational:
      return "log-rational";
    case Transformation::kLifted:
      return "lifted";
    case Transformation::kSurrogateLowerBound:
      return "surrogate-lower-bound";
    case Transformation::kSurrogateUpperBound:
      return "surrogate-upper-bound";
  }
  return "?";
}

const char* to_string(Exactness e) {
  switch (e) {
    case Exactness::kExact:
      return "exact";
    case Exactness::kExactArgmaxPreserving:
      return "exact-argmax-preserving";
    case Exactness::kConservative:
      return "conservative";
  }
  return "?";
}

bool LoweringReport::all_exact() const {
  return std::none_of(entries.begin(), entries.end(), [](const LoweringEntry& e) {
    return e.exactness == Exactness::kConservative;
  });
}

namespace {

struct Term {
  double scale;
  Expr expr;
};

// expr == constant + sum(scale * expr)
struct Additive {
  double constant = 0.0;
  std::vector<Term> terms;
};

double constant_value(const Expr& e) {
  try {
    return evaluate_constant(e);
  } catch (const DomainError& err) {
    throw LoweringError(std::string("constant subexpression: ") + err.what());
  }
}

void split(const Expr& e, double scale, Additive& out) {
  if (scale == 0.0) return;
  if (e.is_constant_valued()) {
    out.constant += scale * constant_value(e);
    return;
  }
  if (const auto* s = e.as<node::Sum>()) {
    for (const auto& t : s->terms) split(t, scale, out);
    return;
  }
  if (const auto* p = e.as<node::Product>()) {
    double k = scale;
    std::vector<Expr> rest;
    for (const auto& f : p->factors) {
      if (f.is_constant_valued()) {
        k *= constant_value(f);
      } else {
        rest.push_back(f);
      }
    }
    if (rest.size() == 1) {
      split(rest.front(), k, out);
    } else if (k != 0.0) {
      out.terms.push_back({k, Expr::product(std::move(rest))});
    }
    return;
  }
  if (const auto* q = e.as<node::Quotient>(); q != nullptr && q->parts[1].is_constant_valued()) {
    double d = constant_value(q->parts[1]);
    if (d == 0.0) throw LoweringError("division by a zero constant");
    split(q->parts[0], scale / d, out);
    return;
  }
  if (const auto* pw = e.as<node::Power>(); pw != nullptr && pw->num == 1 && pw->den == 1) {
    split(pw->base[0], scale, out);
    return;
  }
  out.terms.push_back({scale, e});
}

Additive split(const Expr& e) {
  Additive a;
  split(e, 1.0, a);
  return a;
}

DesignVector empty_design(const DesignSpace& space) {
  return DesignVector(std::vector<int>(space.num_modules(), DesignVector::kNone));
}

// Adds scale * term(column j) for every j of the term's single module.
void add_columnwise(const Term& t, const DesignSpace& space, LinearForm& out) {
  std::size_t i = t.expr.modules().front();
  const auto& m = space.module(i);
  DesignVector x = empty_design(space);
  for (std::size_t j = 0; j < m.num_components(); ++j) {
    x.set(i, static_cast<int>(j));
    double v = 0.0;
    try {
      v = evaluate(t.expr, space, x);
    } catch (const DomainError& e) {
      throw LoweringError("module '" + m.module_id() + "', component '" +
                          m.component_names()[j] + "': " + to_string(t.expr, space) +
                          " is undefined (" + e.what() + ")");
    }
    out.coefs[space.offset(i) + j] += t.scale * v;
  }
  if (m.optional()) {
    // f(x_i) = f(none) + sum_j (f(j) - f(none)) x_ij under sum_j x_ij <= 1.
    x.set(i, DesignVector::kNone);
    double v0 = 0.0;
    try {
      v0 = evaluate(t.expr, space, x);
    } catch (const DomainError& e) {
      throw LoweringError("module '" + m.module_id() + "': " + to_string(t.expr, space) +
                          " is undefined when the optional module is unselected (" +
                          e.what() + ")");
    }
    if (v0 != 0.0) {
      out.offset += t.scale * v0;
      for (std::size_t j = 0; j < m.num_components(); ++j) {
        out.coefs[space.offset(i) + j] -= t.scale * v0;
      }
    }
  }
}

struct Monomial {
  double coef = 1.0;
  std::vector<std::pair<Expr, double>> factors;  // single-module factor, exponent
};

std::optional<Monomial> as_monomial(const Expr& e) {
  if (e.is_constant_valued()) return Monomial{constant_value(e), {}};
  if (e.modules().size() == 1) return Monomial{1.0, {{e, 1.0}}};
  if (const auto* p = e.as<node::Product>()) {
    Monomial acc;
    for (const auto& f : p->factors) {
      auto m = as_monomial(f);
      if (!m) return std::nullopt;
      acc.coef *= m->coef;
      acc.factors.insert(acc.factors.end(), m->factors.begin(), m->factors.end());
    }
    return acc;
  }
  if (const auto* q = e.as<node::Quotient>()) {
    auto n = as_monomial(q->parts[0]);
    auto d = as_monomial(q->parts[1]);
    if (!n || !d || d->coef == 0.0) return std::nullopt;
    n->coef /= d->coef;
    for (auto& [g, ex] : d->factors) n->factors.emplace_back(g, -ex);
    return n;
  }
  if (const auto* pw = e.as<node::Power>()) {
    auto b = as_monomial(pw->base[0]);
    if (!b) return std::nullopt;
    double ex = static_cast<double>(pw->num) / static_cast<double>(pw->den);
    if (b->coef < 0.0 && pw->den != 1) return std::nullopt;
    b->coef = std::pow(b->coef, ex);
    for (auto& f : b->factors) f.second *= ex;
    return b;
  }
  return std::nullopt;
}

std::string sanitize(const std::string& label) {
  std::string out;
  for (char c : label) {
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    if (out.size() >= 40) break;
  }
  return out;
}

std::string module_set_name(const std::vector<std::size_t>& mods, const DesignSpace& space) {
  std::string s = "{";
  for (std::size_t k = 0; k < mods.size(); ++k) {
    if (k > 0) s += ", ";
    s += space.module(mods[k]).module_id();
  }
  return s + "}";
}

}  // namespace

std::optional<LinearForm> lower_linear(const Expr& expr, const DesignSpace& space) {
  Additive a = split(expr);
  LinearForm out{std::vector<double>(space.total_dim(), 0.0), a.constant};
  for (const auto& t : a.terms) {
    if (const auto* f = t.expr.as<node::FeatureTerm>()) {
      const auto& m = space.module(f->module);
      for (std::size_t j = 0; j < m.num_components(); ++j) {
        out.coefs[space.offset(f->module) + j] += t.scale * f->multiplier * m.value(j, f->feature);
      }
    } else if (const auto* s = t.expr.as<node::SelectorTerm>()) {
      for (std::size_t j : s->subset) {
        out.coefs[space.offset(s->module) + j] += t.scale * s->multiplier;
      }
    } else {
      return std::nullopt;
    }
  }
  return out;
}

std::optional<LinearForm> lower_columnwise(const Expr& expr, const DesignSpace& space) {
  Additive a = split(expr);
  for (const auto& t : a.terms) {
    if (t.expr.modules().size() > 1) return std::nullopt;
  }
  LinearForm out{std::vector<double>(space.total_dim(), 0.0), a.constant};
  for (const auto& t : a.terms) add_columnwise(t, space, out);
  return out;
}

std::optional<LogRationalForm> lower_log_rational(const Expr& expr, const DesignSpace& space) {
  Additive a = split(expr);
  if (a.terms.size() != 1) return std::nullopt;
  auto mono = as_monomial(a.terms.front().expr);
  if (!mono) return std::nullopt;
  LogRationalForm out;
  out.additive = a.constant;
  out.scale = a.terms.front().scale * mono->coef;
  if (out.scale == 0.0 || !std::isfinite(out.scale)) return std::nullopt;
  out.log_form.coefs.assign(space.total_dim(), 0.0);
  DesignVector x = empty_design(space);
  for (const auto& [g, ex] : mono->factors) {
    std::size_t i = g.modules().front();
    const auto& m = space.module(i);
    if (m.optional()) {
      throw LoweringError("log-rational: factor " + to_string(g, space) +
                          " reads optional module '" + m.module_id() + "'");
    }
    for (std::size_t j = 0; j < m.num_components(); ++j) {
      x.set(i, static_cast<int>(j));
      double v = 0.0;
      try {
        v = evaluate(g, space, x);
      } catch (const DomainError& e) {
        throw LoweringError("log-rational: factor " + to_string(g, space) + " at module '" +
                            m.module_id() + "', component '" + m.component_names()[j] +
                            "': " + e.what());
      }
      if (!(v > 0.0)) {
        std::ostringstream msg;
        msg << "log-rational: factor " << to_string(g, space) << " is nonpositive (" << v
            << ") at module '" << m.module_id() << "', component '" << m.component_names()[j]
            << "'";
        throw LoweringError(msg.str());
      }
      out.log_form.coefs[space.offset(i) + j] += ex * std::log(v);
    }
    x.set(i, DesignVector::kNone);
  }
  return out;
}

LiftedForm lift_cross_terms(const Expr& expr, const DesignSpace& space, std::size_t cap) {
  Additive a = split(expr);
  LiftedForm out;
  out.primary = LinearForm{std::vector<double>(space.total_dim(), 0.0), a.constant};
  std::map<std::vector<std::size_t>, std::vector<Term>> groups;
  for (const auto& t : a.terms) {
    if (t.expr.modules().size() <= 1) {
      add_columnwise(t, space, out.primary);
    } else {
      groups[t.expr.modules()].push_back(t);
    }
  }
  for (const auto& [mods, terms] : groups) {
    std::size_t cells = 1;
    for (std::size_t m : mods) {
      if (space.module(m).optional()) {
        throw LoweringError("joint-choice lifting over optional module '" +
                            space.module(m).module_id() + "' is not supported");
      }
      cells *= space.module(m).num_components();
      if (cells > cap) {
        throw CapacityError("joint-choice lifting over " + module_set_name(mods, space) +
                            " exceeds the cap of " + std::to_string(cap) +
                            " cells; use a surrogate");
      }
    }
    LiftedTerm lt{mods, std::vector<double>(cells, 0.0)};
    DesignVector x = empty_design(space);
    for (std::size_t c = 0; c < cells; ++c) {
      std::size_t rem = c;
      for (std::size_t k = mods.size(); k-- > 0;) {
        std::size_t n = space.module(mods[k]).num_components();
        x.set(mods[k], static_cast<int>(rem % n));
        rem /= n;
      }
      for (const auto& t : terms) {
        try {
          lt.cells[c] += t.scale * evaluate(t.expr, space, x);
        } catch (const DomainError& e) {
          throw LoweringError("lifting " + module_set_name(mods, space) + ": " +
                              to_string(t.expr, space) + " is undefined at cell " +
                              std::to_string(c) + " (" + e.what() + ")");
        }
      }
    }
    out.lifted.push_back(std::move(lt));
  }
  return out;
}

BlpRow lower_compat(const CompatRule& rule, const DesignSpace& space) {
  BlpRow row;
  row.kind = RowKind::kCompat;
  row.source = rule.label;
  row.transformation = to_string(Transformation::kLinearPassthrough);
  row.sense = Sense::kLessEqual;
  double sign = rule.polarity == Polarity::kCompatible ? -1.0 : 1.0;
  row.rhs = rule.polarity == Polarity::kCompatible ? 0.0 : 1.0;
  row.terms.push_back({space.offset(rule.module_a) + rule.component, 1.0});
  for (std::size_t j : rule.subset) row.terms.push_back({space.offset(rule.module_b) + j, sign});
  std::sort(row.terms.begin(), row.terms.end(),
            [](const LinearTerm& a, const LinearTerm& b) { return a.var < b.var; });
  return row;
}

BlpRow lower_restriction(const Restriction& restriction, const DesignSpace& space) {
  if (restriction.subset.empty()) {
    throw LoweringError(restriction.label + ": restriction subset is empty");
  }
  BlpRow row;
  row.kind = RowKind::kRestriction;
  row.source = restriction.label;
  row.transformation = to_string(Transformation::kLinearPassthrough);
  row.sense = Sense::kEqual;
  row.rhs = 1.0;
  auto subset = restriction.subset;
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  for (std::size_t j : subset) row.terms.push_back({space.offset(restriction.module) + j, 1.0});
  return row;
}

namespace {

// A linear function over primary variables and lifted tables, before the
// lifted variables get their final indices.
struct PendingForm {
  LinearForm primary;
  std::vector<LiftedTerm> lifted;
};

struct PendingRow {
  std::string label;
  PendingForm form;  // form (sense) rhs, form.primary.offset already folded
  Sense sense;
  double rhs;
  RowKind kind;
  std::string source;
  Transformation transformation;
  std::size_t entry;  // report entry index
};

class Lowerer {
 public:
  Lowerer(const DesignSpec& spec, const LoweringOptions& options)
      : spec_(spec), space_(spec.space), options_(options) {}

  LoweringResult run() {
    spec_.validate();
    for (std::size_t i = 0; i < space_.num_modules(); ++i) {
      const auto& m = space_.module(i);
      result_.instance.blocks.push_back(
          BlpBlock{m.module_id(), m.component_names(), m.optional(), space_.offset(i)});
    }
    std::vector<std::string> failures;
    for (const auto& o : spec_.objectives) {
      try {
        lower_objective(o);
      } catch (const Error& e) {
        failures.push_back(e.what());
      }
    }
    for (const auto& c : spec_.constraints) {
      try {
        lower_constraint(c);
      } catch (const Error& e) {
        failures.push_back(e.what());
      }
    }
    if (!failures.empty()) {
      std::string msg = "unlowerable expressions:";
      for (const auto& f : failures) msg += "\n  " + f;
      throw LoweringError(msg);
    }
    for (const auto& r : spec_.compat_rules) lower_rule(r);
    for (const auto& r : spec_.restrictions) lower_restriction_entry(r);
    materialize();
    return std::move(result_);
  }

 private:
  std::size_t add_entry(const std::string& label, const std::string& role, Transformation t,
                        Exactness ex, std::optional<SurrogateKind> kind = std::nullopt,
                        std::string note = "") {
    result_.report.entries.push_back(LoweringEntry{label, role, t, ex, kind, {}, std::move(note)});
    return result_.report.entries.size() - 1;
  }

  void lower_objective(const Objective& o) {
    std::vector<std::string> reasons;
    if (auto lf = lower_linear(o.expr, space_)) {
      push_objective(o.label, PendingForm{*lf, {}});
      add_entry(o.label, "objective", Transformation::kLinearPassthrough, Exactness::kExact);
      return;
    }
    if (auto cf = try_columnwise(o.expr, reasons)) {
      push_objective(o.label, PendingForm{*cf, {}});
      add_entry(o.label, "objective", Transformation::kColumnwise, Exactness::kExact);
      return;
    }
    if (auto lr = try_log_rational(o.expr, reasons)) {
      push_objective(o.label, log_objective(*lr));
      add_entry(o.label, "objective", Transformation::kLogRational,
                Exactness::kExactArgmaxPreserving);
      return;
    }
    if (o.surrogate && options_.use_surrogates) {
      const Expr& s = o.surrogate->expr;
      std::optional<PendingForm> form;
      if (auto lf = lower_linear(s, space_)) {
        form = PendingForm{*lf, {}};
      } else if (auto cf = try_columnwise(s, reasons)) {
        form = PendingForm{*cf, {}};
      } else if (auto lr = try_log_rational(s, reasons)) {
        form = log_objective(*lr);
      }
      if (form) {
        push_objective(o.label, *form);
        add_entry(o.label, "objective", Transformation::kSurrogateLowerBound,
                  Exactness::kConservative, o.surrogate->kind);
        return;
      }
      reasons.push_back(std::string("surrogate ") + to_string(o.surrogate->kind) +
                        " is not lowerable");
    }
    try {
      LiftedForm lf = lift_cross_terms(o.expr, space_, options_.lifting_cap);
      push_objective(o.label, PendingForm{std::move(lf.primary), std::move(lf.lifted)});
      add_entry(o.label, "objective", Transformation::kLifted, Exactness::kExact);
      return;
    } catch (const Error& e) {
      reasons.push_back(e.what());
    }
    throw LoweringError(describe_failure("objective", o.label, o.expr, reasons));
  }

  void lower_constraint(const Constraint& c) {
    std::vector<std::string> reasons;
    if (auto lf = lower_linear(c.lhs, space_)) {
      std::size_t e = add_entry(c.label, "constraint", Transformation::kLinearPassthrough,
                                Exactness::kExact);
      push_row(c.label, PendingForm{*lf, {}}, c.sense, c.rhs, Transformation::kLinearPassthrough, e);
      return;
    }
    if (auto cf = try_columnwise(c.lhs, reasons)) {
      std::size_t e = add_entry(c.label, "constraint", Transformation::kColumnwise, Exactness::kExact);
      push_row(c.label, PendingForm{*cf, {}}, c.sense, c.rhs, Transformation::kColumnwise, e);
      return;
    }
    if (auto lr = try_log_rational(c.lhs, reasons)) {
      std::size_t e = add_entry(c.label, "constraint", Transformation::kLogRational,
                                Exactness::kExactArgmaxPreserving);
      push_log_row(c.label, *lr, c.sense, c.rhs, Transformation::kLogRational, e);
      return;
    }
    if (c.surrogate && options_.use_surrogates) {
      const auto& s = *c.surrogate;
      auto entry = [&](const std::string& note = "") {
        return add_entry(c.label, "constraint", Transformation::kSurrogateUpperBound,
                         Exactness::kConservative, s.kind, note);
      };
      if (auto lf = lower_linear(s.lhs, space_)) {
        push_row(c.label, PendingForm{*lf, {}}, Sense::kLessEqual, s.rhs,
                 Transformation::kSurrogateUpperBound, entry());
        return;
      }
      if (auto cf = try_columnwise(s.lhs, reasons)) {
        push_row(c.label, PendingForm{*cf, {}}, Sense::kLessEqual, s.rhs,
                 Transformation::kSurrogateUpperBound, entry());
        return;
      }
      if (auto lr = try_log_rational(s.lhs, reasons)) {
        push_log_row(c.label, *lr, Sense::kLessEqual, s.rhs,
                     Transformation::kSurrogateUpperBound, entry());
        return;
      }
      reasons.push_back(std::string("surrogate ") + to_string(s.kind) + " is not lowerable");
    }
    try {
      LiftedForm lf = lift_cross_terms(c.lhs, space_, options_.lifting_cap);
      std::size_t e = add_entry(c.label, "constraint", Transformation::kLifted, Exactness::kExact);
      push_row(c.label, PendingForm{std::move(lf.primary), std::move(lf.lifted)}, c.sense, c.rhs,
               Transformation::kLifted, e);
      return;
    } catch (const Error& e) {
      reasons.push_back(e.what());
    }
    throw LoweringError(describe_failure("constraint", c.label, c.lhs, reasons));
  }

  std::string describe_failure(const std::string& role, const std::string& label,
                               const Expr& e, const std::vector<std::string>& reasons) {
    std::string msg = role + " '" + label + "' (" + to_string(e, space_) + ") is not lowerable";
    for (const auto& r : reasons) msg += "; " + r;
    return msg;
  }

  std::optional<LinearForm> try_columnwise(const Expr& e, std::vector<std::string>& reasons) {
    try {
      return lower_columnwise(e, space_);
    } catch (const LoweringError& err) {
      reasons.push_back(err.what());
      return std::nullopt;
    }
  }

  std::optional<LogRationalForm> try_log_rational(const Expr& e,
                                                  std::vector<std::string>& reasons) {
    try {
      return lower_log_rational(e, space_);
    } catch (const LoweringError& err) {
      reasons.push_back(err.what());
      return std::nullopt;
    }
  }

  // max k + c R  <=>  max sign(c) log R
  PendingForm log_objective(const LogRationalForm& lr) {
    PendingForm f{lr.log_form, {}};
    double sign = lr.scale > 0.0 ? 1.0 : -1.0;
    for (double& v : f.primary.coefs) v *= sign;
    f.primary.offset = sign * std::log(std::abs(lr.scale));
    return f;
  }

  void push_objective(const std::string& label, PendingForm form) {
    pending_objectives_.emplace_back(label, std::move(form));
  }

  // k + c R (sense) rhs, R > 0 on every design.
  void push_log_row(const std::string& label, const LogRationalForm& lr, Sense sense,
                    double rhs, Transformation t, std::size_t entry) {
    double bound = (rhs - lr.additive) / lr.scale;  // R (sense') bound
    auto& note = result_.report.entries[entry].note;
    PendingForm f{lr.log_form, {}};
    if (sense == Sense::kEqual) {
      if (bound <= 0.0) {
        note = "never satisfiable (positive product pinned to a nonpositive value)";
        push_infeasible(label, t, entry);
        return;
      }
      push_row(label, f, Sense::kEqual, std::log(bound), t, entry);
      return;
    }
    if (lr.scale > 0.0) {
      // R <= bound
      if (bound <= 0.0) {
        note = "never satisfiable (positive product bounded by a nonpositive value)";
        push_infeasible(label, t, entry);
        return;
      }
      push_row(label, f, Sense::kLessEqual, std::log(bound), t, entry);
    } else {
      // R >= bound  <=>  -log R <= -log bound
      if (bound <= 0.0) {
        note = "always satisfied (positive product bounded below by a nonpositive value)";
        return;
      }
      for (double& v : f.primary.coefs) v = -v;
      push_row(label, f, Sense::kLessEqual, -std::log(bound), t, entry);
    }
  }

  void push_infeasible(const std::string& label, Transformation t, std::size_t entry) {
    PendingForm f{LinearForm{std::vector<double>(space_.total_dim(), 0.0), 0.0}, {}};
    pending_rows_.push_back(
        PendingRow{label, std::move(f), Sense::kLessEqual, -1.0, RowKind::kConstraint, label, t, entry});
  }

  void push_row(const std::string& label, PendingForm form, Sense sense, double rhs,
                Transformation t, std::size_t entry) {
    double r = rhs - form.primary.offset;
    form.primary.offset = 0.0;
    bool empty = std::all_of(form.primary.coefs.begin(), form.primary.coefs.end(),
                             [](double v) { return v == 0.0; });
    for (const auto& lt : form.lifted) {
      empty = empty && std::all_of(lt.cells.begin(), lt.cells.end(), [](double v) { return v == 0.0; });
    }
    if (empty) {
      bool ok = sense == Sense::kEqual ? std::abs(r) <= kTolerance : 0.0 <= r + kTolerance;
      auto& note = result_.report.entries[entry].note;
      if (ok) {
        note = "trivially satisfied";
        return;
      }
      note = "never satisfiable";
    }
    pending_rows_.push_back(
        PendingRow{label, std::move(form), sense, r, RowKind::kConstraint, label, t, entry});
  }

  void lower_rule(const CompatRule& r) {
    std::string note;
    if (r.polarity == Polarity::kCompatible && r.subset.empty()) {
      const auto& ma = space_.module(r.module_a);
      note = "empty compatible subset: unsatisfiable whenever '" + ma.module_id() + "' selects '" +
             ma.component_names()[r.component] + "'";
    }
    std::size_t e = add_entry(r.label, "compat", Transformation::kLinearPassthrough,
                              Exactness::kExact, std::nullopt, note);
    BlpRow row = lower_compat(r, space_);
    direct_rows_.emplace_back(std::move(row), e);
  }

  void lower_restriction_entry(const Restriction& r) {
    std::size_t e = add_entry(r.label, "restriction", Transformation::kLinearPassthrough,
                              Exactness::kExact);
    BlpRow row = lower_restriction(r, space_);
    const auto& m = space_.module(r.module);
    if (!m.optional() && row.terms.size() == m.num_components()) {
      result_.report.entries[e].note = "duplicates the one-hot row; dropped";
      return;
    }
    direct_rows_.emplace_back(std::move(row), e);
  }

  std::size_t lifted_block(const std::vector<std::size_t>& mods) {
    auto it = lifted_index_.find(mods);
    if (it != lifted_index_.end()) return it->second;
    std::size_t cells = 1;
    for (std::size_t m : mods) cells *= space_.module(m).num_components();
    result_.instance.lifted.push_back(LiftedBlock{mods, 0, cells});
    std::size_t id = result_.instance.lifted.size() - 1;
    lifted_index_.emplace(mods, id);
    return id;
  }

  // Dense coefficient vector over every variable.
  std::vector<double> dense(const PendingForm& f) {
    std::vector<double> out(result_.instance.variables.size(), 0.0);
    std::copy(f.primary.coefs.begin(), f.primary.coefs.end(), out.begin());
    for (const auto& lt : f.lifted) {
      const auto& lb = result_.instance.lifted[lifted_index_.at(lt.modules)];
      for (std::size_t c = 0; c < lt.cells.size(); ++c) out[lb.offset + c] += lt.cells[c];
    }
    return out;
  }

  static std::vector<LinearTerm> sparse(const std::vector<double>& d) {
    std::vector<LinearTerm> out;
    for (std::size_t v = 0; v < d.size(); ++v) {
      if (d[v] != 0.0) out.push_back({v, d[v]});
    }
    return out;
  }

  void materialize() {
    auto& inst = result_.instance;
    // Register lifted blocks in first-use order: objectives, then rows.
    for (const auto& [label, f] : pending_objectives_) {
      for (const auto& lt : f.lifted) lifted_block(lt.modules);
    }
    for (const auto& r : pending_rows_) {
      for (const auto& lt : r.form.lifted) lifted_block(lt.modules);
    }
    for (std::size_t b = 0; b < inst.blocks.size(); ++b) {
      for (std::size_t j = 0; j < inst.blocks[b].size(); ++j) {
        inst.variables.push_back(BlpVariable{
            "x_" + std::to_string(b) + "_" + std::to_string(j), false, b, j});
      }
    }
    for (std::size_t l = 0; l < inst.lifted.size(); ++l) {
      auto& lb = inst.lifted[l];
      lb.offset = inst.variables.size();
      for (std::size_t c = 0; c < lb.cells; ++c) {
        inst.variables.push_back(BlpVariable{
            "z_" + std::to_string(l) + "_" + std::to_string(c), true, l, c});
      }
    }

    for (std::size_t b = 0; b < inst.blocks.size(); ++b) {
      BlpRow row;
      row.name = "onehot_" + std::to_string(b);
      row.kind = RowKind::kOneHot;
      row.sense = inst.blocks[b].optional ? Sense::kLessEqual : Sense::kEqual;
      row.rhs = 1.0;
      row.source = inst.blocks[b].module_id;
      row.transformation = "one-hot";
      for (std::size_t j = 0; j < inst.blocks[b].size(); ++j) {
        row.terms.push_back({inst.blocks[b].offset + j, 1.0});
      }
      inst.rows.push_back(std::move(row));
    }

    auto& entries = result_.report.entries;
    std::size_t counter = 0;
    for (const auto& p : pending_rows_) {
      BlpRow row;
      row.name = "c" + std::to_string(counter++) + "_" + sanitize(p.label);
      row.terms = sparse(dense(p.form));
      row.sense = p.sense;
      row.rhs = p.rhs;
      row.kind = p.kind;
      row.source = p.source;
      row.transformation = to_string(p.transformation);
      entries[p.entry].rows.push_back(row.name);
      inst.rows.push_back(std::move(row));
    }
    for (auto& [row, e] : direct_rows_) {
      row.name = "c" + std::to_string(counter++) + "_" + sanitize(row.source);
      entries[e].rows.push_back(row.name);
      inst.rows.push_back(std::move(row));
    }

    for (std::size_t l = 0; l < inst.lifted.size(); ++l) {
      const auto& lb = inst.lifted[l];
      for (std::size_t pk = 0; pk < lb.parents.size(); ++pk) {
        const auto& parent = inst.blocks[lb.parents[pk]];
        std::size_t stride = 1;
        for (std::size_t q = pk + 1; q < lb.parents.size(); ++q) {
          stride *= inst.blocks[lb.parents[q]].size();
        }
        for (std::size_t j = 0; j < parent.size(); ++j) {
          BlpRow row;
          row.name = "link_" + std::to_string(l) + "_" + std::to_string(lb.parents[pk]) + "_" +
                     std::to_string(j);
          row.kind = RowKind::kLinking;
          row.sense = Sense::kEqual;
          row.rhs = 0.0;
          row.source = "lift" + module_set_name(lb.parents, space_);
          row.transformation = to_string(Transformation::kLifted);
          row.terms.push_back({parent.offset + j, -1.0});
          for (std::size_t c = 0; c < lb.cells; ++c) {
            if ((c / stride) % parent.size() == j) row.terms.push_back({lb.offset + c, 1.0});
          }
          inst.rows.push_back(std::move(row));
        }
      }
    }

    for (const auto& [label, f] : pending_objectives_) {
      inst.objectives.push_back(BlpObjective{label, dense(f), f.primary.offset});
    }
    inst.validate();
  }

  const DesignSpec& spec_;
  const DesignSpace& space_;
  LoweringOptions options_;
  LoweringResult result_;
  std::vector<std::pair<std::string, PendingForm>> pending_objectives_;
  std::vector<PendingRow> pending_rows_;
  std::vector<std::pair<BlpRow, std::size_t>> direct_rows_;
  std::map<std::vector<std::size_t>, std::size_t> lifted_index_;
};

}  // namespace

LoweringResult lower(const DesignSpec& spec, const LoweringOptions& options) {
  return Lowerer(spec, options).run();
}

}  // namespace codesign
