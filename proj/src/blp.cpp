#include "codesign/blp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>

#include "codesign/error.hpp"

namespace codesign {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kLimitReached:
      return "limit-reached";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(time_limit > 0.0)) throw SchemaError("time limit must be positive");
  if (node_limit == 0) throw SchemaError("node limit must be positive");
  if (!(absolute_gap_tolerance >= 0.0)) throw SchemaError("gap tolerance must be >= 0");
}

Domains Domains::full(const BlpInstance& instance) {
  Domains d;
  for (const auto& b : instance.blocks) {
    d.alive.emplace_back(b.size(), 1);
    d.none_alive.push_back(b.optional ? 1 : 0);
  }
  return d;
}

std::size_t Domains::count(std::size_t block) const {
  return static_cast<std::size_t>(std::count(alive[block].begin(), alive[block].end(), 1)) +
         (none_alive[block] != 0 ? 1 : 0);
}

bool Domains::fixed(std::size_t block) const { return count(block) == 1; }

std::vector<double> row_slack(const BlpInstance& instance,
                              const std::vector<std::uint8_t>& values) {
  std::vector<double> out;
  out.reserve(instance.rows.size());
  for (const auto& row : instance.rows) {
    double a = instance.activity(row, values);
    out.push_back(row.sense == Sense::kEqual ? -std::abs(a - row.rhs) : row.rhs - a);
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPropTol = 1e-9;

// One block's (or lifted block's) share of a <= row.
struct Part {
  bool lifted = false;
  std::size_t index = 0;
  std::vector<double> vals;  // per component, or per cell
};

struct LeRow {
  std::vector<Part> parts;
  double rhs = 0.0;
};

bool is_structural(const BlpInstance& inst, const BlpRow& row) {
  if (row.terms.empty()) return false;
  const auto& first = inst.variables[row.terms.front().var];
  if (row.kind == RowKind::kOneHot) {
    if (first.lifted) return false;
    const auto& b = inst.blocks[first.block];
    if (row.rhs != 1.0 || row.sense != (b.optional ? Sense::kLessEqual : Sense::kEqual) ||
        row.terms.size() != b.size()) {
      return false;
    }
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (row.terms[j].var != b.offset + j || row.terms[j].coef != 1.0) return false;
    }
    return true;
  }
  if (row.kind == RowKind::kLinking) {
    if (first.lifted || row.sense != Sense::kEqual || row.rhs != 0.0) return false;
    if (row.terms.front().coef != -1.0 || row.terms.size() < 2) return false;
    const auto& v1 = inst.variables[row.terms[1].var];
    if (!v1.lifted) return false;
    const auto& lb = inst.lifted[v1.block];
    auto pk = std::find(lb.parents.begin(), lb.parents.end(), first.block);
    if (pk == lb.parents.end()) return false;
    std::size_t stride = 1;
    for (auto q = pk + 1; q != lb.parents.end(); ++q) stride *= inst.blocks[*q].size();
    std::size_t n = inst.blocks[first.block].size();
    std::size_t k = 1;
    for (std::size_t c = 0; c < lb.cells; ++c) {
      if ((c / stride) % n != first.index) continue;
      if (k >= row.terms.size() || row.terms[k].var != lb.offset + c || row.terms[k].coef != 1.0) {
        return false;
      }
      ++k;
    }
    return k == row.terms.size();
  }
  return false;
}

// Instance data rearranged per block for propagation and bounding.
class Model {
 public:
  explicit Model(const BlpInstance& inst) : inst_(inst) {
    for (const auto& lb : inst.lifted) {
      std::vector<std::size_t> st(lb.parents.size(), 1);
      for (std::size_t k = lb.parents.size(); k-- > 1;) {
        st[k - 1] = st[k] * inst.blocks[lb.parents[k]].size();
      }
      strides_.push_back(std::move(st));
    }
    for (const auto& row : inst.rows) {
      if (is_structural(inst, row)) continue;
      base_.push_back(make_row(row.terms, 1.0, row.rhs));
      if (row.sense == Sense::kEqual) base_.push_back(make_row(row.terms, -1.0, -row.rhs));
    }
    set_rows(base_);
  }

  const BlpInstance& inst() const { return inst_; }
  const std::vector<LeRow>& base_rows() const { return base_; }
  const std::vector<LeRow>& rows() const { return rows_; }

  void set_rows(std::vector<LeRow> rows) {
    rows_ = std::move(rows);
    block_rows_.assign(inst_.blocks.size(), {});
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (const auto& p : rows_[r].parts) {
        if (p.lifted) {
          for (std::size_t b : inst_.lifted[p.index].parents) block_rows_[b].push_back(r);
        } else {
          block_rows_[p.index].push_back(r);
        }
      }
    }
    for (auto& v : block_rows_) v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  LeRow make_row(const std::vector<LinearTerm>& terms, double sign, double rhs) const {
    LeRow out;
    out.rhs = rhs;
    for (const auto& t : terms) {
      const auto& var = inst_.variables[t.var];
      auto it = std::find_if(out.parts.begin(), out.parts.end(), [&](const Part& p) {
        return p.lifted == var.lifted && p.index == var.block;
      });
      if (it == out.parts.end()) {
        std::size_t n = var.lifted ? inst_.lifted[var.block].cells : inst_.blocks[var.block].size();
        out.parts.push_back(Part{var.lifted, var.block, std::vector<double>(n, 0.0)});
        it = out.parts.end() - 1;
      }
      it->vals[var.index] += sign * t.coef;
    }
    return out;
  }

  // c x + offset >= opt - tol  as  -c x <= offset - opt + tol
  LeRow pin_row(const std::vector<double>& coefs, double offset, double opt, double tol) const {
    std::vector<LinearTerm> terms;
    for (std::size_t v = 0; v < coefs.size(); ++v) {
      if (coefs[v] != 0.0) terms.push_back({v, coefs[v]});
    }
    return make_row(terms, -1.0, offset - opt + tol);
  }

  std::size_t component(std::size_t l, std::size_t k, std::size_t cell) const {
    return (cell / strides_[l][k]) % inst_.blocks[inst_.lifted[l].parents[k]].size();
  }

  bool consistent(std::size_t l, std::size_t cell, const Domains& d) const {
    const auto& lb = inst_.lifted[l];
    for (std::size_t k = 0; k < lb.parents.size(); ++k) {
      if (d.alive[lb.parents[k]][component(l, k, cell)] == 0) return false;
    }
    return true;
  }

  double part_min(const Part& p, const Domains& d) const {
    double m = kInf;
    if (p.lifted) {
      for (std::size_t c = 0; c < p.vals.size(); ++c) {
        if (p.vals[c] < m && consistent(p.index, c, d)) m = p.vals[c];
      }
    } else {
      if (d.none_alive[p.index] != 0) m = 0.0;
      const auto& al = d.alive[p.index];
      for (std::size_t j = 0; j < p.vals.size(); ++j) {
        if (al[j] != 0 && p.vals[j] < m) m = p.vals[j];
      }
    }
    return m;
  }

  // Removes options whose contribution exceeds `slack`. Appends changed
  // blocks; returns false when a block runs empty.
  bool prune(const Part& p, double slack, Domains& d, std::vector<std::size_t>& changed) const {
    if (!p.lifted) {
      bool touched = false;
      auto& al = d.alive[p.index];
      for (std::size_t j = 0; j < p.vals.size(); ++j) {
        if (al[j] != 0 && p.vals[j] > slack) {
          al[j] = 0;
          touched = true;
        }
      }
      if (d.none_alive[p.index] != 0 && 0.0 > slack) {
        d.none_alive[p.index] = 0;
        touched = true;
      }
      if (touched) {
        changed.push_back(p.index);
        if (d.count(p.index) == 0) return false;
      }
      return true;
    }
    const auto& lb = inst_.lifted[p.index];
    std::vector<std::vector<double>> best(lb.parents.size());
    for (std::size_t k = 0; k < lb.parents.size(); ++k) {
      best[k].assign(inst_.blocks[lb.parents[k]].size(), kInf);
    }
    for (std::size_t c = 0; c < p.vals.size(); ++c) {
      if (!consistent(p.index, c, d)) continue;
      for (std::size_t k = 0; k < lb.parents.size(); ++k) {
        double& b = best[k][component(p.index, k, c)];
        b = std::min(b, p.vals[c]);
      }
    }
    for (std::size_t k = 0; k < lb.parents.size(); ++k) {
      std::size_t blk = lb.parents[k];
      bool touched = false;
      for (std::size_t j = 0; j < best[k].size(); ++j) {
        if (d.alive[blk][j] != 0 && best[k][j] > slack) {
          d.alive[blk][j] = 0;
          touched = true;
        }
      }
      if (touched) {
        changed.push_back(blk);
        if (d.count(blk) == 0) return false;
      }
    }
    return true;
  }

  bool propagate(Domains& d) const {
    for (std::size_t b = 0; b < d.alive.size(); ++b) {
      if (d.count(b) == 0) return false;
    }
    std::deque<std::size_t> queue(rows_.size());
    std::iota(queue.begin(), queue.end(), 0);
    std::vector<char> queued(rows_.size(), 1);
    std::vector<double> mins;
    std::vector<std::size_t> changed;
    while (!queue.empty()) {
      std::size_t r = queue.front();
      queue.pop_front();
      queued[r] = 0;
      const auto& row = rows_[r];
      mins.resize(row.parts.size());
      double total = 0.0;
      for (std::size_t k = 0; k < row.parts.size(); ++k) {
        mins[k] = part_min(row.parts[k], d);
        total += mins[k];
      }
      if (!(total <= row.rhs + kPropTol)) return false;
      changed.clear();
      for (std::size_t k = 0; k < row.parts.size(); ++k) {
        double slack = row.rhs + kPropTol - (total - mins[k]);
        if (!prune(row.parts[k], slack, d, changed)) return false;
        double m = part_min(row.parts[k], d);
        total += m - mins[k];
        mins[k] = m;
      }
      for (std::size_t b : changed) {
        for (std::size_t q : block_rows_[b]) {
          if (queued[q] == 0) {
            queued[q] = 1;
            queue.push_back(q);
          }
        }
      }
    }
    return true;
  }

  bool all_fixed(const Domains& d) const {
    for (std::size_t b = 0; b < d.alive.size(); ++b) {
      if (!d.fixed(b)) return false;
    }
    return true;
  }

  static std::vector<int> choices(const Domains& d) {
    std::vector<int> out(d.alive.size(), DesignVector::kNone);
    for (std::size_t b = 0; b < d.alive.size(); ++b) {
      for (std::size_t j = 0; j < d.alive[b].size(); ++j) {
        if (d.alive[b][j] != 0) {
          out[b] = static_cast<int>(j);
          break;
        }
      }
    }
    return out;
  }

 private:
  const BlpInstance& inst_;
  std::vector<std::vector<std::size_t>> strides_;
  std::vector<LeRow> base_;
  std::vector<LeRow> rows_;
  std::vector<std::vector<std::size_t>> block_rows_;
};

// Objective coefficients after subtracting lambda-weighted rows:
// bound = constant + sum over blocks of the best surviving coefficient.
struct Dual {
  std::vector<double> red;
  double constant = 0.0;
};

struct BoundDetail {
  double value = 0.0;
  std::vector<int> block_arg;         // argmax per block (kNone for the empty option)
  std::vector<std::size_t> lift_arg;  // argmax cell per lifted block
  std::vector<double> block_max;
};

BoundDetail bound_detail(const Model& m, const Dual& dual, const Domains& d) {
  const auto& inst = m.inst();
  BoundDetail out;
  out.value = dual.constant;
  out.block_arg.assign(inst.blocks.size(), DesignVector::kNone);
  out.block_max.assign(inst.blocks.size(), -kInf);
  for (std::size_t b = 0; b < inst.blocks.size(); ++b) {
    double best = d.none_alive[b] != 0 ? 0.0 : -kInf;
    int arg = DesignVector::kNone;
    const auto& blk = inst.blocks[b];
    for (std::size_t j = 0; j < blk.size(); ++j) {
      if (d.alive[b][j] != 0 && dual.red[blk.offset + j] > best) {
        best = dual.red[blk.offset + j];
        arg = static_cast<int>(j);
      }
    }
    out.block_arg[b] = arg;
    out.block_max[b] = best;
    out.value += best;
  }
  out.lift_arg.assign(inst.lifted.size(), 0);
  for (std::size_t l = 0; l < inst.lifted.size(); ++l) {
    const auto& lb = inst.lifted[l];
    double best = -kInf;
    for (std::size_t c = 0; c < lb.cells; ++c) {
      if (dual.red[lb.offset + c] > best && m.consistent(l, c, d)) {
        best = dual.red[lb.offset + c];
        out.lift_arg[l] = c;
      }
    }
    out.value += best;
  }
  return out;
}

Dual plain_dual(const std::vector<double>& coefs, double offset) { return Dual{coefs, offset}; }

// Subgradient ascent on the Lagrangian dual of every <= row.
Dual lagrangian(const Model& m, const std::vector<double>& coefs, double offset,
                const Domains& root, std::optional<double> target, int iterations) {
  const auto& rows = m.rows();
  Dual best = plain_dual(coefs, offset);
  double best_value = bound_detail(m, best, root).value;
  if (rows.empty()) return best;
  std::vector<double> lambda(rows.size(), 0.0);
  std::vector<double> g(rows.size(), 0.0);
  double theta = 1.0;
  int stall = 0;
  Dual cur;
  for (int it = 0; it < iterations; ++it) {
    cur.red = coefs;
    cur.constant = offset;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (lambda[r] == 0.0) continue;
      cur.constant += lambda[r] * rows[r].rhs;
      for (const auto& p : rows[r].parts) {
        std::size_t base = p.lifted ? m.inst().lifted[p.index].offset : m.inst().blocks[p.index].offset;
        for (std::size_t j = 0; j < p.vals.size(); ++j) cur.red[base + j] -= lambda[r] * p.vals[j];
      }
    }
    BoundDetail det = bound_detail(m, cur, root);
    if (det.value < best_value - 1e-12 * (1.0 + std::abs(best_value))) {
      best_value = det.value;
      best = cur;
      stall = 0;
    } else if (++stall >= 5) {
      theta *= 0.5;
      stall = 0;
      if (theta < 1e-4) break;
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double a = -rows[r].rhs;
      for (const auto& p : rows[r].parts) {
        if (p.lifted) {
          a += p.vals[det.lift_arg[p.index]];
        } else if (det.block_arg[p.index] != DesignVector::kNone) {
          a += p.vals[static_cast<std::size_t>(det.block_arg[p.index])];
        }
      }
      g[r] = a;
      if (lambda[r] > 0.0 || a > 0.0) norm += a * a;
    }
    if (norm < 1e-18) break;
    double goal = target ? *target : best_value - 0.05 * (1.0 + std::abs(best_value));
    double gap = det.value - goal;
    if (gap <= 0.0) break;
    double step = theta * gap / norm;
    for (std::size_t r = 0; r < rows.size(); ++r) lambda[r] = std::max(0.0, lambda[r] + step * g[r]);
  }
  return best;
}

class Search {
 public:
  Search(const BlpInstance& inst, const SolverConfig& config)
      : inst_(inst), config_(config), model_(inst), start_(Clock::now()) {
    if (inst.objectives.empty()) {
      objectives_.push_back(BlpObjective{"feasibility", std::vector<double>(inst.num_variables(), 0.0), 0.0});
    } else {
      objectives_ = inst.objectives;
    }
  }

  BlpSolution run() {
    std::size_t levels = objectives_.size();
    duals_.resize(levels);
    opt_.assign(levels, 0.0);
    Domains root = Domains::full(inst_);
    bool limited = false;
    for (level_ = 0; level_ < levels; ++level_) {
      std::vector<LeRow> rows = model_.base_rows();
      for (std::size_t m = 0; m < level_; ++m) {
        rows.push_back(model_.pin_row(objectives_[m].coefs, objectives_[m].offset, opt_[m],
                                      kTolerance));
      }
      model_.set_rows(std::move(rows));
      Domains d = root;
      if (!model_.propagate(d)) break;  // only possible at level 0
      std::optional<double> target;
      if (has_inc_) target = value(level_, inc_values_);
      refresh_pending_ = !has_inc_;
      root_domains_ = d;
      duals_[level_] = {plain_dual(objectives_[level_].coefs, objectives_[level_].offset),
                        lagrangian(model_, objectives_[level_].coefs, objectives_[level_].offset, d,
                                   target, iterations())};
      dfs(std::move(d));
      if (stop_) {
        limited = true;
        break;
      }
      if (!has_inc_) break;
      opt_[level_] = value(level_, inc_values_);
    }

    if (!limited && has_inc_ && config_.deterministic) {
      std::vector<LeRow> rows = model_.base_rows();
      for (std::size_t m = 0; m < levels; ++m) {
        rows.push_back(model_.pin_row(objectives_[m].coefs, objectives_[m].offset, opt_[m],
                                      kTolerance));
      }
      model_.set_rows(std::move(rows));
      Domains d = root;
      if (model_.propagate(d)) tie_dfs(std::move(d));
      if (stop_) limited = true;
    }

    BlpSolution sol;
    sol.node_count = nodes_;
    sol.has_incumbent = has_inc_;
    if (limited) {
      sol.status = SolveStatus::kLimitReached;
    } else {
      sol.status = has_inc_ ? SolveStatus::kOptimal : SolveStatus::kInfeasible;
    }
    if (has_inc_) {
      sol.choices = inc_choices_;
      sol.values = inc_values_;
      for (std::size_t k = 0; k < inst_.objectives.size(); ++k) {
        sol.objective_values.push_back(inst_.objective_value(k, inc_values_));
      }
      sol.row_slack = row_slack(inst_, inc_values_);
    }
    sol.wall_time = elapsed();
    return sol;
  }

 private:
  int iterations() const { return 150; }

  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

  double value(std::size_t level, const std::vector<std::uint8_t>& values) const {
    const auto& obj = objectives_[level];
    double s = 0.0;
    for (std::size_t v = 0; v < values.size(); ++v) {
      if (values[v] != 0) s += obj.coefs[v];
    }
    return s + obj.offset;
  }

  bool tick() {
    if (stop_) return false;
    ++nodes_;
    if (nodes_ > config_.node_limit || ((nodes_ & 63) == 0 && elapsed() > config_.time_limit)) {
      stop_ = true;
      return false;
    }
    return true;
  }

  // Canonical leaf check against the instance rows and the active pins.
  bool leaf_ok(const std::vector<std::uint8_t>& values, std::size_t pinned) const {
    for (const auto& row : inst_.rows) {
      if (!inst_.satisfied(row, values)) return false;
    }
    for (std::size_t m = 0; m < pinned; ++m) {
      if (value(m, values) < opt_[m] - kTolerance) return false;
    }
    return true;
  }

  // Drops options that cannot reach `threshold` under a dual bound. Returns
  // false on an empty block or when the bound itself is below threshold.
  bool filter(const Dual& dual, Domains& d, double threshold, bool strict, bool& changed) {
    BoundDetail det = bound_detail(model_, dual, d);
    auto below = [&](double v) { return strict ? v < threshold : v <= threshold; };
    if (below(det.value)) return false;
    for (std::size_t b = 0; b < inst_.blocks.size(); ++b) {
      const auto& blk = inst_.blocks[b];
      double rest = det.value - det.block_max[b];
      for (std::size_t j = 0; j < blk.size(); ++j) {
        if (d.alive[b][j] != 0 && below(rest + dual.red[blk.offset + j])) {
          d.alive[b][j] = 0;
          changed = true;
        }
      }
      if (d.none_alive[b] != 0 && below(rest)) {
        d.none_alive[b] = 0;
        changed = true;
      }
      if (d.count(b) == 0) return false;
    }
    return true;
  }

  double improve_threshold() const {
    double v = value(level_, inc_values_);
    return v + 1e-12 * (1.0 + std::abs(v));
  }

  void accept(const std::vector<int>& choices, std::vector<std::uint8_t> values) {
    inc_choices_ = choices;
    inc_values_ = std::move(values);
    has_inc_ = true;
    if (refresh_pending_) {
      refresh_pending_ = false;
      duals_[level_][1] = lagrangian(model_, objectives_[level_].coefs, objectives_[level_].offset,
                                     root_domains_, value(level_, inc_values_), iterations());
    }
  }

  void dfs(Domains d) {
    if (!tick()) return;
    if (!model_.propagate(d)) return;
    for (int round = 0; round < 4 && has_inc_; ++round) {
      bool changed = false;
      double thr = improve_threshold();
      for (const auto& dual : duals_[level_]) {
        if (!filter(dual, d, thr, false, changed)) return;
      }
      if (!changed) break;
      if (!model_.propagate(d)) return;
    }
    if (model_.all_fixed(d)) {
      auto choices = Model::choices(d);
      auto values = inst_.assignment(choices);
      if (!leaf_ok(values, level_)) return;
      if (!has_inc_ || value(level_, values) > value(level_, inc_values_)) accept(choices, std::move(values));
      return;
    }
    std::size_t block = pick_block(d);
    for (int option : order_options(d, block)) {
      Domains child = d;
      fix(child, block, option);
      dfs(std::move(child));
      if (stop_) return;
    }
  }

  void tie_dfs(Domains d) {
    if (found_ || !tick()) return;
    if (!model_.propagate(d)) return;
    for (int round = 0; round < 4; ++round) {
      bool changed = false;
      for (std::size_t m = 0; m < objectives_.size(); ++m) {
        double thr = opt_[m] - kTolerance;
        thr -= 1e-11 * (1.0 + std::abs(thr));
        for (const auto& dual : duals_[m]) {
          if (!filter(dual, d, thr, true, changed)) return;
        }
      }
      if (!changed) break;
      if (!model_.propagate(d)) return;
    }
    if (model_.all_fixed(d)) {
      auto choices = Model::choices(d);
      auto values = inst_.assignment(choices);
      if (!leaf_ok(values, objectives_.size())) return;
      inc_choices_ = choices;
      inc_values_ = std::move(values);
      found_ = true;
      return;
    }
    std::size_t block = 0;
    while (d.fixed(block)) ++block;
    std::vector<int> options;
    if (d.none_alive[block] != 0) options.push_back(DesignVector::kNone);
    for (std::size_t j = 0; j < d.alive[block].size(); ++j) {
      if (d.alive[block][j] != 0) options.push_back(static_cast<int>(j));
    }
    for (int option : options) {
      Domains child = d;
      fix(child, block, option);
      tie_dfs(std::move(child));
      if (found_ || stop_) return;
    }
  }

  std::size_t pick_block(const Domains& d) const {
    std::size_t best = inst_.blocks.size();
    std::size_t best_count = 0;
    for (std::size_t b = 0; b < inst_.blocks.size(); ++b) {
      std::size_t c = d.count(b);
      if (c <= 1) continue;
      if (config_.branching == Branching::kIndexOrder) return b;
      if (best == inst_.blocks.size() || c < best_count) {
        best = b;
        best_count = c;
      }
    }
    return best;
  }

  std::vector<int> order_options(const Domains& d, std::size_t block) const {
    const auto& red = duals_[level_].back().red;
    const auto& blk = inst_.blocks[block];
    std::vector<std::pair<double, int>> opts;
    if (d.none_alive[block] != 0) opts.emplace_back(0.0, DesignVector::kNone);
    for (std::size_t j = 0; j < blk.size(); ++j) {
      if (d.alive[block][j] != 0) opts.emplace_back(red[blk.offset + j], static_cast<int>(j));
    }
    std::stable_sort(opts.begin(), opts.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<int> out;
    for (const auto& o : opts) out.push_back(o.second);
    return out;
  }

  static void fix(Domains& d, std::size_t block, int option) {
    std::fill(d.alive[block].begin(), d.alive[block].end(), 0);
    d.none_alive[block] = 0;
    if (option == DesignVector::kNone) {
      d.none_alive[block] = 1;
    } else {
      d.alive[block][static_cast<std::size_t>(option)] = 1;
    }
  }

  const BlpInstance& inst_;
  SolverConfig config_;
  Model model_;
  Clock::time_point start_;
  std::vector<BlpObjective> objectives_;
  std::vector<std::vector<Dual>> duals_;  // per level: {plain, lagrangian}
  std::vector<double> opt_;
  std::size_t level_ = 0;
  Domains root_domains_;
  bool refresh_pending_ = false;
  bool has_inc_ = false;
  bool found_ = false;
  bool stop_ = false;
  std::uint64_t nodes_ = 0;
  std::vector<int> inc_choices_;
  std::vector<std::uint8_t> inc_values_;
};

}  // namespace

BlpSolution solve(const BlpInstance& instance, const SolverConfig& config) {
  config.validate();
  instance.validate();
  return Search(instance, config).run();
}

double separable_bound(const BlpInstance& instance, std::size_t level, const Domains& domains) {
  if (level >= instance.objectives.size()) throw LookupError("no objective level " + std::to_string(level));
  Model m(instance);
  const auto& obj = instance.objectives[level];
  return bound_detail(m, plain_dual(obj.coefs, obj.offset), domains).value;
}

double root_bound(const BlpInstance& instance, std::size_t level, const std::vector<int>& partial) {
  Domains d = Domains::full(instance);
  for (std::size_t b = 0; b < partial.size() && b < d.alive.size(); ++b) {
    if (partial[b] == kUnfixed) continue;
    std::fill(d.alive[b].begin(), d.alive[b].end(), 0);
    d.none_alive[b] = partial[b] == DesignVector::kNone ? 1 : 0;
    if (partial[b] != DesignVector::kNone) d.alive[b].at(static_cast<std::size_t>(partial[b])) = 1;
  }
  return separable_bound(instance, level, d);
}

std::optional<Domains> propagate(const BlpInstance& instance, Domains domains) {
  Model m(instance);
  if (!m.propagate(domains)) return std::nullopt;
  return domains;
}

BlpSolution exhaustive_optimum(const BlpInstance& instance, std::uint64_t cap) {
  auto start = Clock::now();
  std::uint64_t total = 1;
  for (const auto& b : instance.blocks) {
    std::uint64_t n = b.size() + (b.optional ? 1 : 0);
    if (total > cap / n) throw CapacityError("lowered problem has more than " + std::to_string(cap) + " assignments");
    total *= n;
  }
  std::vector<int> choices;
  for (const auto& b : instance.blocks) choices.push_back(b.optional ? DesignVector::kNone : 0);
  std::vector<std::vector<int>> feasible;
  std::vector<std::vector<double>> values;
  BlpSolution sol;
  for (std::uint64_t it = 0; it < total; ++it) {
    ++sol.node_count;
    auto x = instance.assignment(choices);
    bool ok = std::all_of(instance.rows.begin(), instance.rows.end(),
                          [&](const BlpRow& r) { return instance.satisfied(r, x); });
    if (ok) {
      std::vector<double> v;
      for (std::size_t k = 0; k < instance.objectives.size(); ++k) v.push_back(instance.objective_value(k, x));
      feasible.push_back(choices);
      values.push_back(std::move(v));
    }
    for (std::size_t b = instance.blocks.size(); b-- > 0;) {
      int last = static_cast<int>(instance.blocks[b].size()) - 1;
      if (choices[b] < last) {
        ++choices[b];
        break;
      }
      choices[b] = instance.blocks[b].optional ? DesignVector::kNone : 0;
    }
  }
  if (auto best = lexicographic_argmax(values)) {
    sol.status = SolveStatus::kOptimal;
    sol.has_incumbent = true;
    sol.choices = feasible[*best];
    sol.values = instance.assignment(sol.choices);
    sol.objective_values = values[*best];
    sol.row_slack = row_slack(instance, sol.values);
  } else {
    sol.status = SolveStatus::kInfeasible;
  }
  sol.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return sol;
}

}  // namespace codesign
