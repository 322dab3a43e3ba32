#include "codesign/blp_instance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "codesign/error.hpp"

namespace codesign {

const char* to_string(RowKind kind) {
  switch (kind) {
    case RowKind::kOneHot:
      return "one-hot";
    case RowKind::kLinking:
      return "linking";
    case RowKind::kConstraint:
      return "constraint";
    case RowKind::kCompat:
      return "compat";
    case RowKind::kRestriction:
      return "restriction";
  }
  return "?";
}

std::size_t lifted_cell(const BlpInstance& inst, const LiftedBlock& lb,
                        const std::vector<int>& choices) {
  std::size_t cell = 0;
  for (std::size_t p : lb.parents) {
    cell = cell * inst.blocks[p].size() + static_cast<std::size_t>(choices[p]);
  }
  return cell;
}

namespace {

bool has_terms(const BlpRow& row, const std::vector<std::pair<std::size_t, double>>& want) {
  if (row.terms.size() != want.size()) return false;
  for (std::size_t k = 0; k < want.size(); ++k) {
    if (row.terms[k].var != want[k].first || row.terms[k].coef != want[k].second) return false;
  }
  return true;
}

}  // namespace

void BlpInstance::validate() const {
  std::size_t n = variables.size();
  std::size_t expect_offset = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].offset != expect_offset || blocks[b].size() == 0) {
      throw SchemaError("block '" + blocks[b].module_id + "' has an invalid layout");
    }
    expect_offset += blocks[b].size();
  }
  for (const auto& lb : lifted) {
    std::size_t cells = 1;
    if (lb.parents.size() < 2) throw SchemaError("lifted block needs two or more parents");
    for (std::size_t k = 0; k < lb.parents.size(); ++k) {
      if (lb.parents[k] >= blocks.size() || (k > 0 && lb.parents[k] <= lb.parents[k - 1])) {
        throw SchemaError("lifted block has invalid parents");
      }
      if (blocks[lb.parents[k]].optional) {
        throw SchemaError("lifted block over optional module '" +
                          blocks[lb.parents[k]].module_id + "'");
      }
      cells *= blocks[lb.parents[k]].size();
    }
    if (lb.cells != cells || lb.offset != expect_offset) {
      throw SchemaError("lifted block has an invalid layout");
    }
    expect_offset += cells;
  }
  if (expect_offset != n) throw SchemaError("variable count does not match blocks");

  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.terms.size(); ++k) {
      if (row.terms[k].var >= n || (k > 0 && row.terms[k].var <= row.terms[k - 1].var)) {
        throw SchemaError("row '" + row.name + "' has unsorted or out-of-range terms");
      }
      if (!std::isfinite(row.terms[k].coef)) {
        throw SchemaError("row '" + row.name + "' has a non-finite coefficient");
      }
    }
    if (!std::isfinite(row.rhs)) throw SchemaError("row '" + row.name + "' has a non-finite rhs");
  }
  for (const auto& obj : objectives) {
    if (obj.coefs.size() != n) {
      throw SchemaError("objective '" + obj.label + "' has the wrong length");
    }
  }

  // One-hot rows.
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::vector<std::pair<std::size_t, double>> want;
    for (std::size_t j = 0; j < blocks[b].size(); ++j) want.emplace_back(blocks[b].offset + j, 1.0);
    Sense sense = blocks[b].optional ? Sense::kLessEqual : Sense::kEqual;
    bool found = std::any_of(rows.begin(), rows.end(), [&](const BlpRow& r) {
      return r.kind == RowKind::kOneHot && r.sense == sense && r.rhs == 1.0 && has_terms(r, want);
    });
    if (!found) throw SchemaError("block '" + blocks[b].module_id + "' has no one-hot row");
  }

  // Linking rows: for every parent p and component j, the cells with p = j
  // sum to x_{p,j}.
  for (std::size_t l = 0; l < lifted.size(); ++l) {
    const auto& lb = lifted[l];
    for (std::size_t pk = 0; pk < lb.parents.size(); ++pk) {
      const auto& parent = blocks[lb.parents[pk]];
      std::size_t stride = 1;
      for (std::size_t q = pk + 1; q < lb.parents.size(); ++q) stride *= blocks[lb.parents[q]].size();
      for (std::size_t j = 0; j < parent.size(); ++j) {
        std::vector<std::pair<std::size_t, double>> want;
        want.emplace_back(parent.offset + j, -1.0);
        for (std::size_t c = 0; c < lb.cells; ++c) {
          if ((c / stride) % parent.size() == j) want.emplace_back(lb.offset + c, 1.0);
        }
        std::sort(want.begin(), want.end());
        bool found = std::any_of(rows.begin(), rows.end(), [&](const BlpRow& r) {
          return r.kind == RowKind::kLinking && r.sense == Sense::kEqual && r.rhs == 0.0 &&
                 has_terms(r, want);
        });
        if (!found) {
          throw SchemaError("lifted block " + std::to_string(l) + " misses a linking row for '" +
                            parent.module_id + "'");
        }
      }
    }
  }
}

std::vector<std::uint8_t> BlpInstance::assignment(const std::vector<int>& choices) const {
  std::vector<std::uint8_t> values(variables.size(), 0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (choices[b] != DesignVector::kNone) {
      values[blocks[b].offset + static_cast<std::size_t>(choices[b])] = 1;
    }
  }
  for (const auto& lb : lifted) {
    bool all = std::all_of(lb.parents.begin(), lb.parents.end(),
                           [&](std::size_t p) { return choices[p] != DesignVector::kNone; });
    if (all) values[lb.offset + lifted_cell(*this, lb, choices)] = 1;
  }
  return values;
}

double BlpInstance::activity(const BlpRow& row, const std::vector<std::uint8_t>& values) const {
  double s = 0.0;
  for (const auto& t : row.terms) {
    if (values[t.var] != 0) s += t.coef;
  }
  return s;
}

bool BlpInstance::satisfied(const BlpRow& row, const std::vector<std::uint8_t>& values,
                            double tol) const {
  double a = activity(row, values);
  if (row.sense == Sense::kEqual) return std::abs(a - row.rhs) <= tol;
  return a <= row.rhs + tol;
}

double BlpInstance::objective_value(std::size_t level,
                                    const std::vector<std::uint8_t>& values) const {
  const auto& obj = objectives[level];
  double s = 0.0;
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (values[v] != 0) s += obj.coefs[v];
  }
  return s + obj.offset;
}

}  // namespace codesign
