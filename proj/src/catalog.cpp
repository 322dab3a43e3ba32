#include "codesign/catalog.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>

#include "codesign/error.hpp"

namespace codesign {

FeatureMatrix::FeatureMatrix(std::string module_id, std::vector<Feature> features,
                             std::vector<std::string> component_names,
                             const std::vector<std::vector<double>>& columns,
                             bool optional)
    : module_id_(std::move(module_id)),
      features_(std::move(features)),
      component_names_(std::move(component_names)),
      optional_(optional) {
  auto where = [this] { return "module '" + module_id_ + "': "; };
  if (module_id_.empty()) throw SchemaError("module id must not be empty");
  if (component_names_.empty()) throw SchemaError(where() + "empty catalog");
  if (columns.size() != component_names_.size()) {
    throw SchemaError(where() + "got " + std::to_string(columns.size()) +
                      " columns for " + std::to_string(component_names_.size()) +
                      " components");
  }
  std::set<std::string, std::less<>> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) throw SchemaError(where() + "empty feature name");
    if (!seen.insert(f.name).second) {
      throw SchemaError(where() + "duplicate feature '" + f.name + "'");
    }
  }
  seen.clear();
  for (const auto& c : component_names_) {
    if (c.empty()) throw SchemaError(where() + "empty component name");
    if (!seen.insert(c).second) {
      throw SchemaError(where() + "duplicate component '" + c + "'");
    }
  }
  values_.reserve(columns.size() * features_.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != features_.size()) {
      throw SchemaError(where() + "component '" + component_names_[j] + "' has " +
                        std::to_string(columns[j].size()) + " values, expected " +
                        std::to_string(features_.size()));
    }
    for (std::size_t f = 0; f < features_.size(); ++f) {
      if (!std::isfinite(columns[j][f])) {
        throw SchemaError(where() + "component '" + component_names_[j] +
                          "', feature '" + features_[f].name + "': non-finite value");
      }
      values_.push_back(columns[j][f]);
    }
  }
}

std::optional<std::size_t> FeatureMatrix::feature_index(std::string_view name) const {
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (features_[f].name == name) return f;
  }
  return std::nullopt;
}

std::optional<std::size_t> FeatureMatrix::component_index(std::string_view name) const {
  for (std::size_t j = 0; j < component_names_.size(); ++j) {
    if (component_names_[j] == name) return j;
  }
  return std::nullopt;
}

std::size_t FeatureMatrix::require_feature(std::string_view name) const {
  if (auto f = feature_index(name)) return *f;
  throw LookupError("module '" + module_id_ + "' has no feature '" +
                    std::string(name) + "'");
}

std::size_t FeatureMatrix::require_component(std::string_view name) const {
  if (auto j = component_index(name)) return *j;
  throw LookupError("module '" + module_id_ + "' has no component '" +
                    std::string(name) + "'");
}

std::vector<double> FeatureMatrix::row(std::size_t feature) const {
  std::vector<double> out(num_components());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = value(j, feature);
  return out;
}

DesignSpace::DesignSpace(std::vector<FeatureMatrix> modules) : modules_(std::move(modules)) {
  offsets_.reserve(modules_.size());
  for (std::size_t i = 0; i < modules_.size(); ++i) {
    if (!index_.emplace(modules_[i].module_id(), i).second) {
      throw SchemaError("duplicate module '" + modules_[i].module_id() + "'");
    }
    offsets_.push_back(total_dim_);
    total_dim_ += modules_[i].num_components();
  }
}

std::optional<std::size_t> DesignSpace::module_index(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t DesignSpace::require_module(std::string_view id) const {
  if (auto i = module_index(id)) return *i;
  throw LookupError("unknown module '" + std::string(id) + "'");
}

std::uint64_t DesignSpace::design_count() const {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t count = 1;
  for (const auto& m : modules_) {
    std::uint64_t n = m.num_components() + (m.optional() ? 1 : 0);
    if (count > kMax / n) return kMax;
    count *= n;
  }
  return count;
}

std::vector<double> feature_row(const DesignSpace& space, std::string_view module,
                                std::string_view feature) {
  const auto& m = space.module(space.require_module(module));
  return m.row(m.require_feature(feature));
}

std::vector<std::uint8_t> DesignVector::block(const DesignSpace& space,
                                              std::size_t module) const {
  std::vector<std::uint8_t> out(space.module(module).num_components(), 0);
  if (choices_[module] != kNone) out[static_cast<std::size_t>(choices_[module])] = 1;
  return out;
}

std::vector<std::uint8_t> DesignVector::stacked(const DesignSpace& space) const {
  std::vector<std::uint8_t> out(space.total_dim(), 0);
  for (std::size_t i = 0; i < choices_.size(); ++i) {
    if (choices_[i] != kNone) {
      out[space.offset(i) + static_cast<std::size_t>(choices_[i])] = 1;
    }
  }
  return out;
}

void validate_design(const DesignSpace& space, const DesignVector& x) {
  if (x.size() != space.num_modules()) {
    throw DomainError("design has " + std::to_string(x.size()) + " blocks, space has " +
                      std::to_string(space.num_modules()) + " modules");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& m = space.module(i);
    int c = x.choice(i);
    if (c == DesignVector::kNone) {
      if (!m.optional()) {
        throw DomainError("required module '" + m.module_id() + "' is unselected");
      }
    } else if (c < 0 || static_cast<std::size_t>(c) >= m.num_components()) {
      throw DomainError("module '" + m.module_id() + "': component index " +
                        std::to_string(c) + " out of range");
    }
  }
}

DesignVector design_from_blocks(const DesignSpace& space,
                                const std::vector<std::vector<std::uint8_t>>& blocks) {
  if (blocks.size() != space.num_modules()) {
    throw DomainError("wrong number of blocks");
  }
  std::vector<int> choices(blocks.size(), DesignVector::kNone);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& m = space.module(i);
    if (blocks[i].size() != m.num_components()) {
      throw DomainError("module '" + m.module_id() + "': block has wrong length");
    }
    int ones = 0;
    for (std::size_t j = 0; j < blocks[i].size(); ++j) {
      if (blocks[i][j] > 1) throw DomainError("module '" + m.module_id() + "': non-binary entry");
      if (blocks[i][j] == 1) {
        ++ones;
        choices[i] = static_cast<int>(j);
      }
    }
    if (ones > 1 || (ones == 0 && !m.optional())) {
      throw DomainError("module '" + m.module_id() + "': block is not one-hot");
    }
  }
  return DesignVector(std::move(choices));
}

std::uint64_t enumeration_cap_from_env() {
  const char* raw = std::getenv("CODESIGN_ENUM_CAP");
  if (raw == nullptr || *raw == '\0') return kDefaultEnumerationCap;
  char* end = nullptr;
  unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0' || v == 0) return kDefaultEnumerationCap;
  return v;
}

DesignRange::iterator& DesignRange::iterator::operator++() {
  // Odometer increment, last module fastest.
  for (std::size_t i = current_.size(); i-- > 0;) {
    const auto& m = space_->module(i);
    int c = current_.choice(i) + 1;
    if (static_cast<std::size_t>(c) < m.num_components()) {
      current_.set(i, c);
      return *this;
    }
    current_.set(i, m.optional() ? DesignVector::kNone : 0);
  }
  done_ = true;
  return *this;
}

DesignRange::iterator DesignRange::begin() const {
  std::vector<int> first(space_->num_modules());
  for (std::size_t i = 0; i < first.size(); ++i) {
    first[i] = space_->module(i).optional() ? DesignVector::kNone : 0;
  }
  return iterator(space_, DesignVector(std::move(first)), false);
}

DesignRange enumerate_designs(const DesignSpace& space, std::uint64_t cap) {
  std::uint64_t count = space.design_count();
  if (count > cap) {
    std::ostringstream msg;
    msg << "design space has " << count << " designs, above the enumeration cap of "
        << cap;
    throw CapacityError(msg.str());
  }
  return DesignRange(space);
}

}  // namespace codesign
