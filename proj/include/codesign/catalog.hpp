#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace codesign {

// A named technical feature of a module, e.g. thrust [N]. Units are opaque.
struct Feature {
  std::string name;
  std::string unit;

  bool operator==(const Feature&) const = default;
};

// Datasheet table of one module: rows are features, columns are the candidate
// components of the module's catalog. Immutable after construction.
class FeatureMatrix {
 public:
  // `columns[j]` holds the feature values of component j, one per feature.
  // Throws SchemaError on duplicate names, ragged columns, an empty catalog
  // or a non-finite value.
  FeatureMatrix(std::string module_id, std::vector<Feature> features,
                std::vector<std::string> component_names,
                const std::vector<std::vector<double>>& columns,
                bool optional = false);

  const std::string& module_id() const { return module_id_; }
  const std::vector<Feature>& features() const { return features_; }
  const std::vector<std::string>& component_names() const {
    return component_names_;
  }
  std::size_t num_features() const { return features_.size(); }
  std::size_t num_components() const { return component_names_.size(); }

  // Optional modules may be left empty (at most one component selected).
  bool optional() const { return optional_; }

  std::optional<std::size_t> feature_index(std::string_view name) const;
  std::optional<std::size_t> component_index(std::string_view name) const;
  // Throwing variants (LookupError naming the module).
  std::size_t require_feature(std::string_view name) const;
  std::size_t require_component(std::string_view name) const;

  double value(std::size_t component, std::size_t feature) const {
    return values_[component * features_.size() + feature];
  }
  std::span<const double> column(std::size_t component) const {
    return {values_.data() + component * features_.size(), features_.size()};
  }
  // The feature row [F_i]_feature over all components.
  std::vector<double> row(std::size_t feature) const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::string module_id_;
  std::vector<Feature> features_;
  std::vector<std::string> component_names_;
  std::vector<double> values_;  // component-major
  bool optional_ = false;
};

// Ordered set of modules; total_dim() is the number of binary selection
// variables, the sum of the catalog sizes.
class DesignSpace {
 public:
  DesignSpace() = default;
  explicit DesignSpace(std::vector<FeatureMatrix> modules);

  const std::vector<FeatureMatrix>& modules() const { return modules_; }
  std::size_t num_modules() const { return modules_.size(); }
  const FeatureMatrix& module(std::size_t i) const { return modules_[i]; }
  std::size_t total_dim() const { return total_dim_; }

  std::optional<std::size_t> module_index(std::string_view id) const;
  std::size_t require_module(std::string_view id) const;

  // Offset of module i's block inside the stacked design vector.
  std::size_t offset(std::size_t i) const { return offsets_[i]; }

  // Number of elements of X (counting the empty choice of optional
  // modules). Saturates at UINT64_MAX.
  std::uint64_t design_count() const;

  bool operator==(const DesignSpace& o) const { return modules_ == o.modules_; }

 private:
  std::vector<FeatureMatrix> modules_;
  std::vector<std::size_t> offsets_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::size_t total_dim_ = 0;
};

// Row [F_i]_feature of a module, looked up by name.
std::vector<double> feature_row(const DesignSpace& space, std::string_view module,
                                std::string_view feature);

// One selection per module. Stored as component indices; kNone marks an
// unselected optional module.
class DesignVector {
 public:
  static constexpr int kNone = -1;

  DesignVector() = default;
  explicit DesignVector(std::vector<int> choices) : choices_(std::move(choices)) {}

  std::size_t size() const { return choices_.size(); }
  int choice(std::size_t module) const { return choices_[module]; }
  void set(std::size_t module, int component) { choices_[module] = component; }
  bool selected(std::size_t module) const { return choices_[module] != kNone; }
  const std::vector<int>& choices() const { return choices_; }

  // Binary block x_i of length |C_i|.
  std::vector<std::uint8_t> block(const DesignSpace& space, std::size_t module) const;
  // Stacked binary vector of length N.
  std::vector<std::uint8_t> stacked(const DesignSpace& space) const;

  // Lexicographic on component indices, kNone first.
  auto operator<=>(const DesignVector&) const = default;

 private:
  std::vector<int> choices_;
};

// Throws DomainError unless x belongs to X for this space.
void validate_design(const DesignSpace& space, const DesignVector& x);

// Builds a design from one-hot blocks (throws DomainError if not in X).
DesignVector design_from_blocks(const DesignSpace& space,
                                const std::vector<std::vector<std::uint8_t>>& blocks);

inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

// Cap from CODESIGN_ENUM_CAP when set and valid, otherwise the default.
std::uint64_t enumeration_cap_from_env();

// Range over every element of X in lexicographic component order (the empty
// choice of an optional module sorts first). Single-pass.
class DesignRange {
 public:
  class iterator {
   public:
    using value_type = DesignVector;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    const DesignVector& operator*() const { return current_; }
    const DesignVector* operator->() const { return &current_; }
    iterator& operator++();
    void operator++(int) { ++*this; }
    bool operator==(std::default_sentinel_t) const { return done_; }

   private:
    friend class DesignRange;
    iterator(const DesignSpace* space, DesignVector first, bool done)
        : space_(space), current_(std::move(first)), done_(done) {}
    const DesignSpace* space_ = nullptr;
    DesignVector current_;
    bool done_ = true;
  };

  iterator begin() const;
  std::default_sentinel_t end() const { return {}; }
  std::uint64_t size() const { return space_->design_count(); }

 private:
  friend DesignRange enumerate_designs(const DesignSpace&, std::uint64_t);
  explicit DesignRange(const DesignSpace& space) : space_(&space) {}
  const DesignSpace* space_;
};

// Throws CapacityError if the design count exceeds `cap`.
DesignRange enumerate_designs(const DesignSpace& space,
                              std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace codesign
