#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codesign/parser.hpp"
#include "codesign/problems.hpp"

namespace codesign {

// Problem file (TOML):
//   [problem]  name, template = "custom" | "drone" | "transport", modules = [order]
//   [params]   scalar constants / template parameters
//   [module.<id>]  features = ["name [unit]", ...],
//                  components = [["name", v1, ...], ...]  or  csv = "file.csv",
//                  optional = false
//   maximize = ["label: expr", ...]      (custom; appended after template objectives)
//   subject_to = [...]  implicit = [...]
//   restrict = { module = ["c1", ...] }
//   [[compat]] module, component, other, subset, polarity, label
//   cost = "expr"
struct Problem {
  std::string name;
  std::string template_name = "custom";
  ParamMap params;
  DesignSpec spec;
  std::optional<DroneParams> drone;
  std::optional<TransportParams> transport;
};

using ParamOverrides = std::vector<std::pair<std::string, double>>;

// "key=value"; throws ParseError.
std::pair<std::string, double> parse_param_override(std::string_view text);

Problem load_problem(const std::filesystem::path& path, const ParamOverrides& overrides = {});
Problem load_problem_text(std::string_view text, const std::filesystem::path& base_dir,
                          const ParamOverrides& overrides = {},
                          const std::string& source_name = "<string>");

// Only the [module.*] tables (and [problem] modules order) are read.
DesignSpace load_design_space(std::string_view text,
                              const std::filesystem::path& base_dir = ".");

// Module tables with inline components; load_design_space reads it back to
// an identical space.
std::string serialize_design_space(const DesignSpace& space);

}  // namespace codesign
