#pragma once

#include <string>
#include <string_view>

#include "codesign/blp_instance.hpp"
#include "codesign/lower.hpp"

namespace codesign {

// CPLEX-style LP text: Maximize / Subject To / Binaries / End. More than one
// objective level is written as a "Maximize multi-objectives" section with
// descending priorities. Block structure, lifted blocks, objective offsets
// and row provenance travel in "\ codesign-..." comment lines so that
// read_lp rebuilds the same instance; other solvers ignore them.
std::string write_lp(const BlpInstance& instance);

// Reads write_lp output, or a plain LP file with binaries only (each binary
// then becomes a one-component optional block). Throws ParseError.
BlpInstance read_lp(std::string_view text);

// Row -> source label and transformation, plus the lowering report.
std::string provenance_json(const BlpInstance& instance, const LoweringReport& report);

}  // namespace codesign
