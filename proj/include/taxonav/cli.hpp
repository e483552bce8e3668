#pragma once

#include <string>
#include <vector>

#include "taxonav/search.hpp"

namespace taxonav {

// Executes one subcommand. Returns the process exit status: 0 success,
// 1 validation/usage error, 2 runtime error. `args` excludes the program
// name.
int run_command(const std::vector<std::string>& args);
int run_command(int argc, const char* const* argv);

// Indented text rendering of a search trace: one block per expansion with
// each child's raw score, standardized score, and keep/prune outcome,
// followed by the final leaf re-scores.
std::string render_trace_tree(const CategorizationTrace& trace, const Taxonomy& taxonomy);

}  // namespace taxonav
