#pragma once

#include <stdexcept>

#include "taskweave/interp.hpp"
#include "taskweave/tir.hpp"

namespace taskweave::preprocess {

struct FlattenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Profile-guided refactoring: unrolls every loop whose body (transitively)
/// executes a Type-2 task, inlines all function calls, and replaces indirect
/// calls with the direct task the profile observed. Loops over Type-1 work
/// only stay rolled. The result is a single-function program whose statement
/// order equals the original dynamic execution order; site_map links each new
/// statement to its originating site.
tir::TirProgram flatten(const tir::TirProgram& p, const tracer::Profile& prof);

}  // namespace taskweave::preprocess
