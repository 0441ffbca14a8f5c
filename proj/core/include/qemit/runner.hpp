#pragma once

#include <cstdint>
#include <string>

#include "qemit/scenario.hpp"

namespace qemit::runner {

// Rendered result documents; writing them to disk is the caller's business.
// Identical scenario + seed produce byte-identical strings.
struct RunArtifacts {
  std::string results_json;
  std::string moments_csv;
  std::string g2_dat;  // empty unless the scenario requested a correlation series
  bool nonclassical = false;
  bool all_bipartitions_entangled = false;
};

RunArtifacts run_scenario(const scenario::Scenario& s, std::uint64_t seed);

struct SweepArtifacts {
  std::string results_json;
  std::string sweep_csv;
  std::string squeezing_dat;    // single-axis sweeps only
  std::string sub_poisson_dat;  // single-axis sweeps only
};

// Grid points evaluate concurrently up to `workers`; assembly is ordered by
// grid index, so the worker count never changes the output.
SweepArtifacts sweep_scenario(const scenario::Scenario& s, std::uint64_t seed, int workers);

}  // namespace qemit::runner
