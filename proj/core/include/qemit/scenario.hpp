#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qemit/qcore.hpp"

namespace qemit::scenario {

using qcore::Complex;

// schema violation; the message names the offending "[section] key"
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SteadyMethod { eigen, relax };

struct CorrelationRequest {
  bool enabled = false;
  double tau_max = 5.0;
  int points = 51;
};

struct SweepAxis {
  std::string parameter;       // dotted path, e.g. "model.drive"
  std::vector<double> values;  // resolved grid, in evaluation order
};

struct SweepSpec {
  bool enabled = false;
  std::vector<SweepAxis> axes;  // one or two
  int max_points = 1000;
};

struct Scenario {
  qcore::EmitterModel model;
  bool phases_explicit = false;

  int modes = 2;
  std::vector<Complex> chi;  // filled by resolve_chi for random geometries
  bool chi_random = false;
  bool chi_seed_set = false;
  std::uint64_t chi_seed = 0;

  int order = 2;
  std::vector<std::vector<int>> bipartitions;  // resolved; "all" is expanded
  std::vector<double> times;                   // one per mode; empty = single time

  bool oracle_enabled = false;
  SteadyMethod method = SteadyMethod::eigen;
  double horizon = 200.0;
  CorrelationRequest correlation;
  SweepSpec sweep;
  std::string output_prefix = "results";
};

// Parses one key = value document with [section] headers and '#' comments.
// Everything is validated here; execution never sees a malformed scenario.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

// Draws random geometry amplitudes when requested: modulus uniform in
// [0.2, 2.0], phase uniform, splitmix64 stream. An inline "random:<seed>"
// beats the command-line seed. Returns the seed that fed the draws, or 0
// for explicit geometries.
std::uint64_t resolve_chi(Scenario& s, std::uint64_t cli_seed);

// copy of the scenario with one swept parameter applied
Scenario with_parameter(const Scenario& s, const std::string& parameter, double value);

// every proper splitting of modes 1..M that keeps mode 1 untransposed
std::vector<std::vector<int>> default_bipartitions(int modes);

}  // namespace qemit::scenario
