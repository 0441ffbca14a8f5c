#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <complex>
#include <variant>

#include "qemit/scenario.hpp"
#include "test_rng.hpp"

using namespace qemit;
using scenario::ConfigError;
using scenario::parse_scenario;
using scenario::Scenario;

namespace {

// message must carry the field path so the error is actionable
void expect_error(const std::string& text, const std::string& fragment) {
  try {
    parse_scenario(text);
    FAIL(("expected rejection: " + fragment));
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK_MESSAGE(what.find(fragment) != std::string::npos, (what + " lacks " + fragment));
  }
}

}  // namespace

TEST_CASE("minimal scenario fills every default") {
  const Scenario s = parse_scenario("[model]\ntype = ensemble\n");
  const auto& m = std::get<qcore::TwoLevelEnsemble>(s.model);
  CHECK(m.atoms == 1);
  CHECK(m.phases == std::vector<double>{0.0});
  CHECK(m.decay == 1.0);
  CHECK_FALSE(m.collective_decay);
  CHECK(s.modes == 2);
  CHECK(s.chi_random);
  CHECK_FALSE(s.chi_seed_set);
  CHECK(s.order == 2);
  CHECK(s.bipartitions == std::vector<std::vector<int>>{{2}});
  CHECK(s.times.empty());
  CHECK_FALSE(s.oracle_enabled);
  CHECK(s.method == scenario::SteadyMethod::eigen);
  CHECK_FALSE(s.correlation.enabled);
  CHECK_FALSE(s.sweep.enabled);
  CHECK(s.output_prefix == "results");
}

TEST_CASE("full document round trip") {
  const Scenario s = parse_scenario(
      "# comment\n"
      "[model]\n"
      "type = ensemble\n"
      "atoms = 2\n"
      "phases = 0.0, 1.5\n"
      "rabi = 0.7\n"
      "detuning = -0.2\n"
      "decay = 2.0\n"
      "collective = yes\n"
      "[geometry]\n"
      "modes = 3\n"
      "chi = 1.0, 0.5+0.5i, -0.25i\n"
      "[witness]\n"
      "order = 3\n"
      "bipartitions = 2; 3; 2 3\n"
      "[steady_state]\n"
      "method = relax\n"
      "horizon = 80.0\n"
      "[correlation]\n"
      "tau_max = 10.0\n"
      "points = 21\n"
      "[output]\n"
      "prefix = chain\n");
  const auto& m = std::get<qcore::TwoLevelEnsemble>(s.model);
  CHECK(m.atoms == 2);
  CHECK(m.phases == std::vector<double>{0.0, 1.5});
  CHECK(m.collective_decay);
  CHECK(s.modes == 3);
  REQUIRE(s.chi.size() == 3);
  CHECK(s.chi[1] == qcore::Complex{0.5, 0.5});
  CHECK(s.chi[2] == qcore::Complex{0.0, -0.25});
  CHECK_FALSE(s.chi_random);
  CHECK(s.order == 3);
  CHECK(s.bipartitions == std::vector<std::vector<int>>{{2}, {3}, {2, 3}});
  CHECK(s.method == scenario::SteadyMethod::relax);
  CHECK(s.horizon == 80.0);
  CHECK(s.correlation.enabled);
  CHECK(s.correlation.points == 21);
  CHECK(s.output_prefix == "chain");
}

TEST_CASE("kerr model keys") {
  const Scenario s = parse_scenario(
      "[model]\ntype = kerr\nn_max = 9\nkerr = 0.5\ndrive = 0.2\n");
  const auto& m = std::get<qcore::KerrMode>(s.model);
  CHECK(m.n_max == 9);
  CHECK(m.kerr == 0.5);
  CHECK(m.drive == 0.2);
  CHECK(m.decay == 1.0);
}

TEST_CASE("default bipartitions enumerate every proper split") {
  CHECK(scenario::default_bipartitions(2) == std::vector<std::vector<int>>{{2}});
  CHECK(scenario::default_bipartitions(3) ==
        std::vector<std::vector<int>>{{2}, {3}, {2, 3}});
  CHECK(scenario::default_bipartitions(4).size() == 7);
}

TEST_CASE("schema violations name the offending field") {
  expect_error("", "[model] type");
  expect_error("[model]\ntype = fluid\n", "unknown model type");
  expect_error("[model]\ntype = ensemble\nbogus = 1\n", "[model] bogus");
  expect_error("[model]\ntype = ensemble\n[mystery]\nx = 1\n", "[mystery]");
  expect_error("[model]\ntype = ensemble\natoms = 1\natoms = 2\n", "duplicate key");
  expect_error("[model]\ntype = ensemble\nrabi = fast\n", "expected a number");
  expect_error("key = 1\n", "outside any section");
  expect_error("[model\ntype = ensemble\n", "unterminated");
  expect_error("[model]\ntype = ensemble\natoms\n", "expected 'key = value'");
}

TEST_CASE("model validation is wrapped with its section") {
  expect_error("[model]\ntype = ensemble\natoms = 0\n", "[model] invalid");
  expect_error("[model]\ntype = ensemble\natoms = 2\nphases = 0.1\n", "[model] invalid");
  expect_error("[model]\ntype = kerr\nn_max = 0\n", "[model] invalid");
}

TEST_CASE("geometry validation") {
  expect_error("[model]\ntype = ensemble\n[geometry]\nmodes = 1\n", "[geometry] modes");
  expect_error("[model]\ntype = ensemble\n[geometry]\nchi = 1.0\n", "expected 2 entries");
  expect_error("[model]\ntype = ensemble\n[geometry]\nchi = 1.0, 0\n", "nonzero");
  expect_error("[model]\ntype = ensemble\n[geometry]\nchi = 1.0, abc\n", "[geometry] chi");
  expect_error("[model]\ntype = ensemble\n[geometry]\nchi = random:x\n", "unsigned integer");
  const Scenario s = parse_scenario(
      "[model]\ntype = ensemble\n[geometry]\nchi = random:77\n");
  CHECK(s.chi_random);
  CHECK(s.chi_seed_set);
  CHECK(s.chi_seed == 77);
}

TEST_CASE("witness validation") {
  expect_error("[model]\ntype = ensemble\n[witness]\norder = 0\n", "[witness] order");
  expect_error("[model]\ntype = ensemble\n[witness]\nbipartitions = 1\n",
               "mode 1 untransposed");
  expect_error("[model]\ntype = ensemble\n[witness]\nbipartitions = 3\n", "out of range");
  expect_error(
      "[model]\ntype = ensemble\n[geometry]\nmodes = 3\nchi = 1,1,1\n"
      "[witness]\nbipartitions = 3 2\n",
      "ascending");
  expect_error("[model]\ntype = ensemble\n[witness]\ntimes = 0.0\n", "one time per mode");
  expect_error("[model]\ntype = ensemble\n[witness]\ntimes = 0.2, 0.1\n", "sorted");
  expect_error("[model]\ntype = ensemble\n[witness]\ntimes = -0.1, 0.0\n", "nonnegative");
}

TEST_CASE("oracle preconditions are config errors") {
  expect_error("[model]\ntype = ensemble\n[oracle]\nenabled = true\n", "bosonic");
  expect_error(
      "[model]\ntype = kerr\n[oracle]\nenabled = true\n[witness]\ntimes = 0.0, 0.1\n",
      "multi-time");
}

TEST_CASE("sweep grids") {
  const Scenario s = parse_scenario(
      "[model]\ntype = kerr\n[sweep]\nparameter = model.drive\nfrom = 0.0\nto = 1.0\n"
      "points = 5\n");
  REQUIRE(s.sweep.enabled);
  REQUIRE(s.sweep.axes.size() == 1);
  CHECK(s.sweep.axes[0].parameter == "model.drive");
  CHECK(s.sweep.axes[0].values == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

  const Scenario two = parse_scenario(
      "[model]\ntype = kerr\n[sweep]\nparameter = model.drive\nvalues = 0.1, 0.2\n"
      "parameter2 = model.detuning\nfrom2 = -1.0\nto2 = 1.0\npoints2 = 3\n");
  REQUIRE(two.sweep.axes.size() == 2);
  CHECK(two.sweep.axes[0].values == std::vector<double>{0.1, 0.2});
  CHECK(two.sweep.axes[1].values == std::vector<double>{-1.0, 0.0, 1.0});

  const Scenario single = parse_scenario(
      "[model]\ntype = kerr\n[sweep]\nparameter = model.drive\nfrom = 0.3\nto = 0.3\n"
      "points = 1\n");
  CHECK(single.sweep.axes[0].values == std::vector<double>{0.3});
}

TEST_CASE("sweep validation") {
  expect_error("[model]\ntype = kerr\n[sweep]\nfrom = 0\nto = 1\n", "swept parameter");
  expect_error("[model]\ntype = kerr\n[sweep]\nparameter = model.drive\n",
               "'values' or 'from'/'to'");
  expect_error(
      "[model]\ntype = kerr\n[sweep]\nparameter = model.drive\nfrom = 0\nto = 1\n"
      "points = 1\n",
      "from == to");
  expect_error(
      "[model]\ntype = kerr\n[sweep]\nparameter = model.rabi\nvalues = 1\n",
      "inapplicable");
  expect_error(
      "[model]\ntype = ensemble\n[sweep]\nparameter = model.drive\nvalues = 1\n",
      "inapplicable");
  expect_error(
      "[model]\ntype = kerr\n[sweep]\nparameter = model.drive\nfrom = 0\nto = 1\n"
      "points = 60\nmax_points = 50\n",
      "60 points");
  expect_error(
      "[model]\ntype = ensemble\nphases = 0.0\n[sweep]\nparameter = model.atoms\n"
      "values = 1, 2\n",
      "pin the atom count");
  expect_error(
      "[model]\ntype = ensemble\n[sweep]\nparameter = model.atoms\nvalues = 1.5\n",
      "positive integers");
  expect_error(
      "[model]\ntype = kerr\n[witness]\ntimes = 0.0, 0.1\n[sweep]\n"
      "parameter = model.drive\nvalues = 1\n",
      "single-time");
}

TEST_CASE("random geometry draws match the shared stream") {
  Scenario s = parse_scenario("[model]\ntype = ensemble\n[geometry]\nmodes = 3\n");
  const std::uint64_t effective = scenario::resolve_chi(s, 12345);
  CHECK(effective == 12345);
  CHECK_FALSE(s.chi_random);
  REQUIRE(s.chi.size() == 3);
  testrng::Rng rng{12345};
  for (const auto& value : s.chi) CHECK(value == rng.chi());

  // the inline seed beats the command-line one
  Scenario inl = parse_scenario("[model]\ntype = ensemble\n[geometry]\nchi = random:7\n");
  CHECK(scenario::resolve_chi(inl, 12345) == 7);
  testrng::Rng rng7{7};
  CHECK(inl.chi[0] == rng7.chi());

  // explicit geometry is left alone
  Scenario fixed = parse_scenario("[model]\ntype = ensemble\n[geometry]\nchi = 1, 2\n");
  CHECK(scenario::resolve_chi(fixed, 99) == 0);
  CHECK(fixed.chi == std::vector<qcore::Complex>{{1.0, 0.0}, {2.0, 0.0}});
}

TEST_CASE("with_parameter applies one swept value") {
  const Scenario kerr = parse_scenario("[model]\ntype = kerr\nkerr = 0.5\n");
  const Scenario bumped = scenario::with_parameter(kerr, "model.drive", 0.7);
  CHECK(std::get<qcore::KerrMode>(bumped.model).drive == 0.7);
  CHECK(std::get<qcore::KerrMode>(bumped.model).kerr == 0.5);

  const Scenario ens = parse_scenario("[model]\ntype = ensemble\nrabi = 1.0\n");
  const Scenario grown = scenario::with_parameter(ens, "model.atoms", 3.0);
  const auto& m = std::get<qcore::TwoLevelEnsemble>(grown.model);
  CHECK(m.atoms == 3);
  CHECK(m.phases == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(m.rabi == 1.0);
}

TEST_CASE("correlation section enables the series by presence") {
  const Scenario s = parse_scenario("[model]\ntype = ensemble\n[correlation]\n");
  CHECK(s.correlation.enabled);
  CHECK(s.correlation.tau_max == 5.0);
  CHECK(s.correlation.points == 51);
  const Scenario off = parse_scenario(
      "[model]\ntype = ensemble\n[correlation]\nenabled = false\ntau_max = 3.0\n");
  CHECK_FALSE(off.correlation.enabled);
  expect_error("[model]\ntype = ensemble\n[correlation]\npoints = 1\n",
               "at least two points");
}
