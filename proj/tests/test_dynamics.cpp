#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <qemit/dynamics.hpp>
#include <qemit/qcore.hpp>
#include <stdexcept>
#include <vector>

#include "test_rng.hpp"

using namespace qemit;
using dynamics::Liouvillian;
using qcore::Complex;
using qcore::Matrix;
using qcore::Vector;

namespace {

qcore::TwoLevelEnsemble atom(double rabi, double detuning) {
  qcore::TwoLevelEnsemble m;
  m.atoms = 1;
  m.phases = {0.0};
  m.rabi = rabi;
  m.detuning = detuning;
  return m;
}

qcore::TwoLevelEnsemble pair_model(double rabi, bool collective) {
  qcore::TwoLevelEnsemble m;
  m.atoms = 2;
  m.phases = {0.0, 0.0};
  m.rabi = rabi;
  m.collective_decay = collective;
  return m;
}

qcore::KerrMode kerr(int n_max, double chi, double drive, double detuning) {
  qcore::KerrMode m;
  m.n_max = n_max;
  m.kerr = chi;
  m.drive = drive;
  m.detuning = detuning;
  return m;
}

// right-hand side of the master equation in matrix form, written directly
// from the commutator and the decay channels; no superoperator involved
Matrix master_rhs(const Matrix& h, const std::vector<Matrix>& channels, const Matrix& rho) {
  Matrix out = Complex{0.0, -1.0} * (h * rho - rho * h);
  for (const Matrix& c : channels) {
    const Matrix cdc = c.adjoint() * c;
    out += c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
  }
  return out;
}

Matrix fixed_step_rk4(const Matrix& h, const std::vector<Matrix>& channels, Matrix rho,
                      double t_final, double dt) {
  const int steps = static_cast<int>(std::lround(t_final / dt));
  for (int s = 0; s < steps; ++s) {
    const Matrix k1 = master_rhs(h, channels, rho);
    const Matrix k2 = master_rhs(h, channels, rho + 0.5 * dt * k1);
    const Matrix k3 = master_rhs(h, channels, rho + 0.5 * dt * k2);
    const Matrix k4 = master_rhs(h, channels, rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

Vector vec_of(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace

// --- generator structure ---------------------------------------------------

TEST_CASE("generator annihilates the trace functional") {
  const std::vector<qcore::EmitterModel> models = {
      qcore::EmitterModel{atom(0.7, 0.2)}, qcore::EmitterModel{pair_model(1.0, false)},
      qcore::EmitterModel{pair_model(1.0, true)},
      qcore::EmitterModel{kerr(10, 0.5, 0.8, 0.3)}};
  for (const auto& model : models) {
    const Liouvillian lv = dynamics::liouvillian(model);
    const Matrix id = Matrix::Identity(lv.dim, lv.dim);
    const double worst = (vec_of(id).adjoint() * lv.super).cwiseAbs().maxCoeff();
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("generator dimension cap") {
  CHECK_THROWS_WITH_AS(dynamics::make_liouvillian(qcore::identity(65), {}),
                       doctest::Contains("dimension cap"), std::invalid_argument);
  CHECK_NOTHROW(dynamics::make_liouvillian(qcore::identity(64), {}));
}

TEST_CASE("single-atom generator has a simple zero and decaying remainder") {
  const Liouvillian lv = dynamics::liouvillian(qcore::EmitterModel{atom(1.0, 0.0)});
  REQUIRE(lv.dim == 2);
  Eigen::ComplexEigenSolver<Matrix> es(lv.super);
  int zeros = 0;
  for (int i = 0; i < 4; ++i) {
    const Complex lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1e-9) {
      ++zeros;
    } else {
      CHECK(lambda.real() < 0.0);
    }
  }
  CHECK(zeros == 1);
}

// --- steady states ---------------------------------------------------------

TEST_CASE("pure decay relaxes to the ground state") {
  const std::vector<qcore::EmitterModel> models = {
      qcore::EmitterModel{pair_model(0.0, false)},
      qcore::EmitterModel{kerr(6, 0.4, 0.0, 0.2)}};
  for (const auto& model : models) {
    const qcore::DensityMatrix rho = dynamics::steady_state(dynamics::liouvillian(model));
    const Matrix expect = qcore::ground_state(model).matrix();
    CHECK((rho.matrix() - expect).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("driven atom matches the three-equation stationary solution") {
  const double rabi = 0.8, delta = 0.5, gamma = 1.0;
  // unknowns (rho_ee, rho_eg, rho_ge) of the stationary linear system
  Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
  Eigen::Vector3cd b = Eigen::Vector3cd::Zero();
  const Complex im{0.0, 1.0};
  a(0, 0) = -gamma;
  a(0, 1) = im * rabi / 2.0;
  a(0, 2) = -im * rabi / 2.0;
  a(1, 0) = im * rabi;
  a(1, 1) = im * delta - gamma / 2.0;
  b(1) = im * rabi / 2.0;
  a(2, 0) = -im * rabi;
  a(2, 2) = -im * delta - gamma / 2.0;
  b(2) = -im * rabi / 2.0;
  const Eigen::Vector3cd sol = a.colPivHouseholderQr().solve(b);

  const qcore::EmitterModel model{atom(rabi, delta)};
  const qcore::DensityMatrix rho = dynamics::steady_state(dynamics::liouvillian(model));
  CHECK(std::abs(rho.matrix()(1, 1) - sol(0)) < 1e-8);
  CHECK(std::abs(rho.matrix()(1, 0) - sol(1)) < 1e-8);
  CHECK(std::abs(rho.matrix()(0, 1) - sol(2)) < 1e-8);

  const Complex upper = qcore::expectation(
      rho, qcore::source_operator(model).adjoint() * qcore::source_operator(model));
  const double closed_form =
      (rabi * rabi / 4.0) / (delta * delta + gamma * gamma / 4.0 + rabi * rabi / 2.0);
  CHECK(std::abs(sol(0) - closed_form) < 1e-12);
  CHECK(std::abs(upper - closed_form) < 1e-8);
}

TEST_CASE("undriven Kerr fixed point is the classical coherent amplitude") {
  const double eps = 0.3, delta = 0.4, gamma = 1.0;
  const qcore::EmitterModel model{kerr(15, 0.0, eps, delta)};
  const qcore::DensityMatrix rho = dynamics::steady_state(dynamics::liouvillian(model));
  const Complex alpha = Complex{0.0, -1.0} * eps / Complex{gamma / 2.0, -delta};
  const qcore::Operator a = qcore::source_operator(model);
  CHECK(std::abs(qcore::expectation(rho, a) - alpha) < 1e-8);
  CHECK(std::abs(qcore::expectation(rho, a.adjoint() * a) - std::norm(alpha)) < 1e-8);
}

TEST_CASE("null-space and long-time integration agree for the driven Kerr mode") {
  const qcore::EmitterModel model{kerr(16, 0.5, 0.8, 0.3)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho = dynamics::steady_state(lv);

  const Matrix h = dynamics::hamiltonian(model).matrix();
  std::vector<Matrix> channels;
  for (const auto& c : dynamics::collapse_operators(model)) channels.push_back(c.matrix());
  const Matrix late =
      fixed_step_rk4(h, channels, qcore::ground_state(model).matrix(), 40.0, 0.002);

  const Matrix a = qcore::source_operator(model).matrix();
  const Complex amp_lib = (a * rho.matrix()).trace();
  const Complex amp_rk4 = (a * late).trace();
  const Complex n_lib = (a.adjoint() * a * rho.matrix()).trace();
  const Complex n_rk4 = (a.adjoint() * a * late).trace();
  CHECK(std::abs(amp_lib - amp_rk4) < 1e-6);
  CHECK(std::abs(n_lib - n_rk4) < 1e-6);
  // truncation sanity: top two levels essentially unpopulated
  CHECK(rho.matrix()(16, 16).real() < 1e-8);
  CHECK(rho.matrix()(15, 15).real() < 1e-8);
}

TEST_CASE("matched-phase collective decay has no unique stationary state") {
  const Liouvillian lv = dynamics::liouvillian(qcore::EmitterModel{pair_model(1.0, true)});
  CHECK_THROWS_WITH_AS(dynamics::steady_state(lv), doctest::Contains("degenerate"),
                       std::runtime_error);
}

TEST_CASE("relaxation from the ground state resolves the collective sector") {
  const qcore::EmitterModel model{pair_model(1.2, true)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho =
      dynamics::relaxed_state(lv, qcore::ground_state(model), 300.0, 1e-10);
  CHECK((lv.super * vec_of(rho.matrix())).cwiseAbs().maxCoeff() < 1e-10);
  // ground state never populates the antisymmetric pair state
  Vector singlet = Vector::Zero(4);
  singlet(1) = 1.0 / std::sqrt(2.0);
  singlet(2) = -1.0 / std::sqrt(2.0);
  CHECK(std::abs((singlet.adjoint() * rho.matrix() * singlet)(0)) < 1e-12);
  const qcore::Operator s = qcore::source_operator(model);
  CHECK(qcore::expectation(rho, s.adjoint() * s).real() > 0.01);
}

TEST_CASE("relaxation reports failure to converge") {
  const qcore::EmitterModel model{pair_model(1.0, true)};
  const Liouvillian lv = dynamics::liouvillian(model);
  CHECK_THROWS_WITH_AS(dynamics::relaxed_state(lv, qcore::ground_state(model), 4.0, 1e-10),
                       doctest::Contains("converge"), std::runtime_error);
}

// --- propagation -----------------------------------------------------------

TEST_CASE("propagation preserves trace and Hermiticity") {
  const qcore::EmitterModel model{kerr(10, 0.5, 0.9, 0.0)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const Matrix rho = dynamics::propagate(lv, qcore::ground_state(model).matrix(), 5.0);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
  CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(dynamics::propagate(lv, rho, -1.0), std::invalid_argument);
}

TEST_CASE("propagation rejects generators that leak trace") {
  testrng::Rng rng(0xdeadu);
  Matrix bad = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) bad(i, j) = 0.1 * rng.box();
  const Liouvillian lv{2, bad};
  Matrix rho = Matrix::Zero(2, 2);
  rho(0, 0) = 1.0;
  CHECK_THROWS_AS(dynamics::propagate(lv, rho, 2.0), std::runtime_error);
}

TEST_CASE("zero-time propagation returns the input unchanged") {
  const qcore::EmitterModel model{atom(1.0, 0.0)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const Matrix rho = qcore::ground_state(model).matrix();
  CHECK((dynamics::propagate(lv, rho, 0.0) - rho).cwiseAbs().maxCoeff() == 0.0);
}

// --- multi-time moments ----------------------------------------------------

TEST_CASE("coincident times collapse to a single-time expectation") {
  const qcore::EmitterModel model{kerr(12, 0.5, 0.7, 0.2)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho = dynamics::steady_state(lv);
  const qcore::Operator a = qcore::source_operator(model);
  const qcore::Operator ad = a.adjoint();

  const Complex two_time = dynamics::multi_time_moment(
      lv, rho, {a, ad * a}, {ad, qcore::identity(lv.dim)}, {0.2, 0.2});
  const Complex direct = qcore::expectation(rho, ad * ad * a * a);
  CHECK(std::abs(two_time - direct) < 1e-9);
}

TEST_CASE("moment evaluation validates its arguments") {
  const qcore::EmitterModel model{atom(1.0, 0.0)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho = dynamics::steady_state(lv);
  const qcore::Operator s = qcore::source_operator(model);
  const qcore::Operator id = qcore::identity(2);
  CHECK_THROWS_WITH_AS(dynamics::multi_time_moment(lv, rho, {s, s}, {id, id}, {0.5, 0.2}),
                       doctest::Contains("sorted"), std::invalid_argument);
  CHECK_THROWS_AS(dynamics::multi_time_moment(lv, rho, {s}, {id, id}, {0.0, 0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(dynamics::multi_time_moment(lv, rho, {s}, {id}, {-0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      dynamics::multi_time_moment(lv, rho, {qcore::identity(3)}, {id}, {0.0}),
      std::invalid_argument);
}

TEST_CASE("two-time moments are invariant under an overall time shift") {
  const qcore::EmitterModel model{atom(0.9, 0.3)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho = dynamics::steady_state(lv);
  const qcore::Operator s = qcore::source_operator(model);
  const qcore::Operator id = qcore::identity(2);
  const double tau = 0.7;
  const Complex base =
      dynamics::multi_time_moment(lv, rho, {id, s}, {s.adjoint(), id}, {0.0, tau});
  const Complex shifted =
      dynamics::multi_time_moment(lv, rho, {id, s}, {s.adjoint(), id}, {3.0, 3.0 + tau});
  CHECK(std::abs(base - shifted) < 1e-9);
}

// --- intensity correlations ------------------------------------------------

TEST_CASE("single-atom intensity correlation vanishes at zero lag") {
  const qcore::EmitterModel model{atom(1.0, 0.0)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho = dynamics::steady_state(lv);
  const auto series =
      dynamics::intensity_correlation(lv, rho, qcore::source_operator(model), {0.0});
  CHECK(std::abs(series.values[0]) == 0.0);
}

TEST_CASE("single-atom light is antibunched over the first decay time") {
  const qcore::EmitterModel model{atom(1.0, 0.0)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho = dynamics::steady_state(lv);
  std::vector<double> grid = {0.0};
  for (int i = 1; i <= 10; ++i) grid.push_back(0.1 * i);
  const auto series =
      dynamics::intensity_correlation(lv, rho, qcore::source_operator(model), grid);
  REQUIRE(series.values.size() == grid.size());
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    CHECK(std::abs(series.values[i].imag()) < 1e-10);
    if (i > 0) CHECK(series.values[i].real() > series.values[0].real());
  }
}

TEST_CASE("intensity correlation factorizes at long lag") {
  const qcore::EmitterModel model{atom(1.0, 0.0)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho = dynamics::steady_state(lv);
  const qcore::Operator s = qcore::source_operator(model);
  const auto series = dynamics::intensity_correlation(lv, rho, s, {50.0});
  const double mean = qcore::expectation(rho, s.adjoint() * s).real();
  CHECK(std::abs(series.values[0].real() - mean * mean) / (mean * mean) < 1e-6);
}

TEST_CASE("lag grids are validated") {
  const qcore::EmitterModel model{atom(1.0, 0.0)};
  const Liouvillian lv = dynamics::liouvillian(model);
  const qcore::DensityMatrix rho = dynamics::steady_state(lv);
  const qcore::Operator s = qcore::source_operator(model);
  CHECK_THROWS_AS(dynamics::intensity_correlation(lv, rho, s, {}), std::invalid_argument);
  CHECK_THROWS_AS(dynamics::intensity_correlation(lv, rho, s, {0.1, 0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(dynamics::intensity_correlation(lv, rho, s, {-0.1, 0.2}),
                  std::invalid_argument);
}
