#pragma once

#include <vector>

#include "qemit/qcore.hpp"

namespace qemit::dynamics {

using qcore::Complex;
using qcore::Matrix;
using qcore::Vector;

// generator of the master equation, stored as a dense dim^2 x dim^2 matrix
// acting on column-stacked density matrices
struct Liouvillian {
  int dim = 0;
  Matrix super;
};

// correlation values on a strictly increasing nonnegative lag grid
struct CorrelationSeries {
  std::vector<double> tau;
  std::vector<Complex> values;
};

qcore::Operator hamiltonian(const qcore::EmitterModel& model);
std::vector<qcore::Operator> collapse_operators(const qcore::EmitterModel& model);

// Lindblad generator for the given Hamiltonian and decay channels; the
// superoperator matrix must fit under the dimension cap (dim <= 64)
Liouvillian make_liouvillian(const qcore::Operator& h,
                             const std::vector<qcore::Operator>& channels);
Liouvillian liouvillian(const qcore::EmitterModel& model);

// e^{L t} applied to rho by adaptive step-doubled RK4; preserves the trace
// of any input and Hermiticity of Hermitian input to 1e-10 at every step
Matrix propagate(const Liouvillian& lv, const Matrix& rho, double t,
                 double tol_rate = 1e-10);

// unique null vector of the generator, normalized, with a propagation
// invariance cross-check; throws std::runtime_error when the zero eigenvalue
// is not simple instead of silently picking a direction
qcore::DensityMatrix steady_state(const Liouvillian& lv);

// long-time limit reached by integrating from rho0 until the generator
// residual falls below tol; usable when the generator has extra stationary
// directions that the initial state never populates
qcore::DensityMatrix relaxed_state(const Liouvillian& lv, const qcore::DensityMatrix& rho0,
                                   double horizon = 200.0, double tol = 1e-10);

// iterated quantum-regression evaluation of
//   Tr{ A_n ... e^{L(t2-t1)}[ A_1 e^{L t1}[rho] B_1 ] ... B_n }
// with times ascending (repeats allowed) and one operator pair per time
Complex multi_time_moment(const Liouvillian& lv, const qcore::DensityMatrix& rho,
                          const std::vector<qcore::Operator>& left_ops,
                          const std::vector<qcore::Operator>& right_ops,
                          const std::vector<double>& times);

// <s†(0) s†(tau) s(tau) s(0)> over the lag grid, evaluated by a single
// incremental propagation of the deformed state
CorrelationSeries intensity_correlation(const Liouvillian& lv,
                                        const qcore::DensityMatrix& rho,
                                        const qcore::Operator& s,
                                        const std::vector<double>& tau_grid);

}  // namespace qemit::dynamics
