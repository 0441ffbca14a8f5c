#include "qemit/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace qemit::dynamics {

namespace {

using qcore::Operator;

Vector vec(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

Matrix unvec(const Vector& v, int d) {
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

Vector rk4_step(const Matrix& gen, const Vector& y, double h) {
  const Vector k1 = gen * y;
  const Vector k2 = gen * (y + 0.5 * h * k1);
  const Vector k3 = gen * (y + 0.5 * h * k2);
  const Vector k4 = gen * (y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct ConservationGuard {
  Complex trace0;
  bool hermitian0 = false;
  double scale = 1.0;

  explicit ConservationGuard(const Matrix& x0) {
    trace0 = x0.trace();
    hermitian0 = (x0 - x0.adjoint()).cwiseAbs().maxCoeff() < 1e-12;
    scale = std::max(1.0, x0.cwiseAbs().maxCoeff());
  }

  void check(const Vector& y, int d) const {
    Complex tr{0.0, 0.0};
    for (int i = 0; i < d; ++i) tr += y(i * d + i);
    if (std::abs(tr - trace0) > 1e-10 * scale)
      throw std::runtime_error("propagation failed to preserve the trace");
    if (hermitian0) {
      double dev = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
          dev = std::max(dev, std::abs(y(i * d + j) - std::conj(y(j * d + i))));
      if (dev > 1e-10 * scale)
        throw std::runtime_error("propagation failed to preserve Hermiticity");
    }
  }
};

double residual_norm(const Liouvillian& lv, const Matrix& rho) {
  return (lv.super * vec(rho)).cwiseAbs().maxCoeff();
}

}  // namespace

qcore::Operator hamiltonian(const qcore::EmitterModel& model) {
  qcore::hilbert_dimension(model);
  if (const auto* ens = std::get_if<qcore::TwoLevelEnsemble>(&model)) {
    const Matrix s = qcore::source_operator(model).matrix();
    Eigen::Matrix2cd sz = Eigen::Matrix2cd::Zero();
    sz(0, 0) = -1.0;
    sz(1, 1) = 1.0;
    Matrix h = Matrix::Zero(s.rows(), s.cols());
    for (int k = 0; k < ens->atoms; ++k)
      h += -0.5 * ens->detuning * qcore::embed_site(sz, k, ens->atoms).matrix();
    h += 0.5 * ens->rabi * (s + s.adjoint());
    return Operator(std::move(h));
  }
  const auto& km = std::get<qcore::KerrMode>(model);
  const Matrix a = qcore::annihilation(km.n_max).matrix();
  const Matrix n = a.adjoint() * a;
  Matrix h = -km.detuning * n + km.kerr * (a.adjoint() * a.adjoint() * a * a) +
             km.drive * (a + a.adjoint());
  return Operator(std::move(h));
}

std::vector<qcore::Operator> collapse_operators(const qcore::EmitterModel& model) {
  qcore::hilbert_dimension(model);
  std::vector<qcore::Operator> out;
  if (const auto* ens = std::get_if<qcore::TwoLevelEnsemble>(&model)) {
    const double root = std::sqrt(ens->decay);
    if (ens->collective_decay) {
      out.push_back(Complex{root, 0.0} * qcore::source_operator(model));
      return out;
    }
    Eigen::Matrix2cd lower = Eigen::Matrix2cd::Zero();
    lower(0, 1) = 1.0;
    for (int k = 0; k < ens->atoms; ++k)
      out.push_back(Complex{root, 0.0} * qcore::embed_site(lower, k, ens->atoms));
    return out;
  }
  const auto& km = std::get<qcore::KerrMode>(model);
  out.push_back(Complex{std::sqrt(km.decay), 0.0} * qcore::annihilation(km.n_max));
  return out;
}

Liouvillian make_liouvillian(const qcore::Operator& h,
                             const std::vector<qcore::Operator>& channels) {
  const int d = h.dim();
  if (static_cast<long>(d) * d > qcore::kDimensionCap)
    throw std::invalid_argument("dimension cap exceeded");
  const Matrix id = Matrix::Identity(d, d);
  Matrix super = Complex{0.0, -1.0} *
                 (Eigen::kroneckerProduct(id, h.matrix()).eval() -
                  Eigen::kroneckerProduct(h.matrix().transpose(), id).eval());
  for (const qcore::Operator& ch : channels) {
    if (ch.dim() != d) throw std::invalid_argument("dimension mismatch");
    const Matrix& c = ch.matrix();
    const Matrix cdc = c.adjoint() * c;
    super += Eigen::kroneckerProduct(c.conjugate(), c).eval();
    super -= 0.5 * Eigen::kroneckerProduct(id, cdc).eval();
    super -= 0.5 * Eigen::kroneckerProduct(cdc.transpose(), id).eval();
  }
  return Liouvillian{d, std::move(super)};
}

Liouvillian liouvillian(const qcore::EmitterModel& model) {
  return make_liouvillian(hamiltonian(model), collapse_operators(model));
}

Matrix propagate(const Liouvillian& lv, const Matrix& rho, double t, double tol_rate) {
  const int d = lv.dim;
  if (rho.rows() != d || rho.cols() != d) throw std::invalid_argument("dimension mismatch");
  if (t < 0.0) throw std::invalid_argument("propagation time must be nonnegative");
  if (t == 0.0) return rho;

  const ConservationGuard guard(rho);
  Vector y = vec(rho);
  double remaining = t;
  double h = std::min(0.05, t);
  while (remaining > 1e-15) {
    h = std::min(h, remaining);
    const Vector full = rk4_step(lv.super, y, h);
    const Vector half = rk4_step(lv.super, rk4_step(lv.super, y, 0.5 * h), 0.5 * h);
    const double err = (half - full).cwiseAbs().maxCoeff() / 15.0;
    const double tol = tol_rate * h * guard.scale;
    if (err <= tol) {
      y = half + (half - full) / 15.0;
      remaining -= h;
      guard.check(y, d);
    }
    const double grow = 0.9 * std::pow(tol / std::max(err, 1e-300), 0.25);
    h *= std::clamp(grow, 0.2, 5.0);
    if (h < 1e-14) throw std::runtime_error("propagation step size underflow");
  }
  return unvec(y, d);
}

qcore::DensityMatrix steady_state(const Liouvillian& lv) {
  Eigen::ComplexEigenSolver<Matrix> es(lv.super);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition of the generator failed");
  int zero_index = -1;
  int zero_count = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()(i)) < 1e-9) {
      ++zero_count;
      zero_index = i;
    }
  }
  if (zero_count == 0) throw std::runtime_error("no stationary state found");
  if (zero_count > 1)
    throw std::runtime_error(
        "degenerate steady state: zero eigenvalue of the generator is not simple");

  Matrix rho = unvec(es.eigenvectors().col(zero_index), lv.dim);
  rho = 0.5 * (rho + rho.adjoint().eval());
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-8)
    throw std::runtime_error("stationary null vector has vanishing trace");
  rho /= tr;
  if ((lv.super * vec(rho)).norm() >= 1e-10)
    throw std::runtime_error("stationary residual exceeds tolerance");
  // a genuine fixed point must survive long propagation unchanged
  const Matrix back = propagate(lv, rho, 10.0);
  if ((back - rho).cwiseAbs().maxCoeff() > 1e-8)
    throw std::runtime_error("stationary state drifts under propagation");
  return qcore::DensityMatrix(std::move(rho));
}

qcore::DensityMatrix relaxed_state(const Liouvillian& lv, const qcore::DensityMatrix& rho0,
                                   double horizon, double tol) {
  if (rho0.dim() != lv.dim) throw std::invalid_argument("dimension mismatch");
  Matrix x = rho0.matrix();
  double elapsed = 0.0;
  const double chunk = 2.0;
  // integrate well below the residual target, otherwise the integrator's own
  // error floor can sit above tol and stall the loop at a converged state
  const double step_tol = 0.01 * tol;
  while (elapsed < horizon) {
    x = propagate(lv, x, chunk, step_tol);
    elapsed += chunk;
    if (residual_norm(lv, x) < tol) {
      x = 0.5 * (x + x.adjoint().eval());
      x /= x.trace();
      return qcore::DensityMatrix(std::move(x));
    }
  }
  throw std::runtime_error("relaxation did not converge within the horizon");
}

Complex multi_time_moment(const Liouvillian& lv, const qcore::DensityMatrix& rho,
                          const std::vector<qcore::Operator>& left_ops,
                          const std::vector<qcore::Operator>& right_ops,
                          const std::vector<double>& times) {
  const std::size_t n = times.size();
  if (n == 0) throw std::invalid_argument("at least one time point required");
  if (left_ops.size() != n || right_ops.size() != n)
    throw std::invalid_argument("one operator pair per time point required");
  if (times.front() < 0.0) throw std::invalid_argument("times must be nonnegative");
  if (!std::is_sorted(times.begin(), times.end()))
    throw std::invalid_argument("times must be sorted ascending");
  if (rho.dim() != lv.dim) throw std::invalid_argument("dimension mismatch");
  for (const auto& op : left_ops)
    if (op.dim() != lv.dim) throw std::invalid_argument("dimension mismatch");
  for (const auto& op : right_ops)
    if (op.dim() != lv.dim) throw std::invalid_argument("dimension mismatch");

  Matrix x = rho.matrix();
  if (times.front() > 0.0) x = propagate(lv, x, times.front());
  for (std::size_t i = 0; i < n; ++i) {
    x = left_ops[i].matrix() * x * right_ops[i].matrix();
    if (i + 1 < n) x = propagate(lv, x, times[i + 1] - times[i]);
  }
  return x.trace();
}

CorrelationSeries intensity_correlation(const Liouvillian& lv,
                                        const qcore::DensityMatrix& rho,
                                        const qcore::Operator& s,
                                        const std::vector<double>& tau_grid) {
  if (tau_grid.empty()) throw std::invalid_argument("lag grid must be nonempty");
  if (tau_grid.front() < 0.0) throw std::invalid_argument("lags must be nonnegative");
  for (std::size_t i = 1; i < tau_grid.size(); ++i)
    if (tau_grid[i] <= tau_grid[i - 1])
      throw std::invalid_argument("lag grid must be strictly increasing");
  if (rho.dim() != lv.dim || s.dim() != lv.dim)
    throw std::invalid_argument("dimension mismatch");

  const Matrix intensity = s.adjoint().matrix() * s.matrix();
  Matrix x = s.matrix() * rho.matrix() * s.adjoint().matrix();
  CorrelationSeries out;
  out.tau = tau_grid;
  double reached = 0.0;
  for (const double tau : tau_grid) {
    x = propagate(lv, x, tau - reached);
    reached = tau;
    out.values.push_back((intensity * x).trace());
  }
  return out;
}

}  // namespace qemit::dynamics
