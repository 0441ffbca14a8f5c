#include "qemit/qcore.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qemit::qcore {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

void check_finite(const Matrix& m) {
  if (!m.allFinite()) fail("operator entries must be finite");
}

}  // namespace

int hilbert_dimension(const EmitterModel& model) {
  if (const auto* ens = std::get_if<TwoLevelEnsemble>(&model)) {
    if (ens->atoms < 1) fail("ensemble needs at least one atom");
    if (ens->phases.size() != static_cast<std::size_t>(ens->atoms))
      fail("ensemble needs one phase per atom");
    if (ens->rabi < 0.0) fail("drive amplitude must be nonnegative");
    if (!(ens->decay > 0.0)) fail("decay rate must be positive");
    if (ens->atoms > 12) fail("dimension cap exceeded");  // 2^13 > kDimensionCap
    return 1 << ens->atoms;
  }
  const auto& kerr = std::get<KerrMode>(model);
  if (kerr.n_max < 2) fail("Fock truncation must be at least 2");
  if (kerr.drive < 0.0) fail("drive amplitude must be nonnegative");
  if (!(kerr.decay > 0.0)) fail("decay rate must be positive");
  if (kerr.n_max + 1 > kDimensionCap) fail("dimension cap exceeded");
  return kerr.n_max + 1;
}

Operator::Operator(Matrix m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() == 0) fail("operator must be square");
  check_finite(mat_);
}

Operator operator*(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) fail("dimension mismatch");
  return Operator(a.matrix() * b.matrix());
}

Operator operator+(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) fail("dimension mismatch");
  return Operator(a.matrix() + b.matrix());
}

Operator operator-(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) fail("dimension mismatch");
  return Operator(a.matrix() - b.matrix());
}

Operator operator*(Complex c, const Operator& a) { return Operator(c * a.matrix()); }

DensityMatrix::DensityMatrix(Matrix m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() == 0) fail("density matrix must be square");
  check_finite(mat_);
  if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    fail("density matrix must be Hermitian");
  if (std::abs(mat_.trace() - Complex{1.0, 0.0}) > 1e-10)
    fail("density matrix must have unit trace");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (mat_ + mat_.adjoint().eval()),
                                           Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8) fail("density matrix must be positive");
}

Operator identity(int dim) {
  if (dim < 1) fail("dimension must be positive");
  return Operator(Matrix::Identity(dim, dim));
}

Operator annihilation(int n_max) {
  if (n_max < 1) fail("truncation must be at least 1");
  Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return Operator(std::move(a));
}

Operator embed_site(const Eigen::Matrix2cd& local, int site, int atoms) {
  if (atoms < 1 || atoms > 12) fail("atom count out of range");
  if (site < 0 || site >= atoms) fail("site index out of range");
  const int dim = 1 << atoms;
  const int shift = atoms - 1 - site;
  Matrix out = Matrix::Zero(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const int b = (j >> shift) & 1;
    for (int bp = 0; bp < 2; ++bp) {
      const Complex v = local(bp, b);
      if (v == Complex{0.0, 0.0}) continue;  // keeps nilpotency exact
      const int i = (j & ~(1 << shift)) | (bp << shift);
      out(i, j) += v;
    }
  }
  return Operator(std::move(out));
}

Operator source_operator(const EmitterModel& model) {
  const int dim = hilbert_dimension(model);
  if (const auto* ens = std::get_if<TwoLevelEnsemble>(&model)) {
    Matrix s = Matrix::Zero(dim, dim);
    Eigen::Matrix2cd lower = Eigen::Matrix2cd::Zero();
    lower(0, 1) = Complex{1.0, 0.0};  // |lower><upper|
    for (int k = 0; k < ens->atoms; ++k)
      s += std::polar(1.0, ens->phases[static_cast<std::size_t>(k)]) *
           embed_site(lower, k, ens->atoms).matrix();
    return Operator(std::move(s));
  }
  return annihilation(std::get<KerrMode>(model).n_max);
}

DensityMatrix ground_state(const EmitterModel& model) {
  const int dim = hilbert_dimension(model);
  Matrix rho = Matrix::Zero(dim, dim);
  rho(0, 0) = Complex{1.0, 0.0};
  return DensityMatrix(std::move(rho));
}

DensityMatrix pure_state(const Vector& amplitudes) {
  if (amplitudes.size() == 0) fail("state vector must be nonempty");
  if (!amplitudes.allFinite()) fail("state vector entries must be finite");
  const double norm = amplitudes.norm();
  if (norm < 1e-300) fail("state vector must be nonzero");
  const Vector psi = amplitudes / norm;
  return DensityMatrix(psi * psi.adjoint());
}

Complex expectation(const DensityMatrix& rho, const Operator& op) {
  if (rho.dim() != op.dim()) fail("dimension mismatch");
  return (op.matrix() * rho.matrix()).trace();
}

}  // namespace qemit::qcore
