#pragma once

#include <Eigen/Dense>
#include <complex>
#include <variant>
#include <vector>

namespace qemit::qcore {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// hard ceiling on any Hilbert-space dimension we will materialize densely
inline constexpr int kDimensionCap = 4096;

// N two-level atoms at fixed positions; positions enter only through the
// per-atom phases. All rates are in units of the single-atom decay.
struct TwoLevelEnsemble {
  int atoms = 1;
  std::vector<double> phases;  // one entry per atom, radians
  double rabi = 0.0;
  double detuning = 0.0;
  double decay = 1.0;
  bool collective_decay = false;
};

// single bosonic mode with Kerr nonlinearity, truncated at n_max excitations
struct KerrMode {
  int n_max = 2;
  double kerr = 0.0;
  double drive = 0.0;
  double detuning = 0.0;
  double decay = 1.0;
};

using EmitterModel = std::variant<TwoLevelEnsemble, KerrMode>;

// throws std::invalid_argument on malformed models or when the dimension
// would exceed kDimensionCap
int hilbert_dimension(const EmitterModel& model);

class Operator {
 public:
  explicit Operator(Matrix m);  // square with finite entries

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Matrix& matrix() const { return mat_; }
  Operator adjoint() const { return Operator(mat_.adjoint()); }

 private:
  Matrix mat_;
};

Operator operator*(const Operator& a, const Operator& b);
Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(Complex c, const Operator& a);

class DensityMatrix {
 public:
  // Hermitian within 1e-10, trace 1 within 1e-10, min eigenvalue >= -1e-8
  explicit DensityMatrix(Matrix m);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Matrix& matrix() const { return mat_; }

 private:
  Matrix mat_;
};

Operator identity(int dim);

// truncated ladder operator on n_max+1 levels: a|n> = sqrt(n)|n-1>, a|0> = 0
Operator annihilation(int n_max);

// local 2x2 operator acting on atom `site` (0-based, site 0 leftmost tensor
// factor) embedded into the 2^atoms product space
Operator embed_site(const Eigen::Matrix2cd& local, int site, int atoms);

// collective lowering operator: phase-weighted sum of single-atom lowering
// operators for the ensemble, the annihilation operator for the Kerr mode
Operator source_operator(const EmitterModel& model);

// all population in the lowest product state
DensityMatrix ground_state(const EmitterModel& model);

// projector onto the given amplitudes, normalized; rejects the zero vector
DensityMatrix pure_state(const Vector& amplitudes);

// trace(op * rho)
Complex expectation(const DensityMatrix& rho, const Operator& op);

}  // namespace qemit::qcore
