#include "qemit/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <variant>

#include "qemit/dynamics.hpp"
#include "qemit/opalg.hpp"

namespace qemit::oracle {

namespace {

[[noreturn]] void fail(const std::string& message) { throw std::invalid_argument(message); }

// sqrt(n! / prod k_j!), the splitter multinomial weight
double multinomial_root(int n, const std::vector<int>& k) {
  double lg = std::lgamma(double(n) + 1.0);
  for (int kj : k) lg -= std::lgamma(double(kj) + 1.0);
  return std::sqrt(std::exp(lg));
}

void decode(std::size_t index, int modes, int base, std::vector<int>& digits) {
  for (int j = modes - 1; j >= 0; --j) {
    digits[static_cast<std::size_t>(j)] = static_cast<int>(index % std::size_t(base));
    index /= std::size_t(base);
  }
}

void check_bipartition(int modes, const std::vector<int>& transposed) {
  if (transposed.empty()) fail("bipartition must transpose at least one mode");
  int previous = 1;
  for (int mode : transposed) {
    if (mode <= previous) fail("bipartition modes must be strictly ascending and exclude mode 1");
    if (mode > modes) fail("bipartition mode out of range");
    previous = mode;
  }
}

std::vector<std::vector<int>> all_bipartitions(int modes) {
  std::vector<std::vector<int>> out;
  const unsigned count = 1u << (modes - 1);
  for (unsigned mask = 1; mask < count; ++mask) {
    std::vector<int> transposed;
    for (int mode = 2; mode <= modes; ++mode)
      if (mask & (1u << (mode - 2))) transposed.push_back(mode);
    out.push_back(std::move(transposed));
  }
  return out;
}

}  // namespace

SplitterSpec::SplitterSpec(std::vector<Complex> amps) : amplitudes(std::move(amps)) {
  if (amplitudes.size() < 2) fail("splitter needs at least two outputs");
  double norm = 0.0;
  for (const Complex& a : amplitudes) norm += std::norm(a);
  if (std::abs(norm - 1.0) > 1e-12) fail("splitter amplitudes must be unit-normalized");
  for (const Complex& a : amplitudes) {
    if (a == Complex{0.0, 0.0}) continue;
    const Complex phase = std::conj(a) / std::abs(a);
    for (Complex& b : amplitudes) b *= phase;
    break;
  }
}

MultimodeState split_state(const qcore::DensityMatrix& rho_single, const SplitterSpec& spec,
                           int per_mode_cap) {
  const int dim_in = rho_single.dim();
  const int modes = spec.modes();
  if (rho_single.matrix()(dim_in - 1, dim_in - 1).real() >= 1e-8)
    fail("input populates the truncation edge; enlarge its truncation");
  const int cap = per_mode_cap < 0 ? dim_in - 1 : per_mode_cap;
  if (cap < dim_in - 1) fail("per-mode truncation cannot hold the input photon number");

  std::size_t dim_out = 1;
  for (int j = 0; j < modes; ++j) {
    dim_out *= std::size_t(cap) + 1;
    if (dim_out > std::size_t(qcore::kDimensionCap)) fail("dimension cap exceeded");
  }

  Matrix isometry = Matrix::Zero(Eigen::Index(dim_out), dim_in);
  std::vector<int> k(static_cast<std::size_t>(modes));
  for (std::size_t row = 0; row < dim_out; ++row) {
    decode(row, modes, cap + 1, k);
    int total = 0;
    for (int kj : k) total += kj;
    if (total >= dim_in) continue;
    Complex weight{multinomial_root(total, k), 0.0};
    for (int j = 0; j < modes; ++j)
      for (int p = 0; p < k[static_cast<std::size_t>(j)]; ++p)
        weight *= spec.amplitudes[static_cast<std::size_t>(j)];
    isometry(Eigen::Index(row), total) = weight;
  }

  Matrix image = isometry * rho_single.matrix() * isometry.adjoint();
  return {modes, cap, qcore::DensityMatrix{image}};
}

Matrix partial_transpose(const Matrix& matrix, int modes, int n_max,
                         const std::vector<int>& transposed) {
  check_bipartition(modes, transposed);
  const int base = n_max + 1;
  std::size_t dim = 1;
  for (int j = 0; j < modes; ++j) dim *= std::size_t(base);
  if (Eigen::Index(dim) != matrix.rows() || matrix.rows() != matrix.cols())
    fail("matrix does not match the mode layout");
  std::vector<bool> flip(static_cast<std::size_t>(modes), false);
  for (int mode : transposed) flip[static_cast<std::size_t>(mode - 1)] = true;

  Matrix out = Matrix::Zero(Eigen::Index(dim), Eigen::Index(dim));
  std::vector<int> r(static_cast<std::size_t>(modes));
  std::vector<int> c(static_cast<std::size_t>(modes));
  for (std::size_t row = 0; row < dim; ++row) {
    decode(row, modes, base, r);
    for (std::size_t col = 0; col < dim; ++col) {
      decode(col, modes, base, c);
      std::size_t row_t = 0;
      std::size_t col_t = 0;
      for (int j = 0; j < modes; ++j) {
        const std::size_t jj = static_cast<std::size_t>(j);
        row_t = row_t * std::size_t(base) + std::size_t(flip[jj] ? c[jj] : r[jj]);
        col_t = col_t * std::size_t(base) + std::size_t(flip[jj] ? r[jj] : c[jj]);
      }
      out(Eigen::Index(row_t), Eigen::Index(col_t)) = matrix(Eigen::Index(row), Eigen::Index(col));
    }
  }
  return out;
}

Matrix partial_transpose(const MultimodeState& state, const std::vector<int>& transposed) {
  return partial_transpose(state.rho.matrix(), state.modes, state.n_max, transposed);
}

double pt_min_eigenvalue(const MultimodeState& state, const std::vector<int>& transposed) {
  const Matrix pt = partial_transpose(state, transposed);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(pt, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

ValidationReport cross_validate(const qcore::DensityMatrix& rho_single,
                                const SplitterSpec& spec, int order,
                                const std::vector<std::vector<int>>& bipartitions) {
  qcore::KerrMode carrier;
  carrier.n_max = rho_single.dim() - 1;
  const qcore::EmitterModel model{carrier};
  const witness::MomentTable table =
      witness::moment_table(model, rho_single, order, "splitter input");

  const opalg::ModeGeometry geometry(spec.amplitudes);
  const auto idx = opalg::full_multi_set(spec.modes(), order);
  const MultimodeState state = split_state(rho_single, spec);

  ValidationReport report;
  report.sound = true;
  report.note =
      "oracle states are splitter representatives carrying the source's normally "
      "ordered moments, not the emitted field itself";
  const auto& targets = bipartitions.empty() ? all_bipartitions(spec.modes()) : bipartitions;
  for (const auto& transposed : targets) {
    ValidationEntry entry;
    entry.bipartition = transposed;
    entry.verdict = witness::entanglement_verdict(table, geometry, idx, transposed);
    entry.oracle_min_eigenvalue = pt_min_eigenvalue(state, transposed);
    const bool witness_negative =
        entry.verdict.classification == witness::Classification::negative;
    entry.agreement = !witness_negative || entry.oracle_min_eigenvalue < -kPtTolerance;
    report.sound = report.sound && entry.agreement;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

ValidationReport cross_validate(const qcore::EmitterModel& model, const SplitterSpec& spec,
                                int order,
                                const std::vector<std::vector<int>>& bipartitions) {
  if (!std::holds_alternative<qcore::KerrMode>(model))
    fail("only a bosonic source can be brute-forced into a splitter state");
  const auto rho = dynamics::steady_state(dynamics::liouvillian(model));
  return cross_validate(rho, spec, order, bipartitions);
}

}  // namespace qemit::oracle
