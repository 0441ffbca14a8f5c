#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qemit/dynamics.hpp"
#include "qemit/opalg.hpp"
#include "qemit/qcore.hpp"

namespace qemit::witness {

using qcore::Complex;
using qcore::Matrix;

// single-time source moments <S†^a S^b> of one stationary state, the shared
// input for every matrix assembled afterwards
struct MomentTable {
  std::map<opalg::SourceMomentKey, Complex> values;
  std::string provenance;
  int max_order = 0;

  // throws when the key is absent (index order exceeded max_order) or multi-time
  Complex at(const opalg::SourceMomentKey& key) const;
};

// covers every key (a,b) with a,b <= 2*max_order; conjugate symmetry holds by
// construction and (0,0) is pinned to one. For a truncated mode the requested
// orders must stay inside the trustworthy part of the Fock space.
MomentTable moment_table(const qcore::EmitterModel& model, const qcore::DensityMatrix& rho,
                         int max_order, std::string state_tag = "steady state");

struct WitnessMatrix {
  std::vector<opalg::PairIndex> pair_labels;    // one of the label sets is used
  std::vector<opalg::MultiIndex> multi_labels;
  Matrix values;                                // Hermitian within 1e-10
  std::vector<Complex> chi;
  std::vector<int> bipartition;                 // empty for direct forms
};

enum class Classification { negative, nonnegative };

struct Verdict {
  double min_eigenvalue = 0.0;
  std::vector<int> worst_minor;       // row subset realizing the smallest minor
  double worst_minor_value = 0.0;
  Eigen::VectorXcd witness_coefficients;  // unit eigenvector of the smallest eigenvalue
  Classification classification = Classification::nonnegative;
};

// noise floor separating roundoff from certified negativity
inline constexpr double kNegativityTolerance = 1e-10;

WitnessMatrix assemble_h(const MomentTable& table, Complex chi,
                         const std::vector<opalg::PairIndex>& idx);
WitnessMatrix assemble_f_pt(const MomentTable& table, const opalg::ModeGeometry& geometry,
                            const std::vector<opalg::PairIndex>& idx,
                            const std::vector<int>& bipartition);
WitnessMatrix assemble_f_pt(const MomentTable& table, const opalg::ModeGeometry& geometry,
                            const std::vector<opalg::MultiIndex>& idx,
                            const std::vector<int>& bipartition);

// smallest eigenvalue, its eigenvector, and the worst principal minor of the
// assembled matrix; negative classification below -kNegativityTolerance
Verdict verdict_of(const WitnessMatrix& matrix);

Verdict nonclassicality_verdict(const MomentTable& table, Complex chi,
                                const std::vector<opalg::PairIndex>& idx);
Verdict entanglement_verdict(const MomentTable& table, const opalg::ModeGeometry& geometry,
                             const std::vector<opalg::PairIndex>& idx,
                             const std::vector<int>& bipartition);
Verdict entanglement_verdict(const MomentTable& table, const opalg::ModeGeometry& geometry,
                             const std::vector<opalg::MultiIndex>& idx,
                             const std::vector<int>& bipartition);

// re-indexes direct-form coefficients c_{n,l} E-^n E+^l into coefficients of
// the split-mode function: the lowering exponent spreads over the lower block
// of modes and the dagger exponent over the upper block, one unit at a time
// in ascending mode order. For two modes this is (n,l) -> powers {l, n}.
std::vector<std::pair<opalg::MultiIndex, Complex>> map_witness(
    const std::vector<std::pair<opalg::PairIndex, Complex>>& h_coeffs, int modes);

struct ScanResult {
  // transposed mode set (never containing mode 1) -> verdict
  std::map<std::vector<int>, Verdict> verdicts;
  bool all_negative = false;
  std::string classification;
};

// verdicts across every proper bipartition of an M >= 3 mode split; the index
// set must probe moments of order at least M
ScanResult multipartite_scan(const MomentTable& table, const opalg::ModeGeometry& geometry,
                             const std::vector<opalg::MultiIndex>& idx);

// two-time (or equal-time) split-mode matrix evaluated by quantum regression;
// one physical time per mode, sorted ascending
Verdict multi_time_witness(const qcore::EmitterModel& model, const dynamics::Liouvillian& lv,
                           const qcore::DensityMatrix& rho_ss,
                           const std::vector<opalg::PairIndex>& idx,
                           const std::vector<double>& mode_times,
                           const opalg::ModeGeometry& geometry,
                           const std::vector<int>& bipartition);

// {(0,0),(k*,N+1-k*)} with k* maximizing |<S†^k S^(N+1-k)>|; the order-(N+1)
// diagonal entry vanishes by nilpotency, forcing a negative minor whenever
// the off-diagonal moment is nonzero
std::vector<opalg::PairIndex> atom_witness_index(const MomentTable& table, int atoms);

// quadrature set {(0,0),(1,0),(0,1)}: detects squeezing of the source moments
std::vector<opalg::PairIndex> quadrature_index();
// intensity set {(0,0),(1,1)}: detects sub-Poisson intensity fluctuations
std::vector<opalg::PairIndex> intensity_index();

}  // namespace qemit::witness
