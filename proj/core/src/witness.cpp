#include "qemit/witness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qemit::witness {

namespace {

using opalg::MultiIndex;
using opalg::PairIndex;
using opalg::SourceMomentKey;

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

std::string describe(const qcore::EmitterModel& model) {
  std::ostringstream os;
  if (const auto* ens = std::get_if<qcore::TwoLevelEnsemble>(&model)) {
    os << "two-level ensemble N=" << ens->atoms
       << (ens->collective_decay ? ", collective decay" : ", independent decay");
  } else {
    const auto& km = std::get<qcore::KerrMode>(model);
    os << "Kerr mode n_max=" << km.n_max;
  }
  return os.str();
}

// powers of the source operator, grown on demand; s_pow[p] = S^p
class PowerCache {
 public:
  explicit PowerCache(Matrix s) { pow_.push_back(Matrix::Identity(s.rows(), s.cols())), pow_.push_back(std::move(s)); }

  const Matrix& operator()(int p) {
    while (static_cast<int>(pow_.size()) <= p) pow_.push_back(pow_.back() * pow_[1]);
    return pow_[static_cast<std::size_t>(p)];
  }

 private:
  std::vector<Matrix> pow_;
};

// canonical orientation keeps <S†^a S^b> = conj(<S†^b S^a>) exact to the bit
Complex ordered_moment(PowerCache& pow, int a, int b, const Matrix& rho) {
  if (a == 0 && b == 0) return Complex{1.0, 0.0};
  if (a > b) return std::conj((pow(b).adjoint() * pow(a) * rho).trace());
  return (pow(a).adjoint() * pow(b) * rho).trace();
}

Matrix assemble_from_symbolic(const opalg::SymbolicMatrix& sym,
                              const opalg::ModeGeometry& geometry,
                              const MomentTable& table) {
  const int n = static_cast<int>(sym.size());
  Matrix out = Matrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      Complex v{0.0, 0.0};
      for (const auto& term :
           opalg::reduce_to_source(sym[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)],
                                   geometry))
        v += term.prefactor * table.at(term.key);
      out(r, c) = v;
    }
  }
  return out;
}

int max_index_order(const std::vector<MultiIndex>& idx) {
  int best = 0;
  for (const MultiIndex& mi : idx) {
    int total = 0;
    for (int p : mi) total += p;
    best = std::max(best, total);
  }
  return best;
}

}  // namespace

Complex MomentTable::at(const SourceMomentKey& key) const {
  const auto it = values.find(key);
  if (it == values.end()) {
    if (!key.single_time()) fail("moment table holds single-time moments only");
    const auto [a, b] = key.orders();
    std::ostringstream os;
    os << "moment table missing key (" << a << "," << b << "); max_order too small";
    fail(os.str());
  }
  return it->second;
}

MomentTable moment_table(const qcore::EmitterModel& model, const qcore::DensityMatrix& rho,
                         int max_order, std::string state_tag) {
  if (max_order < 1) fail("max_order must be at least 1");
  const int dim = qcore::hilbert_dimension(model);
  if (rho.dim() != dim) fail("dimension mismatch");
  const int top = 2 * max_order;

  if (const auto* km = std::get_if<qcore::KerrMode>(&model)) {
    if (top > km->n_max) fail("truncation too small for the requested moment order");
    const double edge = rho.matrix()(km->n_max, km->n_max).real() +
                        rho.matrix()(km->n_max - 1, km->n_max - 1).real();
    if (edge >= 1e-8) fail("state populates the truncation edge; enlarge n_max");
  }

  PowerCache pow(qcore::source_operator(model).matrix());
  MomentTable table;
  table.max_order = max_order;
  table.provenance = describe(model) + ", " + state_tag;
  for (int a = 0; a <= top; ++a)
    for (int b = a; b <= top; ++b) {
      const Complex v = ordered_moment(pow, a, b, rho.matrix());
      table.values[opalg::single_time_key(a, b)] = v;
      if (a != b) table.values[opalg::single_time_key(b, a)] = std::conj(v);
    }
  return table;
}

WitnessMatrix assemble_h(const MomentTable& table, Complex chi,
                         const std::vector<PairIndex>& idx) {
  const opalg::ModeGeometry geometry({chi});
  WitnessMatrix wm;
  wm.pair_labels = idx;
  wm.chi = {chi};
  wm.values = assemble_from_symbolic(opalg::build_h_matrix(idx), geometry, table);
  return wm;
}

WitnessMatrix assemble_f_pt(const MomentTable& table, const opalg::ModeGeometry& geometry,
                            const std::vector<PairIndex>& idx,
                            const std::vector<int>& bipartition) {
  WitnessMatrix wm;
  wm.pair_labels = idx;
  wm.chi = geometry.chi;
  wm.bipartition = bipartition;
  wm.values =
      assemble_from_symbolic(opalg::build_f_pt_matrix(idx, geometry, bipartition), geometry, table);
  return wm;
}

WitnessMatrix assemble_f_pt(const MomentTable& table, const opalg::ModeGeometry& geometry,
                            const std::vector<MultiIndex>& idx,
                            const std::vector<int>& bipartition) {
  WitnessMatrix wm;
  wm.multi_labels = idx;
  wm.chi = geometry.chi;
  wm.bipartition = bipartition;
  wm.values =
      assemble_from_symbolic(opalg::build_f_pt_matrix(idx, geometry, bipartition), geometry, table);
  return wm;
}

Verdict verdict_of(const WitnessMatrix& matrix) {
  const Matrix& m = matrix.values;
  const int n = static_cast<int>(m.rows());
  if (n == 0 || m.cols() != n) fail("witness matrix must be square and nonempty");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("witness matrix lost Hermiticity");
  const Matrix h = 0.5 * (m + m.adjoint());

  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Verdict v;
  v.min_eigenvalue = es.eigenvalues()(0);
  v.witness_coefficients = es.eigenvectors().col(0);
  v.classification = v.min_eigenvalue < -kNegativityTolerance ? Classification::negative
                                                              : Classification::nonnegative;

  // every principal minor for small matrices, leading minors beyond that
  double worst = std::numeric_limits<double>::infinity();
  std::vector<int> worst_set;
  auto consider = [&](const std::vector<int>& rows) {
    Matrix sub(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j)
        sub(static_cast<int>(i), static_cast<int>(j)) =
            h(rows[i], rows[j]);
    const double det = sub.determinant().real();
    if (det < worst) {
      worst = det;
      worst_set = rows;
    }
  };
  if (n <= 16) {
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      std::vector<int> rows;
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) rows.push_back(i);
      consider(rows);
    }
  } else {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i) {
      rows.push_back(i);
      consider(rows);
    }
  }
  v.worst_minor = std::move(worst_set);
  v.worst_minor_value = worst;
  return v;
}

Verdict nonclassicality_verdict(const MomentTable& table, Complex chi,
                                const std::vector<PairIndex>& idx) {
  return verdict_of(assemble_h(table, chi, idx));
}

Verdict entanglement_verdict(const MomentTable& table, const opalg::ModeGeometry& geometry,
                             const std::vector<PairIndex>& idx,
                             const std::vector<int>& bipartition) {
  return verdict_of(assemble_f_pt(table, geometry, idx, bipartition));
}

Verdict entanglement_verdict(const MomentTable& table, const opalg::ModeGeometry& geometry,
                             const std::vector<MultiIndex>& idx,
                             const std::vector<int>& bipartition) {
  return verdict_of(assemble_f_pt(table, geometry, idx, bipartition));
}

std::vector<std::pair<MultiIndex, Complex>> map_witness(
    const std::vector<std::pair<PairIndex, Complex>>& h_coeffs, int modes) {
  if (modes < 2) fail("split needs at least two modes");
  const int lower_size = modes / 2;
  const int upper_size = modes - lower_size;
  std::vector<std::pair<MultiIndex, Complex>> out;
  out.reserve(h_coeffs.size());
  for (const auto& [pair, value] : h_coeffs) {
    const auto [n, l] = pair;
    if (n < 0 || l < 0) fail("negative exponent in coefficient index");
    MultiIndex mi(static_cast<std::size_t>(modes), 0);
    for (int u = 0; u < l; ++u) ++mi[static_cast<std::size_t>(u % lower_size)];
    for (int u = 0; u < n; ++u)
      ++mi[static_cast<std::size_t>(lower_size + u % upper_size)];
    out.emplace_back(std::move(mi), value);
  }
  return out;
}

ScanResult multipartite_scan(const MomentTable& table, const opalg::ModeGeometry& geometry,
                             const std::vector<MultiIndex>& idx) {
  const int m = geometry.modes();
  if (m < 3) fail("multipartite scan needs at least three modes");
  const int order = max_index_order(idx);
  if (2 * order < m) {
    std::ostringstream os;
    os << "index set order " << order << " probes moments of order " << 2 * order
       << " < " << m << "; order too low for an " << m << "-mode split";
    fail(os.str());
  }

  ScanResult result;
  result.all_negative = true;
  for (unsigned mask = 1; mask < (1u << (m - 1)); ++mask) {
    std::vector<int> tset;
    for (int j = 0; j < m - 1; ++j)
      if (mask & (1u << j)) tset.push_back(j + 2);  // mode 1 stays untransposed
    Verdict v = entanglement_verdict(table, geometry, idx, tset);
    if (v.classification != Classification::negative) result.all_negative = false;
    result.verdicts.emplace(std::move(tset), std::move(v));
  }
  result.classification = result.all_negative ? "multipartite entangled (all bipartitions NPT)"
                                              : "not all bipartitions NPT";
  return result;
}

Verdict multi_time_witness(const qcore::EmitterModel& model, const dynamics::Liouvillian& lv,
                           const qcore::DensityMatrix& rho_ss,
                           const std::vector<PairIndex>& idx,
                           const std::vector<double>& mode_times,
                           const opalg::ModeGeometry& geometry,
                           const std::vector<int>& bipartition) {
  const int m = geometry.modes();
  if (static_cast<int>(mode_times.size()) != m) fail("one time per mode required");
  if (!std::is_sorted(mode_times.begin(), mode_times.end()))
    fail("times must be sorted ascending");
  if (mode_times.front() < 0.0) fail("times must be nonnegative");
  if (rho_ss.dim() != lv.dim) fail("dimension mismatch");

  // label each mode by the rank of its physical time
  std::vector<double> distinct = mode_times;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<opalg::TimeLabel> labels;
  for (const double t : mode_times)
    labels.push_back(static_cast<opalg::TimeLabel>(
        std::lower_bound(distinct.begin(), distinct.end(), t) - distinct.begin()));

  const auto sym =
      opalg::build_f_pt_matrix(opalg::pair_to_multi(idx), geometry, bipartition, labels);
  PowerCache pow(qcore::source_operator(model).matrix());
  if (pow(1).rows() != lv.dim) fail("dimension mismatch");
  const qcore::Operator id = qcore::identity(lv.dim);

  auto evaluate_key = [&](const SourceMomentKey& key) -> Complex {
    if (key.single_time()) {
      const auto [a, b] = key.orders();
      return ordered_moment(pow, a, b, rho_ss.matrix());
    }
    std::map<opalg::TimeLabel, std::pair<int, int>> per_label;  // label -> (daggers, lowerings)
    for (const auto& tp : key.neg) per_label[tp.time].first += tp.power;
    for (const auto& tp : key.pos) per_label[tp.time].second += tp.power;
    std::vector<qcore::Operator> lefts, rights;
    std::vector<double> times;
    std::size_t i = 0;
    for (const auto& [label, powers] : per_label) {
      const auto [daggers, lowerings] = powers;
      times.push_back(distinct[static_cast<std::size_t>(label)]);
      if (i + 1 < per_label.size()) {
        lefts.emplace_back(pow(lowerings));
        rights.emplace_back(Matrix(pow(daggers).adjoint()));
      } else {
        lefts.emplace_back(Matrix(pow(daggers).adjoint() * pow(lowerings)));
        rights.push_back(id);
      }
      ++i;
    }
    return dynamics::multi_time_moment(lv, rho_ss, lefts, rights, times);
  };

  const int n = static_cast<int>(sym.size());
  Matrix numeric = Matrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) {
      Complex v{0.0, 0.0};
      for (const auto& term :
           opalg::reduce_to_source(sym[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)],
                                   geometry))
        v += term.prefactor * evaluate_key(term.key);
      numeric(r, c) = v;
      if (c != r) numeric(c, r) = std::conj(v);
    }
  }

  WitnessMatrix wm;
  wm.pair_labels = idx;
  wm.chi = geometry.chi;
  wm.bipartition = bipartition;
  wm.values = std::move(numeric);
  return verdict_of(wm);
}

std::vector<PairIndex> atom_witness_index(const MomentTable& table, int atoms) {
  if (atoms < 1) fail("atom count must be positive");
  const int total = atoms + 1;
  int best_k = -1;
  double best = 0.0;
  for (int k = 0; k <= total; ++k) {
    const double mag = std::abs(table.at(opalg::single_time_key(k, total - k)));
    if (mag > best) {
      best = mag;
      best_k = k;
    }
  }
  if (best_k < 0 || best < 1e-14)
    throw std::runtime_error("all moments of the nilpotency order vanish; no witness index");
  return {{0, 0}, {best_k, total - best_k}};
}

std::vector<PairIndex> quadrature_index() { return {{0, 0}, {1, 0}, {0, 1}}; }

std::vector<PairIndex> intensity_index() { return {{0, 0}, {1, 1}}; }

}  // namespace qemit::witness
