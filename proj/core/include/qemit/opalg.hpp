#ifndef QEMIT_OPALG_HPP
#define QEMIT_OPALG_HPP

// Symbolic layer for polynomials in detection-mode field operators E_j^(+/-).
// A factor carries a mode index, a frequency sign, an integer power, a
// symbolic time label and a conjugation bit (set by partial transposition).
// Ordering is a rewriting prescription: factors are sorted into the canonical
// normal-plus-time order and merged; commutators are never expanded.

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qemit::opalg {

using Complex = std::complex<double>;
using TimeLabel = int;

enum class Sign : std::uint8_t { minus = 0, plus = 1 };

struct FieldFactor {
  int mode = 1;  // 1-based detection mode index
  Sign sign = Sign::plus;
  int power = 1;  // >= 0; zero powers vanish on normalization
  TimeLabel time = 0;
  bool conjugated = false;  // operator sits under the transposition star

  friend bool operator==(const FieldFactor&, const FieldFactor&) = default;
};

struct Monomial {
  Complex coeff{1.0, 0.0};
  std::vector<FieldFactor> factors;  // empty list = constant term

  friend bool operator==(const Monomial&, const Monomial&) = default;
};

struct OperatorPoly {
  std::vector<Monomial> monomials;

  friend bool operator==(const OperatorPoly&, const OperatorPoly&) = default;
};

// Complex mode functions chi_j of the emission directions, all nonzero.
struct ModeGeometry {
  explicit ModeGeometry(std::vector<Complex> chi_in);
  int modes() const { return static_cast<int>(chi.size()); }
  Complex chi_of(int mode) const;  // 1-based

  std::vector<Complex> chi;
};

struct TimedPower {
  TimeLabel time = 0;
  int power = 0;

  friend auto operator<=>(const TimedPower&, const TimedPower&) = default;
};

// Identifier of a reduced source moment <S+^[neg] S^[pos]>: dagger powers per
// time label with strictly increasing labels, lowering powers with strictly
// decreasing labels. Zero powers are dropped; the single-time case collapses
// to the order pair (a, b).
struct SourceMomentKey {
  std::vector<TimedPower> neg;
  std::vector<TimedPower> pos;

  bool single_time() const;
  std::pair<int, int> orders() const;  // (total dagger, total lowering)

  friend auto operator<=>(const SourceMomentKey&, const SourceMomentKey&) = default;
};

SourceMomentKey single_time_key(int a, int b);

struct ReducedTerm {
  Complex prefactor;
  SourceMomentKey key;
};

// --- parsing / printing ---------------------------------------------------
// Grammar:  poly   := term ('+' term)*
//           term   := complex | [complex '*'] factor+
//           factor := 'E' mode ('+'|'-') ['~'] ['^' power] ['@' ['t'] label]
// Tokens are whitespace separated; complex literals are "a", "bi" or "a+bi".
// '~' marks a conjugated factor (produced by partial transposition).
OperatorPoly parse_expr(const std::string& text);
OperatorPoly parse_expr(const std::string& text, int mode_count);
std::string to_string(const OperatorPoly& p);

// --- ordering and transposition -------------------------------------------
// Canonical order: all minus factors left of all plus factors; minus factors
// by increasing time label, plus factors by decreasing; ties broken by mode
// index ascending. Equal factors merge by adding powers, equal monomials by
// adding coefficients. Idempotent and linear over monomials.
OperatorPoly normal_time_order(const OperatorPoly& p);
bool is_normal_time_ordered(const OperatorPoly& p);

// Partial transposition on the given modes: signs flip (+<->-), conjugation
// bits toggle, and the canonical re-sort realizes the block reversal, so a
// mode block E^(-)n E^(+)k maps to the conjugated block E^(-)k E^(+)n.
// Involution on normalized input. The transposed set must be a proper
// nonempty subset of {1..mode_count}.
OperatorPoly partial_transpose(const OperatorPoly& p,
                               const std::vector<int>& transposed_modes,
                               int mode_count);

// Substitute E_j^(+) = chi_j S per mode: each monomial becomes a complex
// prefactor (coefficient times chi monomial; conjugated for minus factors and
// conjugated once more for factors under the star) and a SourceMomentKey.
// Factors under the star contribute with dagger/lowering roles exchanged.
std::vector<ReducedTerm> reduce_to_source(const OperatorPoly& p, const ModeGeometry& g);

// --- witness matrix skeletons ---------------------------------------------
using PairIndex = std::pair<int, int>;  // (n, l): dagger power n, lowering power l
using MultiIndex = std::vector<int>;    // plus-power per mode of the f expansion
using SymbolicMatrix = std::vector<std::vector<OperatorPoly>>;

// entry[(n',l'),(n,l)] = E^(-)^(l'+n) E^(+)^(n'+l) on mode 1.
// idx must be non-empty, pairwise distinct and contain (0,0).
SymbolicMatrix build_h_matrix(const std::vector<PairIndex>& idx);

// Partially transposed matrix of <(f+ f)^PT> re-collected as a quadratic form
// in the original coefficients: entry [row][col] carries minus-powers row_j
// and plus-powers col_j per mode, with the transposed modes' factors under
// the star. Entries are normal-time-ordered. The pair overload is the
// two-mode form f = sum c_{n,l} E2^(+)n E1^(+)l.
SymbolicMatrix build_f_pt_matrix(const std::vector<PairIndex>& idx,
                                 const ModeGeometry& g,
                                 const std::vector<int>& bipartition);
SymbolicMatrix build_f_pt_matrix(const std::vector<MultiIndex>& idx,
                                 const ModeGeometry& g,
                                 const std::vector<int>& bipartition);
SymbolicMatrix build_f_pt_matrix(const std::vector<MultiIndex>& idx,
                                 const ModeGeometry& g,
                                 const std::vector<int>& bipartition,
                                 const std::vector<TimeLabel>& mode_times);

std::vector<MultiIndex> pair_to_multi(const std::vector<PairIndex>& idx);

// Full index sets of maximal total order K, deterministic enumeration with
// the zero index first.
std::vector<PairIndex> full_pair_set(int order);
std::vector<MultiIndex> full_multi_set(int modes, int order);

}  // namespace qemit::opalg

#endif
