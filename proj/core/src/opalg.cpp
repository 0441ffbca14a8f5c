#include "qemit/opalg.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace qemit::opalg {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

Complex ipow(Complex base, int n) {
  Complex r{1.0, 0.0};
  for (int i = 0; i < n; ++i) r *= base;
  return r;
}

// Canonical placement: minus block first, minus by increasing time, plus by
// decreasing time, ties by mode ascending, conjugated after plain.
std::tuple<int, TimeLabel, int, int> order_key(const FieldFactor& f) {
  const int sign_rank = (f.sign == Sign::minus) ? 0 : 1;
  const TimeLabel t = (f.sign == Sign::minus) ? f.time : -f.time;
  return {sign_rank, t, f.mode, f.conjugated ? 1 : 0};
}

bool same_symbol(const FieldFactor& a, const FieldFactor& b) {
  return a.mode == b.mode && a.sign == b.sign && a.time == b.time &&
         a.conjugated == b.conjugated;
}

std::vector<FieldFactor> canonical_factors(std::vector<FieldFactor> fs) {
  std::erase_if(fs, [](const FieldFactor& f) { return f.power == 0; });
  std::stable_sort(fs.begin(), fs.end(), [](const FieldFactor& a, const FieldFactor& b) {
    return order_key(a) < order_key(b);
  });
  std::vector<FieldFactor> merged;
  for (const FieldFactor& f : fs) {
    if (!merged.empty() && same_symbol(merged.back(), f))
      merged.back().power += f.power;
    else
      merged.push_back(f);
  }
  return merged;
}

struct FactorListLess {
  bool operator()(const std::vector<FieldFactor>& a, const std::vector<FieldFactor>& b) const {
    auto key = [](const FieldFactor& f) {
      return std::tuple<int, TimeLabel, int, int, int>{
          static_cast<int>(f.sign), f.time, f.mode, f.conjugated ? 1 : 0, f.power};
    };
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        [&](const FieldFactor& x, const FieldFactor& y) {
                                          return key(x) < key(y);
                                        });
  }
};

void check_factor_modes(const OperatorPoly& p, int mode_count, const char* who) {
  for (const Monomial& m : p.monomials)
    for (const FieldFactor& f : m.factors)
      if (f.mode < 1 || f.mode > mode_count)
        fail(std::string(who) + ": factor mode " + std::to_string(f.mode) +
             " outside declared mode count " + std::to_string(mode_count));
}

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_complex(Complex c) {
  if (c.imag() == 0.0) return fmt_real(c.real());
  if (c.real() == 0.0) return fmt_real(c.imag()) + "i";
  std::string s = fmt_real(c.real());
  s += (c.imag() < 0.0) ? "-" : "+";
  s += fmt_real(std::abs(c.imag()));
  s += "i";
  return s;
}

// --- tokenizer -------------------------------------------------------------

struct Token {
  std::string text;
  std::size_t pos = 0;  // character offset in the input
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    out.push_back({text.substr(start, i - start), start});
  }
  return out;
}

[[noreturn]] void parse_fail(const Token& tok, const std::string& what) {
  fail("parse error at position " + std::to_string(tok.pos) + ": " + what +
       " (token \"" + tok.text + "\")");
}

// "a", "bi", "a+bi", "a-bi"; also bare "i" / "-i" imaginary units.
Complex parse_complex_literal(const Token& tok) {
  const std::string& s = tok.text;
  std::size_t i = 0;
  auto read_signed = [&](double& out, bool& unit_imag) -> bool {
    unit_imag = false;
    double sign = 1.0;
    std::size_t j = i;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) {
      if (s[j] == '-') sign = -1.0;
      ++j;
    }
    if (j < s.size() && (s[j] == 'i' || s[j] == 'I')) {
      out = sign;
      unit_imag = true;
      i = j + 1;
      return true;
    }
    const char* begin = s.c_str() + j;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) return false;
    out = sign * v;
    i = j + static_cast<std::size_t>(end - begin);
    return true;
  };

  double first = 0.0;
  bool first_unit_imag = false;
  if (!read_signed(first, first_unit_imag)) parse_fail(tok, "expected complex literal");
  if (first_unit_imag) {
    if (i != s.size()) parse_fail(tok, "trailing characters after imaginary unit");
    return {0.0, first};
  }
  if (i < s.size() && (s[i] == 'i' || s[i] == 'I')) {
    if (i + 1 != s.size()) parse_fail(tok, "trailing characters after imaginary part");
    return {0.0, first};
  }
  if (i == s.size()) return {first, 0.0};
  double second = 0.0;
  bool second_unit_imag = false;
  if (s[i] != '+' && s[i] != '-') parse_fail(tok, "malformed complex literal");
  if (!read_signed(second, second_unit_imag)) parse_fail(tok, "malformed imaginary part");
  if (second_unit_imag) {
    if (i != s.size()) parse_fail(tok, "trailing characters after imaginary unit");
    return {first, second};
  }
  if (i >= s.size() || (s[i] != 'i' && s[i] != 'I') || i + 1 != s.size())
    parse_fail(tok, "imaginary part must end in 'i'");
  return {first, second};
}

FieldFactor parse_factor(const Token& tok, int mode_count) {
  const std::string& s = tok.text;
  std::size_t i = 1;  // past 'E'
  if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
    parse_fail(tok, "expected mode index after 'E'");
  long mode = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    mode = mode * 10 + (s[i] - '0');
    if (mode > 1'000'000) parse_fail(tok, "mode index too large");
    ++i;
  }
  if (mode < 1) parse_fail(tok, "unknown mode index 0 (modes are 1-based)");
  if (mode_count > 0 && mode > mode_count)
    parse_fail(tok, "unknown mode index " + std::to_string(mode) + " (declared mode count " +
                        std::to_string(mode_count) + ")");
  if (i >= s.size() || (s[i] != '+' && s[i] != '-'))
    parse_fail(tok, "expected '+' or '-' frequency sign");
  FieldFactor f;
  f.mode = static_cast<int>(mode);
  f.sign = (s[i] == '+') ? Sign::plus : Sign::minus;
  ++i;
  if (i < s.size() && s[i] == '~') {
    f.conjugated = true;
    ++i;
  }
  f.power = 1;
  if (i < s.size() && s[i] == '^') {
    ++i;
    if (i < s.size() && s[i] == '-') parse_fail(tok, "negative power");
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
      parse_fail(tok, "expected power after '^'");
    long p = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      p = p * 10 + (s[i] - '0');
      if (p > 1'000'000) parse_fail(tok, "power too large");
      ++i;
    }
    f.power = static_cast<int>(p);
  }
  f.time = 0;
  if (i < s.size() && s[i] == '@') {
    ++i;
    if (i < s.size() && (s[i] == 't' || s[i] == 'T')) ++i;
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
      parse_fail(tok, "expected time label after '@'");
    long t = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      t = t * 10 + (s[i] - '0');
      if (t > 1'000'000) parse_fail(tok, "time label too large");
      ++i;
    }
    f.time = static_cast<TimeLabel>(t);
  }
  if (i != s.size()) parse_fail(tok, "trailing characters in factor");
  return f;
}

bool looks_like_factor(const Token& tok) {
  return tok.text.size() >= 2 && tok.text[0] == 'E' &&
         std::isdigit(static_cast<unsigned char>(tok.text[1]));
}

OperatorPoly parse_impl(const std::string& text, int mode_count) {
  const std::vector<Token> toks = tokenize(text);
  if (toks.empty()) fail("parse error: empty expression");
  OperatorPoly poly;
  std::size_t i = 0;
  while (true) {
    Monomial mono;
    bool have_coeff = false;
    if (i >= toks.size()) fail("parse error: expected term at end of input");
    if (!looks_like_factor(toks[i])) {
      if (toks[i].text == "+" || toks[i].text == "*") parse_fail(toks[i], "expected term");
      mono.coeff = parse_complex_literal(toks[i]);
      have_coeff = true;
      ++i;
      if (i < toks.size() && toks[i].text == "*") {
        ++i;
        if (i >= toks.size() || !looks_like_factor(toks[i]))
          fail("parse error: expected factor after '*'");
      }
    }
    while (i < toks.size() && looks_like_factor(toks[i])) {
      mono.factors.push_back(parse_factor(toks[i], mode_count));
      ++i;
    }
    if (mono.factors.empty() && !have_coeff) parse_fail(toks[i], "expected term");
    poly.monomials.push_back(std::move(mono));
    if (i == toks.size()) break;
    if (toks[i].text != "+") parse_fail(toks[i], "expected '+' between terms");
    ++i;
  }
  return poly;
}

}  // namespace

// --- ModeGeometry ----------------------------------------------------------

ModeGeometry::ModeGeometry(std::vector<Complex> chi_in) : chi(std::move(chi_in)) {
  if (chi.empty()) fail("ModeGeometry: needs at least one mode");
  for (std::size_t j = 0; j < chi.size(); ++j)
    if (chi[j] == Complex{0.0, 0.0})
      fail("ModeGeometry: chi[" + std::to_string(j + 1) + "] is zero (direction unobservable)");
}

Complex ModeGeometry::chi_of(int mode) const {
  if (mode < 1 || mode > modes())
    fail("ModeGeometry: mode " + std::to_string(mode) + " out of range");
  return chi[static_cast<std::size_t>(mode - 1)];
}

// --- SourceMomentKey -------------------------------------------------------

bool SourceMomentKey::single_time() const {
  TimeLabel t = 0;
  bool seen = false;
  for (const auto& e : neg) {
    if (seen && e.time != t) return false;
    t = e.time;
    seen = true;
  }
  for (const auto& e : pos) {
    if (seen && e.time != t) return false;
    t = e.time;
    seen = true;
  }
  return true;
}

std::pair<int, int> SourceMomentKey::orders() const {
  int a = 0, b = 0;
  for (const auto& e : neg) a += e.power;
  for (const auto& e : pos) b += e.power;
  return {a, b};
}

SourceMomentKey single_time_key(int a, int b) {
  SourceMomentKey k;
  if (a > 0) k.neg.push_back({0, a});
  if (b > 0) k.pos.push_back({0, b});
  return k;
}

// --- parse / print ---------------------------------------------------------

OperatorPoly parse_expr(const std::string& text) { return parse_impl(text, 0); }

OperatorPoly parse_expr(const std::string& text, int mode_count) {
  if (mode_count < 1) fail("parse_expr: mode_count must be positive");
  return parse_impl(text, mode_count);
}

std::string to_string(const OperatorPoly& p) {
  if (p.monomials.empty()) return "0";
  std::string out;
  bool first_term = true;
  for (const Monomial& m : p.monomials) {
    if (!first_term) out += " + ";
    first_term = false;
    if (m.factors.empty()) {
      out += fmt_complex(m.coeff);
      continue;
    }
    bool first_factor = true;
    if (m.coeff != Complex{1.0, 0.0}) {
      out += fmt_complex(m.coeff);
      out += " * ";
    }
    for (const FieldFactor& f : m.factors) {
      if (!first_factor) out += " ";
      first_factor = false;
      out += "E" + std::to_string(f.mode);
      out += (f.sign == Sign::plus) ? "+" : "-";
      if (f.conjugated) out += "~";
      if (f.power != 1) out += "^" + std::to_string(f.power);
      if (f.time != 0) out += "@" + std::to_string(f.time);
    }
  }
  return out;
}

// --- ordering --------------------------------------------------------------

OperatorPoly normal_time_order(const OperatorPoly& p) {
  std::map<std::vector<FieldFactor>, Complex, FactorListLess> acc;
  for (const Monomial& m : p.monomials) {
    if (m.coeff == Complex{0.0, 0.0}) continue;
    acc[canonical_factors(m.factors)] += m.coeff;
  }
  OperatorPoly out;
  for (auto& [factors, coeff] : acc) {
    if (coeff == Complex{0.0, 0.0}) continue;
    out.monomials.push_back({coeff, factors});
  }
  return out;
}

bool is_normal_time_ordered(const OperatorPoly& p) { return p == normal_time_order(p); }

// --- partial transposition -------------------------------------------------

OperatorPoly partial_transpose(const OperatorPoly& p,
                               const std::vector<int>& transposed_modes,
                               int mode_count) {
  if (mode_count < 2) fail("partial_transpose: mode_count must be at least 2");
  std::set<int> tset(transposed_modes.begin(), transposed_modes.end());
  if (tset.empty()) fail("partial_transpose: transposed mode set is empty");
  for (int m : tset)
    if (m < 1 || m > mode_count)
      fail("partial_transpose: mode " + std::to_string(m) + " outside {1.." +
           std::to_string(mode_count) + "}");
  if (static_cast<int>(tset.size()) == mode_count)
    fail("partial_transpose: transposing all modes is a full transposition, not a PT test");
  check_factor_modes(p, mode_count, "partial_transpose");

  OperatorPoly flipped;
  flipped.monomials.reserve(p.monomials.size());
  for (const Monomial& m : p.monomials) {
    Monomial out = m;
    for (FieldFactor& f : out.factors) {
      if (tset.count(f.mode) == 0) continue;
      f.sign = (f.sign == Sign::plus) ? Sign::minus : Sign::plus;
      f.conjugated = !f.conjugated;
    }
    flipped.monomials.push_back(std::move(out));
  }
  return normal_time_order(flipped);
}

// --- reduction to source moments -------------------------------------------

std::vector<ReducedTerm> reduce_to_source(const OperatorPoly& p, const ModeGeometry& g) {
  check_factor_modes(p, g.modes(), "reduce_to_source");
  const OperatorPoly n = normal_time_order(p);
  std::vector<ReducedTerm> out;
  out.reserve(n.monomials.size());
  for (const Monomial& m : n.monomials) {
    Complex pref = m.coeff;
    std::map<TimeLabel, int> dagger, lowering;
    for (const FieldFactor& f : m.factors) {
      Complex base = (f.sign == Sign::minus) ? std::conj(g.chi_of(f.mode)) : g.chi_of(f.mode);
      if (f.conjugated) base = std::conj(base);
      pref *= ipow(base, f.power);
      // the star exchanges dagger and lowering roles
      const bool dagger_role = (f.sign == Sign::minus) != f.conjugated;
      (dagger_role ? dagger : lowering)[f.time] += f.power;
    }
    SourceMomentKey key;
    for (const auto& [t, pw] : dagger)
      if (pw > 0) key.neg.push_back({t, pw});  // map order = increasing time
    for (auto it = lowering.rbegin(); it != lowering.rend(); ++it)
      if (it->second > 0) key.pos.push_back({it->first, it->second});
    out.push_back({pref, std::move(key)});
  }
  return out;
}

// --- witness matrix skeletons ----------------------------------------------

namespace {

void check_pair_idx(const std::vector<PairIndex>& idx) {
  if (idx.empty()) fail("index set is empty");
  std::set<PairIndex> seen;
  bool has_zero = false;
  for (const PairIndex& pr : idx) {
    if (pr.first < 0 || pr.second < 0) fail("index pair with negative entry");
    if (!seen.insert(pr).second)
      fail("duplicate index pair (" + std::to_string(pr.first) + "," +
           std::to_string(pr.second) + ")");
    if (pr.first == 0 && pr.second == 0) has_zero = true;
  }
  if (!has_zero) fail("index set must contain (0,0)");
}

void check_multi_idx(const std::vector<MultiIndex>& idx, int modes) {
  if (idx.empty()) fail("index set is empty");
  std::set<MultiIndex> seen;
  bool has_zero = false;
  for (const MultiIndex& mi : idx) {
    if (static_cast<int>(mi.size()) != modes)
      fail("multi-index length " + std::to_string(mi.size()) + " does not match mode count " +
           std::to_string(modes));
    bool zero = true;
    for (int e : mi) {
      if (e < 0) fail("multi-index with negative entry");
      if (e != 0) zero = false;
    }
    if (!seen.insert(mi).second) fail("duplicate multi-index");
    if (zero) has_zero = true;
  }
  if (!has_zero) fail("index set must contain the zero multi-index");
}

std::vector<bool> bipartition_mask(const std::vector<int>& bipartition, int modes) {
  std::set<int> tset(bipartition.begin(), bipartition.end());
  if (tset.empty()) fail("bipartition is empty");
  for (int m : tset)
    if (m < 1 || m > modes)
      fail("bipartition mode " + std::to_string(m) + " outside {1.." + std::to_string(modes) + "}");
  if (static_cast<int>(tset.size()) == modes)
    fail("bipartition covers all modes (needs 0 < m < M)");
  std::vector<bool> mask(static_cast<std::size_t>(modes) + 1, false);
  for (int m : tset) mask[static_cast<std::size_t>(m)] = true;
  return mask;
}

}  // namespace

SymbolicMatrix build_h_matrix(const std::vector<PairIndex>& idx) {
  check_pair_idx(idx);
  const std::size_t k = idx.size();
  SymbolicMatrix mat(k, std::vector<OperatorPoly>(k));
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const auto [np, lp] = idx[r];  // row (n', l')
      const auto [n, l] = idx[c];
      Monomial m;
      if (lp + n > 0) m.factors.push_back({1, Sign::minus, lp + n, 0, false});
      if (np + l > 0) m.factors.push_back({1, Sign::plus, np + l, 0, false});
      mat[r][c] = normal_time_order(OperatorPoly{{m}});
    }
  }
  return mat;
}

std::vector<MultiIndex> pair_to_multi(const std::vector<PairIndex>& idx) {
  std::vector<MultiIndex> out;
  out.reserve(idx.size());
  for (const PairIndex& pr : idx) out.push_back({pr.second, pr.first});  // (n,l) -> (l on 1, n on 2)
  return out;
}

SymbolicMatrix build_f_pt_matrix(const std::vector<PairIndex>& idx,
                                 const ModeGeometry& g,
                                 const std::vector<int>& bipartition) {
  if (g.modes() != 2) fail("build_f_pt_matrix: pair index form requires a 2-mode geometry");
  check_pair_idx(idx);
  return build_f_pt_matrix(pair_to_multi(idx), g, bipartition);
}

SymbolicMatrix build_f_pt_matrix(const std::vector<MultiIndex>& idx,
                                 const ModeGeometry& g,
                                 const std::vector<int>& bipartition) {
  return build_f_pt_matrix(idx, g, bipartition,
                           std::vector<TimeLabel>(static_cast<std::size_t>(g.modes()), 0));
}

SymbolicMatrix build_f_pt_matrix(const std::vector<MultiIndex>& idx,
                                 const ModeGeometry& g,
                                 const std::vector<int>& bipartition,
                                 const std::vector<TimeLabel>& mode_times) {
  const int M = g.modes();
  if (M < 2) fail("build_f_pt_matrix: geometry needs at least 2 modes");
  check_multi_idx(idx, M);
  const std::vector<bool> transposed = bipartition_mask(bipartition, M);
  if (static_cast<int>(mode_times.size()) != M)
    fail("build_f_pt_matrix: mode_times length must equal mode count");

  const std::size_t k = idx.size();
  SymbolicMatrix mat(k, std::vector<OperatorPoly>(k));
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      // Transposing f+f and re-collecting the quadratic form places the row
      // multi-index on the minus factors and the column multi-index on the
      // plus factors, with transposed modes under the star.
      Monomial m;
      for (int j = 1; j <= M; ++j) {
        const int pw = idx[r][static_cast<std::size_t>(j - 1)];
        if (pw > 0)
          m.factors.push_back({j, Sign::minus, pw, mode_times[static_cast<std::size_t>(j - 1)],
                               transposed[static_cast<std::size_t>(j)]});
      }
      for (int j = 1; j <= M; ++j) {
        const int pw = idx[c][static_cast<std::size_t>(j - 1)];
        if (pw > 0)
          m.factors.push_back({j, Sign::plus, pw, mode_times[static_cast<std::size_t>(j - 1)],
                               transposed[static_cast<std::size_t>(j)]});
      }
      mat[r][c] = normal_time_order(OperatorPoly{{m}});
    }
  }
  return mat;
}

std::vector<PairIndex> full_pair_set(int order) {
  if (order < 1) fail("full_pair_set: order must be >= 1");
  std::vector<PairIndex> out;
  for (int total = 0; total <= order; ++total)
    for (int n = total; n >= 0; --n) out.push_back({n, total - n});
  return out;
}

std::vector<MultiIndex> full_multi_set(int modes, int order) {
  if (modes < 2) fail("full_multi_set: needs at least 2 modes");
  if (order < 1) fail("full_multi_set: order must be >= 1");
  std::vector<MultiIndex> out;
  MultiIndex current(static_cast<std::size_t>(modes), 0);
  for (int total = 0; total <= order; ++total) {
    // enumerate all compositions of `total` over `modes` slots, lexicographic
    std::vector<MultiIndex> level;
    auto rec = [&](auto&& self, int slot, int remaining) -> void {
      if (slot == modes - 1) {
        current[static_cast<std::size_t>(slot)] = remaining;
        level.push_back(current);
        return;
      }
      for (int e = 0; e <= remaining; ++e) {
        current[static_cast<std::size_t>(slot)] = e;
        self(self, slot + 1, remaining - e);
      }
    };
    rec(rec, 0, total);
    std::sort(level.begin(), level.end());
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

}  // namespace qemit::opalg
