#include "qemit/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <variant>

#include "json.hpp"
#include "qemit/dynamics.hpp"
#include "qemit/opalg.hpp"
#include "qemit/oracle.hpp"
#include "qemit/qcore.hpp"
#include "qemit/witness.hpp"

namespace qemit::runner {
namespace {

using json = nlohmann::ordered_json;
using qcore::Complex;
using scenario::Scenario;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json cjson(Complex z) { return json::array({z.real(), z.imag()}); }

std::string classification_name(witness::Classification c) {
  return c == witness::Classification::negative ? "negative" : "nonnegative";
}

// "1,3|2" style: untransposed modes, bar, transposed modes
std::string bipartition_name(int modes, const std::vector<int>& transposed) {
  std::vector<bool> flip(modes + 1, false);
  for (int m : transposed) flip[m] = true;
  std::string left, right;
  for (int m = 1; m <= modes; ++m) {
    std::string& side = flip[m] ? right : left;
    if (!side.empty()) side += ',';
    side += std::to_string(m);
  }
  return left + "|" + right;
}

Complex cpow(Complex base, int n) {
  Complex out{1.0, 0.0};
  for (int i = 0; i < n; ++i) out *= base;
  return out;
}

// Worst entrywise deviation of the assembled split-mode matrix from the
// diagonal congruence of the direct-form table. Zero up to roundoff is what
// makes the transposed matrix trustworthy without ever building the split
// state.
double congruence_residual(const witness::MomentTable& table,
                           const opalg::ModeGeometry& geometry,
                           const std::vector<opalg::MultiIndex>& idx,
                           const std::vector<int>& transposed,
                           const qcore::Matrix& values) {
  const int modes = geometry.modes();
  std::vector<bool> flip(modes + 1, false);
  for (int m : transposed) flip[m] = true;

  const int d = static_cast<int>(idx.size());
  std::vector<int> dagger_total(d), lower_total(d);
  std::vector<Complex> scale(d);
  for (int r = 0; r < d; ++r) {
    int nd = 0, nl = 0;
    Complex s{1.0, 0.0};
    for (int j = 1; j <= modes; ++j) {
      const int p = idx[r][j - 1];
      const Complex amp = geometry.chi_of(j);
      if (flip[j]) {
        nd += p;
        s *= cpow(std::conj(amp), p);
      } else {
        nl += p;
        s *= cpow(amp, p);
      }
    }
    dagger_total[r] = nd;
    lower_total[r] = nl;
    scale[r] = s;
  }

  double worst = 0.0;
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      const Complex direct = table.at(
          opalg::single_time_key(lower_total[r] + dagger_total[c],
                                 dagger_total[r] + lower_total[c]));
      const Complex expected = std::conj(scale[r]) * direct * scale[c];
      worst = std::max(worst, std::abs(values(r, c) - expected));
    }
  }
  return worst;
}

json verdict_json(const witness::Verdict& v) {
  json out;
  out["min_eigenvalue"] = v.min_eigenvalue;
  out["worst_minor"] = {{"rows", v.worst_minor}, {"value", v.worst_minor_value}};
  json coeffs = json::array();
  for (int i = 0; i < v.witness_coefficients.size(); ++i)
    coeffs.push_back(cjson(v.witness_coefficients(i)));
  out["coefficients"] = std::move(coeffs);
  out["classification"] = classification_name(v.classification);
  return out;
}

json pair_labels_json(const std::vector<opalg::PairIndex>& idx) {
  json out = json::array();
  for (const auto& [n, l] : idx) out.push_back(json::array({n, l}));
  return out;
}

json model_json(const qcore::EmitterModel& model) {
  json out;
  if (const auto* e = std::get_if<qcore::TwoLevelEnsemble>(&model)) {
    out["type"] = "ensemble";
    out["atoms"] = e->atoms;
    out["phases"] = e->phases;
    out["rabi"] = e->rabi;
    out["detuning"] = e->detuning;
    out["decay"] = e->decay;
    out["collective"] = e->collective_decay;
  } else {
    const auto& k = std::get<qcore::KerrMode>(model);
    out["type"] = "kerr";
    out["n_max"] = k.n_max;
    out["kerr"] = k.kerr;
    out["drive"] = k.drive;
    out["detuning"] = k.detuning;
    out["decay"] = k.decay;
  }
  return out;
}

json scenario_json(const Scenario& s) {
  json out;
  out["model"] = model_json(s.model);
  json chi = json::array();
  for (Complex c : s.chi) chi.push_back(cjson(c));
  out["geometry"] = {{"modes", s.modes}, {"chi", std::move(chi)}};
  json witness = {{"order", s.order}, {"bipartitions", s.bipartitions}};
  if (!s.times.empty()) witness["times"] = s.times;
  out["witness"] = std::move(witness);
  out["steady_state"] = {
      {"method", s.method == scenario::SteadyMethod::eigen ? "eigen" : "relax"},
      {"horizon", s.horizon}};
  out["oracle"] = s.oracle_enabled;
  if (s.correlation.enabled)
    out["correlation"] = {{"tau_max", s.correlation.tau_max},
                          {"points", s.correlation.points}};
  return out;
}

int ensemble_atoms(const qcore::EmitterModel& model) {
  const auto* e = std::get_if<qcore::TwoLevelEnsemble>(&model);
  return e ? e->atoms : 0;
}

// table must reach order N+1 for the nilpotency witness even when the
// requested matrix order is lower
int table_order(const Scenario& s) {
  const int atoms = ensemble_atoms(s.model);
  return std::max(s.order, (atoms + 2) / 2);
}

struct StagedState {
  dynamics::Liouvillian lv;
  qcore::DensityMatrix rho;
  witness::MomentTable table;
};

StagedState stage_state(const Scenario& s) {
  dynamics::Liouvillian lv = dynamics::liouvillian(s.model);
  const bool relax = s.method == scenario::SteadyMethod::relax;
  qcore::DensityMatrix rho =
      relax ? dynamics::relaxed_state(lv, qcore::ground_state(s.model), s.horizon)
            : dynamics::steady_state(lv);
  witness::MomentTable table =
      witness::moment_table(s.model, rho, table_order(s),
                            relax ? "relaxed state" : "steady state");
  return {std::move(lv), std::move(rho), std::move(table)};
}

std::vector<double> tau_grid(const scenario::CorrelationRequest& req) {
  std::vector<double> grid(req.points);
  for (int i = 0; i < req.points; ++i)
    grid[i] = req.tau_max * static_cast<double>(i) / (req.points - 1);
  return grid;
}

}  // namespace

RunArtifacts run_scenario(const Scenario& s, std::uint64_t seed) {
  StagedState st = stage_state(s);
  const opalg::ModeGeometry geometry(s.chi);
  const Complex chi1 = s.chi.front();
  std::vector<std::string> notes;

  json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "run";
  doc["seed"] = seed;
  doc["scenario"] = scenario_json(s);
  doc["state"] = {{"provenance", st.table.provenance},
                  {"dimension", st.rho.dim()}};

  json moments = json::array();
  for (const auto& [key, value] : st.table.values) {
    const auto [daggers, lowerings] = key.orders();
    moments.push_back({{"daggers", daggers},
                       {"lowerings", lowerings},
                       {"value", cjson(value)}});
  }
  doc["moments"] = std::move(moments);

  json verdicts = json::array();

  const auto full_pairs = opalg::full_pair_set(s.order);
  const witness::Verdict full = witness::nonclassicality_verdict(st.table, chi1, full_pairs);
  {
    json v = verdict_json(full);
    v["kind"] = "nonclassicality";
    v["index"] = "full";
    v["pairs"] = pair_labels_json(full_pairs);
    v["chi"] = cjson(chi1);
    verdicts.push_back(std::move(v));
  }
  for (const char* index : {"quadrature", "intensity"}) {
    const auto idx = std::string(index) == "quadrature" ? witness::quadrature_index()
                                                        : witness::intensity_index();
    json v = verdict_json(witness::nonclassicality_verdict(st.table, chi1, idx));
    v["kind"] = "nonclassicality";
    v["index"] = index;
    v["pairs"] = pair_labels_json(idx);
    v["chi"] = cjson(chi1);
    verdicts.push_back(std::move(v));
  }
  if (const int atoms = ensemble_atoms(s.model)) {
    try {
      const auto idx = witness::atom_witness_index(st.table, atoms);
      json v = verdict_json(witness::nonclassicality_verdict(st.table, chi1, idx));
      v["kind"] = "nonclassicality";
      v["index"] = "nilpotency";
      v["pairs"] = pair_labels_json(idx);
      v["chi"] = cjson(chi1);
      verdicts.push_back(std::move(v));
    } catch (const std::runtime_error& err) {
      notes.push_back(std::string("nilpotency witness skipped: ") + err.what());
    }
  }

  std::map<std::string, bool> entangled;
  const auto multi_idx = opalg::full_multi_set(s.modes, s.order);
  for (const auto& part : s.bipartitions) {
    const std::string name = bipartition_name(s.modes, part);
    json v;
    if (s.times.empty()) {
      const witness::WitnessMatrix f = witness::assemble_f_pt(st.table, geometry, multi_idx, part);
      const witness::Verdict verdict = witness::verdict_of(f);
      v = verdict_json(verdict);
      v["indices"] = multi_idx;
      v["congruence_residual"] =
          congruence_residual(st.table, geometry, multi_idx, part, f.values);
      entangled[name] = verdict.classification == witness::Classification::negative;
    } else {
      const witness::Verdict verdict = witness::multi_time_witness(
          s.model, st.lv, st.rho, full_pairs, s.times, geometry, part);
      v = verdict_json(verdict);
      v["pairs"] = pair_labels_json(full_pairs);
      v["times"] = s.times;
      entangled[name] = verdict.classification == witness::Classification::negative;
    }
    v["kind"] = "entanglement";
    v["bipartition"] = part;
    v["name"] = name;
    verdicts.push_back(std::move(v));
  }
  doc["verdicts"] = std::move(verdicts);

  if (s.modes >= 3 && s.times.empty() &&
      s.bipartitions == scenario::default_bipartitions(s.modes)) {
    try {
      const witness::ScanResult scan = witness::multipartite_scan(st.table, geometry, multi_idx);
      json entries = json::array();
      for (const auto& [part, verdict] : scan.verdicts)
        entries.push_back({{"bipartition", part},
                           {"min_eigenvalue", verdict.min_eigenvalue},
                           {"classification", classification_name(verdict.classification)}});
      doc["aggregate"] = {{"all_negative", scan.all_negative},
                          {"classification", scan.classification},
                          {"entries", std::move(entries)}};
    } catch (const std::runtime_error& err) {
      notes.push_back(std::string("multipartite scan skipped: ") + err.what());
    }
  }

  if (s.oracle_enabled) {
    double norm = 0.0;
    for (Complex c : s.chi) norm += std::norm(c);
    std::vector<Complex> amps = s.chi;
    for (Complex& c : amps) c /= std::sqrt(norm);
    const oracle::ValidationReport report =
        oracle::cross_validate(st.rho, oracle::SplitterSpec(amps), s.order, s.bipartitions);
    json entries = json::array();
    for (const auto& e : report.entries)
      entries.push_back({{"bipartition", e.bipartition},
                         {"name", bipartition_name(s.modes, e.bipartition)},
                         {"witness_min_eigenvalue", e.verdict.min_eigenvalue},
                         {"witness_classification", classification_name(e.verdict.classification)},
                         {"oracle_min_eigenvalue", e.oracle_min_eigenvalue},
                         {"agreement", e.agreement}});
    doc["oracle"] = {{"sound", report.sound},
                     {"note", report.note},
                     {"entries", std::move(entries)}};
  }

  std::string g2_dat;
  if (s.correlation.enabled) {
    const std::vector<double> grid = tau_grid(s.correlation);
    const dynamics::CorrelationSeries series = dynamics::intensity_correlation(
        st.lv, st.rho, qcore::source_operator(s.model), grid);
    const double mean_intensity =
        st.table.at(opalg::single_time_key(1, 1)).real();
    json values = json::array();
    for (Complex v : series.values) values.push_back(v.real());
    doc["g2"] = {{"tau", series.tau},
                 {"values", std::move(values)},
                 {"mean_intensity", mean_intensity}};
    std::string dat = "# tau  <S+ S+ S- S->(tau), unnormalized\n";
    for (std::size_t i = 0; i < series.tau.size(); ++i)
      dat += fmt(series.tau[i]) + " " + fmt(series.values[i].real()) + "\n";
    g2_dat = std::move(dat);
  }

  RunArtifacts artifacts;
  artifacts.nonclassical = full.classification == witness::Classification::negative;
  artifacts.all_bipartitions_entangled = !entangled.empty();
  for (const auto& [_, flag] : entangled)
    artifacts.all_bipartitions_entangled = artifacts.all_bipartitions_entangled && flag;

  doc["summary"] = {{"nonclassical", artifacts.nonclassical},
                    {"entangled", entangled},
                    {"all_bipartitions_entangled", artifacts.all_bipartitions_entangled}};
  if (!notes.empty()) doc["notes"] = notes;

  artifacts.results_json = doc.dump(2) + "\n";

  std::string csv = "daggers,lowerings,real,imag\n";
  for (const auto& [key, value] : st.table.values) {
    const auto [daggers, lowerings] = key.orders();
    csv += std::to_string(daggers) + "," + std::to_string(lowerings) + "," +
           fmt(value.real()) + "," + fmt(value.imag()) + "\n";
  }
  artifacts.moments_csv = std::move(csv);
  artifacts.g2_dat = std::move(g2_dat);
  return artifacts;
}

namespace {

struct PointSummary {
  double squeezing_minor = 0.0;
  double sub_poisson_minor = 0.0;
  bool has_nilpotency = false;
  double nilpotency_minor = 0.0;
  double nonclassical_min = 0.0;
  double entanglement_min = 0.0;
  std::string classification;
};

PointSummary evaluate_point(const Scenario& s) {
  StagedState st = stage_state(s);
  const opalg::ModeGeometry geometry(s.chi);
  const Complex chi1 = s.chi.front();

  PointSummary out;
  out.squeezing_minor =
      witness::nonclassicality_verdict(st.table, chi1, witness::quadrature_index())
          .worst_minor_value;
  out.sub_poisson_minor =
      witness::nonclassicality_verdict(st.table, chi1, witness::intensity_index())
          .worst_minor_value;
  const witness::Verdict full =
      witness::nonclassicality_verdict(st.table, chi1, opalg::full_pair_set(s.order));
  out.nonclassical_min = full.min_eigenvalue;
  out.classification = classification_name(full.classification);
  if (const int atoms = ensemble_atoms(s.model)) {
    try {
      const auto idx = witness::atom_witness_index(st.table, atoms);
      out.nilpotency_minor =
          witness::nonclassicality_verdict(st.table, chi1, idx).worst_minor_value;
      out.has_nilpotency = true;
    } catch (const std::runtime_error&) {
    }
  }
  const auto multi_idx = opalg::full_multi_set(s.modes, s.order);
  double ent_min = 0.0;
  bool first = true;
  for (const auto& part : s.bipartitions) {
    const double v =
        witness::entanglement_verdict(st.table, geometry, multi_idx, part).min_eigenvalue;
    ent_min = first ? v : std::min(ent_min, v);
    first = false;
  }
  out.entanglement_min = ent_min;
  return out;
}

}  // namespace

SweepArtifacts sweep_scenario(const Scenario& s, std::uint64_t seed, int workers) {
  if (!s.sweep.enabled || s.sweep.axes.empty())
    throw std::invalid_argument("sweep_scenario needs a scenario with a [sweep] section");

  const auto& axes = s.sweep.axes;
  const std::size_t inner = axes.size() == 2 ? axes[1].values.size() : 1;
  const std::size_t total = axes[0].values.size() * inner;

  std::vector<std::vector<double>> params(total);
  for (std::size_t i = 0; i < total; ++i) {
    params[i].push_back(axes[0].values[i / inner]);
    if (axes.size() == 2) params[i].push_back(axes[1].values[i % inner]);
  }

  std::vector<PointSummary> points(total);
  std::vector<std::exception_ptr> failures(total);
  std::atomic<std::size_t> cursor{0};

  auto work = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= total) return;
      try {
        Scenario at = scenario::with_parameter(s, axes[0].parameter, params[i][0]);
        if (axes.size() == 2)
          at = scenario::with_parameter(at, axes[1].parameter, params[i][1]);
        points[i] = evaluate_point(at);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(total)));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  // deterministic failure: the lowest grid index wins no matter the schedule
  for (std::size_t i = 0; i < total; ++i)
    if (failures[i]) {
      try {
        std::rethrow_exception(failures[i]);
      } catch (const std::exception& err) {
        throw std::runtime_error("grid point " + std::to_string(i) + " (" +
                                 axes[0].parameter + " = " + fmt(params[i][0]) +
                                 (axes.size() == 2
                                      ? ", " + axes[1].parameter + " = " + fmt(params[i][1])
                                      : std::string()) +
                                 "): " + err.what());
      }
    }

  std::string header = "index," + axes[0].parameter;
  if (axes.size() == 2) header += "," + axes[1].parameter;
  header +=
      ",squeezing_minor,sub_poisson_minor,nilpotency_minor,"
      "nonclassicality_min_eigenvalue,entanglement_min_eigenvalue,classification\n";
  std::string csv = std::move(header);
  for (std::size_t i = 0; i < total; ++i) {
    const PointSummary& p = points[i];
    csv += std::to_string(i);
    for (double v : params[i]) csv += "," + fmt(v);
    csv += "," + fmt(p.squeezing_minor) + "," + fmt(p.sub_poisson_minor) + ",";
    if (p.has_nilpotency) csv += fmt(p.nilpotency_minor);
    csv += "," + fmt(p.nonclassical_min) + "," + fmt(p.entanglement_min) + "," +
           p.classification + "\n";
  }

  json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "sweep";
  doc["seed"] = seed;
  doc["scenario"] = scenario_json(s);
  json axes_json = json::array();
  for (const auto& axis : axes)
    axes_json.push_back({{"parameter", axis.parameter}, {"values", axis.values}});
  doc["axes"] = std::move(axes_json);
  json rows = json::array();
  for (std::size_t i = 0; i < total; ++i) {
    const PointSummary& p = points[i];
    json row;
    row["index"] = i;
    json at;
    for (std::size_t a = 0; a < axes.size(); ++a) at[axes[a].parameter] = params[i][a];
    row["parameters"] = std::move(at);
    row["squeezing_minor"] = p.squeezing_minor;
    row["sub_poisson_minor"] = p.sub_poisson_minor;
    if (p.has_nilpotency) row["nilpotency_minor"] = p.nilpotency_minor;
    row["nonclassicality_min_eigenvalue"] = p.nonclassical_min;
    row["entanglement_min_eigenvalue"] = p.entanglement_min;
    row["classification"] = p.classification;
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);

  SweepArtifacts artifacts;
  artifacts.results_json = doc.dump(2) + "\n";
  artifacts.sweep_csv = std::move(csv);
  if (axes.size() == 1) {
    std::string sq = "# " + axes[0].parameter + "  squeezing_minor\n";
    std::string sp = "# " + axes[0].parameter + "  sub_poisson_minor\n";
    for (std::size_t i = 0; i < total; ++i) {
      sq += fmt(params[i][0]) + " " + fmt(points[i].squeezing_minor) + "\n";
      sp += fmt(params[i][0]) + " " + fmt(points[i].sub_poisson_minor) + "\n";
    }
    artifacts.squeezing_dat = std::move(sq);
    artifacts.sub_poisson_dat = std::move(sp);
  }
  return artifacts;
}

}  // namespace qemit::runner
