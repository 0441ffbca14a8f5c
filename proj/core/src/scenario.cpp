#include "qemit/scenario.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

namespace qemit::scenario {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw ConfigError(path + ": " + why);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_items(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string current;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  out.push_back(trim(current));
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::string normalized = s;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::vector<std::string> out;
  std::string item;
  while (in >> item) out.push_back(item);
  return out;
}

double parse_double(const std::string& path, const std::string& text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(path, "expected a number, got '" + text + "'");
  }
  if (used != text.size()) fail(path, "expected a number, got '" + text + "'");
  if (!std::isfinite(value)) fail(path, "value must be finite");
  return value;
}

long parse_int(const std::string& path, const std::string& text) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(text, &used);
  } catch (const std::exception&) {
    fail(path, "expected an integer, got '" + text + "'");
  }
  if (used != text.size()) fail(path, "expected an integer, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& path, const std::string& text) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  fail(path, "expected a boolean, got '" + text + "'");
}

// forms: "1.5", "0.5i", "1.5+0.5i", "1.5-0.5i"
Complex parse_complex(const std::string& path, const std::string& text) {
  if (text.empty()) fail(path, "empty complex literal");
  std::string body = text;
  bool imaginary_only = false;
  if (body.back() == 'i' || body.back() == 'j') {
    body.pop_back();
    imaginary_only = true;
  }
  if (!imaginary_only) return Complex{parse_double(path, body), 0.0};
  // find the split between real and imaginary parts, skipping a leading sign
  // and exponent signs
  std::size_t split = std::string::npos;
  for (std::size_t i = 1; i < body.size(); ++i) {
    if ((body[i] == '+' || body[i] == '-') &&
        body[i - 1] != 'e' && body[i - 1] != 'E')
      split = i;
  }
  if (split == std::string::npos) return Complex{0.0, parse_double(path, body)};
  const double re = parse_double(path, body.substr(0, split));
  std::string imag = body.substr(split);
  if (imag == "+" || imag == "-") imag += "1";
  return Complex{re, parse_double(path, imag)};
}

using Section = std::map<std::string, std::string>;
using Document = std::map<std::string, Section>;

Document parse_document(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      doc[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (section.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
    if (!doc[section].emplace(key, value).second)
      fail("[" + section + "] " + key, "duplicate key");
  }
  return doc;
}

// tracks which keys were consumed so leftovers become schema errors
class SectionReader {
 public:
  SectionReader(const Document& doc, std::string name) : name_(std::move(name)) {
    auto it = doc.find(name_);
    if (it != doc.end()) section_ = &it->second;
  }

  bool present() const { return section_ != nullptr; }

  const std::string* find(const std::string& key) {
    if (!section_) return nullptr;
    auto it = section_->find(key);
    if (it == section_->end()) return nullptr;
    used_.push_back(key);
    return &it->second;
  }

  std::string path(const std::string& key) const { return "[" + name_ + "] " + key; }

  double number(const std::string& key, double fallback) {
    const std::string* v = find(key);
    return v ? parse_double(path(key), *v) : fallback;
  }

  long integer(const std::string& key, long fallback) {
    const std::string* v = find(key);
    return v ? parse_int(path(key), *v) : fallback;
  }

  bool flag(const std::string& key, bool fallback) {
    const std::string* v = find(key);
    return v ? parse_bool(path(key), *v) : fallback;
  }

  std::string word(const std::string& key, const std::string& fallback) {
    const std::string* v = find(key);
    return v ? *v : fallback;
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [key, value] : *section_)
      if (std::find(used_.begin(), used_.end(), key) == used_.end())
        fail(path(key), "unknown key");
  }

 private:
  std::string name_;
  const Section* section_ = nullptr;
  std::vector<std::string> used_;
};

qcore::EmitterModel parse_model(SectionReader& model) {
  if (!model.present()) throw ConfigError("[model] type: section is required");
  const std::string type = model.word("type", "");
  if (type.empty()) fail(model.path("type"), "value is required (ensemble or kerr)");
  if (type == "ensemble") {
    qcore::TwoLevelEnsemble m;
    m.atoms = static_cast<int>(model.integer("atoms", 1));
    m.rabi = model.number("rabi", 0.0);
    m.detuning = model.number("detuning", 0.0);
    m.decay = model.number("decay", 1.0);
    m.collective_decay = model.flag("collective", false);
    if (const std::string* phases = model.find("phases")) {
      for (const std::string& item : split_list(*phases))
        m.phases.push_back(parse_double(model.path("phases"), item));
    } else {
      m.phases.assign(static_cast<std::size_t>(std::max(m.atoms, 0)), 0.0);
    }
    return m;
  }
  if (type == "kerr") {
    qcore::KerrMode m;
    m.n_max = static_cast<int>(model.integer("n_max", 12));
    m.kerr = model.number("kerr", 0.0);
    m.drive = model.number("drive", 0.0);
    m.detuning = model.number("detuning", 0.0);
    m.decay = model.number("decay", 1.0);
    return m;
  }
  fail(model.path("type"), "unknown model type '" + type + "'");
}

void parse_geometry(SectionReader& reader, Scenario& s) {
  s.modes = static_cast<int>(reader.integer("modes", 2));
  if (s.modes < 2) fail(reader.path("modes"), "at least two modes are required");
  const std::string spec = reader.word("chi", "random");
  if (spec.rfind("random", 0) == 0) {
    s.chi_random = true;
    if (spec.size() > 6) {
      if (spec[6] != ':') fail(reader.path("chi"), "expected 'random' or 'random:<seed>'");
      const std::string tail = spec.substr(7);
      try {
        std::size_t used = 0;
        s.chi_seed = std::stoull(tail, &used);
        if (used != tail.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail(reader.path("chi"), "seed must be an unsigned integer, got '" + tail + "'");
      }
      s.chi_seed_set = true;
    }
    return;
  }
  const auto items = split_list(spec);
  if (static_cast<int>(items.size()) != s.modes)
    fail(reader.path("chi"),
         "expected " + std::to_string(s.modes) + " entries, got " + std::to_string(items.size()));
  for (const std::string& item : items) {
    const Complex value = parse_complex(reader.path("chi"), item);
    if (std::abs(value) == 0.0) fail(reader.path("chi"), "entries must be nonzero");
    s.chi.push_back(value);
  }
}

void parse_witness(SectionReader& reader, Scenario& s) {
  s.order = static_cast<int>(reader.integer("order", 2));
  if (s.order < 1) fail(reader.path("order"), "order must be at least 1");
  const std::string parts = reader.word("bipartitions", "all");
  if (parts == "all") {
    s.bipartitions = default_bipartitions(s.modes);
  } else {
    for (const std::string& group : split_items(parts, ';')) {
      if (group.empty()) fail(reader.path("bipartitions"), "empty group");
      std::vector<int> modes;
      for (const std::string& item : split_list(group))
        modes.push_back(static_cast<int>(parse_int(reader.path("bipartitions"), item)));
      int previous = 1;
      for (int mode : modes) {
        if (mode <= previous)
          fail(reader.path("bipartitions"),
               "groups must be strictly ascending and keep mode 1 untransposed");
        if (mode > s.modes) fail(reader.path("bipartitions"), "mode out of range");
        previous = mode;
      }
      s.bipartitions.push_back(std::move(modes));
    }
    if (s.bipartitions.empty()) fail(reader.path("bipartitions"), "no groups given");
  }
  if (const std::string* times = reader.find("times")) {
    for (const std::string& item : split_list(*times))
      s.times.push_back(parse_double(reader.path("times"), item));
    if (static_cast<int>(s.times.size()) != s.modes)
      fail(reader.path("times"), "one time per mode is required");
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      if (s.times[i] < 0.0) fail(reader.path("times"), "times must be nonnegative");
      if (i > 0 && s.times[i] < s.times[i - 1])
        fail(reader.path("times"), "times must be sorted ascending");
    }
  }
}

void parse_sweep(SectionReader& reader, Scenario& s) {
  if (!reader.present()) return;
  s.sweep.enabled = true;
  s.sweep.max_points = static_cast<int>(reader.integer("max_points", 1000));
  if (s.sweep.max_points < 1) fail(reader.path("max_points"), "cap must be positive");

  const std::array<const char*, 2> names{"parameter", "parameter2"};
  const std::array<const char*, 2> value_keys{"values", "values2"};
  const std::array<const char*, 2> from_keys{"from", "from2"};
  const std::array<const char*, 2> to_keys{"to", "to2"};
  const std::array<const char*, 2> point_keys{"points", "points2"};
  for (int axis = 0; axis < 2; ++axis) {
    const std::string* parameter = reader.find(names[axis]);
    if (!parameter) {
      if (axis == 0) fail(reader.path("parameter"), "a swept parameter is required");
      break;
    }
    SweepAxis out;
    out.parameter = *parameter;
    if (const std::string* values = reader.find(value_keys[axis])) {
      for (const std::string& item : split_list(*values))
        out.values.push_back(parse_double(reader.path(value_keys[axis]), item));
      if (out.values.empty()) fail(reader.path(value_keys[axis]), "empty grid");
    } else {
      const std::string* from = reader.find(from_keys[axis]);
      const std::string* to = reader.find(to_keys[axis]);
      if (!from || !to)
        fail(reader.path(from_keys[axis]), "either 'values' or 'from'/'to' are required");
      const double lo = parse_double(reader.path(from_keys[axis]), *from);
      const double hi = parse_double(reader.path(to_keys[axis]), *to);
      const long points = reader.integer(point_keys[axis], 2);
      if (points < 1) fail(reader.path(point_keys[axis]), "at least one point is required");
      if (points == 1) {
        if (lo != hi)
          fail(reader.path(point_keys[axis]), "a single point needs from == to");
        out.values.push_back(lo);
      } else {
        for (long i = 0; i < points; ++i)
          out.values.push_back(lo + (hi - lo) * double(i) / double(points - 1));
      }
    }
    s.sweep.axes.push_back(std::move(out));
  }

  long total = 1;
  for (const SweepAxis& axis : s.sweep.axes)
    total *= static_cast<long>(axis.values.size());
  if (total > s.sweep.max_points)
    fail(reader.path("max_points"),
         "grid has " + std::to_string(total) + " points, cap is " +
             std::to_string(s.sweep.max_points));
}

void check_parameter_path(const Scenario& s, const std::string& parameter) {
  const bool ensemble = std::holds_alternative<qcore::TwoLevelEnsemble>(s.model);
  static const std::vector<std::string> shared{"model.detuning", "model.decay"};
  static const std::vector<std::string> ensemble_only{"model.rabi", "model.atoms"};
  static const std::vector<std::string> kerr_only{"model.drive", "model.kerr"};
  const auto in = [&](const std::vector<std::string>& set) {
    return std::find(set.begin(), set.end(), parameter) != set.end();
  };
  if (in(shared)) return;
  if (ensemble && in(ensemble_only)) return;
  if (!ensemble && in(kerr_only)) return;
  fail("[sweep] parameter",
       "unknown or inapplicable parameter '" + parameter + "' for this model type");
}

}  // namespace

std::vector<std::vector<int>> default_bipartitions(int modes) {
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

Scenario parse_scenario(const std::string& text) {
  const Document doc = parse_document(text);
  static const std::vector<std::string> known{"model",  "geometry",    "witness", "oracle",
                                              "steady_state", "correlation", "sweep",   "output"};
  for (const auto& [name, section] : doc)
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ConfigError("[" + name + "]: unknown section");

  Scenario s;
  SectionReader model(doc, "model");
  s.model = parse_model(model);
  s.phases_explicit = doc.count("model") && doc.at("model").count("phases");
  model.finish();

  try {
    (void)qcore::hilbert_dimension(s.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[model] invalid: ") + e.what());
  }

  SectionReader geometry(doc, "geometry");
  parse_geometry(geometry, s);
  geometry.finish();

  SectionReader witness(doc, "witness");
  parse_witness(witness, s);
  witness.finish();

  SectionReader oracle(doc, "oracle");
  s.oracle_enabled = oracle.flag("enabled", false);
  oracle.finish();

  SectionReader steady(doc, "steady_state");
  const std::string method = steady.word("method", "eigen");
  if (method == "eigen")
    s.method = SteadyMethod::eigen;
  else if (method == "relax")
    s.method = SteadyMethod::relax;
  else
    fail(steady.path("method"), "expected 'eigen' or 'relax'");
  s.horizon = steady.number("horizon", 200.0);
  if (s.horizon <= 0.0) fail(steady.path("horizon"), "horizon must be positive");
  steady.finish();

  SectionReader correlation(doc, "correlation");
  s.correlation.enabled = correlation.flag("enabled", correlation.present());
  s.correlation.tau_max = correlation.number("tau_max", 5.0);
  s.correlation.points = static_cast<int>(correlation.integer("points", 51));
  if (s.correlation.enabled) {
    if (s.correlation.tau_max <= 0.0) fail(correlation.path("tau_max"), "must be positive");
    if (s.correlation.points < 2) fail(correlation.path("points"), "at least two points");
  }
  correlation.finish();

  SectionReader sweep(doc, "sweep");
  parse_sweep(sweep, s);
  sweep.finish();

  SectionReader output(doc, "output");
  s.output_prefix = output.word("prefix", "results");
  if (s.output_prefix.empty()) fail(output.path("prefix"), "prefix must not be empty");
  output.finish();

  // cross-field checks, still before any execution
  if (s.oracle_enabled) {
    if (!std::holds_alternative<qcore::KerrMode>(s.model))
      throw ConfigError(
          "[oracle] enabled: only bosonic sources have a brute-force splitter image");
    if (!s.times.empty())
      throw ConfigError("[oracle] enabled: multi-time runs have no splitter image");
  }
  for (const SweepAxis& axis : s.sweep.axes) {
    check_parameter_path(s, axis.parameter);
    if (axis.parameter == "model.atoms") {
      if (s.phases_explicit)
        throw ConfigError("[sweep] parameter: explicit phases pin the atom count");
      for (double v : axis.values)
        if (v < 1.0 || std::abs(v - std::round(v)) > 1e-9)
          throw ConfigError("[sweep] parameter: atom counts must be positive integers");
    }
  }
  if (s.sweep.enabled && !s.times.empty())
    throw ConfigError("[sweep] parameter: sweeps are single-time only");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario file '" + path + "' is not readable");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::uint64_t resolve_chi(Scenario& s, std::uint64_t cli_seed) {
  if (!s.chi_random) return 0;
  std::uint64_t state = s.chi_seed_set ? s.chi_seed : cli_seed;
  const std::uint64_t effective = state;
  const auto next_u64 = [&state] {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  const auto uniform = [&next_u64] {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  };
  s.chi.clear();
  for (int j = 0; j < s.modes; ++j) {
    const double r = 0.2 + 1.8 * uniform();
    const double phi = 6.283185307179586476925286766559 * uniform();
    s.chi.push_back(Complex{r * std::cos(phi), r * std::sin(phi)});
  }
  s.chi_random = false;
  return effective;
}

Scenario with_parameter(const Scenario& s, const std::string& parameter, double value) {
  Scenario out = s;
  check_parameter_path(out, parameter);
  if (auto* ensemble = std::get_if<qcore::TwoLevelEnsemble>(&out.model)) {
    if (parameter == "model.rabi") ensemble->rabi = value;
    if (parameter == "model.detuning") ensemble->detuning = value;
    if (parameter == "model.decay") ensemble->decay = value;
    if (parameter == "model.atoms") {
      ensemble->atoms = static_cast<int>(std::llround(value));
      ensemble->phases.assign(static_cast<std::size_t>(ensemble->atoms), 0.0);
    }
  } else if (auto* kerr = std::get_if<qcore::KerrMode>(&out.model)) {
    if (parameter == "model.drive") kerr->drive = value;
    if (parameter == "model.kerr") kerr->kerr = value;
    if (parameter == "model.detuning") kerr->detuning = value;
    if (parameter == "model.decay") kerr->decay = value;
  }
  return out;
}

}  // namespace qemit::scenario
