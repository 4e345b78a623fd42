#include "adiabatic/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "adiabatic/weyl_bands.hpp"

namespace adiabatic::harness {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, const std::string& section,
                       const std::string& key, const std::string& what) {
  std::ostringstream os;
  os << source << ": [" << section << "]";
  if (!key.empty()) os << " " << key;
  os << ": " << what;
  throw ConfigError(os.str());
}

/// One section's keys, with bookkeeping so unread keys can be rejected.
class Section {
 public:
  Section(std::string source, std::string name, const pt::ptree& tree)
      : source_(std::move(source)), name_(std::move(name)) {
    for (const auto& [key, child] : tree) {
      if (!child.empty()) fail(source_, name_, key, "nested keys are not supported");
      values_[key] = trim(child.data());
    }
  }

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  double real(const std::string& key, double fallback) {
    auto v = raw(key);
    return v ? to_real(key, *v) : fallback;
  }

  std::optional<double> optional_real(const std::string& key) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    return to_real(key, *v);
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    auto v = raw(key);
    return v ? to_integer(key, *v) : fallback;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    auto v = raw(key);
    return v ? *v : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    fail(source_, name_, key, "expected true or false, got '" + *v + "'");
  }

  std::vector<std::string> list(const std::string& key) {
    auto v = raw(key);
    std::vector<std::string> out;
    if (!v) return out;
    std::string body = *v;
    if (!body.empty() && body.front() == '[' && body.back() == ']') {
      body = body.substr(1, body.size() - 2);
    }
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(source_, name_, key, "empty list entry");
      out.push_back(item);
    }
    return out;
  }

  std::vector<double> real_list(const std::string& key) {
    std::vector<double> out;
    for (const auto& item : list(key)) out.push_back(to_real(key, item));
    return out;
  }

  template <typename Parse>
  auto enumeration(const std::string& key, const std::string& fallback, Parse&& parse) {
    const std::string v = text(key, fallback);
    try {
      return parse(v);
    } catch (const Error& e) {
      fail(source_, name_, key, e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      if (!seen_.count(key)) fail(source_, name_, key, "unknown key");
    }
  }

  [[noreturn]] void error(const std::string& key, const std::string& what) const {
    fail(source_, name_, key, what);
  }

 private:
  double to_real(const std::string& key, const std::string& v) const {
    double out = 0.0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) fail(source_, name_, key, "not a number: '" + v + "'");
    return out;
  }

  std::uint64_t to_integer(const std::string& key, const std::string& v) const {
    std::uint64_t out = 0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
      fail(source_, name_, key, "not a non-negative integer: '" + v + "'");
    }
    return out;
  }

  std::string source_;
  std::string name_;
  std::map<std::string, std::string> values_;
  std::set<std::string> seen_;
};

const std::set<std::string> kKnownSections{"grid",     "dispersion", "rotation", "bands",
                                           "run",      "analysis",   "output"};
const std::set<std::string> kRequiredSections{"grid", "dispersion", "rotation", "bands", "run"};

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << source << ":" << e.line() << ": parse error: " << e.message();
    throw ConfigError(os.str());
  }

  std::map<std::string, const pt::ptree*> sections;
  for (const auto& [name, child] : tree) {
    if (child.empty()) {
      throw ConfigError(source + ": key '" + name + "' appears outside any [section]");
    }
    if (!kKnownSections.count(name)) throw ConfigError(source + ": unknown section [" + name + "]");
    sections[name] = &child;
  }
  for (const auto& name : kRequiredSections) {
    if (!sections.count(name)) throw ConfigError(source + ": missing required section [" + name + "]");
  }
  const pt::ptree empty;
  auto section = [&](const std::string& name) {
    auto it = sections.find(name);
    return Section(source, name, it == sections.end() ? empty : *it->second);
  };

  ExperimentConfig c;
  {
    Section s = section("grid");
    c.grid.k_min = s.real("k_min", c.grid.k_min);
    c.grid.k_max = s.real("k_max", c.grid.k_max);
    c.grid.n = s.integer("N", c.grid.n);
    if (c.grid.n < 2) s.error("N", "N >= 2 required");
    if (!(c.grid.k_max > c.grid.k_min)) s.error("k_max", "k_max > k_min required");
    s.reject_unknown();
  }
  {
    Section s = section("dispersion");
    c.dispersion.family = s.enumeration("family", "linear", parse_dispersion_family);
    auto& co = c.dispersion.coefficients;
    co.a0 = s.real("a0", co.a0);
    co.a1 = s.real("a1", co.a1);
    co.b0 = s.real("b0", co.b0);
    co.b1 = s.real("b1", co.b1);
    c.dispersion.knots = s.integer("knots", 0);
    c.dispersion.table = s.real_list("table");
    if (c.dispersion.family == DispersionFamily::tabulated) {
      if (c.dispersion.knots < 2) s.error("knots", "tabulated dispersion needs knots >= 2");
      if (c.dispersion.table.size() != c.dispersion.knots * c.grid.n) {
        s.error("table", "expected knots x N = " + std::to_string(c.dispersion.knots * c.grid.n) +
                             " entries, got " + std::to_string(c.dispersion.table.size()));
      }
    } else if (c.dispersion.knots != 0 || !c.dispersion.table.empty()) {
      s.error("table", "knots/table only apply to the tabulated family");
    }
    s.reject_unknown();
  }
  {
    Section s = section("rotation");
    c.rotation.builder = s.enumeration("builder", "nearest_neighbor", parse_rotation_builder);
    c.rotation.profile = s.enumeration("profile", "cubic", parse_angle_profile);
    c.rotation.theta_max = s.real("theta_max", c.rotation.theta_max);
    c.rotation.bandwidth = s.integer("bandwidth", c.rotation.bandwidth);
    c.rotation.seed = s.integer("seed", c.rotation.seed);
    if (!std::isfinite(c.rotation.theta_max)) s.error("theta_max", "must be finite");
    if (c.rotation.bandwidth < 1) s.error("bandwidth", "bandwidth >= 1 required");
    s.reject_unknown();
  }
  {
    Section s = section("bands");
    c.bands.m = s.integer("m", c.bands.m);
    if (c.bands.m < 1 || c.bands.m > c.grid.n) s.error("m", "1 <= m <= N required");
    s.reject_unknown();
  }
  {
    Section s = section("run");
    c.run.T = s.optional_real("T");
    c.run.T_list = s.real_list("T_list");
    c.run.steps = s.integer("steps", c.run.steps);
    c.run.scheme = s.enumeration("scheme", "midpoint_exponential", parse_scheme);
    c.run.variant = s.enumeration("variant", "kato_state", parse_generator_kind);
    if (c.run.T && !(*c.run.T >= 0.0 && std::isfinite(*c.run.T))) s.error("T", "T >= 0 required");
    for (double T : c.run.T_list) {
      if (!(T > 0.0 && std::isfinite(T))) s.error("T_list", "entries must be > 0");
    }
    if (!c.run.T && c.run.T_list.empty()) s.error("T", "one of T or T_list is required");
    if (c.run.steps < 1) s.error("steps", "steps >= 1 required");
    s.reject_unknown();
  }
  {
    Section s = section("analysis");
    c.analysis.j0 = s.integer("j0", c.analysis.j0);
    c.analysis.s_samples = s.integer("s_samples", c.analysis.s_samples);
    c.analysis.margin = s.real("margin", c.analysis.margin);
    c.analysis.threshold = s.real("threshold", c.analysis.threshold);
    if (c.analysis.j0 >= c.grid.n) s.error("j0", "j0 < N required");
    if (c.analysis.s_samples < 2) s.error("s_samples", "s_samples >= 2 required");
    if (!(c.analysis.margin > 0.0)) s.error("margin", "margin > 0 required");
    if (!(c.analysis.threshold > 0.0)) s.error("threshold", "threshold > 0 required");
    s.reject_unknown();
  }
  {
    Section s = section("output");
    c.output.directory = s.text("directory", c.output.directory);
    auto formats = s.list("formats");
    if (!formats.empty()) c.output.formats = formats;
    for (const auto& f : c.output.formats) {
      if (f != "json" && f != "csv") s.error("formats", "unknown format '" + f + "'");
    }
    c.output.timestamp = s.boolean("timestamp", c.output.timestamp);
    s.reject_unknown();
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void validate(const ExperimentConfig& c) {
  if (c.grid.n < 2) throw ConfigError("[grid] N: N >= 2 required");
  if (c.bands.m < 1 || c.bands.m > c.grid.n) throw ConfigError("[bands] m: 1 <= m <= N required");
  if (c.analysis.j0 >= c.grid.n) throw ConfigError("[analysis] j0: j0 < N required");
  if (c.run.steps < 1) throw ConfigError("[run] steps: steps >= 1 required");
  if (!(c.analysis.threshold > 0.0)) throw ConfigError("[analysis] threshold: threshold > 0 required");
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  using json = nlohmann::ordered_json;
  json j;
  j["grid"] = {{"k_min", c.grid.k_min}, {"k_max", c.grid.k_max}, {"N", c.grid.n}};
  json d;
  d["family"] = to_string(c.dispersion.family);
  if (c.dispersion.family == DispersionFamily::tabulated) {
    d["knots"] = c.dispersion.knots;
    d["table"] = c.dispersion.table;
  } else {
    d["a0"] = c.dispersion.coefficients.a0;
    d["a1"] = c.dispersion.coefficients.a1;
    d["b0"] = c.dispersion.coefficients.b0;
    d["b1"] = c.dispersion.coefficients.b1;
  }
  j["dispersion"] = d;
  j["rotation"] = {{"builder", to_string(c.rotation.builder)},
                   {"profile", to_string(c.rotation.profile)},
                   {"theta_max", c.rotation.theta_max},
                   {"bandwidth", c.rotation.bandwidth},
                   {"seed", c.rotation.seed}};
  j["bands"] = {{"m", c.bands.m}};
  json run;
  run["T"] = c.run.T ? json(*c.run.T) : json(nullptr);
  run["T_list"] = c.run.T_list;
  run["steps"] = c.run.steps;
  run["scheme"] = to_string(c.run.scheme);
  run["variant"] = to_string(c.run.variant);
  run["hbar"] = kHbar;
  j["run"] = run;
  j["analysis"] = {{"j0", c.analysis.j0},
                   {"s_samples", c.analysis.s_samples},
                   {"margin", c.analysis.margin},
                   {"threshold", c.analysis.threshold}};
  j["output"] = {{"directory", c.output.directory},
                 {"formats", join(c.output.formats)},
                 {"timestamp", c.output.timestamp}};
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

KGrid make_grid(const ExperimentConfig& c) { return KGrid(c.grid.k_min, c.grid.k_max, c.grid.n); }

DispersionSchedule make_dispersion(const ExperimentConfig& c) {
  switch (c.dispersion.family) {
    case DispersionFamily::linear: return DispersionSchedule::linear(c.dispersion.coefficients);
    case DispersionFamily::quadratic: return DispersionSchedule::quadratic(c.dispersion.coefficients);
    case DispersionFamily::tabulated: {
      std::vector<std::vector<double>> rows(c.dispersion.knots);
      for (std::size_t i = 0; i < c.dispersion.knots; ++i) {
        rows[i].assign(c.dispersion.table.begin() + static_cast<std::ptrdiff_t>(i * c.grid.n),
                       c.dispersion.table.begin() + static_cast<std::ptrdiff_t>((i + 1) * c.grid.n));
      }
      return DispersionSchedule::tabulated(std::move(rows));
    }
  }
  throw ConfigError("unsupported dispersion family");
}

FrameRotation make_rotation(const ExperimentConfig& c) {
  const AngleSchedule schedule(c.rotation.profile, c.rotation.theta_max);
  switch (c.rotation.builder) {
    case RotationBuilder::nearest_neighbor:
      return FrameRotation::nearest_neighbor(c.grid.n, schedule);
    case RotationBuilder::banded:
      return FrameRotation::banded(c.grid.n, c.rotation.bandwidth, schedule);
    case RotationBuilder::random_banded:
      return FrameRotation::random_banded(c.grid.n, c.rotation.bandwidth, c.rotation.seed, schedule);
    case RotationBuilder::custom: break;
  }
  throw ConfigError("[rotation] builder: custom generators cannot be described in a config file");
}

ContinuumModel make_model(const ExperimentConfig& c) {
  return build_model(make_grid(c), make_dispersion(c), make_rotation(c));
}

BandPartition make_partition(const ExperimentConfig& c) { return BandPartition(c.grid.n, c.bands.m); }

GeneratorVariant make_variant(const ExperimentConfig& c) {
  if (c.run.variant == GeneratorKind::weyl_band) return GeneratorVariant::weyl_band(make_partition(c));
  return GeneratorVariant::kato_state();
}

PropagationConfig make_propagation(const ExperimentConfig& c, double T) {
  PropagationConfig p;
  p.T = T;
  p.steps = c.run.steps;
  p.scheme = c.run.scheme;
  p.hbar = kHbar;
  return p;
}

}  // namespace adiabatic::harness
