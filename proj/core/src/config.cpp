#include "turnpike/config.hpp"

#include "turnpike/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace turnpike {

namespace pt = boost::property_tree;

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Turnpike:
      return "turnpike";
    case ExperimentKind::Sensitivity:
      return "sensitivity";
    case ExperimentKind::OpnormSweep:
      return "opnorm_sweep";
    case ExperimentKind::MpcCompare:
      return "mpc_compare";
    case ExperimentKind::SuperpositionSuite:
      return "superposition_suite";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::Turnpike, ExperimentKind::Sensitivity,
                 ExperimentKind::OpnormSweep, ExperimentKind::MpcCompare,
                 ExperimentKind::SuperpositionSuite}) {
    if (name == to_string(k)) return k;
  }
  throw DomainError("unknown experiment kind '" + std::string(name) + "'");
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"kind", "seed", "output", "mu", "theta"}},
      {"grid", {"nx", "ny", "lx", "ly", "bc"}},
      {"problem",
       {"dynamics", "diffusion", "e", "c0", "conductivity", "alpha", "reference",
        "reference_scale"}},
      {"time", {"horizon", "scheme", "n", "parameter"}},
      {"turnpike", {"e_values", "horizons"}},
      {"sensitivity", {"amplitude", "support_start"}},
      {"opnorm", {"horizons", "samples"}},
      {"mpc", {"tau", "steps", "plant_refinement", "exp_c", "warm_start", "scheme", "n"}},
      {"mpc_compare", {"n_values", "schemes"}},
      {"superposition", {"d", "trajectories", "magnitudes"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Line numbers of "section.key" entries, for error reports.
std::map<std::string, int> index_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      lines.emplace(section, number);
      continue;
    }
    const auto eq = line.find('=');
    if (eq != std::string::npos) lines.emplace(section + "." + trim(line.substr(0, eq)), number);
  }
  return lines;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::map<std::string, int> lines)
      : tree_(tree), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    const auto it = lines_.find(field);
    throw ConfigError(field + ": " + msg, it == lines_.end() ? 0 : it->second, field);
  }

  std::optional<std::string> raw(const std::string& field) const {
    const auto v = tree_.get_optional<std::string>(field);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  double number(const std::string& field, double fallback) const {
    const auto v = raw(field);
    return v ? parse_double(field, *v) : fallback;
  }

  int integer(const std::string& field, int fallback) const {
    const auto v = raw(field);
    if (!v) return fallback;
    int out = 0;
    const auto* end = v->data() + v->size();
    const auto [p, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || p != end) fail(field, "expected an integer, got '" + *v + "'");
    return out;
  }

  std::string text(const std::string& field, const std::string& fallback) const {
    return raw(field).value_or(fallback);
  }

  bool boolean(const std::string& field, bool fallback) const {
    const auto v = raw(field);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    fail(field, "expected true/false, got '" + *v + "'");
  }

  std::vector<std::string> items(const std::string& field) const {
    std::vector<std::string> out;
    const auto v = raw(field);
    if (!v) return out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail(field, "empty list entry");
      out.push_back(item);
    }
    return out;
  }

  std::vector<double> numbers(const std::string& field, std::vector<double> fallback) const {
    if (!raw(field)) return fallback;
    std::vector<double> out;
    for (const auto& s : items(field)) out.push_back(parse_double(field, s));
    if (out.empty()) fail(field, "list must not be empty");
    return out;
  }

  double parse_double(const std::string& field, const std::string& s) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(field, "expected a number, got '" + s + "'");
    }
  }

 private:
  const pt::ptree& tree_;
  std::map<std::string, int> lines_;
};

void check_keys(const pt::ptree& tree, const Reader& r) {
  for (const auto& [section, body] : tree) {
    if (section == "manifest") continue;
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) r.fail(section, "unknown section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) r.fail(section + "." + key, "unknown key");
    }
  }
}

template <typename T>
void require(const Reader& r, bool ok, const std::string& field, const T& what) {
  if (!ok) r.fail(field, what);
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  pt::ptree tree;
  try {
    std::istringstream ss(text);
    pt::ini_parser::read_ini(ss, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message(), static_cast<int>(e.line()));
  }
  const Reader r(tree, index_lines(text));
  check_keys(tree, r);

  ExperimentConfig cfg;
  const auto kind = r.raw("experiment.kind");
  if (!kind) r.fail("experiment.kind", "missing experiment kind");
  try {
    cfg.kind = parse_experiment_kind(*kind);
  } catch (const DomainError& e) {
    r.fail("experiment.kind", e.what());
  }
  const int seed = r.integer("experiment.seed", 42);
  require(r, seed >= 0, "experiment.seed", "seed must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.output = r.text("experiment.output", "");
  const std::string mu = r.text("experiment.mu", "auto");
  if (mu != "auto") {
    cfg.mu = r.parse_double("experiment.mu", mu);
    require(r, *cfg.mu > 0.0, "experiment.mu", "mu must be positive or 'auto'");
  }
  cfg.theta = r.number("experiment.theta", cfg.theta);
  require(r, cfg.theta > 0.0 && cfg.theta < 1.0, "experiment.theta", "theta must lie in (0,1)");

  auto& g = cfg.grid;
  g.nx = r.integer("grid.nx", g.nx);
  g.ny = r.integer("grid.ny", g.ny);
  g.lx = r.number("grid.lx", g.lx);
  g.ly = r.number("grid.ly", g.ly);
  const std::string bc = r.text("grid.bc", "dirichlet");
  if (bc == "dirichlet") {
    g.bc = BoundaryKind::Dirichlet;
  } else if (bc == "neumann") {
    g.bc = BoundaryKind::Neumann;
  } else {
    r.fail("grid.bc", "expected dirichlet or neumann, got '" + bc + "'");
  }
  try {
    make_grid(g);
  } catch (const DomainError& e) {
    r.fail("grid", e.what());
  }

  auto& p = cfg.problem;
  const std::string dyn = r.text("problem.dynamics", "semilinear");
  if (dyn == "semilinear") {
    p.dynamics = DynamicsKind::SemilinearDistributed;
  } else if (dyn == "quasilinear") {
    p.dynamics = DynamicsKind::QuasilinearBoundary;
    require(r, g.bc == BoundaryKind::Neumann, "problem.dynamics",
            "quasilinear boundary control needs grid.bc = neumann");
  } else {
    r.fail("problem.dynamics", "expected semilinear or quasilinear, got '" + dyn + "'");
  }
  p.diffusion = r.number("problem.diffusion", p.diffusion);
  require(r, p.diffusion > 0.0, "problem.diffusion", "diffusion must be positive");
  p.cubic.e = r.number("problem.e", p.cubic.e);
  require(r, p.cubic.e >= 0.0, "problem.e", "e must be >= 0");
  p.cubic.c0 = r.number("problem.c0", p.cubic.c0);
  p.conductivity.c = r.number("problem.conductivity", p.conductivity.c);
  require(r, p.conductivity.c >= 0.0, "problem.conductivity", "c must be >= 0");
  p.alpha = r.number("problem.alpha", p.alpha);
  require(r, p.alpha > 0.0, "problem.alpha", "alpha must be positive");
  const std::string ref = r.text("problem.reference", "static");
  if (ref == "static") {
    p.reference = ReferenceKind::Static;
  } else if (ref == "dynamic") {
    p.reference = ReferenceKind::Dynamic;
  } else {
    r.fail("problem.reference", "expected static or dynamic, got '" + ref + "'");
  }
  p.reference_scale = r.number("problem.reference_scale", p.reference_scale);

  auto& t = cfg.time;
  t.horizon = r.number("time.horizon", t.horizon);
  require(r, t.horizon > 0.0, "time.horizon", "horizon must be positive");
  t.n = r.integer("time.n", t.n);
  t.parameter = r.number("time.parameter", t.parameter);
  try {
    t.scheme = parse_grid_scheme(r.text("time.scheme", "uniform"));
  } catch (const DomainError& e) {
    r.fail("time.scheme", e.what());
  }
  try {
    make_time_grid(t.scheme, t.horizon, t.n, t.parameter);
  } catch (const DomainError& e) {
    r.fail("time", e.what());
  }

  cfg.turnpike.e_values = r.numbers("turnpike.e_values", cfg.turnpike.e_values);
  for (double e : cfg.turnpike.e_values) require(r, e >= 0.0, "turnpike.e_values", "e must be >= 0");
  cfg.turnpike.horizons = r.numbers("turnpike.horizons", cfg.turnpike.horizons);
  for (double h : cfg.turnpike.horizons) {
    require(r, h > 0.0, "turnpike.horizons", "horizons must be positive");
  }

  cfg.sensitivity.amplitude = r.number("sensitivity.amplitude", cfg.sensitivity.amplitude);
  cfg.sensitivity.support_start =
      r.number("sensitivity.support_start", cfg.sensitivity.support_start);
  require(r, cfg.sensitivity.support_start > 0.0 && cfg.sensitivity.support_start < 1.0,
          "sensitivity.support_start", "support_start is a fraction of T in (0,1)");

  cfg.opnorm.horizons = r.numbers("opnorm.horizons", cfg.opnorm.horizons);
  for (double h : cfg.opnorm.horizons) {
    require(r, h > 0.0, "opnorm.horizons", "horizons must be positive");
  }
  cfg.opnorm.samples = r.integer("opnorm.samples", cfg.opnorm.samples);
  require(r, cfg.opnorm.samples >= 1, "opnorm.samples", "need at least one sample");

  auto& m = cfg.mpc;
  m.horizon = t.horizon;
  m.tau = r.number("mpc.tau", m.tau);
  m.steps = r.integer("mpc.steps", m.steps);
  m.plant_refinement = r.integer("mpc.plant_refinement", m.plant_refinement);
  m.exp_c = r.number("mpc.exp_c", m.exp_c);
  m.warm_start = r.boolean("mpc.warm_start", m.warm_start);
  m.n = r.integer("mpc.n", m.n);
  try {
    m.scheme = parse_grid_scheme(r.text("mpc.scheme", "uniform"));
    validate(m);
  } catch (const DomainError& e) {
    r.fail("mpc", e.what());
  }

  if (r.raw("mpc_compare.n_values")) {
    cfg.mpc_compare.n_values.clear();
    for (const auto& s : r.items("mpc_compare.n_values")) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || v < 3) {
        r.fail("mpc_compare.n_values", "expected integers >= 3, got '" + s + "'");
      }
      cfg.mpc_compare.n_values.push_back(v);
    }
  }
  if (r.raw("mpc_compare.schemes")) {
    cfg.mpc_compare.schemes.clear();
    for (const auto& s : r.items("mpc_compare.schemes")) {
      try {
        cfg.mpc_compare.schemes.push_back(parse_grid_scheme(s));
      } catch (const DomainError& e) {
        r.fail("mpc_compare.schemes", e.what());
      }
    }
  }
  for (GridScheme s : cfg.mpc_compare.schemes) {
    for (int n : cfg.mpc_compare.n_values) {
      MPCConfig probe = m;
      probe.scheme = s;
      probe.n = n;
      try {
        mpc_time_grid(probe);
      } catch (const DomainError& e) {
        r.fail("mpc_compare", e.what());
      }
    }
  }

  auto& sp = cfg.superposition;
  sp.d = r.integer("superposition.d", sp.d);
  require(r, sp.d >= 1, "superposition.d", "d must be >= 1");
  sp.trajectories = r.integer("superposition.trajectories", sp.trajectories);
  require(r, sp.trajectories >= 1, "superposition.trajectories", "need at least one trajectory");
  sp.magnitudes = r.numbers("superposition.magnitudes", sp.magnitudes);
  for (std::size_t i = 0; i < sp.magnitudes.size(); ++i) {
    require(r, sp.magnitudes[i] > 0.0 && (i == 0 || sp.magnitudes[i] < sp.magnitudes[i - 1]),
            "superposition.magnitudes", "magnitudes must be positive and decreasing");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

namespace {

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& f) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    f(out, v[i]);
  }
  return out.str();
}

}  // namespace

std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << std::setprecision(17);
  const auto num = [](std::ostream& s, double v) { s << v; };
  o << "[experiment]\n"
    << "kind = " << to_string(cfg.kind) << '\n'
    << "seed = " << cfg.seed << '\n';
  if (!cfg.output.empty()) o << "output = " << cfg.output << '\n';
  o << "mu = ";
  if (cfg.mu) {
    o << *cfg.mu << '\n';
  } else {
    o << "auto\n";
  }
  o << "theta = " << cfg.theta << "\n\n";

  o << "[grid]\n"
    << "nx = " << cfg.grid.nx << '\n'
    << "ny = " << cfg.grid.ny << '\n'
    << "lx = " << cfg.grid.lx << '\n'
    << "ly = " << cfg.grid.ly << '\n'
    << "bc = " << (cfg.grid.bc == BoundaryKind::Dirichlet ? "dirichlet" : "neumann") << "\n\n";

  const auto& p = cfg.problem;
  o << "[problem]\n"
    << "dynamics = "
    << (p.dynamics == DynamicsKind::SemilinearDistributed ? "semilinear" : "quasilinear") << '\n'
    << "diffusion = " << p.diffusion << '\n'
    << "e = " << p.cubic.e << '\n'
    << "c0 = " << p.cubic.c0 << '\n'
    << "conductivity = " << p.conductivity.c << '\n'
    << "alpha = " << p.alpha << '\n'
    << "reference = " << (p.reference == ReferenceKind::Static ? "static" : "dynamic") << '\n'
    << "reference_scale = " << p.reference_scale << "\n\n";

  o << "[time]\n"
    << "horizon = " << cfg.time.horizon << '\n'
    << "scheme = " << to_string(cfg.time.scheme) << '\n'
    << "n = " << cfg.time.n << '\n'
    << "parameter = " << cfg.time.parameter << "\n\n";

  o << "[turnpike]\n"
    << "e_values = " << join(cfg.turnpike.e_values, num) << '\n'
    << "horizons = " << join(cfg.turnpike.horizons, num) << "\n\n";

  o << "[sensitivity]\n"
    << "amplitude = " << cfg.sensitivity.amplitude << '\n'
    << "support_start = " << cfg.sensitivity.support_start << "\n\n";

  o << "[opnorm]\n"
    << "horizons = " << join(cfg.opnorm.horizons, num) << '\n'
    << "samples = " << cfg.opnorm.samples << "\n\n";

  const auto& m = cfg.mpc;
  o << "[mpc]\n"
    << "tau = " << m.tau << '\n'
    << "steps = " << m.steps << '\n'
    << "plant_refinement = " << m.plant_refinement << '\n'
    << "exp_c = " << m.exp_c << '\n'
    << "warm_start = " << (m.warm_start ? "true" : "false") << '\n'
    << "scheme = " << to_string(m.scheme) << '\n'
    << "n = " << m.n << "\n\n";

  o << "[mpc_compare]\n"
    << "n_values = " << join(cfg.mpc_compare.n_values, [](std::ostream& s, int v) { s << v; })
    << '\n'
    << "schemes = "
    << join(cfg.mpc_compare.schemes, [](std::ostream& s, GridScheme g) { s << to_string(g); })
    << "\n\n";

  o << "[superposition]\n"
    << "d = " << cfg.superposition.d << '\n'
    << "trajectories = " << cfg.superposition.trajectories << '\n'
    << "magnitudes = " << join(cfg.superposition.magnitudes, num) << '\n';
  return o.str();
}

SpatialGrid make_grid(const GridConfig& cfg) {
  return build_grid(cfg.nx, cfg.ny, cfg.lx, cfg.ly, cfg.bc);
}

}  // namespace turnpike
