#include "turnpike/runner.hpp"

#include "turnpike/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace turnpike {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

// One CSV: header then equally long numeric columns.
void write_columns(const fs::path& path, const std::vector<std::string>& header,
                   const std::vector<const std::vector<double>*>& cols) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  const std::size_t rows = cols.empty() ? 0 : cols.front()->size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << fmt((*cols[j])[i]);
    out << '\n';
  }
  finish(out, path);
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

json fit_json(const DecayFit& f) {
  return {{"rate", f.mu_hat}, {"intercept", f.intercept}, {"r_squared", f.r_squared},
          {"samples", f.samples.size()}};
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

int scaled_count(int n, double horizon, double reference_horizon) {
  return std::max(3, static_cast<int>(std::lround((n - 1) * horizon / reference_horizon)) + 1);
}

class Session {
 public:
  Session(const ExperimentConfig& cfg, fs::path dir, std::ostream* log)
      : cfg_(cfg), dir_(std::move(dir)), log_(log) {}

  void note(const std::string& msg) const {
    if (log_) *log_ << "[turnpike] " << msg << '\n' << std::flush;
  }

  fs::path file(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }

  const std::vector<std::string>& files() const { return files_; }

  json run() {
    switch (cfg_.kind) {
      case ExperimentKind::Turnpike:
        return turnpike();
      case ExperimentKind::Sensitivity:
        return sensitivity();
      case ExperimentKind::OpnormSweep:
        return opnorm();
      case ExperimentKind::MpcCompare:
        return mpc_compare();
      case ExperimentKind::SuperpositionSuite:
        return superposition();
    }
    throw Error("unknown experiment kind");
  }

 private:
  Problem problem(double e) const {
    OCPSpec spec = cfg_.problem;
    spec.cubic.e = e;
    return Problem(spec, make_grid(cfg_.grid));
  }

  TimeGrid time_grid(double horizon) const {
    const auto& t = cfg_.time;
    return make_time_grid(t.scheme, horizon, scaled_count(t.n, horizon, t.horizon), t.parameter);
  }

  json turnpike() {
    // Cells: every e at the configured horizon, every horizon at the configured e.
    std::vector<std::pair<double, double>> cells;
    for (double e : cfg_.turnpike.e_values) cells.emplace_back(e, cfg_.time.horizon);
    for (double h : cfg_.turnpike.horizons) cells.emplace_back(cfg_.problem.cubic.e, h);
    cells.emplace_back(cfg_.problem.cubic.e, cfg_.time.horizon);
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

    json rows = json::array();
    std::map<double, double> by_horizon;
    for (const auto& [e, horizon] : cells) {
      note("turnpike e=" + tag(e) + " T=" + tag(horizon));
      const TimeGrid tgrid = time_grid(horizon);
      const TurnpikeResult r = turnpike_experiment(problem(e), tgrid, cfg_.mu);
      const bool primary = e == cfg_.problem.cubic.e && horizon == cfg_.time.horizon;
      const std::string name = "turnpike_norms_e" + tag(e) + "_T" + tag(horizon) + ".csv";
      emit_plotdata(r, file(name));
      if (primary) emit_plotdata(r, file("turnpike_norms.csv"));

      std::size_t mid = 0;
      for (std::size_t k = 0; k < r.t.size(); ++k) {
        if (std::abs(r.t[k] - 0.5 * horizon) < std::abs(r.t[mid] - 0.5 * horizon)) mid = k;
      }
      if (e == cfg_.problem.cubic.e) by_horizon[horizon] = r.scaled_deviation;
      rows.push_back({{"e", e},
                      {"T", horizon},
                      {"N", tgrid.size()},
                      {"file", name},
                      {"mu", r.mu},
                      {"decay", fit_json(r.decay)},
                      {"growth", fit_json(r.growth)},
                      {"mid_over_initial", r.dev_x[mid] / r.dev_x.front()},
                      {"plateau", r.dev_x[mid]},
                      {"scaled_deviation", r.scaled_deviation},
                      {"sobolev_deviation", r.sobolev_deviation},
                      {"newton_iterations", r.newton_iterations}});
    }
    std::vector<double> scaled;
    for (const auto& [h, v] : by_horizon) scaled.push_back(v);
    return {{"cells", rows}, {"scaled_deviation_spread", spread(scaled)}};
  }

  json sensitivity() {
    const Problem p = problem(cfg_.problem.cubic.e);
    const TimeGrid tgrid = time_grid(cfg_.time.horizon);
    note("sensitivity: base solve");
    const TurnpikeResult base = turnpike_experiment(p, tgrid, cfg_.mu);
    const double start = cfg_.sensitivity.support_start * cfg_.time.horizon;
    const Perturbation eps = state_perturbation(p, tgrid, start, cfg_.sensitivity.amplitude);
    note("sensitivity: perturbed solve, mu=" + fmt(base.mu));
    const SensitivityResult r = sensitivity_experiment(p, tgrid, eps, base.mu, start, &base.z);
    emit_plotdata(r, file("sensitivity_norms.csv"));
    const double worst =
        r.frozen_ratios.empty() ? 0.0
                                : *std::max_element(r.frozen_ratios.begin(), r.frozen_ratios.end());
    return {{"mu", r.mu},
            {"support_start", start},
            {"decay", fit_json(r.decay)},
            {"decay_at_least_mu", r.decay.mu_hat >= r.mu},
            {"scaled_dz", r.scaled_dz},
            {"scaled_eps", r.scaled_eps},
            {"frozen_ratios", r.frozen_ratios},
            {"max_frozen_ratio", worst}};
  }

  json opnorm() {
    const double dt = cfg_.time.horizon / (cfg_.time.n - 1);
    note("opnorm sweep, dt=" + fmt(dt));
    const OpnormSweep r = opnorm_sweep(cfg_.problem, make_grid(cfg_.grid), cfg_.opnorm.horizons,
                                       dt, cfg_.opnorm.samples, cfg_.theta, cfg_.seed);
    emit_plotdata(r, file("opnorm.csv"));
    std::vector<double> norms, fwd, tp;
    json rows = json::array();
    for (const auto& pt : r.points) {
      norms.push_back(pt.opnorm);
      fwd.push_back(pt.cs_forward);
      tp.push_back(pt.cs_turnpike);
      rows.push_back({{"T", pt.horizon},
                      {"N", pt.slices},
                      {"opnorm", pt.opnorm},
                      {"cs_forward", pt.cs_forward},
                      {"cs_turnpike", pt.cs_turnpike}});
    }
    return {{"mu", r.mu},
            {"points", rows},
            {"opnorm_spread", spread(norms)},
            {"cs_forward_spread", spread(fwd)},
            {"cs_turnpike_spread", spread(tp)}};
  }

  json mpc_compare() {
    const Problem p = problem(cfg_.problem.cubic.e);
    note("mpc grid comparison: " + std::to_string(cfg_.mpc_compare.schemes.size() *
                                                  cfg_.mpc_compare.n_values.size()) +
         " cells");
    const auto cells =
        grid_comparison(p, cfg_.mpc, cfg_.mpc_compare.n_values, cfg_.mpc_compare.schemes);
    write_cost_table(cells, file("cost_table.csv"));
    emit_plotdata(cells, file("cost_plot.csv"));
    json rows = json::array();
    int failed = 0;
    for (const auto& c : cells) {
      json row{{"scheme", std::string(to_string(c.scheme))}, {"N", c.n}, {"ok", c.ok}};
      if (c.ok) {
        row["cost"] = c.cost;
      } else {
        row["error"] = c.error;
        ++failed;
      }
      rows.push_back(row);
    }
    return {{"cells", rows}, {"failed_cells", failed}};
  }

  json superposition() {
    const TimeGrid tgrid = time_grid(cfg_.time.horizon);
    const double mu = cfg_.mu.value_or(1.0);
    note("superposition suite: " + std::to_string(cfg_.superposition.trajectories) +
         " trajectories");
    const auto r = superposition_suite(cfg_.superposition, make_grid(cfg_.grid), tgrid, mu,
                                       cfg_.seed);
    emit_plotdata(r, file("superposition.csv"));

    // r(m)/m over the last decade of magnitudes.
    const double m_min = r.magnitudes.back();
    double variation = 0.0;
    bool scaled_bounded = true;
    for (std::size_t j = 0; j < r.ratios.size(); ++j) {
      std::vector<double> q;
      for (std::size_t k = 0; k < r.magnitudes.size(); ++k) {
        if (r.magnitudes[k] <= 10.0 * m_min * (1.0 + 1e-12)) {
          q.push_back(r.ratios[j][k] / r.magnitudes[k]);
        }
        scaled_bounded = scaled_bounded && r.scaled_ratios[j][k] <= r.bounds[j][k] * (1.0 + 1e-12);
      }
      if (q.size() >= 2 && r.d > 1) variation = std::max(variation, spread(q) - 1.0);
    }
    const double growth = r.growth_ratios.empty()
                              ? 0.0
                              : *std::max_element(r.growth_ratios.begin(), r.growth_ratios.end());
    return {{"d", r.d},
            {"trajectories", r.ratios.size()},
            {"scaling_mu", r.scaling_mu},
            {"max_growth_ratio", growth},
            {"last_decade_variation", variation},
            {"scaled_within_bound", scaled_bounded}};
  }

  const ExperimentConfig& cfg_;
  fs::path dir_;
  std::ostream* log_;
  std::vector<std::string> files_;
};

void write_manifest(const ExperimentConfig& cfg, const fs::path& dir,
                    const std::vector<std::string>& files, double wall, const std::string& status,
                    const std::string& error) {
  const fs::path path = dir / "MANIFEST";
  auto out = open_out(path);
  out << render_config(cfg) << "\n[manifest]\n"
      << "version = " << TURNPIKE_VERSION << '\n'
      << "seed = " << cfg.seed << '\n'
      << "status = " << status << '\n'
      << "wall_seconds = " << fmt(wall) << '\n'
      << "files = ";
  for (std::size_t i = 0; i < files.size(); ++i) out << (i ? ", " : "") << files[i];
  out << '\n';
  if (!error.empty()) {
    std::string line = error;
    std::replace(line.begin(), line.end(), '\n', ' ');
    out << "error = " << line << '\n';
  }
  finish(out, path);
}

}  // namespace

fs::path resolve_output_dir(const ExperimentConfig& cfg, const fs::path& config_path,
                            const fs::path& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (!cfg.output.empty()) return cfg.output;
  const std::string stem = config_path.stem().string();
  if (const char* root = std::getenv("TURNPIKE_OUTPUT_ROOT"); root && *root) {
    return fs::path(root) / stem;
  }
  return fs::path("turnpike_out") / stem;
}

RunReport run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream* log) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  Session session(cfg, out_dir, log);
  session.note("experiment " + std::string(to_string(cfg.kind)) + " -> " + out_dir.string());
  json summary;
  try {
    summary = session.run();
  } catch (const std::exception& e) {
    write_manifest(cfg, out_dir, session.files(), elapsed(), "failed", e.what());
    throw;
  }
  summary["experiment"] = std::string(to_string(cfg.kind));
  summary["seed"] = cfg.seed;

  RunReport report;
  report.output_dir = out_dir;
  report.files = session.files();
  {
    const fs::path path = out_dir / "summary.json";
    auto out = open_out(path);
    out << summary.dump(2) << '\n';
    finish(out, path);
    report.files.push_back("summary.json");
  }
  report.wall_seconds = elapsed();
  write_manifest(cfg, out_dir, report.files, report.wall_seconds, "ok", "");
  report.files.push_back("MANIFEST");
  session.note("done in " + fmt(report.wall_seconds) + " s");
  return report;
}

void emit_plotdata(const TurnpikeResult& r, const fs::path& path) {
  write_columns(path, {"t", "norm_x_dev", "norm_u_dev", "norm_lambda_dev", "s"},
                {&r.t, &r.dev_x, &r.dev_u, &r.dev_lambda, &r.scaling});
}

void emit_plotdata(const SensitivityResult& r, const fs::path& path) {
  write_columns(path, {"t", "norm_dx", "norm_du", "norm_dlambda", "s"},
                {&r.t, &r.dx, &r.du, &r.dlambda, &r.scaling});
}

void emit_plotdata(const OpnormSweep& r, const fs::path& path) {
  std::vector<double> h, n, o, f, t;
  for (const auto& p : r.points) {
    h.push_back(p.horizon);
    n.push_back(p.slices);
    o.push_back(p.opnorm);
    f.push_back(p.cs_forward);
    t.push_back(p.cs_turnpike);
  }
  write_columns(path, {"T", "N", "opnorm", "cs_forward", "cs_turnpike"}, {&h, &n, &o, &f, &t});
}

void emit_plotdata(const std::vector<CostCell>& cells, const fs::path& path) {
  std::vector<int> ns;
  for (const auto& c : cells) {
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
  }
  const GridScheme order[] = {GridScheme::Uniform, GridScheme::Exponential,
                              GridScheme::PiecewiseUniform};
  std::vector<double> col_n, cols[3];
  for (int n : ns) {
    col_n.push_back(n);
    for (int s = 0; s < 3; ++s) {
      double v = std::nan("");
      for (const auto& c : cells) {
        if (c.n == n && c.scheme == order[s] && c.ok) v = c.cost;
      }
      cols[s].push_back(v);
    }
  }
  write_columns(path, {"N", "cost_uniform", "cost_exponential", "cost_pwuniform"},
                {&col_n, &cols[0], &cols[1], &cols[2]});
}

void write_cost_table(const std::vector<CostCell>& cells, const fs::path& path) {
  auto out = open_out(path);
  out << "scheme,N,cost\n";
  for (const auto& c : cells) {
    out << to_string(c.scheme) << ',' << c.n << ',' << fmt(c.ok ? c.cost : std::nan("")) << '\n';
  }
  finish(out, path);
}

SuperpositionSuiteResult superposition_suite(const SuperpositionConfig& cfg,
                                             const SpatialGrid& grid, const TimeGrid& tgrid,
                                             double mu, std::uint64_t seed) {
  SuperpositionSuiteResult out;
  out.d = cfg.d;
  out.magnitudes = cfg.magnitudes;
  out.scaling_mu = mu;
  const ScalingFunction scaled = ScalingFunction::forward_exp(mu);
  const double p = 2.0 * cfg.d;
  for (int j = 0; j < cfg.trajectories; ++j) {
    const auto s = seed + 2 * static_cast<std::uint64_t>(j);
    const Trajectory x0 = random_trajectory(tgrid.size(), grid.dof_count(), s);
    const Trajectory v = random_trajectory(tgrid.size(), grid.dof_count(), s + 1);
    const auto plain = superposition_derivative_check(cfg.d, x0, v, cfg.magnitudes, grid, tgrid,
                                                      ScalingFunction::unit());
    const auto weighted =
        superposition_derivative_check(cfg.d, x0, v, cfg.magnitudes, grid, tgrid, scaled);
    out.ratios.push_back(plain.ratios);
    out.scaled_ratios.push_back(weighted.ratios);
    out.bounds.push_back(plain.bounds);

    const double lhs = scaled_norm(superposition_apply(cfg.d, x0), ScalingFunction::unit(), 2.0,
                                   2.0, grid, tgrid);
    const double rhs = std::pow(scaled_norm(x0, ScalingFunction::unit(), p, p, grid, tgrid), cfg.d);
    out.growth_ratios.push_back(lhs / rhs);
  }
  return out;
}

void emit_plotdata(const SuperpositionSuiteResult& r, const fs::path& path) {
  auto out = open_out(path);
  out << "trajectory,m,ratio,scaled_ratio,bound\n";
  for (std::size_t j = 0; j < r.ratios.size(); ++j) {
    for (std::size_t k = 0; k < r.magnitudes.size(); ++k) {
      out << j << ',' << fmt(r.magnitudes[k]) << ',' << fmt(r.ratios[j][k]) << ','
          << fmt(r.scaled_ratios[j][k]) << ',' << fmt(r.bounds[j][k]) << '\n';
    }
  }
  finish(out, path);
}

}  // namespace turnpike
