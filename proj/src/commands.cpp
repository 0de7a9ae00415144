#include "scatterkit/app/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "scatterkit/app/output.hpp"
#include "scatterkit/scatterkit.hpp"

namespace scatterkit::app {

namespace {

using nlohmann::json;
using Matrix = ComplexMatrix<double>;
namespace fs = std::filesystem;

double rel(const Matrix& a, const Matrix& b) { return op_norm(a - b) / std::max(op_norm(b), kNormFloor); }

CheckResult check(std::string name, double value, double tolerance) {
  return {std::move(name), value, tolerance, value <= tolerance, true};
}

json checks_json(const std::vector<CheckResult>& checks) {
  json out = json::array();
  for (const auto& c : checks) {
    json j = {{"name", c.name}, {"applicable", c.applicable}};
    if (c.applicable) {
      j["value"] = c.value;
      j["tolerance"] = c.tolerance;
      j["passed"] = c.passed;
    }
    out.push_back(j);
  }
  return out;
}

bool all_passed(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) {
    if (c.applicable && !c.passed) return false;
  }
  return true;
}

json thresholds_json(const Thresholds& t) {
  return {{"smallness", t.smallness},         {"identity", t.identity},   {"pair_unitarity", t.pair_unitarity},
          {"hermiticity", t.hermiticity},     {"osborn", t.osborn},       {"condition_limit", t.condition_limit}};
}

json complex_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

void print_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) {
    if (!c.applicable) {
      out << "  n/a   " << c.name << "\n";
      continue;
    }
    out << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name << " = " << csv_number(c.value)
        << " (tol " << csv_number(c.tolerance) << ")\n";
  }
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const NearSingularError& e) {
    err << "error: numerical degeneracy: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: io: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

ScenarioConfig load(const std::string& path, const RunOptions& opts) {
  auto cfg = apply_overrides(load_scenario(path), opts);
  validate(cfg);
  return cfg;
}

json model_summary(const ScatteringSystem<double>& sys) {
  json chans = json::array();
  for (const auto& c : sys.channels()) {
    chans.push_back({{"channel", c.channel.label()},
                     {"inert", c.potential.is_inert()},
                     {"norm", op_norm(c.potential.matrix())}});
  }
  return {{"n_particles", sys.n_particles()},
          {"dim", sys.dim()},
          {"h0_min", sys.h0().min()},
          {"h0_max", sys.h0().max()},
          {"channels", chans}};
}

struct CouplingRow {
  double scale = 0;
  double defect_impulse = 0;
  double defect_uia = 0;
  double defect_impulse_abs = 0;
  double defect_uia_abs = 0;
  double reduction_gap = 0;
  double reduction_side = 0;
  double second_order = 0;
  double relerr_impulse = 0;
  double relerr_uia = 0;
};

std::vector<CouplingRow> coupling_scan(const ScenarioConfig& cfg) {
  std::vector<CouplingRow> rows;
  const SpectralParameter<double> z(cfg.verify_energy(), cfg.grid.eps);
  const double cond = cfg.thresholds.condition_limit;
  for (double s : cfg.coupling_scan) {
    ModelConfig m = cfg.model;
    m.coupling_scale = s;
    const auto sys = build_flat_model<double>(m);
    const auto sp = green_split(sys.h0(), z);
    const auto tp = pair_t_set(sys, sp.g0, cond);
    const Matrix t = exact_t(sys, z, cond);
    const Matrix imp = impulse_t(tp);
    const Matrix uia = unitary_impulse_t(tp, sp.g1);
    const auto red = unitarity_reduction_check(tp, sp.g1);
    CouplingRow r;
    r.scale = s;
    r.defect_impulse = unitarity_defect(imp, sp.g1);
    r.defect_uia = unitarity_defect(uia, sp.g1);
    r.defect_impulse_abs = unitarity_defect_abs(imp, sp.g1);
    r.defect_uia_abs = unitarity_defect_abs(uia, sp.g1);
    r.reduction_gap = red.gap;
    r.reduction_side = op_norm(red.lhs_reduced);
    r.second_order = second_order_norm(tp, sp.g1);
    r.relerr_impulse = rel(imp, t);
    r.relerr_uia = rel(uia, t);
    rows.push_back(r);
  }
  return rows;
}

const std::vector<std::string> kCouplingColumns{
    "scale",          "defect_impulse", "defect_uia",     "defect_impulse_abs", "defect_uia_abs",
    "reduction_gap",  "reduction_side", "second_order",   "relerr_impulse",     "relerr_uia"};

std::vector<double> coupling_values(const CouplingRow& r) {
  return {r.scale,         r.defect_impulse, r.defect_uia,   r.defect_impulse_abs, r.defect_uia_abs,
          r.reduction_gap, r.reduction_side, r.second_order, r.relerr_impulse,     r.relerr_uia};
}

// Numeric scan.csv fields of one row, in scan_columns() order after index/e0/eps.
std::vector<std::optional<double>> row_values(const DiagnosticsReport<double>& r) {
  using C = ChannelSmallness<double>;
  const auto& s = r.smallness;
  return {s.max_of(&C::norm_t_g0), s.max_of(&C::norm_t_g1), s.max_of(&C::norm_k_g2),
          s.max_of(&C::born_t),    s.max_of(&C::born_k),    s.max_of(&C::heitler_born_residual),
          s.max_of(&C::born_v_g0), r.second_order,          r.commutator,
          r.product_residual,      r.defect_exact,          r.defect_impulse,
          r.defect_linearized,     r.defect_uia,            r.relerr_impulse,
          r.relerr_linearized,     r.relerr_uia,            r.reduction_gap,
          r.reduction_side,        r.faddeev_radius,        r.e_b_min};
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
  return out;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::io: return kExitIo;
    default: return kExitNumerical;
  }
}

unsigned resolve_threads(const RunOptions& opts) {
  if (opts.threads && *opts.threads > 0) return *opts.threads;
  if (const char* env = std::getenv("SCATTERKIT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ScenarioConfig apply_overrides(ScenarioConfig cfg, const RunOptions& opts) {
  if (opts.out_dir) cfg.outputs.directory = *opts.out_dir;
  if (opts.seed_override) cfg.model.seed = *opts.seed_override;
  return cfg;
}

std::vector<CheckResult> verify_checks(const ScenarioConfig& cfg) {
  const auto& th = cfg.thresholds;
  const double cond = th.condition_limit;
  const auto sys = build_flat_model<double>(cfg.model);
  const SpectralParameter<double> z(cfg.verify_energy(), cfg.grid.eps);
  const auto sp = green_split(sys.h0(), z);

  const Matrix t = exact_t(sys, z, cond);
  const Matrix k = heitler_exact_k(sys, z, cond);
  const auto tp = pair_t_set(sys, sp.g0, cond);
  const auto kp = pair_k_set(sys, sp.g2, cond);
  const auto script = script_t_components(tp, kp, sp.g1, cond);
  const Matrix lin = linearized_t(kp, sp.g1, cond);

  double script_gap = 0, pair_heitler = 0, pair_unitarity = 0, pair_k_herm = 0;
  for (std::size_t a = 0; a < tp.size(); ++a) {
    script_gap = std::max(script_gap, rel(script.transformed[a], script.direct[a]));
    pair_heitler = std::max(pair_heitler, two_body_heitler_residual(tp[a], kp[a], sp.g1));
    const double n = op_norm(tp[a]);
    pair_unitarity = std::max(pair_unitarity, pair_unitarity_defect(tp[a], sp.g1) / std::max(1.0, n * n));
    pair_k_herm = std::max(pair_k_herm, hermiticity_defect(kp[a]));
  }
  const double so = second_order_norm(tp, sp.g1);

  std::vector<CheckResult> out;
  out.push_back(check("faddeev_component_sum", rel(faddeev_solve(sys, z, cond).sum(), t), th.identity));
  out.push_back(check("k_component_sum", rel(k_components_solve(sys, z, cond).sum(), k), th.identity));
  out.push_back(check("t_from_exact_k", rel(t_from_k_full(k, sp.g1, cond), t), th.identity));
  out.push_back(check("script_t_direct_vs_transformed", script_gap, th.identity));
  out.push_back(check("script_t_sum_vs_linearized", rel(script.direct.sum(), lin), th.identity));
  out.push_back(check("pair_heitler", pair_heitler, th.identity));
  out.push_back(check("pair_unitarity", pair_unitarity, th.pair_unitarity));
  out.push_back(check("exact_t_unitarity", unitarity_defect(t, sp.g1), th.identity));
  out.push_back(check("linearized_t_unitarity", unitarity_defect(lin, sp.g1), th.identity));
  out.push_back(check("exact_k_hermiticity", hermiticity_defect(k), th.hermiticity));
  out.push_back(check("pair_k_hermiticity", pair_k_herm, th.hermiticity));
  out.push_back(check("commutator_bound", commutator_residual(tp, sp.g1), 2.0 * so + 1e-12));
  out.push_back(check("product_expansion_bound", product_expansion_residual(tp, sp.g1),
                      std::pow(2.0, static_cast<double>(tp.size())) * so + 1e-12));

  const bool osborn_case = sys.n_particles() == 3 && tp.at(PairChannel(2, 3)).isZero(0);
  if (osborn_case) {
    const Matrix osb = osborn_t(tp.at(PairChannel(1, 2)), tp.at(PairChannel(1, 3)), sp.g1);
    out.push_back(check("osborn_coincidence", op_norm(unitary_impulse_t(tp, sp.g1) - osb), th.osborn));
  } else {
    out.push_back({"osborn_coincidence", 0, th.osborn, true, false});
  }
  return out;
}

TwoBodyReport twobody_report(const TwoBodyConfig& cfg, double condition_limit) {
  TwoBodyReport r;
  const auto model = build_yamaguchi_grid<double>(cfg.beta, cfg.strength, cfg.nodes, cfg.cutoff, cfg.k_on);
  r.grid_on_shell = grid_ls_solve(model, 0.0, condition_limit).on_shell;
  r.analytic_on_shell = yamaguchi_on_shell_t(cfg.strength, cfg.beta, cfg.k_on, cfg.cutoff);
  r.relative_gap = std::abs(r.grid_on_shell - r.analytic_on_shell) / std::max(std::abs(r.analytic_on_shell), kNormFloor);

  const double rho = std::numbers::pi * cfg.k_on / 2.0;
  const bool scattering = std::abs(r.grid_on_shell) > 0.0;
  if (scattering) r.optical_residual = std::abs((1.0 / r.grid_on_shell).imag() - rho) / rho;

  const double eb = min_binding_energy<double>({model.potential}, model.h0);
  if (eb > 0.0) r.bound_grid = -eb;
  r.bound_analytic = yamaguchi_bound_energy(cfg.strength, cfg.beta, cfg.cutoff);

  for (int n : {cfg.nodes / 4, cfg.nodes / 2, cfg.nodes}) {
    const auto m = build_yamaguchi_grid<double>(cfg.beta, cfg.strength, n, cfg.cutoff, cfg.k_on);
    r.doubling_nodes.push_back(n);
    r.doubling_values.push_back(grid_ls_solve(m, 0.0, condition_limit).on_shell);
  }
  const double d1 = std::abs(r.doubling_values[1] - r.doubling_values[0]);
  const double d2 = std::abs(r.doubling_values[2] - r.doubling_values[1]);
  r.doubling_ratio = d1 > 0.0 ? d2 / d1 : (d2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);

  r.checks.push_back(check("grid_vs_analytic", r.relative_gap, cfg.analytic_tolerance));
  r.checks.push_back(scattering ? check("optical_relation", r.optical_residual, 1e-10)
                                : CheckResult{"optical_relation", 0, 1e-10, true, false});
  if (r.bound_grid && r.bound_analytic) {
    r.checks.push_back(check("bound_state", std::abs(*r.bound_grid - *r.bound_analytic), cfg.bound_tolerance));
  } else {
    const bool agree = !r.bound_grid && !r.bound_analytic;
    r.checks.push_back({"bound_state", agree ? 0.0 : 1.0, cfg.bound_tolerance, agree, r.bound_grid || r.bound_analytic});
  }
  r.checks.push_back(check("node_doubling_ratio", r.doubling_ratio, cfg.convergence_limit));
  return r;
}

const std::vector<std::string>& scan_columns() {
  static const std::vector<std::string> cols{
      "index",          "e0",                "eps",          "norm_TaG0",        "norm_TaG1",
      "norm_KaG2",      "born_T",            "born_K",       "heitler_born_residual", "norm_vaG0",
      "second_order",   "commutator",        "product_residual", "defect_exact",  "defect_impulse",
      "defect_linearized", "defect_uia",     "relerr_impulse", "relerr_linearized", "relerr_uia",
      "reduction_gap",  "reduction_side",    "faddeev_radius", "e_b_min",        "status"};
  return cols;
}

std::string scan_csv(const ScanResult<double>& scan) {
  std::ostringstream os;
  os << join(scan_columns()) << "\n";
  for (std::size_t i = 0; i < scan.rows.size(); ++i) {
    std::vector<std::string> fields{std::to_string(i), csv_number(scan.grid[i].e0()), csv_number(scan.grid[i].eps())};
    if (scan.rows[i]) {
      for (const auto& v : row_values(*scan.rows[i])) fields.push_back(csv_number(v));
      fields.emplace_back("ok");
    } else {
      fields.resize(scan_columns().size() - 1);
      fields.emplace_back("skipped");
    }
    os << join(fields) << "\n";
  }
  return os.str();
}

int cmd_verify(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load(config_path, opts);
    const auto checks = verify_checks(cfg);
    const bool pass = all_passed(checks);
    out << "verify at z = " << csv_number(cfg.verify_energy()) << " + i " << csv_number(cfg.grid.eps) << "\n";
    print_checks(out, checks);
    if (cfg.outputs.json) {
      const fs::path dir(cfg.outputs.directory);
      ensure_directory(dir);
      json report = {{"command", "verify"},
                     {"version", kVersion},
                     {"config", json::parse(serialize_scenario(cfg))},
                     {"thresholds", thresholds_json(cfg.thresholds)},
                     {"z", {{"e0", cfg.verify_energy()}, {"eps", cfg.grid.eps}}},
                     {"model", model_summary(build_flat_model<double>(cfg.model))},
                     {"checks", checks_json(checks)},
                     {"passed", pass}};
      write_text_file(dir / "verify.json", report.dump(2) + "\n");
    }
    out << (pass ? "all checks passed" : "some checks FAILED") << "\n";
    return pass ? kExitPass : kExitCheckFailed;
  });
}

int cmd_scan(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = std::chrono::steady_clock::now();
    const auto cfg = load(config_path, opts);
    const unsigned threads = resolve_threads(opts);
    const auto sys = build_flat_model<double>(cfg.model);
    const auto grid = energy_grid<double>(cfg.grid);
    const double cond = cfg.thresholds.condition_limit;
    const auto scan = approximation_error_scan(sys, grid, cond, threads);
    const double e_b_min = min_binding_energy(sys.potentials(), sys.h0());
    const auto coupling = coupling_scan(cfg);

    std::optional<double> onset;
    for (const auto& row : scan.rows) {
      if (!row) continue;
      using C = ChannelSmallness<double>;
      const double worst = std::max({row->smallness.max_of(&C::norm_t_g0), row->smallness.max_of(&C::norm_t_g1),
                                     row->smallness.max_of(&C::norm_k_g2)});
      if (worst < cfg.thresholds.smallness) {
        onset = row->e0;
        break;
      }
    }

    const fs::path dir(cfg.outputs.directory);
    ensure_directory(dir);
    const auto& cols = scan_columns();

    if (cfg.outputs.csv) {
      write_text_file(dir / "scan.csv", scan_csv(scan));
      std::ostringstream ch;
      ch << "index,e0,channel,norm_TaG0,norm_TaG1,norm_KaG2,born_T,born_K,heitler_born_residual,norm_vaG0\n";
      for (std::size_t i = 0; i < scan.rows.size(); ++i) {
        if (!scan.rows[i]) continue;
        for (const auto& c : scan.rows[i]->smallness.channels) {
          ch << i << "," << csv_number(scan.rows[i]->e0) << "," << c.channel.label() << ","
             << csv_number(c.norm_t_g0) << "," << csv_number(c.norm_t_g1) << "," << csv_number(c.norm_k_g2) << ","
             << csv_number(c.born_t) << "," << csv_number(c.born_k) << "," << csv_number(c.heitler_born_residual)
             << "," << csv_number(c.born_v_g0) << "\n";
        }
      }
      write_text_file(dir / "channels.csv", ch.str());
      if (!coupling.empty()) {
        std::ostringstream cs;
        cs << join(kCouplingColumns) << "\n";
        for (const auto& r : coupling) {
          std::vector<std::string> f;
          for (double v : coupling_values(r)) f.push_back(csv_number(v));
          cs << join(f) << "\n";
        }
        write_text_file(dir / "coupling.csv", cs.str());
      }
    }

    if (cfg.outputs.plots) {
      const fs::path plots = dir / "plots";
      ensure_directory(plots);
      for (std::size_t c = 3; c + 1 < cols.size(); ++c) {
        std::ostringstream os;
        os << "# e0 " << cols[c] << "\n";
        for (const auto& row : scan.rows) {
          if (!row) continue;
          const auto v = row_values(*row)[c - 3];
          if (v) os << csv_number(row->e0) << " " << csv_number(*v) << "\n";
        }
        write_text_file(plots / (cols[c] + ".dat"), os.str());
      }
    }

    if (cfg.outputs.json) {
      json rows = json::array();
      for (std::size_t i = 0; i < scan.rows.size(); ++i) {
        json r = {{"index", i}, {"e0", scan.grid[i].e0()}, {"eps", scan.grid[i].eps()}};
        if (scan.rows[i]) {
          const auto values = row_values(*scan.rows[i]);
          for (std::size_t c = 0; c < values.size(); ++c) {
            r[cols[c + 3]] = values[c] ? json(*values[c]) : json(nullptr);
          }
          r["status"] = "ok";
        } else {
          r["status"] = "skipped";
        }
        rows.push_back(r);
      }
      json skipped = json::array();
      for (auto i : scan.skipped()) {
        skipped.push_back({{"index", i}, {"e0", scan.grid[i].e0()}, {"reason", scan.skip_reasons[i]}});
      }
      json coupling_json = json::array();
      std::vector<std::vector<double>> columns(kCouplingColumns.size());
      for (const auto& r : coupling) {
        const auto v = coupling_values(r);
        json j;
        for (std::size_t c = 0; c < v.size(); ++c) {
          j[kCouplingColumns[c]] = v[c];
          columns[c].push_back(v[c]);
        }
        coupling_json.push_back(j);
      }
      json slopes = json::object();
      if (coupling.size() >= 2) {
        for (std::size_t c = 1; c < kCouplingColumns.size(); ++c) {
          const auto s = loglog_slope(columns[0], columns[c]);
          slopes[kCouplingColumns[c]] = s ? json(*s) : json(nullptr);
        }
      }
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      json meta = {{"command", "scan"},
                   {"version", kVersion},
                   {"config", json::parse(serialize_scenario(cfg))},
                   {"thresholds", thresholds_json(cfg.thresholds)},
                   {"threads", threads},
                   {"wall_clock_seconds", wall},
                   {"model", model_summary(sys)},
                   {"e_b_min", e_b_min},
                   {"regime_onset_e0", onset ? json(*onset) : json(nullptr)},
                   {"skipped", skipped},
                   {"columns", cols}};
      json doc = {{"metadata", meta}, {"rows", rows}};
      if (!coupling.empty()) doc["coupling_scan"] = {{"e0", cfg.verify_energy()}, {"rows", coupling_json}, {"slopes", slopes}};
      write_text_file(dir / "scan.json", doc.dump(2) + "\n");
    }

    out << "scan: " << scan.rows.size() << " points, " << scan.skipped().size() << " skipped, E_B_min = "
        << csv_number(e_b_min) << ", output in " << dir.string() << "\n";
    if (onset) out << "smallness below " << csv_number(cfg.thresholds.smallness) << " from e0 = " << csv_number(*onset) << "\n";
    return kExitPass;
  });
}

int cmd_twobody(const std::string& config_path, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load(config_path, opts);
    const auto r = twobody_report(cfg.twobody, cfg.thresholds.condition_limit);
    const bool pass = all_passed(r.checks);
    out << "twobody: grid T = " << csv_number(r.grid_on_shell.real()) << " + i " << csv_number(r.grid_on_shell.imag())
        << ", analytic T = " << csv_number(r.analytic_on_shell.real()) << " + i "
        << csv_number(r.analytic_on_shell.imag()) << "\n";
    out << "  node doubling ratio " << csv_number(r.doubling_ratio) << "\n";
    if (r.bound_grid) out << "  bound state at E = " << csv_number(*r.bound_grid) << "\n";
    print_checks(out, r.checks);
    if (cfg.outputs.json) {
      const fs::path dir(cfg.outputs.directory);
      ensure_directory(dir);
      json doubling = json::array();
      for (std::size_t i = 0; i < r.doubling_nodes.size(); ++i) {
        doubling.push_back({{"nodes", r.doubling_nodes[i]}, {"on_shell", complex_json(r.doubling_values[i])}});
      }
      json report = {{"command", "twobody"},
                     {"version", kVersion},
                     {"config", json::parse(serialize_scenario(cfg))},
                     {"grid_on_shell", complex_json(r.grid_on_shell)},
                     {"analytic_on_shell", complex_json(r.analytic_on_shell)},
                     {"relative_gap", r.relative_gap},
                     {"optical_residual", r.optical_residual},
                     {"bound_energy_grid", r.bound_grid ? json(*r.bound_grid) : json(nullptr)},
                     {"bound_energy_analytic", r.bound_analytic ? json(*r.bound_analytic) : json(nullptr)},
                     {"node_doubling", doubling},
                     {"node_doubling_ratio", r.doubling_ratio},
                     {"checks", checks_json(r.checks)},
                     {"passed", pass}};
      write_text_file(dir / "twobody.json", report.dump(2) + "\n");
    }
    return pass ? kExitPass : kExitCheckFailed;
  });
}

}  // namespace scatterkit::app
