#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "bsnse/engine/linear_oracle.hpp"
#include "bsnse/estimates/invariants.hpp"
#include "bsnse/forward/forward_solver.hpp"
#include "bsnse/io/csv.hpp"
#include "bsnse/io/manifest.hpp"

namespace bsnse {

/// Exit codes of the command line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  ///< I/O failure, or an audit reported violations
  kExitConfig = 2,
  kExitAdmissibility = 3,
  kExitNumerical = 4,
};

struct CommandResult {
  int status = kExitOk;
  std::vector<std::string> outputs;  ///< file names relative to the output directory
  std::string summary;
};

namespace detail {

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline void write_report_samples(const EstimateReport& r, const std::filesystem::path& path) {
  CsvTable t({"lhs", "rhs", "slack"});
  for (std::size_t j = 0; j < r.lhs.size(); ++j) t.row({r.lhs[j], r.rhs[j], r.slack[j]});
  t.write(path.string());
}

/// Writes reports.json, a one-row-per-report summary and per-report sample tables.
inline bool write_reports(const std::vector<EstimateReport>& reports, const std::filesystem::path& dir,
                          const std::string& stem, CommandResult& res) {
  nlohmann::json arr = nlohmann::json::array();
  CsvTable summary({"report", "samples", "violations", "margin_min", "margin_mean"});
  bool ok = true;
  std::ostringstream text;
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const auto& r = reports[j];
    arr.push_back(r.to_json());
    summary.row({double(j), double(r.lhs.size()), double(r.violations), r.lhs.empty() ? 0.0 : r.margin_min,
                 r.margin_mean});
    const std::string samples = stem + "_" + r.name + ".csv";
    write_report_samples(r, dir / samples);
    res.outputs.push_back(samples);
    ok = ok && r.passed();
    text << r.name << ": samples=" << r.lhs.size() << " violations=" << r.violations << '\n';
  }
  write_json(arr, dir / (stem + ".json"));
  summary.write((dir / (stem + ".csv")).string());
  res.outputs.push_back(stem + ".json");
  res.outputs.push_back(stem + ".csv");
  res.summary += text.str();
  return ok;
}

}  // namespace detail

inline CommandResult run_simulate(const Config& cfg, const std::filesystem::path& dir) {
  const Problem p = resolve_problem(cfg);
  admissibility_gate(p);
  const BsdeSolution sol = solve_bsnse(p.solver, p.model, p.sigma, p.terminal);
  CommandResult res;
  write_field_csv(sol.u0(), (dir / "u0.csv").string());
  res.outputs.push_back("u0.csv");

  const int L = sol.grid().L;
  int node = cfg.integer("output.slice_node");
  if (node < 0) node = L / 2;
  const std::size_t paths = cfg.count("output.slice_paths");
  write_slice_csv(sol, node, paths == 0 ? sol.ensemble().paths() : paths, (dir / "slice.csv").string());
  res.outputs.push_back("slice.csv");

  const auto ito = ito_energy_residual(sol);
  const auto& st = sol.stats();
  CsvTable diag({"node", "t", "degree", "rank_deficient", "condition", "picard_max_increment", "picard_max_iterations",
                 "truncation_active", "budget_u_h", "budget_u_v", "budget_z_h", "mean_u_h2", "mean_z_h2",
                 "ito_abs_mean", "ito_mean", "ito_se"});
  for (int i = 0; i <= L; ++i) {
    const auto& d = sol.diagnostics()[static_cast<std::size_t>(i)];
    double mu = 0.0, mz = 0.0;
    for (std::size_t m = 0; m < st.M; ++m) {
      mu += st.u_h2[st.at(i, m)];
      if (i < L) mz += st.z_h2[st.at(i, m)];
    }
    const bool step = i < L;
    diag.row({double(i), sol.grid().t(i), double(d.degree), double(d.rank_deficient), d.condition,
              d.picard_max_increment, double(d.picard_max_iterations), double(d.truncation_active), d.budget_u_h,
              d.budget_u_v, d.budget_z_h, mu / double(st.M), mz / double(st.M), step ? ito.abs_mean[i] : 0.0,
              step ? ito.mean[i] : 0.0, step ? ito.se[i] : 0.0});
  }
  diag.write((dir / "diagnostics.csv").string());
  res.outputs.push_back("diagnostics.csv");

  const auto ap = apriori_report(sol);
  nlohmann::json j = ap.report.to_json();
  j["ratio_h"] = ap.ratio_h;
  j["ratio_v"] = ap.ratio_v;
  j["sup_u_h2"] = ap.sup_u_h2;
  j["int_u_v2"] = ap.int_u_v2;
  j["int_z_h2"] = ap.int_z_h2;
  j["mnorm"] = mnorm(sol);
  j["ito_total_abs"] = ito.total_abs;
  detail::write_json(j, dir / "apriori.json");
  res.outputs.push_back("apriori.json");

  std::ostringstream os;
  os << "u(0): |u|_H = " << std::sqrt(norm_h2(sol.u0())) << ", M-norm = " << mnorm(sol) << '\n'
     << "a priori ratios: H " << ap.ratio_h << ", V " << ap.ratio_v << '\n'
     << "Ito residual (sum of path-mean |r_i|): " << ito.total_abs << '\n';
  res.summary = os.str();
  return res;
}

inline CommandResult run_invariants(const Config& cfg, const std::filesystem::path& dir) {
  const Problem p = resolve_problem(cfg);
  admissibility_gate(p);
  const auto modes = ModeSet::box(p.solver.period, cfg.integer("invariants.K"));
  const std::size_t samples = cfg.count("invariants.samples");
  std::mt19937_64 rng(p.solver.seed);
  std::vector<EstimateReport> reports = identity_suite(modes, samples, rng);
  for (auto& r : inequality_suite(modes, samples, rng, p.model, p.solver.nu, p.sigma, p.solver.lambda_bar_sq))
    reports.push_back(std::move(r));
  reports.push_back(measure_galerkin_constants(modes, samples, rng).report);
  TruncationSpec trunc = p.solver.truncation;
  trunc.enabled = true;
  for (auto& r : forcing_suite(modes, samples, rng, p.model, p.solver.nu, p.sigma, trunc)) reports.push_back(std::move(r));
  for (auto& r : reports) r.seed = p.solver.seed;
  CommandResult res;
  const bool ok = detail::write_reports(reports, dir, "invariants", res);
  res.status = ok ? kExitOk : kExitFailure;
  return res;
}

inline CommandResult run_oracle_linear(const Config& cfg, const std::filesystem::path& dir) {
  const Problem p = resolve_problem(cfg);
  admissibility_gate(p);
  if (p.model.kind() == ForcingKind::saturated) throw ConfigError("oracle-linear needs forcing.kind = zero or linear");
  if (p.sigma.oscillation[0] != 0.0 || p.sigma.oscillation[1] != 0.0)
    throw ConfigError("oracle-linear needs a constant sigma");
  const BsdeSolution sol = solve_bsnse(p.solver, p.model, p.sigma, p.terminal);
  const VelocityField u0 = sol.u0();
  const auto& modes = *p.modes;
  CsvTable table({"kx", "ky", "component", "re_solver", "im_solver", "re_oracle", "im_oracle", "rel_err"});
  double worst = 0.0, scale = 0.0;
  struct Row {
    std::size_t r;
    int comp;
    Complex solver, oracle;
  };
  std::vector<Row> rows;
  for (std::size_t r = 0; r < modes.rep_count(); ++r) {
    const auto k = modes.rep(r);
    for (int comp = 0; comp < 2; ++comp) {
      const Complex c = p.terminal.xi0[r][comp];
      const Complex a = p.model.a0(p.modes, 0.0)[r][comp];
      if (c == Complex(0.0) && a == Complex(0.0)) continue;
      LinearModeProblem lp;
      lp.nu = p.solver.nu;
      lp.lambda = modes.rep_eigenvalue(r);
      const auto s0 = p.sigma(0.0);
      lp.kappa = modes.wavenumber_scale() * (s0[0] * k.kx + s0[1] * k.ky);
      lp.a1 = p.model.kind() == ForcingKind::linear ? p.model.params().a1 : 0.0;
      lp.a2 = p.model.kind() == ForcingKind::linear ? p.model.params().a2 : 0.0;
      lp.c = c;
      if (a != Complex(0.0)) {
        const auto model = p.model;
        const auto ms = p.modes;
        lp.f = [model, ms, r, comp](double t) { return model.a0(ms, t)[r][comp]; };
      }
      if (!p.terminal.deterministic()) {
        const auto term = p.terminal;
        lp.psi = [term](double w) { return term.psi(w); };
      }
      lp.T = p.solver.T;
      const Complex y = linear_mode_oracle(lp, 0.0);
      rows.push_back({r, comp, u0[r][comp], y});
      scale = std::max(scale, std::abs(y));
    }
  }
  for (const auto& row : rows) {
    const double err = std::abs(row.solver - row.oracle);
    // Components far below the largest one are compared on its scale.
    const double rel = err / std::max(std::abs(row.oracle), 1e-6 * scale);
    worst = std::max(worst, rel);
    const auto k = modes.rep(row.r);
    table.row({double(k.kx), double(k.ky), double(row.comp), row.solver.real(), row.solver.imag(), row.oracle.real(),
               row.oracle.imag(), rel});
  }
  table.write((dir / "oracle_linear.csv").string());
  nlohmann::json j;
  j["max_rel_err"] = worst;
  j["components"] = rows.size();
  detail::write_json(j, dir / "oracle_linear.json");
  CommandResult res;
  res.outputs = {"oracle_linear.csv", "oracle_linear.json"};
  res.summary = "max relative error of u(0) against the linear oracle: " + format_double(worst) + "\n";
  return res;
}

inline CommandResult run_oracle_reversal(const Config& cfg, const std::filesystem::path& dir) {
  const Problem p = resolve_problem(cfg);
  admissibility_gate(p);
  if (!p.terminal.deterministic() || !p.sigma.is_zero())
    throw ConfigError("oracle-reversal needs terminal.psi = one and sigma = 0");
  if (p.solver.truncation.enabled) throw ConfigError("oracle-reversal needs truncation.enabled = false");
  const auto levels = cfg.int_list("reversal.levels");
  CsvTable table({"L", "residual", "order"});
  nlohmann::json j = nlohmann::json::array();
  double prev = 0.0;
  int prev_L = 0;
  std::ostringstream os;
  for (int L : levels) {
    SolverConfig sc = p.solver;
    sc.L = L;
    const BsdeSolution sol = solve_bsnse(sc, p.model, p.sigma, p.terminal);
    const double res = reversal_residual(sol, reversed_run(sol));
    const double order = prev_L > 0 ? std::log(prev / res) / std::log(double(L) / prev_L) : 0.0;
    table.row({double(L), res, order});
    j.push_back({{"L", L}, {"residual", res}, {"order", order}});
    os << "L=" << L << " residual=" << res << (prev_L > 0 ? " order=" + format_double(order) : std::string()) << '\n';
    prev = res;
    prev_L = L;
  }
  table.write((dir / "reversal.csv").string());
  detail::write_json(j, dir / "reversal.json");
  CommandResult res;
  res.outputs = {"reversal.csv", "reversal.json"};
  res.summary = os.str();
  return res;
}

/// Y = |u_i|^2, X = 2 g + C |u_i|^2 from a solve: the energy-level Gronwall pipeline.
inline EstimateReport energy_gronwall_check(const BsdeSolution& sol) {
  const auto& st = sol.stats();
  const auto& c = sol.constants();
  const auto& g = sol.driver().model().bundle().g;
  std::vector<double> X(static_cast<std::size_t>(st.L) * st.M);
  for (int i = 0; i < st.L; ++i) {
    const double gi = g(sol.grid().t(i));
    for (std::size_t m = 0; m < st.M; ++m) X[st.at(i, m)] = 2.0 * gi + c.C * st.u_h2[st.at(i, m)];
  }
  EstimateReport r = stochastic_gronwall_check(st.u_h2, X, 0.0, sol.ensemble(), sol.config().basis_degree);
  r.name = "energy_gronwall";
  r.constants["C"] = c.C;
  return r;
}

inline CommandResult run_estimates(const Config& cfg, const std::filesystem::path& dir) {
  const Problem p = resolve_problem(cfg);
  const double lambda = admissibility_gate(p);
  const std::size_t samples = cfg.count("estimates.samples");
  std::mt19937_64 rng(p.solver.seed);
  std::vector<EstimateReport> reports;
  reports.push_back(coercivity_residual(p.model, p.solver.nu, p.sigma, p.solver.lambda_bar_sq, p.modes, samples, rng));
  reports.push_back(b_difference_report(p.modes, lambda, samples, rng));
  const BsdeSolution sol = solve_bsnse(p.solver, p.model, p.sigma, p.terminal);
  reports.push_back(energy_gronwall_check(sol));
  for (auto& r : reports) r.seed = p.solver.seed;
  CommandResult res;
  const bool ok = detail::write_reports(reports, dir, "estimates", res);
  res.status = ok ? kExitOk : kExitFailure;
  return res;
}

inline CommandResult run_uniqueness(const Config& cfg, const std::filesystem::path& dir) {
  const Problem p = resolve_problem(cfg);
  admissibility_gate(p);
  SolverConfig ca = p.solver, cb = p.solver;
  cb.seed = cfg.u64("uniqueness.seed_b");
  const BsdeSolution a = solve_bsnse(ca, p.model, p.sigma, p.terminal);
  const BsdeSolution b = solve_bsnse(cb, p.model, p.sigma, p.terminal);
  const BrownianEnsemble ev =
      BrownianEnsemble::generate(cfg.u64("uniqueness.eval_seed"), cfg.count("uniqueness.eval_M"), a.grid());
  CsvTable table({"pair", "gap", "budget", "ratio"});
  nlohmann::json j;
  std::ostringstream os;
  const auto two = uniqueness_gap(a, b, ev);
  table.row({0.0, two.gap, two.budget, two.ratio()});
  j["two_seed"] = two.report.to_json();
  j["two_seed"]["gap"] = two.gap;
  j["two_seed"]["ratio"] = two.ratio();
  os << "two seeds: gap=" << two.gap << " budget=" << two.budget << " sqrt(gap)/se=" << two.ratio() << '\n';
  bool ok = two.report.passed();
  if (ca.truncation.enabled) {
    SolverConfig cu = ca;
    cu.truncation.enabled = false;
    const BsdeSolution u = solve_bsnse(cu, p.model, p.sigma, p.terminal);
    const auto tr = uniqueness_gap(a, u, ev);
    table.row({1.0, tr.gap, tr.budget, tr.ratio()});
    j["truncated_vs_untruncated"] = tr.report.to_json();
    j["truncated_vs_untruncated"]["gap"] = tr.gap;
    os << "truncated vs untruncated, shared seed: gap=" << tr.gap << '\n';
    ok = ok && tr.gap == 0.0;
  }
  table.write((dir / "uniqueness.csv").string());
  detail::write_json(j, dir / "uniqueness.json");
  CommandResult res;
  res.outputs = {"uniqueness.csv", "uniqueness.json"};
  res.summary = os.str();
  res.status = ok ? kExitOk : kExitFailure;
  return res;
}

inline const std::map<std::string, std::function<CommandResult(const Config&, const std::filesystem::path&)>>&
subcommands() {
  static const std::map<std::string, std::function<CommandResult(const Config&, const std::filesystem::path&)>> m = {
      {"simulate", run_simulate},           {"invariants", run_invariants}, {"oracle-linear", run_oracle_linear},
      {"oracle-reversal", run_oracle_reversal}, {"estimates", run_estimates}, {"uniqueness", run_uniqueness}};
  return m;
}

/// Runs one subcommand end to end: output directory, manifest and exit code.
/// Errors are reported on `err` and mapped to exit codes; a manifest is
/// written whenever the output directory could be created.
inline int run_command(const std::string& name, Config cfg, const std::filesystem::path& dir,
                       std::optional<std::uint64_t> seed, int threads, std::ostream& out, std::ostream& err) {
  RunManifest man;
  man.subcommand = name;
  man.threads = threads;
  man.started = utc_timestamp();
  bool have_dir = false;
  int status = kExitOk;
  try {
    const auto it = subcommands().find(name);
    if (it == subcommands().end()) throw ConfigError("unknown subcommand '" + name + "'");
    if (seed) cfg.set("solver.seed", std::to_string(*seed));
    man.config = cfg;
    man.seed = cfg.u64("solver.seed");
    set_worker_count(threads);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    have_dir = true;
    CommandResult res = it->second(cfg, dir);
    for (const auto& f : res.outputs) man.outputs[f] = "";
    out << res.summary;
    status = res.status;
    if (status != kExitOk) man.message = "audit reported violations";
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    status = kExitConfig;
    man.message = e.what();
  } catch (const AdmissibilityError& e) {
    err << e.what() << '\n';
    status = kExitAdmissibility;
    man.message = e.what();
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    status = kExitNumerical;
    man.message = e.what();
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << '\n';
    status = kExitConfig;
    man.message = e.what();
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    status = kExitFailure;
    man.message = e.what();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    status = kExitFailure;
    man.message = e.what();
  }
  man.exit_code = status;
  man.finished = utc_timestamp();
  if (have_dir) {
    try {
      man.write(dir);
    } catch (const std::exception& e) {
      err << "I/O error: " << e.what() << '\n';
      if (status == kExitOk) status = kExitFailure;
    }
  }
  return status;
}

}  // namespace bsnse
