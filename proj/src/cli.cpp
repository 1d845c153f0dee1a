#include "ergorate/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ergorate/drift.hpp"
#include "ergorate/io.hpp"
#include "ergorate/montecarlo.hpp"
#include "ergorate/semigroup.hpp"
#include "ergorate/spectral.hpp"
#include "ergorate/verify.hpp"

namespace ergorate::cli {

using nlohmann::json;

namespace {

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

json tolerance_json(const RunConfig& cfg, const Tolerances& tol) {
  json out = {{"row", tol.row}, {"stat", tol.stat}, {"rev", tol.rev},
              {"sum", tol.sum}, {"eig", tol.eig}};
  json result = {{"tolerances", out}};
  if (!cfg.tolerance_overrides.empty()) result["tolerance_overrides"] = cfg.tolerance_overrides;
  return result;
}

// Rate that sets the natural time scale of a chain's decay.
double time_scale_rate(const SpectralReport<double>& report) {
  return report.reversible ? report.gap : report.true_decay_rate;
}

void write_atomically(const std::string& path, const std::string& body) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + tmp.string());
    out << body;
    if (!out.flush()) throw Error(ErrorKind::InvalidInput, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace

Tolerances resolve_tolerances(const RunConfig& cfg) {
  Tolerances tol;
  for (const auto& [key, value] : cfg.tolerance_overrides) {
    if (!(value > 0)) throw Error(ErrorKind::InvalidInput, "tolerance " + key + " must be positive");
    if (key == "row") tol.row = value;
    else if (key == "stat") tol.stat = value;
    else if (key == "rev") tol.rev = value;
    else if (key == "sum") tol.sum = value;
    else if (key == "eig") tol.eig = value;
    else throw Error(ErrorKind::InvalidInput, "unknown tolerance \"" + key + "\"");
  }
  return tol;
}

ChainSpec<double> resolve_chain(const RunConfig& cfg, const Tolerances& tol) {
  if (!cfg.input.empty() && !cfg.family.empty()) {
    throw Error(ErrorKind::InvalidInput, "give either --input or --family, not both");
  }
  if (!cfg.input.empty()) return io::load_chain_spec(cfg.input, tol);
  if (cfg.family.empty()) throw Error(ErrorKind::InvalidInput, "no chain given (--family or --input)");
  io::FamilyParams params;
  params.pi = cfg.pi;
  params.beta = cfg.beta;
  params.f = cfg.f;
  return io::builtin_family(cfg.family, params, tol);
}

json cmd_analyze(const RunConfig& cfg) {
  const auto tol = resolve_tolerances(cfg);
  const auto spec = resolve_chain(cfg, tol);
  const auto report = theorem11_report(spec, tol);
  json out = io::to_json(report);
  out["label"] = spec.label;
  out["states"] = spec.size();
  out["stationary"] = std::vector<double>(spec.stationary.values().begin(), spec.stationary.values().end());
  out["reversibility_violation"] = report.reversibility_violation;
  out["rate_status"] = report.reversible ? "exact" : "lower_bound";
  out["gap_definition"] = report.reversible ? "smallest nonzero eigenvalue of -Q"
                                            : "gap of the additive reversibilization (Q + Q^)/2";
  out["true_rate_exceeds_gap"] = report.true_decay_rate > report.gap * (1 + 1e-9);
  out["expm_route"] = to_string(Semigroup<double>(spec, tol).route());
  out.update(tolerance_json(cfg, tol));
  return out;
}

json cmd_gap(const RunConfig& cfg) {
  const auto tol = resolve_tolerances(cfg);
  const auto spec = resolve_chain(cfg, tol);
  const auto verdict = is_reversible(spec.rate_matrix, spec.stationary, tol);
  json out = {{"label", spec.label},
              {"gap", gap(spec.rate_matrix, spec.stationary, tol)},
              {"reversible", verdict.reversible}};
  out.update(tolerance_json(cfg, tol));
  return out;
}

std::string cmd_decay(const RunConfig& cfg) {
  const auto tol = resolve_tolerances(cfg);
  const auto spec = resolve_chain(cfg, tol);
  const auto report = theorem11_report(spec, tol);
  const double rate = time_scale_rate(report);
  const double tmax = cfg.tmax.value_or(10.0 / rate);
  if (!(tmax > 0.01)) throw Error(ErrorKind::InvalidInput, "--tmax must exceed 0.01");
  const auto grid = default_time_grid(10.0 / tmax, cfg.points.value_or(60));
  const auto curve = decay_curve<double>(spec, report, Semigroup<double>(spec, tol), cfg.state, grid);
  std::ostringstream out;
  io::write_decay_csv(out, curve);
  return out.str();
}

json cmd_fit(const RunConfig& cfg) {
  const auto tol = resolve_tolerances(cfg);
  const auto spec = resolve_chain(cfg, tol);
  const auto report = theorem11_report(spec, tol);
  std::pair<double, double> window;
  if (cfg.window) {
    window = *cfg.window;
  } else if (report.reversible) {
    window = {2.0 / report.gap, 6.0 / report.gap};
  } else {
    // Peak-envelope fits need several oscillation periods.
    window = {1.0 / report.true_decay_rate, 25.0 / report.true_decay_rate};
  }
  if (!(window.first >= 0 && window.second > window.first)) {
    throw Error(ErrorKind::InvalidInput, "--window must be lo,hi with 0 <= lo < hi");
  }
  const auto grid = linear_grid(window.first, window.second, cfg.points.value_or(1000));
  const auto curve = decay_curve<double>(spec, report, Semigroup<double>(spec, tol), cfg.state, grid);
  const auto fit = fit_rate(curve, window.first, window.second);
  json out = io::to_json(fit);
  out["label"] = spec.label;
  out["state"] = cfg.state;
  out["gap"] = report.gap;
  out["true_decay_rate"] = report.true_decay_rate;
  out["curve_route"] = to_string(curve.route);
  return out;
}

json cmd_drift(const RunConfig& cfg) {
  const auto tol = resolve_tolerances(cfg);
  const auto spec = resolve_chain(cfg, tol);
  const auto drift = drift_condition(spec, cfg.small_set);
  const double spectral_gap = gap(spec.rate_matrix, spec.stationary, tol);
  json out = io::to_json(drift);
  out["label"] = spec.label;
  out["gap_rate"] = spectral_gap;
  out["drift_rate_below_gap"] = drift.c_max < spectral_gap;
  return out;
}

CommandResult cmd_verify(const RunConfig& cfg) {
  VerifyOptions options;
  options.only = cfg.only;
  options.n = cfg.n;
  options.tol = resolve_tolerances(cfg);
  if (!cfg.inject_fault.empty()) {
    if (cfg.inject_fault != "asymmetric") {
      throw Error(ErrorKind::InvalidInput, "unknown fault \"" + cfg.inject_fault + "\"");
    }
    options.inject_asymmetry = true;
  }
  const auto report = run_verify(options);
  json checks = json::array();
  std::size_t passed = 0;
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"subject", c.subject}, {"residual", c.residual},
                      {"tolerance", c.tolerance}, {"pass", c.pass}});
    passed += c.pass ? 1 : 0;
  }
  json out = {{"passed", report.all_passed()},
              {"summary", std::to_string(passed) + "/" + std::to_string(report.checks.size())},
              {"checks", checks},
              {"first_failure", nullptr}};
  if (const auto* fail = report.first_failure()) {
    out["first_failure"] = {{"name", fail->name}, {"subject", fail->subject}};
  }
  out.update(tolerance_json(cfg, options.tol));
  return {report.all_passed() ? kExitOk : kExitVerifyFailed, dump(out)};
}

std::string cmd_simulate(const RunConfig& cfg) {
  const auto tol = resolve_tolerances(cfg);
  const auto spec = resolve_chain(cfg, tol);
  const double rate = true_decay_rate(spec.rate_matrix, tol);
  const double tmax = cfg.tmax.value_or(3.0 / rate);
  if (!(tmax > 0)) throw Error(ErrorKind::InvalidInput, "--tmax must be positive");
  const auto times = linear_grid(0.0, tmax, cfg.points.value_or(10));
  const auto ens = sample_paths<double>(spec, cfg.state, times, cfg.paths, cfg.seed);
  std::ostringstream out;
  io::write_fnorm_csv(out, empirical_fnorm(ens, spec.stationary, spec.weight));
  return out.str();
}

CommandResult execute(const RunConfig& cfg) {
  try {
    if (cfg.command == "analyze") return {kExitOk, dump(cmd_analyze(cfg))};
    if (cfg.command == "gap") return {kExitOk, dump(cmd_gap(cfg))};
    if (cfg.command == "decay") return {kExitOk, cmd_decay(cfg)};
    if (cfg.command == "fit") return {kExitOk, dump(cmd_fit(cfg))};
    if (cfg.command == "drift") return {kExitOk, dump(cmd_drift(cfg))};
    if (cfg.command == "verify") return cmd_verify(cfg);
    if (cfg.command == "simulate") return {kExitOk, cmd_simulate(cfg)};
    throw Error(ErrorKind::InvalidInput, "unknown command \"" + cfg.command + "\"");
  } catch (const Error& e) {
    return {kExitInputError, dump(io::error_json(e))};
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Spectral-gap and f-ergodicity analyzer for finite continuous-time Markov chains",
               "ergorate"};
  app.add_option("command", cfg.command, "analyze | gap | decay | fit | drift | verify | simulate")
      ->required()
      ->check(CLI::IsMember({"analyze", "gap", "decay", "fit", "drift", "verify", "simulate"}));
  app.add_option("--family", cfg.family, "builtin chain: example21 | example22 | birth_death");
  app.add_option("--input", cfg.input, "chain-spec JSON file");
  app.add_option("--output", cfg.output, "write the result here instead of stdout");
  app.add_option("--state", cfg.state, "start state index")->check(CLI::NonNegativeNumber);
  std::optional<double> tmax;
  app.add_option("--tmax", tmax, "end of the time grid");
  std::optional<std::size_t> points;
  app.add_option("--points", points, "number of grid points");
  std::vector<double> window;
  app.add_option("--window", window, "fit window lo,hi")->delimiter(',')->expected(2);
  std::optional<double> beta;
  app.add_option("--beta", beta, "example21 weight on states >= 1");
  std::vector<double> pi, f, small_set_raw;
  app.add_option("--pi", pi, "example21 stationary law, comma separated")->delimiter(',');
  app.add_option("--f", f, "weight function, comma separated")->delimiter(',');
  std::vector<Index> small_set;
  app.add_option("--small-set", small_set, "drift small set C (default 0)")->delimiter(',');
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--paths", cfg.paths, "Monte-Carlo path count")->check(CLI::PositiveNumber);
  app.add_option("--only", cfg.only, "verify: run only these checks")->delimiter(',');
  app.add_option("--n", cfg.n, "verify: state count for size-dependent checks");
  app.add_option("--inject-fault", cfg.inject_fault, "verify: deliberate fault (asymmetric)");
  std::vector<std::string> tol_pairs;
  app.add_option("--tol", tol_pairs, "tolerance override key=value (row, stat, rev, sum, eig)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  cfg.tmax = tmax;
  cfg.points = points;
  cfg.beta = beta;
  if (!window.empty()) cfg.window = std::make_pair(window[0], window[1]);
  if (!pi.empty()) cfg.pi = pi;
  if (!f.empty()) cfg.f = f;
  if (!small_set.empty()) cfg.small_set = small_set;

  CommandResult result;
  try {
    for (const auto& pair : tol_pairs) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::InvalidInput, "--tol expects key=value");
      cfg.tolerance_overrides[pair.substr(0, eq)] = std::stod(pair.substr(eq + 1));
    }
    result = execute(cfg);
  } catch (const Error& e) {
    result = {kExitInputError, dump(io::error_json(e))};
  } catch (const std::exception& e) {
    result = {kExitInputError,
              dump(io::error_json(Error(ErrorKind::InvalidInput, e.what())))};
  }

  if (!cfg.output.empty() && result.exit_code != kExitInputError) {
    try {
      write_atomically(cfg.output, result.body);
    } catch (const std::exception& e) {
      out << dump(io::error_json(Error(ErrorKind::InvalidInput, e.what())));
      return kExitInputError;
    }
  } else {
    out << result.body;
  }
  return result.exit_code;
}

}  // namespace ergorate::cli
