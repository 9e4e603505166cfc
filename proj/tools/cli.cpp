#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "commspec/closedform.hpp"
#include "commspec/errors.hpp"
#include "commspec/fpsolve.hpp"
#include "commspec/hypotest.hpp"
#include "commspec/inversion.hpp"
#include "commspec/io.hpp"
#include "commspec/simulate.hpp"

namespace commspec::cli {
namespace {

struct Options {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string echo;
  std::string config;

  double c = std::numeric_limits<double>::quiet_NaN();
  bool identity = false;
  std::string H;
  bool equal = false;
  bool numeric = false;
  std::string grid;
  std::string eps = "1e-2,1e-3,1e-4";

  std::vector<std::string> z;
  bool anti = false;

  int p = 0;
  std::string dist = "gaussian";
  std::string scaling = "identity";
  int k = 0;
  double rho = 0.0;

  std::string eig;

  std::string x1, x2;
  int B = 1000;
  std::string sigma;
  bool estimate_psd = false;
  std::string cache_dir;
  int psd_grid_points = 64;
  bool no_pool = false;

  std::string x;
  int n = 0;
};

// Options whose values are never echoed.
bool skip_in_echo(const std::string& name) {
  return name == "help" || name == "config" || name == "echo";
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Master random seed");
  sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  sub->add_option("--out", o.out, "Output file (stdout when omitted)");
  sub->add_option("--echo", o.echo, "Where to write the config echo JSON");
  sub->add_option("--config", o.config, "Config echo JSON from an earlier run");
}

void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--c", o.c, "Aspect ratio p/n")->check(CLI::PositiveNumber);
  sub->add_flag("--identity", o.identity, "Sigma_1 = Sigma_2 = I");
  sub->add_option("--H", o.H, "Population spectrum JSON");
  sub->add_flag("--equal", o.equal, "Treat H as the common spectrum of Sigma_1 = Sigma_2");
  sub->add_option("--eps", o.eps, "Comma-separated decreasing eps schedule");
}

void build(CLI::App& app, Options& o) {
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* solve = app.add_subcommand("solve", "Solve the fixed-point system at given z");
  add_common(solve, o);
  add_model(solve, o);
  solve->add_option("--z", o.z, "Points 're,im' (C_L, or C+ with --anti)")->required();
  solve->add_flag("--anti", o.anti, "Anti-commutator Stieltjes transform at z in C+");

  auto* density = app.add_subcommand("density", "Write the LSD density on a grid");
  add_common(density, o);
  add_model(density, o);
  density->add_option("--grid", o.grid, "lo:hi:step")->required();
  density->add_flag("--numeric", o.numeric, "Use solver + inversion even for --identity");

  auto* simulate = app.add_subcommand("simulate", "Simulate a commutator spectrum");
  add_common(simulate, o);
  simulate->add_option("--p", o.p, "Dimension")->required()->check(CLI::Range(2, 1 << 20));
  simulate->add_option("--c", o.c, "Aspect ratio p/n (n = round(p/c))")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--dist", o.dist, "gaussian | uniform | mixed")
      ->check(CLI::IsMember({"gaussian", "uniform", "mixed"}));
  simulate->add_option("--scaling", o.scaling, "identity | diag | householder | haar")
      ->check(CLI::IsMember({"identity", "diag", "householder", "haar"}));
  simulate->add_option("--H", o.H, "Joint population spectrum JSON");
  simulate->add_option("--k", o.k, "Householder rank (0 = ceil(sqrt p))");
  simulate->add_flag("--anti", o.anti, "Anti-commutator instead of commutator");
  simulate->add_option("--rho", o.rho, "Equi-correlation between the two samples");

  auto* compare = app.add_subcommand("compare", "Compare an eigenvalue CSV with theory");
  add_common(compare, o);
  add_model(compare, o);
  compare->add_option("--eig", o.eig, "Eigenvalue CSV")->required();
  compare->add_option("--grid", o.grid, "lo:hi:step for the numeric density");
  compare->add_flag("--numeric", o.numeric, "Use solver + inversion even for --identity");

  auto* test = app.add_subcommand("test", "Equi-correlation test on paired data");
  add_common(test, o);
  test->add_option("--x1", o.x1, "First sample matrix (CSV or binary)")->required();
  test->add_option("--x2", o.x2, "Second sample matrix (CSV or binary)")->required();
  test->add_option("--B", o.B, "Monte-Carlo replicates")->check(CLI::PositiveNumber);
  test->add_option("--sigma", o.sigma, "Known population spectrum JSON");
  test->add_flag("--estimate-psd", o.estimate_psd, "Estimate the population spectrum");
  test->add_option("--cache-dir", o.cache_dir, "Directory for cached null samples");
  test->add_option("--psd-grid-points", o.psd_grid_points, "Grid size for PSD estimation");
  test->add_flag("--no-pool", o.no_pool, "Estimate from X1 only");

  auto* psd = app.add_subcommand("psd-estimate", "Estimate a population spectrum");
  add_common(psd, o);
  psd->add_option("--x", o.x, "Sample matrix (rows = coordinates)");
  psd->add_option("--eig", o.eig, "Sample covariance eigenvalue CSV");
  psd->add_option("--n", o.n, "Number of observations (with --eig)");
  psd->add_option("--psd-grid-points", o.psd_grid_points, "Grid size");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw DomainError("cannot parse number '" + tok + "'");
    }
  }
  return out;
}

cplx parse_z(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() != 2) throw DomainError("z must be given as 're,im', got '" + s + "'");
  return {v[0], v[1]};
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) {
    try {
      parts.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw DomainError("grid must be lo:hi:step, got '" + s + "'");
    }
  }
  if (parts.size() != 3) throw DomainError("grid must be lo:hi:step, got '" + s + "'");
  return make_grid(parts[0], parts[1], parts[2]);
}

ModelSpec model_from(const Options& o) {
  if (!(o.c > 0.0)) throw DomainError("--c is required and must be positive");
  if (o.identity && !o.H.empty()) throw DomainError("--identity and --H are mutually exclusive");
  if (o.identity) return ModelSpec::identity(o.c);
  if (o.H.empty()) throw DomainError("a model is required: --identity or --H <json>");
  const AnyMeasure H = read_measure(o.H);
  if (const auto* u = std::get_if<UnivariateSpectralMeasure>(&H)) return ModelSpec::equal(o.c, *u);
  const auto& b = std::get<BivariateSpectralMeasure>(H);
  if (o.equal) {
    std::vector<UnivariateAtom> atoms;
    for (const auto& a : b.atoms()) {
      if (a.l1 != a.l2) throw DomainError("--equal needs atoms with l1 == l2");
      atoms.push_back({a.l1, a.w});
    }
    return ModelSpec::equal(o.c, UnivariateSpectralMeasure(std::move(atoms)));
  }
  return ModelSpec::general(o.c, b);
}

EpsSchedule eps_from(const Options& o) {
  EpsSchedule s;
  s.eps_list = parse_list(o.eps);
  s.validate();
  return s;
}

// Writes to --out, or to `out` when no file was requested.
void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty())
    out << text;
  else
    write_text_file(o.out, text);
}

json echo_json(const CLI::App* sub, const json& derived) {
  json opts = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (skip_in_echo(name)) continue;
    if (opt->get_expected_max() == 0) {
      opts[name] = opt->count() > 0;
      continue;
    }
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1)
        opts[name] = r;
      else
        opts[name] = r.back();
    } else if (!opt->get_default_str().empty()) {
      opts[name] = opt->get_default_str();
    }
  }
  return {{"command", sub->get_name()}, {"options", opts}, {"derived", derived}};
}

void write_echo(const Options& o, const json& echo, std::ostream& err) {
  const std::string text = echo.dump(2) + "\n";
  if (!o.echo.empty())
    write_text_file(o.echo, text);
  else if (!o.out.empty())
    write_text_file(o.out + ".config.json", text);
  else
    err << text;
}

json cplx_json(cplx v) { return json::array({v.real(), v.imag()}); }

json cmd_solve(const Options& o, std::ostream& out) {
  const ModelSpec model = model_from(o);
  SolverConfig cfg;
  json rows = json::array();
  std::vector<cplx> zs;
  for (const auto& s : o.z) zs.push_back(parse_z(s));
  if (o.anti) {
    for (cplx z : zs) rows.push_back({{"z", cplx_json(z)}, {"s_G", cplx_json(anti_stieltjes(model, z, cfg))}});
  } else {
    for (cplx z : zs)
      if (!(z.real() < 0.0)) throw DomainError("solve: z must satisfy Re z < 0");
    const auto hs = solve_path(model, zs, cfg);
    for (std::size_t k = 0; k < zs.size(); ++k)
      rows.push_back({{"z", cplx_json(zs[k])},
                      {"h1", cplx_json(hs[k].h1)},
                      {"h2", cplx_json(hs[k].h2)},
                      {"s", cplx_json(stieltjes_from_h(hs[k], model.c, zs[k]))},
                      {"residual", hs[k].residual},
                      {"iterations", hs[k].iterations}});
  }
  emit(o, out, rows.dump(2) + "\n");
  return json::object();
}

std::ostringstream density_csv_text(const DensityCurve& curve) {
  std::ostringstream ss;
  ss << "# point_mass_zero=" << fmt17(curve.point_mass_zero) << '\n' << "x,f\n";
  for (std::size_t i = 0; i < curve.xs.size(); ++i)
    ss << fmt17(curve.xs[i]) << ',' << fmt17(curve.fs[i]) << '\n';
  return ss;
}

DensityCurve theory_curve(const Options& o, const ModelSpec& model, const std::vector<double>& grid,
                          std::ostream& err) {
  if (model.mode == ModelMode::identity && !o.numeric) {
    DensityCurve curve = density_grid_identity(model.c, grid);
    if (model.c == 2.0)
      for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] == 0.0) curve.fs[i] = std::numeric_limits<double>::infinity();
    return curve;
  }
  DensityCurve curve = density_grid(model, grid, eps_from(o), SolverConfig{}, o.threads);
  if (!curve.failures.empty())
    err << "warning: " << curve.failures.size()
        << " grid points did not settle as eps -> 0 (typically support edges)\n";
  return curve;
}

json cmd_density(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelSpec model = model_from(o);
  const auto grid = parse_grid(o.grid);
  const DensityCurve curve = theory_curve(o, model, grid, err);
  emit(o, out, density_csv_text(curve).str());
  return {{"mode", model.mode == ModelMode::identity ? "identity"
                   : model.mode == ModelMode::equal  ? "equal"
                                                     : "general"},
          {"closed_form", model.mode == ModelMode::identity && !o.numeric},
          {"point_mass_zero", curve.point_mass_zero},
          {"grid_points", grid.size()}};
}

json cmd_simulate(const Options& o, std::ostream& out) {
  ExperimentConfig cfg;
  cfg.p = o.p;
  cfg.n = n_from_c(o.p, o.c);
  cfg.innovation = parse_innovation_kind(o.dist);
  cfg.scaling.kind = parse_scaling_kind(o.scaling);
  cfg.scaling.k = o.k;
  if (!o.H.empty()) {
    const AnyMeasure H = read_measure(o.H);
    if (const auto* b = std::get_if<BivariateSpectralMeasure>(&H))
      cfg.scaling.H = *b;
    else
      cfg.scaling.H = BivariateSpectralMeasure::diagonal(std::get<UnivariateSpectralMeasure>(H));
  }
  if (cfg.scaling.kind == ScalingKind::identity && cfg.scaling.H)
    throw DomainError("--H given with --scaling identity; choose diag, householder or haar");
  cfg.anti = o.anti;
  cfg.rho = o.rho;
  cfg.seed = o.seed;
  const SpectrumSample s = run_experiment(cfg);
  std::ostringstream ss;
  ss << "lambda\n";
  for (double v : s.spectrum.vals()) ss << fmt17(v) << '\n';
  emit(o, out, ss.str());
  return {{"n", cfg.n}, {"experiment", experiment_to_json(cfg)},
          {"raw_skew_defect", s.raw_skew_defect}};
}

json cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelSpec model = model_from(o);
  const ImagSpectrum spec(read_eigen_csv(o.eig));
  if (spec.empty()) throw DomainError("compare: eigenvalue file is empty");
  const double zero_frac = esd_cdf_eval(spec, 0.0) - esd_cdf_eval(spec, std::nextafter(0.0, -1.0));
  json report;
  double pm = 0.0, m2_theory = 0.0, ks = 0.0;
  if (model.mode == ModelMode::identity && !o.numeric) {
    const IdentityCdf F(model.c);
    ks = ks_distance(spec, [&F](double x) { return F(x); });
    pm = F.point_mass();
    m2_theory = identity_second_moment(model.c);
  } else {
    std::vector<double> grid;
    if (!o.grid.empty()) {
      grid = parse_grid(o.grid);
    } else {
      const double r = 1.2 * std::max(std::abs(spec.vals().front()), std::abs(spec.vals().back()));
      grid = make_grid(-r, r, r / 1000.0);
    }
    const DensityCurve curve = theory_curve(o, model, grid, err);
    ks = ks_distance(spec, curve_cdf(curve));
    pm = curve.point_mass_zero;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double a = grid[i - 1], b = grid[i];
      m2_theory += 0.5 * (a * a * curve.fs[i - 1] + b * b * curve.fs[i]) * (b - a);
    }
  }
  report = {{"ks", ks},
            {"point_mass_diff", zero_frac - pm},
            {"second_moment_emp", spec.second_moment()},
            {"second_moment_theory", m2_theory}};
  emit(o, out, report.dump(2) + "\n");
  return {{"p", spec.p()}};
}

json cmd_test(const Options& o, std::ostream& out) {
  if (!o.sigma.empty() && o.estimate_psd)
    throw DomainError("--sigma and --estimate-psd are mutually exclusive");
  PairedSample sample{read_matrix(o.x1), read_matrix(o.x2)};
  sample.validate();
  TestConfig cfg;
  cfg.B = o.B;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.cache_dir = o.cache_dir;
  cfg.psd_grid_points = o.psd_grid_points;
  cfg.pooled = !o.no_pool;
  if (o.estimate_psd) {
    cfg.sigma_mode = SigmaMode::estimate;
  } else if (!o.sigma.empty()) {
    const AnyMeasure H = read_measure(o.sigma);
    const auto* u = std::get_if<UnivariateSpectralMeasure>(&H);
    if (!u) throw DomainError("--sigma expects a univariate spectrum {\"atoms\":[{\"l\",\"w\"}]}");
    cfg.sigma_spectrum = *u;
  }
  const TestResult r = run_test(sample, cfg);
  emit(o, out, test_result_to_json(r).dump(2) + "\n");
  return {{"p", sample.p()}, {"n", sample.n()}};
}

json cmd_psd(const Options& o, std::ostream& out) {
  std::vector<double> eigs;
  double c_n = 0.0;
  if (!o.x.empty() == !o.eig.empty()) throw DomainError("psd-estimate: give exactly one of --x or --eig");
  if (!o.x.empty()) {
    const Eigen::MatrixXd X = read_matrix(o.x);
    eigs = sample_cov_eigs(X);
    c_n = static_cast<double>(X.rows()) / static_cast<double>(X.cols());
  } else {
    if (o.n < 1) throw DomainError("psd-estimate: --eig needs --n");
    eigs = read_eigen_csv(o.eig);
    c_n = static_cast<double>(eigs.size()) / o.n;
  }
  const EstimatedPSD est = estimate_psd(eigs, c_n, default_psd_grid(eigs, o.psd_grid_points));
  const json j = {{"grid", est.grid},
                  {"weights", est.weights},
                  {"fit_residual", est.fit_residual},
                  {"iterations", est.iterations},
                  {"converged", est.converged},
                  {"measure", measure_to_json(est.measure())}};
  emit(o, out, j.dump(2) + "\n");
  return {{"c_n", c_n}};
}

int parse_into(CLI::App& app, std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return -1;
}

// Arguments for the options stored in a config echo that are not given
// explicitly on the command line.
std::vector<std::string> config_args(const json& cfg, const CLI::App* sub,
                                     const std::vector<std::string>& given) {
  auto explicit_on_cli = [&given](const std::string& name) {
    const std::string flag = "--" + name;
    for (const auto& a : given)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> args;
  if (!cfg.contains("options") || !cfg.at("options").is_object())
    throw FormatError("config: missing \"options\" object");
  for (const auto& [name, value] : cfg.at("options").items()) {
    if (skip_in_echo(name)) continue;
    const CLI::Option* opt = sub->get_option_no_throw("--" + name);
    if (!opt) throw FormatError("config: unknown option '" + name + "' for " + sub->get_name());
    if (explicit_on_cli(name)) continue;
    if (opt->get_expected_max() == 0) {
      if (value.is_boolean() && value.get<bool>()) args.push_back("--" + name);
      continue;
    }
    auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      if (value.empty()) continue;
      args.push_back("--" + name);
      for (const auto& v : value) args.push_back(text(v));
    } else {
      args.push_back("--" + name);
      args.push_back(text(value));
    }
  }
  return args;
}

std::optional<std::string> config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("Commutator spectra: solve, invert, simulate, test");
  build(app, o);
  std::vector<std::string> merged = args;

  try {
    if (const auto path = config_path(args)) {
      const json cfg = read_json_file(*path);
      std::string command = cfg.value("command", std::string());
      if (!args.empty() && app.get_subcommand_no_throw(args.front())) {
        if (!command.empty() && command != args.front())
          throw DomainError("config was written by '" + command + "', not '" + args.front() + "'");
        command = args.front();
      } else {
        merged.insert(merged.begin(), command);
      }
      const CLI::App* sub = app.get_subcommand_no_throw(command);
      if (!sub) throw FormatError(*path + ": unknown command '" + command + "'");
      const auto extra = config_args(cfg, sub, args);
      merged.insert(merged.begin() + 1, extra.begin(), extra.end());
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (const int rc = parse_into(app, merged, out, err); rc >= 0) return rc;

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    json derived;
    if (name == "solve")
      derived = cmd_solve(o, out);
    else if (name == "density")
      derived = cmd_density(o, out, err);
    else if (name == "simulate")
      derived = cmd_simulate(o, out);
    else if (name == "compare")
      derived = cmd_compare(o, out, err);
    else if (name == "test")
      derived = cmd_test(o, out);
    else
      derived = cmd_psd(o, out);
    write_echo(o, echo_json(sub, derived), err);
    return kExitOk;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace commspec::cli
