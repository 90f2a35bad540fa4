#include "ppr/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <list>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppr/experiment.hpp"
#include "ppr/simulate.hpp"
#include "ppr/summaries.hpp"

namespace ppr {

namespace {

enum class Kind { text, real, integer, count, reals, flag };

struct FlagDef {
  FlagDef(std::string n, Kind k, std::string h, bool req = false, std::vector<std::string> ch = {})
      : name(std::move(n)), kind(k), help(std::move(h)), required(req), choices(std::move(ch)) {}
  std::string name;
  Kind kind;
  std::string help;
  bool required;
  std::vector<std::string> choices;
};

struct VerbDef {
  std::string name;
  std::string help;
  std::vector<FlagDef> flags;
};

const std::vector<std::string> kFamilies{"none", "ridge", "lasso", "enet", "al", "aenet", "scad", "mcplus"};

std::vector<FlagDef> fit_flags(const std::string& out_help) {
  return {
      {"pattern", Kind::text, "point pattern CSV (x,y)", true, {}},
      {"covariates", Kind::text, "directory of covariate rasters", true, {}},
      {"method", Kind::text, "estimating equation", false, {"pl", "wpl", "logit", "wlogit"}},
      {"penalty", Kind::text, "penalty family", false, kFamilies},
      {"gamma", Kind::real, "penalty shape parameter (family default if absent)"},
      {"nd", Kind::integer, "dummy grid side (default max(10, ceil(sqrt(4m))))"},
      {"r", Kind::real, "distance for K(r) - pi r^2 (default shorter side / 8)"},
      {"delta", Kind::real, "dummy intensity for the logistic methods (default nd^2/|D|)"},
      {"dummy", Kind::text, "dummy process for the logistic methods", false,
       {"stratified", "binomial", "poisson"}},
      {"n-lambda", Kind::integer, "path length"},
      {"lambda-min-ratio", Kind::real, "smallest lambda as a fraction of lambda_max"},
      {"seed", Kind::count, "random seed (dummy points)"},
      {"window", Kind::reals, "xmin,xmax,ymin,ymax (default raster extent)"},
      {"no-standardize", Kind::flag, "penalize on the raw covariate scale"},
      {"no-se", Kind::flag, "skip sandwich standard errors"},
      {"out", Kind::text, out_help, true, {}},
  };
}

const std::vector<VerbDef>& verbs() {
  static const std::vector<VerbDef> defs{
      {"simulate",
       "simulate a Thomas or Poisson pattern with log-linear intensity",
       {
           {"model", Kind::text, "process", false, {"thomas", "poisson"}},
           {"kappa", Kind::real, "parent intensity (thomas)"},
           {"omega", Kind::real, "offspring dispersion (thomas)"},
           {"beta", Kind::reals, "beta0,beta1,...; slopes only when --mu is given", true, {}},
           {"mu", Kind::real, "expected count; calibrates the intercept"},
           {"covariates", Kind::text, "directory of covariate rasters"},
           {"window", Kind::reals, "xmin,xmax,ymin,ymax (default raster extent)"},
           {"seed", Kind::count, "random seed"},
           {"out", Kind::text, "output pattern CSV", true, {}},
       }},
      {"fit", "fit a (penalized) intensity model and write fit.json", fit_flags("output JSON")},
      {"path", "fit a penalized path and write lambda,wqbic,beta rows", fit_flags("output CSV")},
      {"kest",
       "Ripley's K with translation correction",
       {
           {"pattern", Kind::text, "point pattern CSV (x,y)", true, {}},
           {"r", Kind::reals, "distances, comma separated", true, {}},
           {"rho", Kind::text, "intensity plug-in", false, {"const", "fitted"}},
           {"covariates", Kind::text, "covariate rasters (needed for --rho fitted)"},
           {"window", Kind::reals, "xmin,xmax,ymin,ymax (default raster extent)"},
           {"out", Kind::text, "output CSV (default stdout)"},
       }},
      {"experiment",
       "run a replication study from a key = value config",
       {
           {"config", Kind::text, "config file", true, {}},
           {"out", Kind::text, "output directory", true, {}},
           {"threads", Kind::integer, "worker threads (default PPR_THREADS or cores)"},
       }},
      {"make-covariates",
       "write scenario covariate rasters (reference terrain unless --aux)",
       {
           {"scenario", Kind::integer, "1, 2 or 3"},
           {"aux", Kind::text, "directory with elevation, gradient (and soil) rasters"},
           {"seed", Kind::count, "random seed (white-noise rasters)"},
           {"out", Kind::text, "output directory", true, {}},
       }},
  };
  return defs;
}

std::string usage_text() {
  std::ostringstream os;
  os << "usage: ppr <verb> [flags]\n\nverbs:\n";
  for (const auto& v : verbs()) os << "  " << v.name << std::string(18 - v.name.size(), ' ') << v.help << '\n';
  os << "\nrun `ppr <verb> --help` for the flags of a verb\n";
  return os.str();
}

double to_real(const std::string& flag, std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw UsageError(4, "--" + flag + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

template <typename T>
T to_int(const std::string& flag, const std::string& s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError(4, "--" + flag + ": cannot parse integer '" + s + "'");
  }
  return v;
}

std::vector<double> to_reals(const std::string& flag, const std::string& s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(',', start);
    out.push_back(to_real(flag, std::string_view(s).substr(start, pos == std::string::npos ? pos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

const VerbDef& verb_def(const std::string& name) {
  for (const auto& v : verbs()) {
    if (v.name == name) return v;
  }
  throw UsageError(2, "unknown verb '" + name + "'");
}

// --- typed accessors on a parsed command ---

double real_or(const Command& c, const std::string& f, double fallback) {
  return c.has(f) ? to_real(f, c.get(f)) : fallback;
}
int int_or(const Command& c, const std::string& f, int fallback) {
  return c.has(f) ? to_int<int>(f, c.get(f)) : fallback;
}
std::uint64_t seed_of(const Command& c) {
  return c.has("seed") ? to_int<std::uint64_t>("seed", c.get("seed")) : 0;
}
std::string text_or(const Command& c, const std::string& f, const std::string& fallback) {
  return c.has(f) ? c.get(f) : fallback;
}

Window window_of(const Command& c, const CovariateList* covs) {
  if (c.has("window")) {
    auto w = to_reals("window", c.get("window"));
    if (w.size() != 4) throw UsageError(3, "--window: expected xmin,xmax,ymin,ymax");
    return Window(w[0], w[1], w[2], w[3]);
  }
  if (covs && !covs->empty()) return common_window(*covs);
  throw UsageError(3, "--window is required when no covariates are given");
}

FitConfig fit_config_of(const Command& c) {
  FitConfig cfg;
  cfg.method = parse_method(text_or(c, "method", "pl"));
  const std::string pen = text_or(c, "penalty", "none");
  if (pen != "none") {
    Family f = parse_family(pen);
    cfg.penalty = PenaltySpec::make(f, 0.0, real_or(c, "gamma", default_gamma(f)));
  }
  cfg.nd = int_or(c, "nd", 0);
  cfg.r = real_or(c, "r", 0.0);
  cfg.delta = real_or(c, "delta", 0.0);
  cfg.dummy = parse_dummy_kind(text_or(c, "dummy", "stratified"));
  cfg.n_lambda = int_or(c, "n-lambda", cfg.n_lambda);
  cfg.lambda_min_ratio = real_or(c, "lambda-min-ratio", cfg.lambda_min_ratio);
  cfg.seed = RngSeed{seed_of(c), 0}.derive(2);
  cfg.standardize = !c.has("no-standardize");
  cfg.compute_se = !c.has("no-se");
  cfg.validate();
  return cfg;
}

int do_simulate(const Command& c, std::ostream& out) {
  CovariateList covs;
  if (c.has("covariates")) covs = read_covariate_dir(c.get("covariates"));
  const Window win = window_of(c, &covs);
  std::vector<double> beta = to_reals("beta", c.get("beta"));
  if (c.has("mu")) {
    double b0 = calibrate_intercept(beta, covs, win, to_real("mu", c.get("mu")));
    beta.insert(beta.begin(), b0);
  }
  const RngSeed rng{seed_of(c), 0};
  const std::string model = text_or(c, "model", "thomas");
  std::optional<PointPattern> pattern;
  if (model == "thomas") {
    if (!c.has("kappa") || !c.has("omega")) {
      throw UsageError(3, "--kappa and --omega are required for --model thomas");
    }
    ThomasParams tp{to_real("kappa", c.get("kappa")), to_real("omega", c.get("omega")), beta};
    pattern = simulate_thomas(tp, covs, win, rng);
  } else {
    LogLinearIntensity rho(covs, beta);
    pattern = simulate_poisson(std::cref(rho), rho.upper_bound(win), win, rng);
  }
  write_pattern_csv(c.get("out"), *pattern);
  out << "wrote " << pattern->size() << " points to " << c.get("out") << '\n';
  return 0;
}

int do_fit(const Command& c, std::ostream& out) {
  FitConfig cfg = fit_config_of(c);
  if (c.verb == "path" && !cfg.penalty) throw UsageError(3, "--penalty: path needs a penalty family");
  CovariateList covs = read_covariate_dir(c.get("covariates"));
  const Window win = window_of(c, &covs);
  PointPattern pattern = read_pattern_csv(c.get("pattern"), win);
  FitResult res = fit(pattern, covs, cfg);
  if (c.verb == "fit") {
    emit_fit(res, c.get("out"));
  } else {
    std::ofstream os(c.get("out"));
    if (!os) throw IoError("cannot write " + c.get("out"));
    os << "lambda,wqbic";
    for (Eigen::Index j = 0; j < res.coef_path.cols(); ++j) os << ",beta" << j;
    os << '\n';
    for (std::size_t k = 0; k < res.lambda_grid.size(); ++k) {
      os << format_real(res.lambda_grid[k]) << ',' << format_real(res.wqbic[k]);
      for (Eigen::Index j = 0; j < res.coef_path.cols(); ++j) {
        os << ',' << format_real(res.coef_path(static_cast<Eigen::Index>(k), j));
      }
      os << '\n';
    }
  }
  out << "selected index " << res.selected_index << ", support size " << res.support.size()
      << ", wrote " << c.get("out") << '\n';
  return 0;
}

int do_kest(const Command& c, std::ostream& out) {
  CovariateList covs;
  if (c.has("covariates")) covs = read_covariate_dir(c.get("covariates"));
  const Window win = window_of(c, &covs);
  PointPattern pattern = read_pattern_csv(c.get("pattern"), win);
  std::vector<double> rs = to_reals("r", c.get("r"));
  std::vector<double> rho(pattern.size(), static_cast<double>(pattern.size()) / area(win));
  if (text_or(c, "rho", "const") == "fitted") {
    if (covs.empty()) throw UsageError(3, "--covariates is required for --rho fitted");
    FitConfig cfg;
    cfg.compute_se = false;
    FitResult f = fit(pattern, covs, cfg);
    LogLinearIntensity model(covs, f.beta_hat);
    for (std::size_t i = 0; i < pattern.size(); ++i) rho[i] = model(pattern[i]);
  }
  std::ofstream file;
  std::ostream* os = &out;
  if (c.has("out")) {
    file.open(c.get("out"));
    if (!file) throw IoError("cannot write " + c.get("out"));
    os = &file;
  }
  *os << "r,khat,pi_r2\n";
  for (double r : rs) {
    *os << format_real(r) << ',' << format_real(ripley_k(pattern, rho, r)) << ','
        << format_real(std::acos(-1.0) * r * r) << '\n';
  }
  return 0;
}

int do_experiment(const Command& c, std::ostream& out) {
  ExperimentSpec spec = parse_experiment_config(c.get("config"));
  if (c.has("threads")) spec.threads = to_int<int>("threads", c.get("threads"));
  ExperimentResult res = run_experiment(spec);
  std::filesystem::path dir = c.get("out");
  std::filesystem::create_directories(dir);
  write_selection_csv(dir / "selection.csv", res);
  write_prediction_csv(dir / "prediction.csv", res);
  write_runs_csv(dir / "runs.csv", res);
  int failed = 0;
  for (const auto& r : res.table) failed += r.n_failed;
  out << "wrote " << res.table.size() << " metric rows to " << dir.string() << " (" << failed
      << " failed fits)\n";
  return 0;
}

int do_make_covariates(const Command& c, std::ostream& out) {
  const int scenario = int_or(c, "scenario", 1);
  std::optional<CovariateList> aux;
  if (c.has("aux")) {
    aux = read_covariate_dir(c.get("aux"));
  } else if (scenario != 3) {
    aux = reference_terrain();
  }
  CovariateList covs = gen_scenario_covariates(scenario, RngSeed{seed_of(c), 0}.derive(1), aux);
  write_covariate_dir(c.get("out"), covs);
  out << "wrote " << covs.size() << " rasters to " << c.get("out") << '\n';
  return 0;
}

// --- JSON ---

void json_real(std::ostream& os, double v) {
  if (std::isfinite(v)) os << format_real(v);
  else os << "null";
}

template <typename Range>
void json_reals(std::ostream& os, const Range& r) {
  os << '[';
  bool first = true;
  for (double v : r) {
    if (!first) os << ',';
    first = false;
    json_real(os, v);
  }
  os << ']';
}

std::vector<double> reals_from(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.is_null() ? std::nan("") : v.get<double>());
  return out;
}

}  // namespace

const std::string& Command::get(const std::string& name) const {
  auto it = flags.find(name);
  if (it == flags.end()) throw UsageError(3, "--" + name + " is required");
  return it->second;
}

Command parse_args(const std::vector<std::string>& args) {
  if (args.empty()) throw UsageError(2, "no verb given\n" + usage_text());
  CLI::App app{"penalized intensity estimation for spatial point processes", "ppr"};
  app.require_subcommand(0, 1);
  std::list<std::string> store;
  std::list<bool> switches;
  struct Bound {
    std::string verb, name;
    CLI::Option* opt;
    const std::string* value;
    const bool* on;
  };
  std::vector<Bound> bound;
  std::vector<CLI::App*> subs;
  for (const auto& v : verbs()) {
    CLI::App* sub = app.add_subcommand(v.name, v.help);
    subs.push_back(sub);
    for (const auto& f : v.flags) {
      if (f.kind == Kind::flag) {
        switches.push_back(false);
        auto* o = sub->add_flag("--" + f.name, switches.back(), f.help);
        bound.push_back({v.name, f.name, o, nullptr, &switches.back()});
        continue;
      }
      store.emplace_back();
      auto* o = sub->add_option("--" + f.name, store.back(), f.help);
      if (f.required) o->required();
      if (!f.choices.empty()) o->check(CLI::IsMember(f.choices));
      bound.push_back({v.name, f.name, o, &store.back(), nullptr});
    }
  }

  std::vector<const char*> argv{"ppr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    std::string text = app.help();
    for (auto* s : subs) {
      if (s->parsed()) text = s->help();
    }
    return Command{"help", {{"text", text}}};
  } catch (const CLI::RequiredError& e) {
    throw UsageError(3, e.what());
  } catch (const CLI::ValidationError& e) {
    throw UsageError(3, e.what());
  } catch (const CLI::ArgumentMismatch& e) {
    throw UsageError(3, e.what());
  } catch (const CLI::ParseError& e) {
    throw UsageError(2, e.what());
  }

  Command cmd;
  for (auto* s : subs) {
    if (s->parsed()) cmd.verb = s->get_name();
  }
  if (cmd.verb.empty()) throw UsageError(2, "no verb given\n" + usage_text());
  for (const auto& b : bound) {
    if (b.verb != cmd.verb || b.opt->count() == 0) continue;
    cmd.flags[b.name] = b.value ? *b.value : (*b.on ? "1" : "0");
  }

  // numbers are checked here so that a bad value fails before any work
  for (const auto& f : verb_def(cmd.verb).flags) {
    if (!cmd.has(f.name)) continue;
    const std::string& v = cmd.flags[f.name];
    switch (f.kind) {
      case Kind::real: to_real(f.name, v); break;
      case Kind::integer: to_int<int>(f.name, v); break;
      case Kind::count: to_int<std::uint64_t>(f.name, v); break;
      case Kind::reals: to_reals(f.name, v); break;
      default: break;
    }
  }
  return cmd;
}

int run_command(const Command& cmd, std::ostream& out, std::ostream& /*err*/) {
  if (cmd.verb == "help") {
    out << cmd.get("text");
    return 0;
  }
  if (cmd.verb == "simulate") return do_simulate(cmd, out);
  if (cmd.verb == "fit" || cmd.verb == "path") return do_fit(cmd, out);
  if (cmd.verb == "kest") return do_kest(cmd, out);
  if (cmd.verb == "experiment") return do_experiment(cmd, out);
  if (cmd.verb == "make-covariates") return do_make_covariates(cmd, out);
  throw UsageError(2, "unknown verb '" + cmd.verb + "'");
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_command(parse_args(args), out, err);
  } catch (const UsageError& e) {
    err << "ppr: " << e.what() << '\n';
    return e.code();
  } catch (const std::exception& e) {
    err << "ppr: error: " << e.what() << '\n';
    return 1;
  }
}

void emit_fit(const FitResult& r, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "{\n  \"lambda_grid\": ";
  json_reals(os, r.lambda_grid);
  os << ",\n  \"coef_path\": [";
  for (Eigen::Index k = 0; k < r.coef_path.rows(); ++k) {
    os << (k ? ",\n    " : "\n    ");
    Eigen::RowVectorXd row = r.coef_path.row(k);
    json_reals(os, std::vector<double>(row.data(), row.data() + row.size()));
  }
  os << "\n  ],\n  \"wqbic\": ";
  json_reals(os, r.wqbic);
  os << ",\n  \"selected_index\": " << r.selected_index << ",\n  \"beta_hat\": ";
  json_reals(os, r.beta_hat);
  os << ",\n  \"support\": [";
  for (std::size_t k = 0; k < r.support.size(); ++k) os << (k ? "," : "") << r.support[k];
  os << "]";
  if (r.se) {
    os << ",\n  \"se\": ";
    json_reals(os, *r.se);
  }
  const Diagnostics& d = r.diagnostics;
  os << ",\n  \"diagnostics\": {\n"
     << "    \"irls_iterations\": " << d.irls_iterations << ",\n"
     << "    \"cd_sweeps\": " << d.cd_sweeps << ",\n"
     << "    \"nonconverged\": " << d.nonconverged << ",\n"
     << "    \"inflated_updates\": " << d.inflated_updates << ",\n"
     << "    \"clamped\": " << (d.clamped ? "true" : "false") << ",\n"
     << "    \"final_objective\": ";
  json_real(os, d.final_objective);
  os << ",\n    \"lambda_max\": ";
  json_real(os, d.lambda_max);
  os << ",\n    \"nd\": " << d.nd << ",\n    \"delta\": ";
  json_real(os, d.delta);
  os << ",\n    \"r\": ";
  json_real(os, d.r);
  os << ",\n    \"f_hat\": ";
  json_real(os, d.f_hat);
  os << ",\n    \"n_quadrature\": " << d.n_quadrature << ",\n    \"center\": ";
  json_reals(os, d.center);
  os << ",\n    \"scale\": ";
  json_reals(os, d.scale);
  os << ",\n    \"penalty_factor\": ";
  json_reals(os, d.penalty_factor);
  os << "\n  }\n}\n";
  if (!os) throw IoError("failed writing " + path.string());
}

FitResult read_fit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  FitResult r;
  try {
    r.lambda_grid = reals_from(j.at("lambda_grid"));
    const auto& cp = j.at("coef_path");
    const auto rows = static_cast<Eigen::Index>(cp.size());
    const auto cols = rows ? static_cast<Eigen::Index>(cp[0].size()) : 0;
    r.coef_path.resize(rows, cols);
    for (Eigen::Index k = 0; k < rows; ++k) {
      auto row = reals_from(cp[static_cast<std::size_t>(k)]);
      for (Eigen::Index c = 0; c < cols; ++c) r.coef_path(k, c) = row[static_cast<std::size_t>(c)];
    }
    r.wqbic = reals_from(j.at("wqbic"));
    r.selected_index = j.at("selected_index").get<int>();
    r.beta_hat = reals_from(j.at("beta_hat"));
    r.support = j.at("support").get<std::vector<int>>();
    if (j.contains("se")) r.se = reals_from(j.at("se"));
    const auto& d = j.at("diagnostics");
    auto num = [](const nlohmann::json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
    r.diagnostics.irls_iterations = d.at("irls_iterations").get<int>();
    r.diagnostics.cd_sweeps = d.at("cd_sweeps").get<int>();
    r.diagnostics.nonconverged = d.at("nonconverged").get<int>();
    r.diagnostics.inflated_updates = d.at("inflated_updates").get<int>();
    r.diagnostics.clamped = d.at("clamped").get<bool>();
    r.diagnostics.final_objective = num(d.at("final_objective"));
    r.diagnostics.lambda_max = num(d.at("lambda_max"));
    r.diagnostics.nd = d.at("nd").get<int>();
    r.diagnostics.delta = num(d.at("delta"));
    r.diagnostics.r = num(d.at("r"));
    r.diagnostics.f_hat = num(d.at("f_hat"));
    r.diagnostics.n_quadrature = d.at("n_quadrature").get<std::size_t>();
    r.diagnostics.center = reals_from(d.at("center"));
    r.diagnostics.scale = reals_from(d.at("scale"));
    r.diagnostics.penalty_factor = reals_from(d.at("penalty_factor"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return r;
}

}  // namespace ppr
