#include "ppr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "ppr/error.hpp"
#include "ppr/simulate.hpp"

namespace ppr {

SelectionMetrics selection_metrics(std::span<const int> support_hat, std::span<const int> true_support,
                                   int p) {
  std::set<int> truth(true_support.begin(), true_support.end());
  std::set<int> hat(support_hat.begin(), support_hat.end());
  if (truth.empty()) throw ConfigError("true support must be nonempty");
  for (int j : truth) {
    if (j < 1 || j > p) throw ConfigError("true support index out of range");
  }
  int tp = 0, fp = 0;
  for (int j : hat) (truth.count(j) ? tp : fp)++;
  SelectionMetrics m;
  const auto s = static_cast<double>(truth.size());
  m.tpr = 100.0 * tp / s;
  m.fpr = p > static_cast<int>(truth.size()) ? 100.0 * fp / (p - s) : 0.0;
  m.ppv = hat.empty() ? 0.0 : 100.0 * tp / static_cast<double>(hat.size());
  return m;
}

PredictionMetrics prediction_metrics(const Eigen::MatrixXd& est, std::span<const double> beta_true) {
  if (est.cols() != static_cast<Eigen::Index>(beta_true.size())) {
    throw ConfigError("estimate columns must match beta_true");
  }
  if (est.rows() < 1) throw ConfigError("at least one replication required");
  const double n = static_cast<double>(est.rows());
  double bias2 = 0.0, var = 0.0;
  for (Eigen::Index j = 0; j < est.cols(); ++j) {
    const double mean = est.col(j).mean();
    const double b = mean - beta_true[static_cast<std::size_t>(j)];
    bias2 += b * b;
    var += (est.col(j).array() - mean).square().sum() / n;
  }
  return {std::sqrt(bias2), std::sqrt(var), std::sqrt(bias2 + var)};
}

void ExperimentSpec::validate() const {
  if (scenario < 1 || scenario > 3) throw ConfigError("scenario must be 1, 2 or 3");
  if (!(kappa > 0.0) || !(omega > 0.0)) throw ConfigError("kappa and omega must be positive");
  if (!(mu > 0.0)) throw ConfigError("mu must be positive");
  if (n_reps < 1) throw ConfigError("n_reps must be >= 1");
  if (methods.empty() || penalties.empty()) throw ConfigError("methods and penalties must be nonempty");
  for (const auto& p : penalties) {
    if (p != "oracle" && p != "none") parse_family(p);
  }
  if (nd < 0 || r_for_f < 0.0 || n_lambda < 1 || threads < 0) {
    throw ConfigError("nd, r_for_f, n_lambda and threads must be nonnegative");
  }
}

namespace {

std::string trim_copy(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim_copy(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

std::string join_support(const std::vector<int>& s) {
  std::string out;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ';';
    out += std::to_string(s[k]);
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

ExperimentSpec parse_experiment_config_text(const std::string& text) {
  ExperimentSpec spec;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim_copy(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim_copy(line.substr(0, eq));
    std::string val = trim_copy(line.substr(eq + 1));
    if (key == "scenario") spec.scenario = parse_number<int>(key, val);
    else if (key == "kappa") spec.kappa = parse_number<double>(key, val);
    else if (key == "omega") spec.omega = parse_number<double>(key, val);
    else if (key == "mu") spec.mu = parse_number<double>(key, val);
    else if (key == "n_reps") spec.n_reps = parse_number<int>(key, val);
    else if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, val);
    else if (key == "nd") spec.nd = parse_number<int>(key, val);
    else if (key == "r_for_f") spec.r_for_f = parse_number<double>(key, val);
    else if (key == "n_lambda") spec.n_lambda = parse_number<int>(key, val);
    else if (key == "threads") spec.threads = parse_number<int>(key, val);
    else if (key == "covariates") spec.covariates = val;
    else if (key == "methods") {
      spec.methods.clear();
      for (const auto& m : split_list(val)) spec.methods.push_back(parse_method(m));
    } else if (key == "penalties") {
      spec.penalties = split_list(val);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec parse_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config_text(buf.str());
}

int default_threads() {
  if (const char* env = std::getenv("PPR_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::optional<CovariateList> aux;
  if (!spec.covariates.empty()) {
    aux = read_covariate_dir(spec.covariates);
  } else if (spec.scenario != 3) {
    aux = reference_terrain();
  }
  const RngSeed root{spec.seed, 0};
  const CovariateList covs = gen_scenario_covariates(spec.scenario, root.derive(1), aux);
  const int p = static_cast<int>(covs.size());
  const Window full = common_window(covs);

  ExperimentResult res;
  std::vector<double> slopes(static_cast<std::size_t>(p), 0.0);
  slopes[0] = 2.0;
  slopes[1] = 0.75;
  const double base_mu = std::max(spec.mu, 1600.0);
  const double b0 = calibrate_intercept(slopes, covs, full, base_mu);
  res.beta_true.push_back(b0);
  res.beta_true.insert(res.beta_true.end(), slopes.begin(), slopes.end());
  res.window = full;
  if (spec.mu < base_mu) {
    res.window = erode(full, erosion_for_mean(res.beta_true, covs, full, spec.mu));
  }
  const CovariateList oracle_covs{covs[0], covs[1]};

  ThomasParams tp{spec.kappa, spec.omega, res.beta_true};
  const std::size_t per_rep = spec.methods.size() * spec.penalties.size();
  std::vector<std::vector<RunRecord>> slots(static_cast<std::size_t>(spec.n_reps));
  res.counts.assign(static_cast<std::size_t>(spec.n_reps), 0.0);

  auto run_rep = [&](int rep) {
    const RngSeed rs{spec.seed, static_cast<std::uint64_t>(rep) + 1};
    auto& out = slots[static_cast<std::size_t>(rep)];
    out.reserve(per_rep);
    std::optional<PointPattern> pattern;
    std::string sim_error;
    try {
      pattern = simulate_thomas(tp, covs, res.window, rs.derive(1));
      res.counts[static_cast<std::size_t>(rep)] = static_cast<double>(pattern->size());
    } catch (const std::exception& e) {
      sim_error = e.what();
    }
    for (Method m : spec.methods) {
      for (const auto& pen : spec.penalties) {
        RunRecord rec;
        rec.rep = rep;
        rec.method = method_name(m);
        rec.penalty = pen;
        if (!pattern) {
          rec.error = "simulation failed: " + sim_error;
          out.push_back(std::move(rec));
          continue;
        }
        rec.n_points = pattern->size();
        FitConfig cfg;
        cfg.method = m;
        cfg.nd = spec.nd;
        cfg.r = spec.r_for_f;
        cfg.n_lambda = spec.n_lambda;
        cfg.seed = rs.derive(2);
        cfg.compute_se = false;
        try {
          if (pen == "oracle") {
            FitResult f = fit(*pattern, oracle_covs, cfg);
            rec.beta.assign(static_cast<std::size_t>(p) + 1, 0.0);
            std::copy(f.beta_hat.begin(), f.beta_hat.end(), rec.beta.begin());
            rec.support = f.support;
          } else {
            if (pen != "none") cfg.penalty = PenaltySpec::make(parse_family(pen), 0.0);
            FitResult f = fit(*pattern, covs, cfg);
            rec.beta = f.beta_hat;
            rec.support = f.support;
          }
          rec.ok = true;
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
        out.push_back(std::move(rec));
      }
    }
  };

  const int n_threads = std::min(spec.threads > 0 ? spec.threads : default_threads(), spec.n_reps);
  if (n_threads <= 1) {
    for (int rep = 0; rep < spec.n_reps; ++rep) run_rep(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (int rep = next++; rep < spec.n_reps; rep = next++) run_rep(rep);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& s : slots) {
    for (auto& r : s) res.runs.push_back(std::move(r));
  }

  // aggregate in replication order
  const std::vector<int> truth{1, 2};
  std::span<const double> slope_true(res.beta_true.data() + 1, static_cast<std::size_t>(p));
  for (Method m : spec.methods) {
    for (const auto& pen : spec.penalties) {
      MetricRow row;
      row.method = method_name(m);
      row.penalty = pen;
      std::vector<const RunRecord*> ok;
      for (const auto& r : res.runs) {
        if (r.method != row.method || r.penalty != pen) continue;
        if (r.ok) ok.push_back(&r);
        else ++row.n_failed;
      }
      row.n_ok = static_cast<int>(ok.size());
      if (!ok.empty()) {
        Eigen::MatrixXd est(static_cast<Eigen::Index>(ok.size()), p);
        for (std::size_t k = 0; k < ok.size(); ++k) {
          auto sm = selection_metrics(ok[k]->support, truth, p);
          row.selection.tpr += sm.tpr;
          row.selection.fpr += sm.fpr;
          row.selection.ppv += sm.ppv;
          for (int j = 0; j < p; ++j) {
            est(static_cast<Eigen::Index>(k), j) = ok[k]->beta[static_cast<std::size_t>(j) + 1];
          }
        }
        const double n = static_cast<double>(ok.size());
        row.selection.tpr /= n;
        row.selection.fpr /= n;
        row.selection.ppv /= n;
        row.prediction = prediction_metrics(est, slope_true);
      }
      res.table.push_back(row);
    }
  }
  return res;
}

void write_selection_csv(const std::filesystem::path& path, const ExperimentResult& res) {
  auto out = open_out(path);
  out << "method,penalty,TPR,FPR,PPV,n_ok,n_failed\n";
  for (const auto& r : res.table) {
    out << r.method << ',' << r.penalty << ',' << format_real(r.selection.tpr) << ','
        << format_real(r.selection.fpr) << ',' << format_real(r.selection.ppv) << ',' << r.n_ok
        << ',' << r.n_failed << '\n';
  }
}

void write_prediction_csv(const std::filesystem::path& path, const ExperimentResult& res) {
  auto out = open_out(path);
  out << "method,penalty,Bias,SD,RMSE,n_ok,n_failed\n";
  for (const auto& r : res.table) {
    out << r.method << ',' << r.penalty << ',' << format_real(r.prediction.bias) << ','
        << format_real(r.prediction.sd) << ',' << format_real(r.prediction.rmse) << ',' << r.n_ok
        << ',' << r.n_failed << '\n';
  }
}

void write_runs_csv(const std::filesystem::path& path, const ExperimentResult& res) {
  auto out = open_out(path);
  const std::size_t q = res.beta_true.size();
  out << "rep,method,penalty,ok,n_points,support";
  for (std::size_t j = 0; j < q; ++j) out << ",beta" << j;
  out << ",error\n";
  for (const auto& r : res.runs) {
    out << r.rep << ',' << r.method << ',' << r.penalty << ',' << (r.ok ? 1 : 0) << ','
        << r.n_points << ',' << join_support(r.support);
    for (std::size_t j = 0; j < q; ++j) {
      out << ',' << (j < r.beta.size() ? format_real(r.beta[j]) : std::string("NA"));
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << ',' << err << '\n';
  }
}

}  // namespace ppr
