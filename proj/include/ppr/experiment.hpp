#pragma once

// Replication harness: simulate Thomas patterns under a covariate scenario,
// fit every (method, penalty) pair, and aggregate selection and estimation
// accuracy.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppr/geom.hpp"
#include "ppr/solver.hpp"

namespace ppr {

struct SelectionMetrics {
  double tpr = 0.0;  // percent
  double fpr = 0.0;
  double ppv = 0.0;
};

// Indices are 1-based covariate indices. PPV of an empty selection is 0.
SelectionMetrics selection_metrics(std::span<const int> support_hat, std::span<const int> true_support,
                                   int p);

struct PredictionMetrics {
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
};

// estimates: n_reps x p. Population variance, so rmse^2 = bias^2 + sd^2.
PredictionMetrics prediction_metrics(const Eigen::MatrixXd& estimates, std::span<const double> beta_true);

struct ExperimentSpec {
  int scenario = 1;
  double kappa = 5e-4;
  double omega = 20.0;
  double mu = 1600.0;  // below 1600 the window is eroded to this mean count
  std::vector<Method> methods{Method::pl};
  // penalty families by name, plus "oracle" (unpenalized on z1, z2) and
  // "none" (unpenalized on all covariates)
  std::vector<std::string> penalties{"al"};
  int n_reps = 100;
  std::uint64_t seed = 1;
  int nd = 0;
  double r_for_f = 0.0;
  int n_lambda = 100;
  // elevation, gradient (and 13 soil rasters for scenario 3); empty means
  // the built-in reference terrain
  std::filesystem::path covariates;
  int threads = 0;  // 0: PPR_THREADS or hardware concurrency

  void validate() const;
};

// Flat `key = value` lines; '#' starts a comment.
ExperimentSpec parse_experiment_config(const std::filesystem::path& path);
ExperimentSpec parse_experiment_config_text(const std::string& text);

struct RunRecord {
  int rep = 0;
  std::string method;
  std::string penalty;
  bool ok = false;
  std::size_t n_points = 0;
  std::vector<int> support;
  std::vector<double> beta;  // length p + 1
  std::string error;
};

struct MetricRow {
  std::string method;
  std::string penalty;
  SelectionMetrics selection;
  PredictionMetrics prediction;
  int n_ok = 0;
  int n_failed = 0;
};

struct ExperimentResult {
  std::vector<double> beta_true;  // length p + 1
  Window window{0.0, 1.0, 0.0, 1.0};
  std::vector<double> counts;    // pattern size per rep
  std::vector<RunRecord> runs;   // rep-major, then method, then penalty
  std::vector<MetricRow> table;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_selection_csv(const std::filesystem::path& path, const ExperimentResult& res);
void write_prediction_csv(const std::filesystem::path& path, const ExperimentResult& res);
void write_runs_csv(const std::filesystem::path& path, const ExperimentResult& res);

// PPR_THREADS, else hardware concurrency, at least 1.
int default_threads();

}  // namespace ppr
