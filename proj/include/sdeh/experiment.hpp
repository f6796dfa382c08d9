#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdeh/config_file.hpp"
#include "sdeh/multistep.hpp"
#include "sdeh/optimize.hpp"
#include "sdeh/simulate.hpp"

namespace sdeh {

enum class EstimatorMode { bayes_init, hybrid, ml_true_init, ml_uniform_init };

std::string mode_name(EstimatorMode mode);
EstimatorMode mode_from_name(const std::string& name);

struct ExperimentConfig {
  std::string model_name = "ou-1d";
  RegisteredModel model;

  // simulation
  Vec alpha_true, beta_true, x0;
  Mat Lambda;
  int substeps = 10;
  NoiseLaw noise_law = NoiseLaw::gaussian;

  TuningConfig tuning;  // carries n and h
  McmcConfig mcmc_alpha;
  McmcConfig mcmc_beta;
  HybridOptions hybrid_options;

  std::int64_t replications = 1;
  std::vector<EstimatorMode> modes;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = ".";
  MaximizeOptions ml_options;

  void validate() const;
  bool has_mode(EstimatorMode mode) const;
};

// Reads the declarative experiment file ([model], [simulation], [tuning],
// [mcmc.alpha], [mcmc.beta], [experiment], [output] sections). When h is
// omitted it defaults to n^-gamma.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_string(const std::string& text);

struct MlResult {
  Vec alpha;
  Vec beta;
  bool alpha_converged = false;
  bool beta_converged = false;
};

// Adaptive quasi-likelihood maximization: alpha over the full H1 given
// Lambda_hat, then beta over H2 given the fitted alpha. Non-convergence
// returns the best iterate with the flag unset.
MlResult ml_from_init(const NoisyObservations& obs, const ModelSpec& model,
                      const ParamSpace& alpha_space,
                      const ParamSpace& beta_space, const TuningConfig& cfg,
                      const Vec& alpha0, const Vec& beta0,
                      const HybridOptions& opts = {},
                      const MaximizeOptions& ml_opts = {},
                      const Mat* lambda_hat = nullptr);

struct ReplicationOutcome {
  std::int64_t index = 0;
  bool ok = false;
  std::string error;
  Vec lambda_vech;
  std::optional<HybridResult> hybrid;
  std::optional<MlResult> ml_true;
  std::optional<MlResult> ml_uniform;
  std::map<std::string, double> seconds;
};

struct EstimatorTable {
  int table_number = 0;  // canonical 1..9 numbering
  std::string estimator;
  std::vector<std::string> coordinates;
  Vec mean;
  Vec sd;  // sample s.d. over replications; 0 when only one replication
  Vec truth;
};

struct ExperimentReport {
  std::vector<EstimatorTable> tables;
  std::int64_t replications_requested = 0;
  std::int64_t replications_failed = 0;
  std::map<std::string, double> mean_stage_seconds;
  std::uint64_t seed = 0;
  std::string config_echo;
  std::vector<ReplicationOutcome> outcomes;
};

// Simulates and estimates per replication (worker pool of cfg.threads),
// excludes failed replications from the aggregates, and aborts when more
// than 10% of them fail.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Sample mean / s.d. columns via the two-pass formula.
void mean_sd(const std::vector<Vec>& rows, Vec& mean, Vec& sd);

void write_tables_csv(const std::string& dir, const ExperimentReport& report);
void write_report_json(const std::string& path, const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& path);
std::string render_text_tables(const ExperimentReport& report);

std::string hybrid_result_to_json(const HybridResult& result);

}  // namespace sdeh
