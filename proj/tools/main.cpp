// Command-line frontend: simulate paths, run the hybrid estimator on an
// observation file, drive Monte Carlo experiments, and render reports.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sdeh/asymptotics.hpp"
#include "sdeh/errors.hpp"
#include "sdeh/experiment.hpp"

namespace {

using namespace sdeh;

Vec parse_vec(const std::vector<double>& values) {
  Vec out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = values[i];
  }
  return out;
}

struct GlobalOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir;
  bool drop_noise_in_A = false;
  std::string config_path;
};

int run_simulate(const GlobalOptions& global, const std::string& model_name,
                 std::int64_t n, double h, double gamma,
                 const std::vector<double>& alpha,
                 const std::vector<double>& beta,
                 const std::vector<double>& x0, double lambda, int substeps,
                 const std::string& noise_law, const std::string& out_path,
                 bool as_csv) {
  const auto reg = model_from_name(model_name);
  SimulationConfig sim;
  sim.model = reg.spec;
  sim.alpha_true = alpha.empty() ? reg.alpha_default : parse_vec(alpha);
  sim.beta_true = beta.empty() ? reg.beta_default : parse_vec(beta);
  sim.x0 = x0.empty() ? reg.x0_default : parse_vec(x0);
  sim.n = n;
  sim.h = h > 0.0 ? h : std::pow(static_cast<double>(n), -gamma);
  sim.substeps = substeps;
  sim.Lambda = lambda * Mat::Identity(reg.spec.d, reg.spec.d);
  sim.seed = global.seed;
  if (noise_law == "gaussian") {
    sim.noise_law = NoiseLaw::gaussian;
  } else if (noise_law == "rademacher") {
    sim.noise_law = NoiseLaw::rademacher;
  } else if (noise_law == "uniform") {
    sim.noise_law = NoiseLaw::uniform;
  } else {
    throw ConfigError("unknown noise law: " + noise_law);
  }

  const auto path = simulate_path(sim);
  if (as_csv || out_path.ends_with(".csv")) {
    write_observations_csv(out_path, path.obs);
  } else {
    write_observations_binary(out_path, path.obs);
  }
  std::cout << "wrote " << (path.obs.n + 1) << " x " << reg.spec.d
            << " observations (h = " << path.obs.h << ") to " << out_path
            << "\n";
  return 0;
}

TuningConfig tuning_from_cli(const ConfigFile* file, std::int64_t n, double h,
                             double gamma, double gamma_prime, double tau1,
                             double tau2, double tau3, double q1, double q2,
                             double eta1, double eta2) {
  TuningConfig cfg;
  if (file != nullptr) {
    cfg.gamma = file->get_double_or("tuning.gamma", gamma);
    cfg.gamma_prime = file->get_double_or("tuning.gamma_prime", cfg.gamma);
    cfg.tau1 = file->get_double_or("tuning.tau1", tau1);
    cfg.tau2 = file->get_double_or("tuning.tau2", tau2);
    cfg.tau3 = file->get_double_or("tuning.tau3", tau3);
    cfg.q1 = file->get_double_or("tuning.q1", q1);
    cfg.q2 = file->get_double_or("tuning.q2", q2);
    cfg.eta1 = file->get_double_or("tuning.eta1", eta1);
    cfg.eta2 = file->get_double_or("tuning.eta2", eta2);
  } else {
    cfg.gamma = gamma;
    cfg.gamma_prime = gamma_prime > 0.0 ? gamma_prime : gamma;
    cfg.tau1 = tau1;
    cfg.tau2 = tau2;
    cfg.tau3 = tau3;
    cfg.q1 = q1;
    cfg.q2 = q2;
    cfg.eta1 = eta1;
    cfg.eta2 = eta2;
  }
  cfg.n = n;
  cfg.h = h;
  return cfg;
}

int run_estimate(const GlobalOptions& global, const std::string& in_path,
                 double csv_h, const std::string& model_name,
                 const TuningConfig& base, std::int64_t mcmc_iters,
                 std::int64_t mcmc_burnin, const std::string& sampler,
                 const std::string& out_path, const std::string& chain_prefix,
                 const std::string& w1_mode) {
  NoisyObservations obs = in_path.ends_with(".csv")
                              ? read_observations_csv(in_path, csv_h)
                              : read_observations_binary(in_path);
  const auto reg = model_from_name(model_name);
  TuningConfig tuning = base;
  tuning.n = obs.n;
  tuning.h = obs.h;

  McmcConfig mcmc;
  mcmc.n_iters = mcmc_iters;
  mcmc.burn_in = mcmc_burnin;
  mcmc.seed = global.seed;
  mcmc.target_accept = 0.35;
  if (sampler == "mpcn") mcmc.sampler = McmcConfig::Sampler::mpcn;
  McmcConfig mcmc_a = mcmc;
  mcmc_a.stream = 2;
  McmcConfig mcmc_b = mcmc;
  mcmc_b.stream = 3;

  HybridOptions opts;
  opts.drop_noise_in_A = global.drop_noise_in_A;
  opts.store_chains = !chain_prefix.empty();
  if (w1_mode == "limit") opts.w1_mode = EffDiffMode::limit;

  const auto result = hybrid_estimate(obs, reg.spec, reg.alpha_space,
                                      reg.beta_space, tuning, mcmc_a, mcmc_b,
                                      opts);
  if (!result.ok()) {
    std::cerr << "estimation failed at stage " << result.failed_stage << ": "
              << result.failure_message << "\n";
    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::trunc);
      out << hybrid_result_to_json(result) << '\n';
    }
    return 2;
  }

  std::cout << "Lambda_hat =\n" << result.lambda_hat.lambda_hat << "\n";
  std::cout << "alpha_init = [" << result.alpha_init.mean.transpose()
            << "]  (acceptance " << result.alpha_init.acceptance_rate << ")\n";
  std::cout << "alpha_hat  = [" << result.alpha_hat().transpose() << "]  (J1 = "
            << result.J1 << ")\n";
  std::cout << "beta_init  = [" << result.beta_init.mean.transpose()
            << "]  (acceptance " << result.beta_init.acceptance_rate << ")\n";
  std::cout << "beta_hat   = [" << result.beta_hat().transpose() << "]  (J2 = "
            << result.J2 << ")\n";

  try {
    const auto ybar3 = local_means(obs, result.sched3);
    const auto info = plug_in_information(
        reg.spec, ybar3, result.alpha_hat(), result.beta_hat(),
        result.lambda_hat.lambda_hat, tuning.tau3,
        static_cast<double>(tuning.n), tuning.T());
    if (info.alpha_block_ok) {
      std::cout << "alpha se   = [" << info.se_alpha.transpose() << "]\n";
    }
    if (info.beta_block_ok) {
      std::cout << "beta se    = [" << info.se_beta.transpose() << "]\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "standard errors unavailable: " << e.what() << "\n";
  }

  if (!chain_prefix.empty()) {
    write_chain_csv(chain_prefix + "_alpha.csv", result.alpha_init);
    write_chain_csv(chain_prefix + "_beta.csv", result.beta_init);
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + out_path);
    out << hybrid_result_to_json(result) << '\n';
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

int run_experiment_cmd(const GlobalOptions& global, std::int64_t replications) {
  if (global.config_path.empty()) {
    throw ConfigError("experiment requires --config <file>");
  }
  auto cfg = load_experiment_config(global.config_path);
  if (replications > 0) cfg.replications = replications;
  if (global.threads > 1) cfg.threads = global.threads;
  if (!global.output_dir.empty()) cfg.output_dir = global.output_dir;
  if (global.seed != 1) {
    cfg.seed = global.seed;
    cfg.mcmc_alpha.seed = global.seed;
    cfg.mcmc_beta.seed = global.seed;
  }
  if (global.drop_noise_in_A) cfg.hybrid_options.drop_noise_in_A = true;

  auto report = run_experiment(cfg);
  {
    std::ifstream in(global.config_path);
    std::stringstream echo;
    echo << in.rdbuf();
    report.config_echo = echo.str();
  }
  write_tables_csv(cfg.output_dir, report);
  write_report_json(
      (std::filesystem::path(cfg.output_dir) / "report.json").string(), report);
  std::cout << render_text_tables(report);
  std::cout << "failed replications: " << report.replications_failed << " / "
            << report.replications_requested << "\n";
  std::cout << "wrote tables and report.json to " << cfg.output_dir << "\n";
  return 0;
}

int run_tables(const std::string& report_path) {
  const auto report = report_from_json(report_path);
  std::cout << render_text_tables(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid multi-step estimation for noisily observed ergodic diffusions"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Base RNG seed");
  app.add_option("--threads", global.threads, "Worker threads for experiments");
  app.add_option("--output-dir", global.output_dir, "Output directory override");
  app.add_flag("--drop-noise-in-A", global.drop_noise_in_A,
               "Drop the noise term from the effective diffusion of the full "
               "quasi-likelihood");
  app.add_option("--config", global.config_path, "Config file (experiment/estimate)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Write a simulated observation file");
  std::string sim_model = "ou-1d";
  std::int64_t sim_n = 100000;
  double sim_h = 0.0, sim_gamma = 0.7, sim_lambda = 1e-3;
  std::vector<double> sim_alpha, sim_beta, sim_x0;
  int sim_substeps = 10;
  std::string sim_noise = "gaussian", sim_out = "observations.bin";
  bool sim_csv = false;
  sim_cmd->add_option("--model", sim_model, "Model name (ou-1d, paper-3d)");
  sim_cmd->add_option("--n", sim_n, "Number of sampling intervals");
  sim_cmd->add_option("--h", sim_h, "Step size (default n^-gamma)");
  sim_cmd->add_option("--gamma", sim_gamma, "Rate used when --h is absent");
  sim_cmd->add_option("--alpha", sim_alpha, "True alpha (defaults per model)");
  sim_cmd->add_option("--beta", sim_beta, "True beta (defaults per model)");
  sim_cmd->add_option("--x0", sim_x0, "Initial state");
  sim_cmd->add_option("--lambda", sim_lambda, "Noise variance scale (Lambda = lambda I)");
  sim_cmd->add_option("--substeps", sim_substeps, "Euler substeps per interval");
  sim_cmd->add_option("--noise-law", sim_noise, "gaussian | rademacher | uniform");
  sim_cmd->add_option("--out", sim_out, "Output path (.csv selects CSV)");
  sim_cmd->add_flag("--csv", sim_csv, "Force CSV output");

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "Run the hybrid estimator on an observation file");
  std::string est_in, est_model = "ou-1d", est_out, est_chains, est_sampler = "rwm";
  std::string est_w1_mode = "stage3";
  double est_csv_h = 0.0;
  double est_gamma = 0.7, est_gamma_prime = 0.0;
  double est_tau1 = 2.0, est_tau2 = 2.0, est_tau3 = 2.0;
  double est_q1 = 0.5, est_q2 = 0.5, est_eta1 = 0.9, est_eta2 = 0.9;
  std::int64_t est_iters = 10000, est_burnin = 2000;
  est_cmd->add_option("--in", est_in, "Observation file (binary or .csv)")->required();
  est_cmd->add_option("--csv-h", est_csv_h, "Step h for CSV input");
  est_cmd->add_option("--model", est_model, "Model name");
  est_cmd->add_option("--gamma", est_gamma, "Rate exponent gamma");
  est_cmd->add_option("--gamma-prime", est_gamma_prime, "Rate exponent gamma' (default gamma)");
  est_cmd->add_option("--tau1", est_tau1, "Block exponent for the alpha initializer");
  est_cmd->add_option("--tau2", est_tau2, "Block exponent for the beta initializer");
  est_cmd->add_option("--tau3", est_tau3, "Block exponent for the full likelihoods");
  est_cmd->add_option("--q1", est_q1, "Tempering exponent for alpha");
  est_cmd->add_option("--q2", est_q2, "Tempering exponent for beta");
  est_cmd->add_option("--eta1", est_eta1, "Reduced-data exponent for alpha");
  est_cmd->add_option("--eta2", est_eta2, "Reduced-data exponent for beta");
  est_cmd->add_option("--mcmc-iters", est_iters, "MCMC iterations per chain");
  est_cmd->add_option("--mcmc-burnin", est_burnin, "MCMC burn-in iterations");
  est_cmd->add_option("--sampler", est_sampler, "rwm | mpcn");
  est_cmd->add_option("--w1-mode", est_w1_mode, "stage3 | limit");
  est_cmd->add_option("--out", est_out, "Result JSON path");
  est_cmd->add_option("--chain-dump", est_chains, "Prefix for chain CSV dumps");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run a Monte Carlo experiment from a config file");
  std::int64_t exp_replications = 0;
  exp_cmd->add_option("--replications", exp_replications, "Override replication count");

  // tables
  auto* tab_cmd = app.add_subcommand("tables", "Render a report JSON as aligned text tables");
  std::string tab_report = "report.json";
  tab_cmd->add_option("--report", tab_report, "Path to report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return 1;
  }

  try {
    if (sim_cmd->parsed()) {
      return run_simulate(global, sim_model, sim_n, sim_h, sim_gamma, sim_alpha,
                          sim_beta, sim_x0, sim_lambda, sim_substeps, sim_noise,
                          sim_out, sim_csv);
    }
    if (est_cmd->parsed()) {
      std::optional<ConfigFile> file;
      if (!global.config_path.empty()) {
        file = ConfigFile::parse_file(global.config_path);
      }
      const auto tuning = tuning_from_cli(
          file ? &*file : nullptr, 0, 0.0, est_gamma, est_gamma_prime, est_tau1,
          est_tau2, est_tau3, est_q1, est_q2, est_eta1, est_eta2);
      return run_estimate(global, est_in, est_csv_h, est_model, tuning,
                          est_iters, est_burnin, est_sampler, est_out,
                          est_chains, est_w1_mode);
    }
    if (exp_cmd->parsed()) {
      return run_experiment_cmd(global, exp_replications);
    }
    if (tab_cmd->parsed()) {
      return run_tables(tab_report);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
