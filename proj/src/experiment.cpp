#include "sdeh/experiment.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "sdeh/asymptotics.hpp"
#include "sdeh/errors.hpp"

namespace sdeh {

using nlohmann::json;

std::string mode_name(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::bayes_init: return "bayes-init";
    case EstimatorMode::hybrid: return "hybrid";
    case EstimatorMode::ml_true_init: return "ml-true-init";
    case EstimatorMode::ml_uniform_init: return "ml-uniform-init";
  }
  return "unknown";
}

EstimatorMode mode_from_name(const std::string& name) {
  if (name == "bayes-init") return EstimatorMode::bayes_init;
  if (name == "hybrid") return EstimatorMode::hybrid;
  if (name == "ml-true-init") return EstimatorMode::ml_true_init;
  if (name == "ml-uniform-init") return EstimatorMode::ml_uniform_init;
  throw ConfigError("unknown estimator mode: " + name);
}

void ExperimentConfig::validate() const {
  if (modes.empty()) throw ConfigError("experiment needs at least one mode");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  tuning.validate();
  if (alpha_true.size() != model.spec.m1 || beta_true.size() != model.spec.m2) {
    throw ConfigError("true parameter dimensions do not match the model");
  }
  if (x0.size() != model.spec.d) throw ConfigError("x0 dimension mismatch");
}

bool ExperimentConfig::has_mode(EstimatorMode mode) const {
  for (const auto m : modes) {
    if (m == mode) return true;
  }
  return false;
}

namespace {

Vec vec_from_array(const std::vector<double>& values) {
  Vec out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = values[i];
  }
  return out;
}

McmcConfig mcmc_from_config(const ConfigFile& file, const std::string& section,
                            std::uint64_t seed) {
  McmcConfig mcmc;
  mcmc.n_iters = file.get_int_or(section + ".n_iters", mcmc.n_iters);
  mcmc.burn_in = file.get_int_or(section + ".burn_in", mcmc.burn_in);
  mcmc.seed = seed;
  if (file.has(section + ".proposal_scale")) {
    mcmc.proposal_scale = vec_from_array(file.get_double_array(section + ".proposal_scale"));
  }
  const std::string sampler = file.get_string_or(section + ".sampler", "rwm");
  if (sampler == "rwm") {
    mcmc.sampler = McmcConfig::Sampler::rwm;
  } else if (sampler == "mpcn") {
    mcmc.sampler = McmcConfig::Sampler::mpcn;
  } else {
    throw ConfigError("unknown sampler: " + sampler);
  }
  if (file.has(section + ".target_accept")) {
    mcmc.target_accept = file.get_double(section + ".target_accept");
  }
  mcmc.mpcn_rho = file.get_double_or(section + ".mpcn_rho", mcmc.mpcn_rho);
  return mcmc;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  const auto file = ConfigFile::parse_file(path);
  ExperimentConfig cfg;
  cfg.model_name = file.get_string("model.name");
  cfg.model = model_from_name(cfg.model_name);

  cfg.tuning.n = file.get_int("simulation.n");
  cfg.tuning.gamma = file.get_double_or("tuning.gamma", cfg.tuning.gamma);
  cfg.tuning.gamma_prime =
      file.get_double_or("tuning.gamma_prime", cfg.tuning.gamma);
  if (file.has("simulation.h")) {
    cfg.tuning.h = file.get_double("simulation.h");
  } else {
    cfg.tuning.h = std::pow(static_cast<double>(cfg.tuning.n), -cfg.tuning.gamma);
  }
  cfg.tuning.tau1 = file.get_double_or("tuning.tau1", cfg.tuning.tau1);
  cfg.tuning.tau2 = file.get_double_or("tuning.tau2", cfg.tuning.tau2);
  cfg.tuning.tau3 = file.get_double_or("tuning.tau3", cfg.tuning.tau3);
  cfg.tuning.q1 = file.get_double_or("tuning.q1", cfg.tuning.q1);
  cfg.tuning.q2 = file.get_double_or("tuning.q2", cfg.tuning.q2);
  cfg.tuning.eta1 = file.get_double_or("tuning.eta1", cfg.tuning.eta1);
  cfg.tuning.eta2 = file.get_double_or("tuning.eta2", cfg.tuning.eta2);

  cfg.alpha_true = file.has("simulation.alpha_true")
                       ? vec_from_array(file.get_double_array("simulation.alpha_true"))
                       : cfg.model.alpha_default;
  cfg.beta_true = file.has("simulation.beta_true")
                      ? vec_from_array(file.get_double_array("simulation.beta_true"))
                      : cfg.model.beta_default;
  cfg.x0 = file.has("simulation.x0")
               ? vec_from_array(file.get_double_array("simulation.x0"))
               : cfg.model.x0_default;
  const int d = cfg.model.spec.d;
  if (file.has("simulation.lambda_diag")) {
    const Vec diag = vec_from_array(file.get_double_array("simulation.lambda_diag"));
    if (diag.size() != d) throw ConfigError("lambda_diag has wrong length");
    cfg.Lambda = diag.asDiagonal();
  } else {
    cfg.Lambda = file.get_double_or("simulation.lambda", 0.0) * Mat::Identity(d, d);
  }
  cfg.substeps = static_cast<int>(file.get_int_or("simulation.substeps", cfg.substeps));
  const std::string law = file.get_string_or("simulation.noise_law", "gaussian");
  if (law == "gaussian") {
    cfg.noise_law = NoiseLaw::gaussian;
  } else if (law == "rademacher") {
    cfg.noise_law = NoiseLaw::rademacher;
  } else if (law == "uniform") {
    cfg.noise_law = NoiseLaw::uniform;
  } else {
    throw ConfigError("unknown noise law: " + law);
  }

  cfg.seed = static_cast<std::uint64_t>(file.get_int_or("experiment.seed", 1));
  cfg.mcmc_alpha = mcmc_from_config(file, "mcmc.alpha", cfg.seed);
  cfg.mcmc_beta = mcmc_from_config(file, "mcmc.beta", cfg.seed);

  cfg.replications = file.get_int_or("experiment.replications", 1);
  cfg.threads = static_cast<int>(file.get_int_or("experiment.threads", 1));
  if (file.has("experiment.modes")) {
    for (const auto& name : file.get_string_array("experiment.modes")) {
      cfg.modes.push_back(mode_from_name(name));
    }
  } else {
    cfg.modes = {EstimatorMode::hybrid};
  }
  cfg.output_dir = file.get_string_or("output.dir", ".");
  cfg.hybrid_options.drop_noise_in_A =
      file.get_bool_or("tuning.drop_noise_in_A", false);
  if (file.has("tuning.w1_mode")) {
    const std::string mode = file.get_string("tuning.w1_mode");
    if (mode == "limit") {
      cfg.hybrid_options.w1_mode = EffDiffMode::limit;
    } else if (mode == "stage3") {
      cfg.hybrid_options.w1_mode = EffDiffMode::stage3;
    } else {
      throw ConfigError("unknown w1_mode: " + mode);
    }
  }
  cfg.ml_options.max_iters =
      static_cast<int>(file.get_int_or("experiment.ml_max_iters", 200));
  cfg.validate();
  return cfg;
}

ExperimentConfig experiment_config_from_string(const std::string& text) {
  const auto tmp = std::filesystem::temp_directory_path() /
                   ("sdeh_cfg_" + std::to_string(::getpid()) + ".toml");
  std::ofstream out(tmp);
  out << text;
  out.close();
  auto cfg = load_experiment_config(tmp.string());
  std::filesystem::remove(tmp);
  return cfg;
}

MlResult ml_from_init(const NoisyObservations& obs, const ModelSpec& model,
                      const ParamSpace& alpha_space,
                      const ParamSpace& beta_space, const TuningConfig& cfg,
                      const Vec& alpha0, const Vec& beta0,
                      const HybridOptions& opts,
                      const MaximizeOptions& ml_opts, const Mat* lambda_hat) {
  Mat lambda;
  if (lambda_hat != nullptr) {
    lambda = *lambda_hat;
  } else {
    lambda = estimate_noise_variance(obs).lambda_hat;
  }
  const auto sched3 = make_schedule(cfg, cfg.tau3);
  const auto ybar3 = local_means(obs, sched3);
  const auto eff3 = make_effective_diffusion(EffDiffMode::stage3, sched3,
                                             opts.drop_noise_in_A);

  DerivativeRequest grad_req;
  grad_req.gradient = true;
  grad_req.hessian = false;

  MlResult result;
  {
    DerivativeRequest req = grad_req;
    req.box = &alpha_space;
    const auto value = [&](const Vec& a) {
      try {
        return H1_full(model, a, lambda, ybar3, eff3);
      } catch (const NonPdError&) {
        return -std::numeric_limits<double>::infinity();
      }
    };
    const auto grad = [&](const Vec& a) {
      return H1_full_derivatives(model, a, lambda, ybar3, eff3, req).gradient;
    };
    const auto opt = maximize_box(value, grad, alpha_space, alpha0, ml_opts);
    result.alpha = opt.x;
    result.alpha_converged = opt.converged;
  }
  {
    DerivativeRequest req = grad_req;
    req.box = &beta_space;
    const auto value = [&](const Vec& b) {
      try {
        return H2_full(model, b, result.alpha, ybar3);
      } catch (const NonPdError&) {
        return -std::numeric_limits<double>::infinity();
      }
    };
    const auto grad = [&](const Vec& b) {
      return H2_full_derivatives(model, b, result.alpha, ybar3, req).gradient;
    };
    const auto opt = maximize_box(value, grad, beta_space, beta0, ml_opts);
    result.beta = opt.x;
    result.beta_converged = opt.converged;
  }
  return result;
}

namespace {

// Stream block layout per replication: streams 8r / 8r+1 feed the path and
// observation noise, 8r+2 / 8r+3 the two chains, 8r+4 the uniform starts.
constexpr std::uint64_t kStreamsPerReplication = 8;

ReplicationOutcome run_replication(const ExperimentConfig& cfg, std::int64_t r) {
  ReplicationOutcome outcome;
  outcome.index = r;
  try {
    SimulationConfig sim;
    sim.model = cfg.model.spec;
    sim.alpha_true = cfg.alpha_true;
    sim.beta_true = cfg.beta_true;
    sim.x0 = cfg.x0;
    sim.n = cfg.tuning.n;
    sim.h = cfg.tuning.h;
    sim.substeps = cfg.substeps;
    sim.Lambda = cfg.Lambda;
    sim.noise_law = cfg.noise_law;
    sim.seed = cfg.seed;

    const auto t0 = std::chrono::steady_clock::now();
    const auto path = simulate_path(
        sim, kStreamsPerReplication * static_cast<std::uint64_t>(r));
    outcome.seconds["simulate"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    const auto lambda_hat = estimate_noise_variance(path.obs);
    outcome.lambda_vech = vech(lambda_hat.lambda_hat);

    const bool want_hybrid = cfg.has_mode(EstimatorMode::hybrid) ||
                             cfg.has_mode(EstimatorMode::bayes_init);
    if (want_hybrid) {
      McmcConfig mcmc_a = cfg.mcmc_alpha;
      mcmc_a.stream = kStreamsPerReplication * static_cast<std::uint64_t>(r) + 2;
      McmcConfig mcmc_b = cfg.mcmc_beta;
      mcmc_b.stream = kStreamsPerReplication * static_cast<std::uint64_t>(r) + 3;
      auto hybrid =
          hybrid_estimate(path.obs, cfg.model.spec, cfg.model.alpha_space,
                          cfg.model.beta_space, cfg.tuning, mcmc_a, mcmc_b,
                          cfg.hybrid_options);
      if (!hybrid.ok()) {
        outcome.error = "hybrid stage " + hybrid.failed_stage + ": " +
                        hybrid.failure_message;
        outcome.hybrid = std::move(hybrid);
        return outcome;
      }
      for (const auto& [k, v] : hybrid.stage_seconds) outcome.seconds[k] = v;
      outcome.hybrid = std::move(hybrid);
    }

    if (cfg.has_mode(EstimatorMode::ml_true_init)) {
      const auto t1 = std::chrono::steady_clock::now();
      outcome.ml_true = ml_from_init(
          path.obs, cfg.model.spec, cfg.model.alpha_space, cfg.model.beta_space,
          cfg.tuning, cfg.alpha_true, cfg.beta_true, cfg.hybrid_options,
          cfg.ml_options, &lambda_hat.lambda_hat);
      outcome.seconds["ml-true-init"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t1)
              .count();
    }
    if (cfg.has_mode(EstimatorMode::ml_uniform_init)) {
      Philox rng(cfg.seed,
                 kStreamsPerReplication * static_cast<std::uint64_t>(r) + 4);
      Vec a0(cfg.model.spec.m1);
      for (int i = 0; i < cfg.model.spec.m1; ++i) {
        a0(i) = cfg.model.alpha_space.lower(i) +
                rng.next_double() * (cfg.model.alpha_space.upper(i) -
                                     cfg.model.alpha_space.lower(i));
      }
      Vec b0(cfg.model.spec.m2);
      for (int i = 0; i < cfg.model.spec.m2; ++i) {
        b0(i) = cfg.model.beta_space.lower(i) +
                rng.next_double() * (cfg.model.beta_space.upper(i) -
                                     cfg.model.beta_space.lower(i));
      }
      const auto t1 = std::chrono::steady_clock::now();
      outcome.ml_uniform = ml_from_init(
          path.obs, cfg.model.spec, cfg.model.alpha_space, cfg.model.beta_space,
          cfg.tuning, a0, b0, cfg.hybrid_options, cfg.ml_options,
          &lambda_hat.lambda_hat);
      outcome.seconds["ml-uniform-init"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t1)
              .count();
    }
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.error = e.what();
  }
  return outcome;
}

std::vector<std::string> coord_names(const std::string& prefix, int m) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

std::vector<std::string> lambda_coord_names(int d) {
  std::vector<std::string> names;
  for (int idx = 1; idx <= d * (d + 1) / 2; ++idx) {
    const auto [i, j] = sigma_inverse(d, idx);
    names.push_back("lambda_" + std::to_string(i) + std::to_string(j));
  }
  return names;
}

EstimatorTable make_table(int number, const std::string& estimator,
                          std::vector<std::string> coords,
                          const std::vector<Vec>& rows, const Vec& truth) {
  EstimatorTable table;
  table.table_number = number;
  table.estimator = estimator;
  table.coordinates = std::move(coords);
  table.truth = truth;
  mean_sd(rows, table.mean, table.sd);
  return table;
}

}  // namespace

void mean_sd(const std::vector<Vec>& rows, Vec& mean, Vec& sd) {
  if (rows.empty()) {
    mean = Vec();
    sd = Vec();
    return;
  }
  const auto m = rows.front().size();
  mean = Vec::Zero(m);
  for (const auto& row : rows) mean += row;
  mean /= static_cast<double>(rows.size());
  sd = Vec::Zero(m);
  if (rows.size() < 2) return;
  for (const auto& row : rows) sd += (row - mean).cwiseAbs2();
  sd = (sd / static_cast<double>(rows.size() - 1)).cwiseSqrt();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.replications_requested = cfg.replications;
  report.seed = cfg.seed;

  std::vector<ReplicationOutcome> outcomes(
      static_cast<std::size_t>(cfg.replications));
  const int workers =
      std::max(1, std::min<int>(cfg.threads, static_cast<int>(cfg.replications)));
  if (workers == 1) {
    for (std::int64_t r = 0; r < cfg.replications; ++r) {
      outcomes[static_cast<std::size_t>(r)] = run_replication(cfg, r);
    }
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::int64_t r = next.fetch_add(1);
          if (r >= cfg.replications) break;
          outcomes[static_cast<std::size_t>(r)] = run_replication(cfg, r);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<Vec> lambda_rows;
  std::vector<Vec> hybrid_alpha, hybrid_beta, bayes_alpha, bayes_beta;
  std::vector<Vec> ml_true_alpha, ml_true_beta, ml_unif_alpha, ml_unif_beta;
  std::map<std::string, double> stage_totals;
  std::int64_t ok_count = 0;
  for (const auto& outcome : outcomes) {
    if (!outcome.ok) {
      ++report.replications_failed;
      continue;
    }
    ++ok_count;
    lambda_rows.push_back(outcome.lambda_vech);
    if (outcome.hybrid) {
      bayes_alpha.push_back(outcome.hybrid->alpha_init.mean);
      bayes_beta.push_back(outcome.hybrid->beta_init.mean);
      hybrid_alpha.push_back(outcome.hybrid->alpha_hat());
      hybrid_beta.push_back(outcome.hybrid->beta_hat());
    }
    if (outcome.ml_true) {
      ml_true_alpha.push_back(outcome.ml_true->alpha);
      ml_true_beta.push_back(outcome.ml_true->beta);
    }
    if (outcome.ml_uniform) {
      ml_unif_alpha.push_back(outcome.ml_uniform->alpha);
      ml_unif_beta.push_back(outcome.ml_uniform->beta);
    }
    for (const auto& [k, v] : outcome.seconds) stage_totals[k] += v;
  }
  if (report.replications_failed * 10 > cfg.replications) {
    std::ostringstream err;
    err << "experiment aborted: " << report.replications_failed << " of "
        << cfg.replications << " replications failed (> 10%)";
    report.outcomes = std::move(outcomes);
    throw ModelEvalError(err.str());
  }
  for (const auto& [k, v] : stage_totals) {
    report.mean_stage_seconds[k] = v / static_cast<double>(std::max<std::int64_t>(1, ok_count));
  }

  const int d = cfg.model.spec.d;
  report.tables.push_back(make_table(1, "lambda-hat", lambda_coord_names(d),
                                     lambda_rows, vech(cfg.Lambda)));
  if (cfg.has_mode(EstimatorMode::ml_true_init)) {
    report.tables.push_back(make_table(2, "ml-true-init alpha",
                                       coord_names("alpha_", cfg.model.spec.m1),
                                       ml_true_alpha, cfg.alpha_true));
    report.tables.push_back(make_table(3, "ml-true-init beta",
                                       coord_names("beta_", cfg.model.spec.m2),
                                       ml_true_beta, cfg.beta_true));
  }
  if (cfg.has_mode(EstimatorMode::ml_uniform_init)) {
    report.tables.push_back(make_table(4, "ml-uniform-init alpha",
                                       coord_names("alpha_", cfg.model.spec.m1),
                                       ml_unif_alpha, cfg.alpha_true));
    report.tables.push_back(make_table(5, "ml-uniform-init beta",
                                       coord_names("beta_", cfg.model.spec.m2),
                                       ml_unif_beta, cfg.beta_true));
  }
  if (cfg.has_mode(EstimatorMode::bayes_init)) {
    report.tables.push_back(make_table(6, "bayes-init alpha",
                                       coord_names("alpha_", cfg.model.spec.m1),
                                       bayes_alpha, cfg.alpha_true));
    report.tables.push_back(make_table(7, "bayes-init beta",
                                       coord_names("beta_", cfg.model.spec.m2),
                                       bayes_beta, cfg.beta_true));
  }
  if (cfg.has_mode(EstimatorMode::hybrid)) {
    report.tables.push_back(make_table(8, "hybrid alpha",
                                       coord_names("alpha_", cfg.model.spec.m1),
                                       hybrid_alpha, cfg.alpha_true));
    report.tables.push_back(make_table(9, "hybrid beta",
                                       coord_names("beta_", cfg.model.spec.m2),
                                       hybrid_beta, cfg.beta_true));
  }
  report.outcomes = std::move(outcomes);
  return report;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vec vec_from_json(const json& arr) {
  Vec out(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return out;
}

json trace_to_json(const NewtonTrace& trace) {
  json j;
  j["iterates"] = json::array();
  for (const auto& it : trace.iterates) j["iterates"].push_back(vec_to_json(it));
  j["grad_norms"] = trace.grad_norms;
  j["objective_values"] = trace.objective_values;
  j["used_identity_fallback"] = trace.used_identity_fallback;
  j["clamped_to_box"] = trace.clamped_to_box;
  j["aborted"] = trace.aborted;
  if (trace.aborted) j["abort_reason"] = trace.abort_reason;
  return j;
}

json schedule_to_json(const BlockSchedule& s) {
  return json{{"tau", s.tau},      {"p", s.p},
              {"delta", s.delta},  {"k", s.k},
              {"k_reduced", s.k_reduced}, {"t_reduced", s.t_reduced}};
}

json posterior_to_json(const PosteriorSummary& p) {
  json j;
  j["mean"] = vec_to_json(p.mean);
  j["sd"] = vec_to_json(p.sd);
  j["acceptance_rate"] = p.acceptance_rate;
  j["ess_estimate"] = p.ess_estimate;
  j["final_scale_factor"] = p.final_scale_factor;
  return j;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string hybrid_result_to_json(const HybridResult& result) {
  json j;
  j["lambda_hat"] = mat_to_json(result.lambda_hat.lambda_hat);
  j["alpha_init"] = posterior_to_json(result.alpha_init);
  j["beta_init"] = posterior_to_json(result.beta_init);
  j["alpha_trace"] = trace_to_json(result.alpha_trace);
  j["beta_trace"] = trace_to_json(result.beta_trace);
  j["J1"] = result.J1;
  j["J2"] = result.J2;
  j["schedules"] = {{"tau1", schedule_to_json(result.sched1)},
                    {"tau2", schedule_to_json(result.sched2)},
                    {"tau3", schedule_to_json(result.sched3)}};
  j["stage_seconds"] = result.stage_seconds;
  j["ok"] = result.ok();
  if (!result.ok()) {
    j["failed_stage"] = result.failed_stage;
    j["failure_message"] = result.failure_message;
  }
  return j.dump(2);
}

void write_tables_csv(const std::string& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  for (const auto& table : report.tables) {
    const auto path = std::filesystem::path(dir) /
                      ("table" + std::to_string(table.table_number) + ".csv");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << "coordinate,mean,sd,truth\n";
    for (std::size_t i = 0; i < table.coordinates.size(); ++i) {
      out << table.coordinates[i] << ','
          << format_double(table.mean(static_cast<Eigen::Index>(i))) << ','
          << format_double(table.sd(static_cast<Eigen::Index>(i))) << ','
          << format_double(table.truth(static_cast<Eigen::Index>(i))) << '\n';
    }
  }
}

void write_report_json(const std::string& path, const ExperimentReport& report) {
  json j;
  j["replications_requested"] = report.replications_requested;
  j["replications_failed"] = report.replications_failed;
  j["seed"] = report.seed;
  j["mean_stage_seconds"] = report.mean_stage_seconds;
  j["config_echo"] = report.config_echo;
  j["tables"] = json::array();
  for (const auto& table : report.tables) {
    json t;
    t["table_number"] = table.table_number;
    t["estimator"] = table.estimator;
    t["coordinates"] = table.coordinates;
    t["mean"] = vec_to_json(table.mean);
    t["sd"] = vec_to_json(table.sd);
    t["truth"] = vec_to_json(table.truth);
    j["tables"].push_back(t);
  }
  j["replications"] = json::array();
  for (const auto& outcome : report.outcomes) {
    json o;
    o["index"] = outcome.index;
    o["ok"] = outcome.ok;
    if (!outcome.error.empty()) o["error"] = outcome.error;
    if (outcome.lambda_vech.size() > 0) {
      o["lambda_vech"] = vec_to_json(outcome.lambda_vech);
    }
    if (outcome.hybrid) {
      o["bayes_alpha"] = vec_to_json(outcome.hybrid->alpha_init.mean);
      o["bayes_beta"] = vec_to_json(outcome.hybrid->beta_init.mean);
      o["hybrid_alpha"] = vec_to_json(outcome.hybrid->alpha_hat());
      o["hybrid_beta"] = vec_to_json(outcome.hybrid->beta_hat());
    }
    if (outcome.ml_true) {
      o["ml_true_alpha"] = vec_to_json(outcome.ml_true->alpha);
      o["ml_true_beta"] = vec_to_json(outcome.ml_true->beta);
    }
    if (outcome.ml_uniform) {
      o["ml_uniform_alpha"] = vec_to_json(outcome.ml_uniform->alpha);
      o["ml_uniform_beta"] = vec_to_json(outcome.ml_uniform->beta);
    }
    o["seconds"] = outcome.seconds;
    j["replications"].push_back(o);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

ExperimentReport report_from_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad report JSON: ") + e.what());
  }
  ExperimentReport report;
  report.replications_requested = j.value("replications_requested", 0);
  report.replications_failed = j.value("replications_failed", 0);
  report.seed = j.value("seed", 0);
  if (j.contains("mean_stage_seconds")) {
    for (const auto& [k, v] : j["mean_stage_seconds"].items()) {
      report.mean_stage_seconds[k] = v.get<double>();
    }
  }
  report.config_echo = j.value("config_echo", "");
  for (const auto& t : j.value("tables", json::array())) {
    EstimatorTable table;
    table.table_number = t.value("table_number", 0);
    table.estimator = t.value("estimator", "");
    table.coordinates = t.value("coordinates", std::vector<std::string>{});
    table.mean = vec_from_json(t["mean"]);
    table.sd = vec_from_json(t["sd"]);
    table.truth = vec_from_json(t["truth"]);
    report.tables.push_back(std::move(table));
  }
  return report;
}

std::string render_text_tables(const ExperimentReport& report) {
  std::ostringstream os;
  os << std::setprecision(3) << std::fixed;
  for (const auto& table : report.tables) {
    os << "Table " << table.table_number << ": " << table.estimator << '\n';
    std::size_t width = 12;
    for (const auto& c : table.coordinates) width = std::max(width, c.size() + 2);
    os << std::setw(static_cast<int>(width)) << "" << " ";
    for (const auto& c : table.coordinates) {
      os << std::setw(static_cast<int>(width)) << c;
    }
    os << '\n';
    os << std::setw(static_cast<int>(width)) << "truth" << " ";
    for (Eigen::Index i = 0; i < table.truth.size(); ++i) {
      os << std::setw(static_cast<int>(width)) << table.truth(i);
    }
    os << '\n';
    os << std::setw(static_cast<int>(width)) << "mean" << " ";
    for (Eigen::Index i = 0; i < table.mean.size(); ++i) {
      os << std::setw(static_cast<int>(width)) << table.mean(i);
    }
    os << '\n';
    os << std::setw(static_cast<int>(width)) << "(s.d.)" << " ";
    for (Eigen::Index i = 0; i < table.sd.size(); ++i) {
      std::ostringstream cell;
      cell << std::setprecision(3) << std::fixed << '(' << table.sd(i) << ')';
      os << std::setw(static_cast<int>(width)) << cell.str();
    }
    os << "\n\n";
  }
  return os.str();
}

}  // namespace sdeh
