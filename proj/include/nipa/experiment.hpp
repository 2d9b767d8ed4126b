// End-to-end experiment runner: build the target from a config, run NIPA or a
// baseline kernel, compute diagnostics, and emit trace + samples + metrics +
// checkpoints into a fresh output directory.
#pragma once

#include "nipa/config.hpp"
#include "nipa/data_io.hpp"
#include "nipa/diagnostics.hpp"

#include <filesystem>
#include <iomanip>

namespace nipa {

struct BuiltTarget {
  TargetModel model;
  Dataset test;  // empty for analytic targets
  Vector theta_star;  // empty unless synthetic
  SplitIndices indices;
  bool classification = false;
  bool has_test = false;
};

/// Deterministic target construction from the config (seed included).
inline BuiltTarget build_target(const ExperimentConfig& cfg) {
  switch (cfg.problem) {
    case ProblemKind::SyntheticRegression: {
      auto gen = make_synthetic_regression(cfg.n, cfg.d, cfg.h1, cfg.h2, cfg.noise_var,
                                           derive_seed(cfg.seed, 101), cfg.train_fraction);
      const Index n_train = gen.train.size();
      SplitIndices idx;
      for (Index i = 0; i < cfg.n; ++i)
        (i < n_train ? idx.train : idx.test).push_back(i);
      return BuiltTarget{TargetModel::bnn_regression(gen.spec, gen.train, cfg.noise_var,
                                                     cfg.prior_var),
                         std::move(gen.test), std::move(gen.theta_star), std::move(idx), false,
                         true};
    }
    case ProblemKind::SyntheticClassification: {
      auto gen = make_synthetic_classification(cfg.n, cfg.d, cfg.h1, cfg.h2, cfg.block_vars,
                                               derive_seed(cfg.seed, 102), cfg.train_fraction);
      const Index n_train = gen.train.size();
      SplitIndices idx;
      for (Index i = 0; i < cfg.n; ++i)
        (i < n_train ? idx.train : idx.test).push_back(i);
      return BuiltTarget{TargetModel::bnn_classification(gen.spec, gen.train, cfg.prior_var),
                         std::move(gen.test), std::move(gen.theta_star), std::move(idx), true,
                         true};
    }
    case ProblemKind::CsvRegression:
    case ProblemKind::CsvClassification: {
      const bool classification = cfg.problem == ProblemKind::CsvClassification;
      Dataset full = load_delimited(cfg.csv_path, cfg.target_column, cfg.has_header);
      if (classification && cfg.parity_labels) full.y = mnist_parity_labels(full.y);
      full.classification = classification;
      full = subsample_rows(full, cfg.subsample, derive_seed(cfg.seed, 103));
      SplitSpec spec{cfg.train_fraction, derive_seed(cfg.seed, 104),
                     cfg.stratify && classification};
      const auto idx = split_indices(full.size(), spec, classification ? &full.y : nullptr);
      Dataset train = take_rows(full, idx.train, SplitTag::Train);
      Dataset test = take_rows(full, idx.test, SplitTag::Test);
      NetSpec net = make_mlp_spec({static_cast<int>(full.X.cols()), cfg.h1, cfg.h2, 1},
                                  Activation::ReLU);
      TargetModel model = classification
                              ? TargetModel::bnn_classification(net, std::move(train),
                                                                cfg.prior_var)
                              : TargetModel::bnn_regression(net, std::move(train), cfg.noise_var,
                                                            cfg.prior_var);
      return BuiltTarget{std::move(model), std::move(test), {}, idx, classification, true};
    }
    case ProblemKind::AnalyticGaussian:
      return BuiltTarget{TargetModel::analytic_gaussian(cfg.analytic_dim), {}, {}, {}, false,
                         false};
    case ProblemKind::AnalyticBanana:
      return BuiltTarget{TargetModel::analytic_banana(cfg.banana_warp), {}, {}, {}, false, false};
  }
  throw std::logic_error("build_target: unknown problem kind");
}

struct MetricsReport {
  std::string sampler;
  std::string problem;
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double cp95 = std::numeric_limits<double>::quiet_NaN();
  double ece = std::numeric_limits<double>::quiet_NaN();
  double sampling_seconds = 0.0;
  double total_seconds = 0.0;
  double min_ess = 0.0;
  double med_ess = 0.0;
  double max_ess = 0.0;
  double min_ess_per_sec = 0.0;
  double speedup = std::numeric_limits<double>::quiet_NaN();
  double accept_rate = 0.0;
  double mb_fraction = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t exact_log_posterior_evals = 0;
  std::uint64_t exact_gradient_evals = 0;
  Index n_samples = 0;
  Index burn_in = 0;
};

inline std::string sampler_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::Nipa: return "nipa";
    case SamplerKind::Hmc: return "hmc";
    case SamplerKind::Sghmc: return "sghmc";
    case SamplerKind::Rw: return "rw";
  }
  return "?";
}

inline std::string problem_name(ProblemKind p) {
  switch (p) {
    case ProblemKind::SyntheticRegression: return "synthetic_regression";
    case ProblemKind::SyntheticClassification: return "synthetic_classification";
    case ProblemKind::CsvRegression: return "csv_regression";
    case ProblemKind::CsvClassification: return "csv_classification";
    case ProblemKind::AnalyticGaussian: return "analytic_gaussian";
    case ProblemKind::AnalyticBanana: return "analytic_banana";
  }
  return "?";
}

/// Predictive + mixing metrics from a sample matrix. The first
/// floor(burn_in_fraction * S) rows are excluded from every statistic.
inline MetricsReport compute_metrics(const ExperimentConfig& cfg, const BuiltTarget& built,
                                     const Matrix& samples, double sampling_seconds,
                                     double total_seconds) {
  MetricsReport rep;
  rep.sampler = sampler_name(cfg.sampler);
  rep.problem = problem_name(cfg.problem);
  rep.sampling_seconds = sampling_seconds;
  rep.total_seconds = total_seconds;
  rep.n_samples = samples.rows();
  rep.burn_in = static_cast<Index>(cfg.burn_in_fraction * static_cast<double>(samples.rows()));
  const Matrix kept = samples.bottomRows(samples.rows() - rep.burn_in);

  const auto ess_sum = ess_summary(
      kept, sampling_seconds,
      cfg.baseline_min_ess_per_sec > 0.0 ? std::optional<double>(cfg.baseline_min_ess_per_sec)
                                         : std::nullopt);
  rep.min_ess = ess_sum.min;
  rep.med_ess = ess_sum.median;
  rep.max_ess = ess_sum.max;
  rep.min_ess_per_sec = ess_sum.min_ess_per_sec;
  if (ess_sum.speedup_vs_baseline) rep.speedup = *ess_sum.speedup_vs_baseline;

  if (built.has_test && built.test.size() > 0) {
    if (built.classification) {
      const Matrix probs = posterior_mean_probs(built.model, kept, built.test.X);
      std::vector<int> labels(static_cast<std::size_t>(built.test.y.size()));
      for (Index i = 0; i < built.test.y.size(); ++i)
        labels[static_cast<std::size_t>(i)] = static_cast<int>(built.test.y[i]);
      Index correct = 0;
      for (Index i = 0; i < probs.rows(); ++i) {
        Index pred;
        probs.row(i).maxCoeff(&pred);
        correct += pred == labels[static_cast<std::size_t>(i)];
      }
      rep.accuracy = static_cast<double>(correct) / static_cast<double>(probs.rows());
      rep.ece = ece(probs, labels, cfg.ece_bins);
    } else {
      rep.rmse = rmse(posterior_mean_prediction(built.model, kept, built.test.X), built.test.y);
      Rng rng = make_rng(derive_seed(cfg.seed, 105));
      const auto intervals =
          predictive_intervals(built.model, kept, built.test.X, cfg.interval_level, rng);
      rep.cp95 = cp95(intervals, built.test.y);
    }
  }
  return rep;
}

inline void write_metrics_text(const std::string& path, const MetricsReport& rep) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "sampler = " << rep.sampler << "\n";
  os << "problem = " << rep.problem << "\n";
  os << "rmse = " << rep.rmse << "\n";
  os << "accuracy = " << rep.accuracy << "\n";
  os << "cp95 = " << rep.cp95 << "\n";
  os << "ece = " << rep.ece << "\n";
  os << "sampling_seconds = " << rep.sampling_seconds << "\n";
  os << "total_seconds = " << rep.total_seconds << "\n";
  os << "min_ess = " << rep.min_ess << "\n";
  os << "med_ess = " << rep.med_ess << "\n";
  os << "max_ess = " << rep.max_ess << "\n";
  os << "min_ess_per_sec = " << rep.min_ess_per_sec << "\n";
  os << "speedup = " << rep.speedup << "\n";
  os << "accept_rate = " << rep.accept_rate << "\n";
  os << "mb_fraction = " << rep.mb_fraction << "\n";
  os << "exact_log_posterior_evals = " << rep.exact_log_posterior_evals << "\n";
  os << "exact_gradient_evals = " << rep.exact_gradient_evals << "\n";
  os << "n_samples = " << rep.n_samples << "\n";
  os << "burn_in = " << rep.burn_in << "\n";
}

// One schema for every sampler so runs are directly comparable.
inline constexpr const char* kMetricsCsvHeader =
    "sampler,problem,rmse,accuracy,cp95,ece,sampling_seconds,min_ess,med_ess,max_ess,"
    "min_ess_per_sec,speedup";

inline void write_metrics_csv(const std::string& path, const MetricsReport& rep) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << kMetricsCsvHeader << "\n";
  os << rep.sampler << ',' << rep.problem << ',' << rep.rmse << ',' << rep.accuracy << ','
     << rep.cp95 << ',' << rep.ece << ',' << rep.sampling_seconds << ',' << rep.min_ess << ','
     << rep.med_ess << ',' << rep.max_ess << ',' << rep.min_ess_per_sec << ',' << rep.speedup
     << "\n";
}

inline void write_trace(const std::string& path, const std::vector<IterationRecord>& records) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "t\tbranch\td_star\tproposal_norm\taccepted\tlog_density_used\twall_nanos\n";
  for (const auto& r : records)
    os << r.t << '\t' << to_string(r.branch) << '\t' << r.d_star << '\t' << r.proposal_norm
       << '\t' << (r.accepted ? 1 : 0) << '\t' << r.log_density_used << '\t' << r.wall_nanos
       << "\n";
}

/// Creates the run directory; refuses to touch an existing non-empty one.
inline void prepare_out_dir(const std::string& dir) {
  if (dir.empty()) throw std::runtime_error("output directory not set (out = ... or --out)");
  namespace fs = std::filesystem;
  if (fs::exists(dir) && !fs::is_empty(dir))
    throw std::runtime_error("output directory exists and is not empty: " + dir);
  fs::create_directories(dir);
}

/// Runs the configured experiment and writes every artifact into cfg.out_dir.
inline MetricsReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  prepare_out_dir(cfg.out_dir);
  const auto path = [&](const char* name) { return cfg.out_dir + "/" + name; };

  {
    std::ofstream os(path("resolved_config.cfg"));
    os << cfg.resolved_text();
  }

  BuiltTarget built = build_target(cfg);
  if (built.has_test) {
    write_indices(path("train_indices.txt"), built.indices.train);
    write_indices(path("test_indices.txt"), built.indices.test);
  }
  if (built.theta_star.size() > 0) {
    auto os = io::open_out(path("theta_star.bin"));
    io::write_vector(os, built.theta_star);
  }

  Matrix samples;
  std::vector<IterationRecord> records;
  double sampling_seconds = 0.0, total_seconds = 0.0;
  double accept_rate = 0.0;
  double mb_fraction = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t logpi_evals = 0, grad_evals = 0;

  switch (cfg.sampler) {
    case SamplerKind::Nipa: {
      NipaConfig ncfg = cfg.nipa;
      ncfg.hmc = cfg.hmc;
      ncfg.sghmc = cfg.sghmc;
      ncfg.T = cfg.nipa.M0 + cfg.n_samples;
      ncfg.seed = cfg.seed;
      auto res = nipa_run(built.model, ncfg, cfg.out_dir);
      samples = std::move(res.samples);
      records = std::move(res.records);
      sampling_seconds = res.phase3_seconds;
      total_seconds = res.phase1_seconds + res.phase2_seconds + res.phase3_seconds;
      accept_rate = res.accept_rate;
      mb_fraction = res.mb_fraction;
      logpi_evals = res.phase3_log_posterior_evals;
      grad_evals = res.phase3_gradient_evals;
      io::save_pool(path("pool.bin"), res.pool);
      res.surrogate.save(path("surrogate.bin"));
      save_chain_checkpoint(path("chain.bin"),
                            ChainCheckpoint{res.state, "", res.t1, res.t2, res.sigma_rw,
                                            HmcConfig{res.hmc_step_size,
                                                      cfg.hmc.leapfrog_steps}});
      {
        auto os = io::open_out(path("pool_phase_states.bin"));
        io::write_matrix(os, res.pool_phase_states);
      }
      break;
    }
    case SamplerKind::Hmc: {
      Rng rng = make_rng(cfg.seed);
      const Vector theta0 = initial_state(built.model, rng);
      built.model.reset_counters();
      auto res = hmc_sample(built.model, theta0, cfg.hmc, cfg.n_samples, rng);
      samples = std::move(res.samples);
      records = std::move(res.records);
      sampling_seconds = res.sampling_seconds;
      total_seconds = res.setup_seconds + res.sampling_seconds;
      accept_rate = res.accept_rate;
      logpi_evals = built.model.exact_log_posterior_evals();
      grad_evals = built.model.exact_gradient_evals();
      break;
    }
    case SamplerKind::Sghmc: {
      Rng rng = make_rng(cfg.seed);
      const Vector theta0 = initial_state(built.model, rng);
      SghmcConfig scfg = cfg.sghmc;
      scfg.steps = static_cast<int>(cfg.n_samples) * scfg.thin;
      auto res = sghmc_sample(built.model, theta0, scfg, rng);
      samples = std::move(res.samples);
      sampling_seconds = res.sampling_seconds;
      total_seconds = res.sampling_seconds;
      accept_rate = res.accept_rate;
      break;
    }
    case SamplerKind::Rw: {
      Rng rng = make_rng(cfg.seed);
      const Vector theta0 = initial_state(built.model, rng);
      auto res = rw_sample(built.model, theta0, cfg.rw_sigma, cfg.n_samples, rng);
      samples = std::move(res.samples);
      records = std::move(res.records);
      sampling_seconds = res.sampling_seconds;
      total_seconds = res.sampling_seconds;
      accept_rate = res.accept_rate;
      break;
    }
  }

  io::save_samples(path("samples.bin"), samples);
  if (!records.empty()) write_trace(path("trace.tsv"), records);

  MetricsReport rep = compute_metrics(cfg, built, samples, sampling_seconds, total_seconds);
  rep.accept_rate = accept_rate;
  rep.mb_fraction = mb_fraction;
  rep.exact_log_posterior_evals = logpi_evals;
  rep.exact_gradient_evals = grad_evals;
  write_metrics_text(path("metrics.txt"), rep);
  write_metrics_csv(path("metrics_row.csv"), rep);
  return rep;
}

/// Recomputes metrics for a finished run directory from its stored samples.
inline MetricsReport recompute_metrics(const std::string& run_dir) {
  ExperimentConfig cfg = ExperimentConfig::from_file(run_dir + "/resolved_config.cfg");
  const Matrix samples = io::load_samples(run_dir + "/samples.bin");
  const KeyValueFile old_metrics = KeyValueFile::parse_file(run_dir + "/metrics.txt");
  const double sampling_seconds = old_metrics.get_double("sampling_seconds", 0.0);
  const double total_seconds = old_metrics.get_double("total_seconds", 0.0);
  const BuiltTarget built = build_target(cfg);
  MetricsReport rep = compute_metrics(cfg, built, samples, sampling_seconds, total_seconds);
  rep.accept_rate = old_metrics.get_double("accept_rate", 0.0);
  rep.mb_fraction = old_metrics.get_double("mb_fraction", rep.mb_fraction);
  write_metrics_text(run_dir + "/metrics_recomputed.txt", rep);
  return rep;
}

/// Side-by-side comparison; speedup = candidate minESS/s over baseline's.
inline double compare_metrics(const std::string& baseline_path,
                              const std::string& candidate_path, std::ostream& os) {
  const auto load = [](const std::string& p) {
    namespace fs = std::filesystem;
    const std::string file = fs::is_directory(p) ? p + "/metrics.txt" : p;
    return KeyValueFile::parse_file(file);
  };
  const auto base = load(baseline_path);
  const auto cand = load(candidate_path);
  const char* keys[] = {"sampler", "problem",        "rmse",   "accuracy",
                        "cp95",    "ece",            "sampling_seconds",
                        "min_ess", "med_ess",        "max_ess",
                        "min_ess_per_sec"};
  for (const char* key : keys) {
    if (!base.has(key)) throw std::runtime_error("baseline metrics missing field: " + std::string(key));
    if (!cand.has(key)) throw std::runtime_error("candidate metrics missing field: " + std::string(key));
  }
  const double base_rate = base.get_double("min_ess_per_sec", 0.0);
  const double cand_rate = cand.get_double("min_ess_per_sec", 0.0);
  if (base_rate <= 0.0) throw std::runtime_error("baseline min_ess_per_sec must be positive");
  const double speedup = cand_rate / base_rate;

  os << std::left << std::setw(20) << "metric" << std::setw(24) << "baseline" << std::setw(24)
     << "candidate" << "\n";
  for (const char* key : keys)
    os << std::left << std::setw(20) << key << std::setw(24) << base.get_string(key, "-")
       << std::setw(24) << cand.get_string(key, "-") << "\n";
  os << std::left << std::setw(20) << "speedup" << std::setw(24) << "1" << std::setw(24)
     << speedup << "\n";
  return speedup;
}

}  // namespace nipa
