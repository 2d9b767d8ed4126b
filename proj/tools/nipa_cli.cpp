// Experiment runner CLI: generate datasets, run samplers, recompute metrics,
// and compare runs. Thread count is taken from the NIPA_THREADS env var.
#include "nipa/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

void apply_thread_env() {
  if (const char* env = std::getenv("NIPA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) Eigen::setNbThreads(n);
  }
}

nipa::ExperimentConfig load_config(const std::string& config_path, long seed_override,
                                   const std::string& out_override, long subsample_override) {
  auto cfg = nipa::ExperimentConfig::from_file(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (subsample_override >= 0) cfg.subsample = subsample_override;
  return cfg;
}

void write_dataset_csv(const std::string& path, const nipa::Dataset& ds) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  for (nipa::Index i = 0; i < ds.size(); ++i) {
    for (nipa::Index j = 0; j < ds.X.cols(); ++j) os << ds.X(i, j) << ',';
    os << ds.y[i] << '\n';
  }
}

int cmd_generate(const nipa::ExperimentConfig& cfg) {
  cfg.validate();
  nipa::prepare_out_dir(cfg.out_dir);
  const auto built = nipa::build_target(cfg);
  if (!built.has_test) {
    std::cerr << "generate: analytic targets have no dataset to write\n";
    return 1;
  }
  write_dataset_csv(cfg.out_dir + "/train.csv", built.model.data());
  write_dataset_csv(cfg.out_dir + "/test.csv", built.test);
  nipa::write_indices(cfg.out_dir + "/train_indices.txt", built.indices.train);
  nipa::write_indices(cfg.out_dir + "/test_indices.txt", built.indices.test);
  if (built.theta_star.size() > 0) {
    auto os = nipa::io::open_out(cfg.out_dir + "/theta_star.bin");
    nipa::io::write_vector(os, built.theta_star);
  }
  {
    std::ofstream os(cfg.out_dir + "/resolved_config.cfg");
    os << cfg.resolved_text();
  }
  std::cout << "wrote " << built.model.data().size() << " train rows and " << built.test.size()
            << " test rows to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_sample(const nipa::ExperimentConfig& cfg) {
  const auto rep = nipa::run_experiment(cfg);
  std::cout << "sampler = " << rep.sampler << "\n"
            << "samples = " << rep.n_samples << "\n"
            << "sampling_seconds = " << rep.sampling_seconds << "\n"
            << "min_ess = " << rep.min_ess << ", med_ess = " << rep.med_ess
            << ", max_ess = " << rep.max_ess << "\n"
            << "min_ess_per_sec = " << rep.min_ess_per_sec << "\n";
  if (std::isfinite(rep.rmse)) std::cout << "rmse = " << rep.rmse << ", cp95 = " << rep.cp95 << "\n";
  if (std::isfinite(rep.accuracy))
    std::cout << "accuracy = " << rep.accuracy << ", ece = " << rep.ece << "\n";
  if (std::isfinite(rep.mb_fraction)) std::cout << "mb_fraction = " << rep.mb_fraction << "\n";
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();
  CLI::App app{"NIPA sampler experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir, baseline_path, candidate_path;
  long seed = -1, subsample = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--seed", seed, "override config seed");
    cmd->add_option("--out", out_dir, "override output directory");
    cmd->add_option("--subsample", subsample, "override row subsample count");
  };

  auto* generate = app.add_subcommand("generate", "generate and persist a dataset");
  add_common(generate);
  auto* sample = app.add_subcommand("sample", "run the configured sampler");
  add_common(sample);
  auto* metrics = app.add_subcommand("metrics", "recompute metrics from stored samples");
  metrics->add_option("--run", run_dir, "finished run directory")->required();
  auto* compare = app.add_subcommand("compare", "compare two metrics files");
  compare->add_option("baseline", baseline_path, "baseline metrics.txt or run dir")->required();
  compare->add_option("candidate", candidate_path, "candidate metrics.txt or run dir")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed())
      return cmd_generate(load_config(config_path, seed, out_dir, subsample));
    if (sample->parsed()) return cmd_sample(load_config(config_path, seed, out_dir, subsample));
    if (metrics->parsed()) {
      const auto rep = nipa::recompute_metrics(run_dir);
      std::cout << "recomputed metrics written to " << run_dir << "/metrics_recomputed.txt\n"
                << "min_ess = " << rep.min_ess << ", min_ess_per_sec = " << rep.min_ess_per_sec
                << "\n";
      return 0;
    }
    if (compare->parsed()) {
      const double speedup = nipa::compare_metrics(baseline_path, candidate_path, std::cout);
      std::cout << "candidate is " << speedup << "x the baseline by min ESS per second\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
