// Plain-text hierarchical key-value experiment configuration.
//
// Format: one `key = value` per line, '#' starts a comment, keys are dotted
// paths (e.g. sampler.hmc.step_size). Lists are comma-separated.
#pragma once

#include "nipa/nipa.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace nipa {

class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  static KeyValueFile parse_string(const std::string& text, std::string origin = "<string>") {
    KeyValueFile kv;
    kv.origin_ = std::move(origin);
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(kv.origin_ + ":" + std::to_string(line_no) +
                                 ": expected 'key = value', got '" + trimmed + "'");
      const auto key = trim(trimmed.substr(0, eq));
      const auto value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error(kv.origin_ + ":" + std::to_string(line_no) + ": empty key");
      kv.values_[key] = value;
    }
    return kv;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key + "' has non-numeric value '" + it->second +
                               "'");
    }
  }

  long get_long(const std::string& key, long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key + "' has non-integer value '" + it->second +
                               "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::runtime_error("config: key '" + key + "' has non-boolean value '" + it->second +
                             "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    const auto it = values_.find(key);
    std::vector<double> out;
    if (it == values_.end()) return out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto token = trim(item);
      if (token.empty()) continue;
      out.push_back(std::stod(token));
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::string> values_;
  std::string origin_;
};

enum class ProblemKind {
  SyntheticRegression,
  SyntheticClassification,
  CsvRegression,
  CsvClassification,
  AnalyticGaussian,
  AnalyticBanana,
};

enum class SamplerKind { Nipa, Hmc, Sghmc, Rw };

struct ExperimentConfig {
  // target
  ProblemKind problem = ProblemKind::SyntheticRegression;
  Index n = 5000;
  int d = 100;
  int h1 = 32;
  int h2 = 8;
  double noise_var = 0.1;
  double prior_var = 1.0;
  double train_fraction = 0.9;
  std::vector<double> block_vars;  // synthetic classification
  Index analytic_dim = 10;
  double banana_warp = 1.0;
  std::string csv_path;
  int target_column = -1;
  bool has_header = false;
  bool parity_labels = false;  // map digit targets to odd/even
  Index subsample = 0;         // 0 = all rows
  bool stratify = false;

  // sampler
  SamplerKind sampler = SamplerKind::Nipa;
  Index n_samples = 2000;  // posterior samples produced by the run
  NipaConfig nipa;
  HmcConfig hmc{0.0, 10};
  SghmcConfig sghmc{};
  double rw_sigma = 0.1;

  // diagnostics
  double burn_in_fraction = 0.2;
  int ece_bins = 15;
  double interval_level = 0.95;
  double baseline_min_ess_per_sec = 0.0;  // 0 = no speedup column

  std::string out_dir;
  std::uint64_t seed = 1;

  static ExperimentConfig from_file(const std::string& path) {
    return from_kv(KeyValueFile::parse_file(path));
  }

  static ExperimentConfig from_kv(const KeyValueFile& kv);

  void validate() const;

  std::string resolved_text() const;
};

inline ExperimentConfig ExperimentConfig::from_kv(const KeyValueFile& kv) {
  ExperimentConfig cfg;
  const auto problem_name = kv.get_string("target.kind", "synthetic_regression");
  if (problem_name == "synthetic_regression") cfg.problem = ProblemKind::SyntheticRegression;
  else if (problem_name == "synthetic_classification")
    cfg.problem = ProblemKind::SyntheticClassification;
  else if (problem_name == "csv_regression") cfg.problem = ProblemKind::CsvRegression;
  else if (problem_name == "csv_classification") cfg.problem = ProblemKind::CsvClassification;
  else if (problem_name == "analytic_gaussian") cfg.problem = ProblemKind::AnalyticGaussian;
  else if (problem_name == "analytic_banana") cfg.problem = ProblemKind::AnalyticBanana;
  else throw std::runtime_error("config: unknown target.kind '" + problem_name + "'");

  cfg.n = kv.get_long("target.n", cfg.n);
  cfg.d = static_cast<int>(kv.get_long("target.d", cfg.d));
  cfg.h1 = static_cast<int>(kv.get_long("target.h1", cfg.h1));
  cfg.h2 = static_cast<int>(kv.get_long("target.h2", cfg.h2));
  cfg.noise_var = kv.get_double("target.noise_var", cfg.noise_var);
  cfg.prior_var = kv.get_double("target.prior_var", cfg.prior_var);
  cfg.train_fraction = kv.get_double("target.train_fraction", cfg.train_fraction);
  cfg.block_vars = kv.get_double_list("target.block_vars");
  cfg.analytic_dim = kv.get_long("target.dim", cfg.analytic_dim);
  cfg.banana_warp = kv.get_double("target.warp", cfg.banana_warp);
  cfg.csv_path = kv.get_string("target.csv_path", "");
  cfg.target_column = static_cast<int>(kv.get_long("target.target_column", cfg.target_column));
  cfg.has_header = kv.get_bool("target.has_header", cfg.has_header);
  cfg.parity_labels = kv.get_bool("target.parity_labels", cfg.parity_labels);
  cfg.subsample = kv.get_long("target.subsample", cfg.subsample);
  cfg.stratify = kv.get_bool("target.stratify", cfg.stratify);

  const auto sampler_name = kv.get_string("sampler.kind", "nipa");
  if (sampler_name == "nipa") cfg.sampler = SamplerKind::Nipa;
  else if (sampler_name == "hmc") cfg.sampler = SamplerKind::Hmc;
  else if (sampler_name == "sghmc") cfg.sampler = SamplerKind::Sghmc;
  else if (sampler_name == "rw") cfg.sampler = SamplerKind::Rw;
  else throw std::runtime_error("config: unknown sampler.kind '" + sampler_name + "'");

  cfg.n_samples = kv.get_long("sampler.samples", cfg.n_samples);

  cfg.hmc.step_size = kv.get_double("sampler.hmc.step_size", cfg.hmc.step_size);
  cfg.hmc.leapfrog_steps =
      static_cast<int>(kv.get_long("sampler.hmc.leapfrog_steps", cfg.hmc.leapfrog_steps));
  cfg.sghmc.step_size = kv.get_double("sampler.sghmc.step_size", cfg.sghmc.step_size);
  cfg.sghmc.friction = kv.get_double("sampler.sghmc.friction", cfg.sghmc.friction);
  cfg.sghmc.batch_size =
      static_cast<int>(kv.get_long("sampler.sghmc.batch_size", cfg.sghmc.batch_size));
  cfg.sghmc.steps = static_cast<int>(kv.get_long("sampler.sghmc.steps", cfg.sghmc.steps));
  cfg.sghmc.thin = static_cast<int>(kv.get_long("sampler.sghmc.thin", cfg.sghmc.thin));
  cfg.rw_sigma = kv.get_double("sampler.rw.sigma", cfg.rw_sigma);

  cfg.nipa.t1 = kv.get_double("sampler.nipa.t1", cfg.nipa.t1);
  cfg.nipa.t2 = kv.get_double("sampler.nipa.t2", cfg.nipa.t2);
  cfg.nipa.t1_quantile = kv.get_double("sampler.nipa.t1_quantile", cfg.nipa.t1_quantile);
  cfg.nipa.t2_quantile = kv.get_double("sampler.nipa.t2_quantile", cfg.nipa.t2_quantile);
  cfg.nipa.M0 = static_cast<int>(kv.get_long("sampler.nipa.m0", cfg.nipa.M0));
  cfg.nipa.k = static_cast<int>(kv.get_long("sampler.nipa.k", cfg.nipa.k));
  cfg.nipa.sigma_rw = kv.get_double("sampler.nipa.sigma_rw", cfg.nipa.sigma_rw);
  cfg.nipa.sigma_rw_scale = kv.get_double("sampler.nipa.sigma_rw_scale", cfg.nipa.sigma_rw_scale);

  auto& hyper = cfg.nipa.surrogate;
  hyper.latent_dim = kv.get_long("sampler.nipa.surrogate.latent_dim", hyper.latent_dim);
  hyper.encoder_hidden =
      static_cast<int>(kv.get_long("sampler.nipa.surrogate.encoder_hidden", hyper.encoder_hidden));
  hyper.autoencoder_epochs = static_cast<int>(
      kv.get_long("sampler.nipa.surrogate.autoencoder_epochs", hyper.autoencoder_epochs));
  hyper.regressor_epochs = static_cast<int>(
      kv.get_long("sampler.nipa.surrogate.regressor_epochs", hyper.regressor_epochs));
  hyper.refit_autoencoder_epochs = static_cast<int>(kv.get_long(
      "sampler.nipa.surrogate.refit_autoencoder_epochs", hyper.refit_autoencoder_epochs));
  hyper.refit_regressor_epochs = static_cast<int>(
      kv.get_long("sampler.nipa.surrogate.refit_regressor_epochs", hyper.refit_regressor_epochs));
  hyper.learning_rate = kv.get_double("sampler.nipa.surrogate.learning_rate", hyper.learning_rate);
  hyper.full_batch_limit =
      kv.get_long("sampler.nipa.surrogate.full_batch_limit", hyper.full_batch_limit);
  hyper.minibatch = static_cast<int>(kv.get_long("sampler.nipa.surrogate.minibatch",
                                                 hyper.minibatch));
  hyper.mb_only_targets =
      kv.get_bool("sampler.nipa.surrogate.mb_only_targets", hyper.mb_only_targets);
  hyper.warm_start = kv.get_bool("sampler.nipa.surrogate.warm_start", hyper.warm_start);

  cfg.burn_in_fraction = kv.get_double("diagnostics.burn_in_fraction", cfg.burn_in_fraction);
  cfg.ece_bins = static_cast<int>(kv.get_long("diagnostics.ece_bins", cfg.ece_bins));
  cfg.interval_level = kv.get_double("diagnostics.level", cfg.interval_level);
  cfg.baseline_min_ess_per_sec =
      kv.get_double("diagnostics.baseline_min_ess_per_sec", cfg.baseline_min_ess_per_sec);

  cfg.out_dir = kv.get_string("out", "");
  cfg.seed = static_cast<std::uint64_t>(kv.get_long("seed", static_cast<long>(cfg.seed)));
  return cfg;
}

inline void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  const auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };

  const bool synthetic = problem == ProblemKind::SyntheticRegression ||
                         problem == ProblemKind::SyntheticClassification;
  const bool csv =
      problem == ProblemKind::CsvRegression || problem == ProblemKind::CsvClassification;
  if (synthetic) {
    check(n >= 2, "target.n must be >= 2");
    check(d > 0 && h1 > 0 && h2 > 0, "target.d/h1/h2 must be positive");
    check(noise_var >= 0.0, "target.noise_var must be >= 0");
  }
  if (csv) {
    check(!csv_path.empty(), "target.csv_path is required for csv targets");
    if (!csv_path.empty())
      check(std::filesystem::exists(csv_path), "target.csv_path does not exist: " + csv_path);
  }
  check(prior_var > 0.0, "target.prior_var must be positive");
  check(train_fraction > 0.0 && train_fraction < 1.0, "target.train_fraction outside (0,1)");
  check(n_samples >= 10, "sampler.samples must be >= 10");

  if (sampler == SamplerKind::Nipa) {
    NipaConfig probe = nipa;
    probe.hmc = hmc;
    probe.sghmc = sghmc;
    probe.T = nipa.M0 + n_samples;
    try {
      probe.validate();
    } catch (const std::exception& e) {
      errors.emplace_back(e.what());
    }
  }
  if (sampler == SamplerKind::Hmc) {
    check(hmc.step_size >= 0.0, "sampler.hmc.step_size must be >= 0 (0 = auto-tune)");
    check(hmc.leapfrog_steps >= 1, "sampler.hmc.leapfrog_steps must be >= 1");
  }
  if (sampler == SamplerKind::Sghmc) {
    try {
      sghmc.validate();
    } catch (const std::exception& e) {
      errors.emplace_back(e.what());
    }
  }
  if (sampler == SamplerKind::Rw) check(rw_sigma > 0.0, "sampler.rw.sigma must be positive");

  check(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0,
        "diagnostics.burn_in_fraction outside [0,1)");
  check(ece_bins >= 1, "diagnostics.ece_bins must be >= 1");
  check(interval_level > 0.0 && interval_level < 1.0, "diagnostics.level outside (0,1)");

  if (!errors.empty()) {
    std::string joined = "config validation failed:";
    for (const auto& e : errors)
      if (!e.empty()) joined += "\n  - " + e;
    throw std::runtime_error(joined);
  }
}

inline std::string ExperimentConfig::resolved_text() const {
  std::ostringstream os;
  os.precision(17);
  const char* problem_name = "";
  switch (problem) {
    case ProblemKind::SyntheticRegression: problem_name = "synthetic_regression"; break;
    case ProblemKind::SyntheticClassification: problem_name = "synthetic_classification"; break;
    case ProblemKind::CsvRegression: problem_name = "csv_regression"; break;
    case ProblemKind::CsvClassification: problem_name = "csv_classification"; break;
    case ProblemKind::AnalyticGaussian: problem_name = "analytic_gaussian"; break;
    case ProblemKind::AnalyticBanana: problem_name = "analytic_banana"; break;
  }
  const char* sampler_name = "";
  switch (sampler) {
    case SamplerKind::Nipa: sampler_name = "nipa"; break;
    case SamplerKind::Hmc: sampler_name = "hmc"; break;
    case SamplerKind::Sghmc: sampler_name = "sghmc"; break;
    case SamplerKind::Rw: sampler_name = "rw"; break;
  }
  os << "target.kind = " << problem_name << "\n";
  os << "target.n = " << n << "\n";
  os << "target.d = " << d << "\n";
  os << "target.h1 = " << h1 << "\n";
  os << "target.h2 = " << h2 << "\n";
  os << "target.noise_var = " << noise_var << "\n";
  os << "target.prior_var = " << prior_var << "\n";
  os << "target.train_fraction = " << train_fraction << "\n";
  if (!block_vars.empty()) {
    os << "target.block_vars = ";
    for (std::size_t i = 0; i < block_vars.size(); ++i)
      os << (i ? "," : "") << block_vars[i];
    os << "\n";
  }
  os << "target.dim = " << analytic_dim << "\n";
  os << "target.warp = " << banana_warp << "\n";
  if (!csv_path.empty()) {
    os << "target.csv_path = " << csv_path << "\n";
    os << "target.target_column = " << target_column << "\n";
    os << "target.has_header = " << (has_header ? "true" : "false") << "\n";
    os << "target.parity_labels = " << (parity_labels ? "true" : "false") << "\n";
    os << "target.subsample = " << subsample << "\n";
  }
  os << "target.stratify = " << (stratify ? "true" : "false") << "\n";
  os << "sampler.kind = " << sampler_name << "\n";
  os << "sampler.samples = " << n_samples << "\n";
  os << "sampler.hmc.step_size = " << hmc.step_size << "\n";
  os << "sampler.hmc.leapfrog_steps = " << hmc.leapfrog_steps << "\n";
  os << "sampler.sghmc.step_size = " << sghmc.step_size << "\n";
  os << "sampler.sghmc.friction = " << sghmc.friction << "\n";
  os << "sampler.sghmc.batch_size = " << sghmc.batch_size << "\n";
  os << "sampler.sghmc.steps = " << sghmc.steps << "\n";
  os << "sampler.sghmc.thin = " << sghmc.thin << "\n";
  os << "sampler.rw.sigma = " << rw_sigma << "\n";
  os << "sampler.nipa.t1 = " << nipa.t1 << "\n";
  os << "sampler.nipa.t2 = " << nipa.t2 << "\n";
  os << "sampler.nipa.t1_quantile = " << nipa.t1_quantile << "\n";
  os << "sampler.nipa.t2_quantile = " << nipa.t2_quantile << "\n";
  os << "sampler.nipa.m0 = " << nipa.M0 << "\n";
  os << "sampler.nipa.k = " << nipa.k << "\n";
  os << "sampler.nipa.sigma_rw = " << nipa.sigma_rw << "\n";
  os << "sampler.nipa.sigma_rw_scale = " << nipa.sigma_rw_scale << "\n";
  os << "sampler.nipa.surrogate.latent_dim = " << nipa.surrogate.latent_dim << "\n";
  os << "sampler.nipa.surrogate.encoder_hidden = " << nipa.surrogate.encoder_hidden << "\n";
  os << "sampler.nipa.surrogate.autoencoder_epochs = " << nipa.surrogate.autoencoder_epochs
     << "\n";
  os << "sampler.nipa.surrogate.regressor_epochs = " << nipa.surrogate.regressor_epochs << "\n";
  os << "sampler.nipa.surrogate.refit_autoencoder_epochs = "
     << nipa.surrogate.refit_autoencoder_epochs << "\n";
  os << "sampler.nipa.surrogate.refit_regressor_epochs = "
     << nipa.surrogate.refit_regressor_epochs << "\n";
  os << "sampler.nipa.surrogate.learning_rate = " << nipa.surrogate.learning_rate << "\n";
  os << "sampler.nipa.surrogate.full_batch_limit = " << nipa.surrogate.full_batch_limit << "\n";
  os << "sampler.nipa.surrogate.minibatch = " << nipa.surrogate.minibatch << "\n";
  os << "sampler.nipa.surrogate.mb_only_targets = "
     << (nipa.surrogate.mb_only_targets ? "true" : "false") << "\n";
  os << "sampler.nipa.surrogate.warm_start = " << (nipa.surrogate.warm_start ? "true" : "false")
     << "\n";
  os << "diagnostics.burn_in_fraction = " << burn_in_fraction << "\n";
  os << "diagnostics.ece_bins = " << ece_bins << "\n";
  os << "diagnostics.level = " << interval_level << "\n";
  os << "diagnostics.baseline_min_ess_per_sec = " << baseline_min_ess_per_sec << "\n";
  os << "out = " << out_dir << "\n";
  os << "seed = " << seed << "\n";
  return os.str();
}

}  // namespace nipa
