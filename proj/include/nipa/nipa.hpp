// Gated hybrid sampler: random-walk gating candidates dispatch each iteration
// to an exact HMC step (MB), a surrogate-evaluated Metropolis step (MF) or a
// cached-recall Metropolis step (EC), with pool bookkeeping and periodic
// surrogate refits. Baseline single-kernel runners live here too.
#pragma once

#include "nipa/kernels.hpp"
#include "nipa/surrogate.hpp"

#include <chrono>

namespace nipa {

enum class Branch : std::uint8_t { MB = 0, MF = 1, EC = 2 };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::MB: return "MB";
    case Branch::MF: return "MF";
    case Branch::EC: return "EC";
  }
  return "?";
}

/// Branch selection from the standardized distance-to-pool:
/// d <= t1 recalls an episode (EC), t1 < d <= t2 trusts the surrogate (MF),
/// d > t2 falls back to the exact kernel (MB).
inline Branch gate(double d_star, double t1, double t2) {
  if (d_star < 0.0) throw std::invalid_argument("gate: d_star must be >= 0");
  if (t1 > t2) throw std::invalid_argument("gate: requires t1 <= t2");
  if (d_star <= t1) return Branch::EC;
  if (d_star <= t2) return Branch::MF;
  return Branch::MB;
}

struct IterationRecord {
  long t = 0;
  Branch branch = Branch::MB;
  double d_star = std::numeric_limits<double>::quiet_NaN();
  double proposal_norm = 0.0;
  bool accepted = false;
  double log_density_used = 0.0;
  std::uint64_t wall_nanos = 0;
};

struct ChainState {
  Vector theta;
  double L_MB = 0.0;  // log posterior of the last exact-valued reference state
  double L_MF = 0.0;  // surrogate value of the last surrogate-valued reference state
  long t = 0;
};

struct NipaConfig {
  // Thresholds: absolute values when >= 0 (t2 may be +inf), otherwise derived
  // at every surrogate (re)fit from quantiles of the within-pool
  // nearest-neighbor distance distribution and frozen between refits.
  double t1 = -1.0;
  double t2 = -1.0;
  double t1_quantile = 0.25;
  double t2_quantile = 0.90;

  int M0 = 100;    // initial pool size
  long T = 2100;   // total iterations including the pool phase
  int k = 100;     // surrogate refit interval

  // Gating-candidate scale: absolute when > 0, otherwise
  // sigma_rw_scale * mean coordinatewise pool std.
  double sigma_rw = 0.0;
  double sigma_rw_scale = 0.01;

  HmcConfig hmc{0.0, 10};  // step_size 0 = tune by doubling search
  SghmcConfig sghmc{};     // steps are overridden to M0 * thin for the pool phase
  SurrogateHyper surrogate{};
  std::uint64_t seed = 0;

  void validate() const {
    const bool absolute = t1 >= 0.0 && t2 >= 0.0;
    if (absolute) {
      // Equal thresholds are allowed as a validation override (single-branch
      // reductions); quantile mode always yields t1 < t2.
      if (t1 > t2) throw std::invalid_argument("NipaConfig: need t1 <= t2");
    } else {
      if (!(t1_quantile >= 0.0 && t2_quantile <= 1.0 && t1_quantile < t2_quantile))
        throw std::invalid_argument("NipaConfig: need 0 <= t1_quantile < t2_quantile <= 1");
    }
    if (M0 < 1) throw std::invalid_argument("NipaConfig: M0 must be >= 1");
    // T == M0 is a legal degenerate horizon: pool phase only, zero gated steps.
    if (T < M0) throw std::invalid_argument("NipaConfig: T must be >= M0");
    if (k < 1) throw std::invalid_argument("NipaConfig: k must be >= 1");
    if (sigma_rw < 0.0) throw std::invalid_argument("NipaConfig: sigma_rw must be >= 0");
    if (sigma_rw == 0.0 && sigma_rw_scale <= 0.0)
      throw std::invalid_argument("NipaConfig: sigma_rw_scale must be positive");
    if (hmc.step_size < 0.0) throw std::invalid_argument("NipaConfig: hmc.step_size must be >= 0");
    if (hmc.leapfrog_steps < 1)
      throw std::invalid_argument("NipaConfig: hmc.leapfrog_steps must be >= 1");
  }
};

/// Frozen per-iteration parameters (thresholds change only at refits).
struct NipaStepParams {
  double t1;
  double t2;
  double sigma_rw;
  HmcConfig hmc;
};

/// One gated iteration. Mutates the chain state and (for accepted MB/MF
/// moves) appends to the pool; EC acceptances move the state only.
/// No exact log-posterior or gradient call happens outside the MB branch.
inline IterationRecord nipa_step(ChainState& state, MemoryPool& pool, const Surrogate& surrogate,
                                 const TargetModel& target, const NipaStepParams& params,
                                 Rng& rng) {
  if (pool.empty()) throw std::logic_error("nipa_step: empty pool");
  if (!surrogate.fitted()) throw std::logic_error("nipa_step: surrogate not fitted");

  const auto start = std::chrono::steady_clock::now();
  ++state.t;
  IterationRecord rec;
  rec.t = state.t;

  const Vector candidate = rw_propose(state.theta, params.sigma_rw, rng);
  const auto near = pool.nearest(candidate);
  rec.d_star = near.d_star;
  rec.branch = gate(near.d_star, params.t1, params.t2);

  switch (rec.branch) {
    case Branch::MB: {
      // The gating candidate is discarded; HMC proposes fresh from the state.
      auto res = hmc_step(target, state.theta, params.hmc, rng);
      rec.proposal_norm = res.proposal_dist;
      rec.accepted = res.accepted;
      rec.log_density_used = res.log_posterior;
      if (res.accepted) {
        state.theta = std::move(res.theta);
        state.L_MB = res.log_posterior;
        pool.insert(state.theta, state.L_MB, Origin::MB);
      }
      break;
    }
    case Branch::MF: {
      const double predicted = surrogate.predict_logpi(candidate);
      rec.proposal_norm = (candidate - state.theta).norm();
      rec.log_density_used = predicted;
      rec.accepted = mh_accept(predicted - state.L_MF, rng);
      if (rec.accepted) {
        state.theta = candidate;
        state.L_MF = predicted;
        pool.insert(candidate, predicted, Origin::MF);
      }
      break;
    }
    case Branch::EC: {
      const auto& episode = pool.entry(near.index);
      const double proxy = episode.log_density;
      const double reference = episode.origin == Origin::MB ? state.L_MB : state.L_MF;
      rec.proposal_norm = (candidate - state.theta).norm();
      rec.log_density_used = proxy;
      rec.accepted = mh_accept(proxy - reference, rng);
      if (rec.accepted) state.theta = candidate;  // recalled episodes are not re-inserted
      break;
    }
  }
  rec.wall_nanos = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                           start)
          .count());
  return rec;
}

// --- chain checkpointing ------------------------------------------------------

struct ChainCheckpoint {
  ChainState state;
  std::string rng_state;  // serialized mt19937_64 stream
  double t1 = 0.0, t2 = 0.0, sigma_rw = 0.0;
  HmcConfig hmc;
};

inline constexpr char kChainMagic[8] = {'N', 'I', 'P', 'C', 'H', 'A', 'N', '1'};

inline void save_chain_checkpoint(const std::string& path, const ChainCheckpoint& cp) {
  auto os = io::open_out(path);
  io::write_magic(os, kChainMagic, 1);
  io::write_vector(os, cp.state.theta);
  io::write_f64(os, cp.state.L_MB);
  io::write_f64(os, cp.state.L_MF);
  io::write_i64(os, cp.state.t);
  io::write_string(os, cp.rng_state);
  io::write_f64(os, cp.t1);
  io::write_f64(os, cp.t2);
  io::write_f64(os, cp.sigma_rw);
  io::write_f64(os, cp.hmc.step_size);
  io::write_i64(os, cp.hmc.leapfrog_steps);
}

inline ChainCheckpoint load_chain_checkpoint(const std::string& path) {
  auto is = io::open_in(path);
  io::expect_magic(is, kChainMagic, 1, "chain checkpoint");
  ChainCheckpoint cp;
  cp.state.theta = io::read_vector(is);
  cp.state.L_MB = io::read_f64(is);
  cp.state.L_MF = io::read_f64(is);
  cp.state.t = io::read_i64(is);
  cp.rng_state = io::read_string(is);
  cp.t1 = io::read_f64(is);
  cp.t2 = io::read_f64(is);
  cp.sigma_rw = io::read_f64(is);
  cp.hmc.step_size = io::read_f64(is);
  cp.hmc.leapfrog_steps = static_cast<int>(io::read_i64(is));
  return cp;
}

inline std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Rng rng_from_string(const std::string& s) {
  std::istringstream is(s);
  Rng rng;
  is >> rng;
  if (!is) throw std::runtime_error("rng_from_string: malformed rng state");
  return rng;
}

struct NipaRunResult {
  Matrix pool_phase_states;  // M0 x D states retained by SGHMC
  Matrix samples;            // (T - M0) x D recorded states
  std::vector<IterationRecord> records;
  MemoryPool pool;
  Surrogate surrogate;
  ChainState state;
  double phase1_seconds = 0.0;  // pool construction
  double phase2_seconds = 0.0;  // surrogate fit + tuning
  double phase3_seconds = 0.0;  // gated sampling, refits included
  std::uint64_t phase3_log_posterior_evals = 0;
  std::uint64_t phase3_gradient_evals = 0;
  double t1 = 0.0, t2 = 0.0;  // thresholds in effect at the end
  double sigma_rw = 0.0;
  double hmc_step_size = 0.0;
  double mb_fraction = 0.0;
  double accept_rate = 0.0;
};

/// Zero state for analytic targets, variance-preserving uniform init for BNNs.
inline Vector initial_state(const TargetModel& target, Rng& rng) {
  if (target.is_bnn()) return glorot_uniform_init(target.spec(), rng);
  return Vector::Zero(target.dim());
}

inline std::pair<double, double> resolve_thresholds(const MemoryPool& pool,
                                                    const NipaConfig& cfg) {
  if (cfg.t1 >= 0.0 && cfg.t2 >= 0.0) return {cfg.t1, cfg.t2};
  const auto dists = pool.nn_distances();
  return {quantile(dists, cfg.t1_quantile), quantile(dists, cfg.t2_quantile)};
}

/// Full Algorithm: SGHMC pool phase with exact log-posterior labeling,
/// surrogate fit, then T - M0 gated iterations with refits every k.
/// Fully reproducible for a fixed seed. If error_checkpoint_dir is set, a
/// chain/pool/surrogate checkpoint lands there before an error propagates.
inline NipaRunResult nipa_run(const TargetModel& target, const NipaConfig& cfg,
                              const std::string& error_checkpoint_dir = "") {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto seconds_between = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  Rng rng = make_rng(cfg.seed);
  const Index dim = target.dim();

  // Phase 1: initial pool from SGHMC, labeled with exact full-data values.
  const auto t_phase1 = clock::now();
  SghmcConfig pool_cfg = cfg.sghmc;
  pool_cfg.steps = cfg.M0 * pool_cfg.thin;
  const Vector theta0 = initial_state(target, rng);
  const auto pool_states = sghmc_run(target, theta0, pool_cfg, rng);
  if (static_cast<int>(pool_states.size()) != cfg.M0)
    throw std::logic_error("nipa_run: SGHMC retained " + std::to_string(pool_states.size()) +
                           " states, expected " + std::to_string(cfg.M0));

  MemoryPool pool(dim);
  double last_exact = 0.0;
  for (const auto& s : pool_states) {
    last_exact = target.log_posterior(s);
    pool.insert(s, last_exact, Origin::MB);
  }
  const auto t_phase2 = clock::now();

  // Phase 2: surrogate fit, HMC step-size tuning, threshold resolution.
  SurrogateHyper hyper = cfg.surrogate;
  if (hyper.seed == 0) hyper.seed = derive_seed(cfg.seed, 7);
  Surrogate surrogate = Surrogate::fit(pool, hyper);

  HmcConfig hmc = cfg.hmc;
  if (hmc.step_size <= 0.0)
    hmc.step_size = tune_step_size(target, pool_states.back(), hmc.leapfrog_steps, rng);

  auto [t1, t2] = resolve_thresholds(pool, cfg);
  const double sigma_rw =
      cfg.sigma_rw > 0.0 ? cfg.sigma_rw : cfg.sigma_rw_scale * pool.stddev().mean();

  ChainState state;
  state.theta = pool_states.back();
  state.t = cfg.M0;
  state.L_MB = last_exact;                             // exact value of the last pool state
  state.L_MF = surrogate.predict_logpi(state.theta);   // defined before any MF event

  const auto t_phase3 = clock::now();
  const std::uint64_t logpi0 = target.exact_log_posterior_evals();
  const std::uint64_t grad0 = target.exact_gradient_evals();

  const long iters = cfg.T - cfg.M0;
  Matrix samples(iters, dim);
  std::vector<IterationRecord> records;
  records.reserve(static_cast<std::size_t>(iters));

  long mb_count = 0, accepted = 0;
  try {
    for (long t = cfg.M0 + 1; t <= cfg.T; ++t) {
      const NipaStepParams params{t1, t2, sigma_rw, hmc};
      auto rec = nipa_step(state, pool, surrogate, target, params, rng);
      mb_count += rec.branch == Branch::MB;
      accepted += rec.accepted;
      samples.row(t - cfg.M0 - 1) = state.theta.transpose();
      records.push_back(rec);
      if (t % cfg.k == 0) {
        surrogate = surrogate.refit(pool);
        std::tie(t1, t2) = resolve_thresholds(pool, cfg);
      }
    }
  } catch (...) {
    if (!error_checkpoint_dir.empty()) {
      save_chain_checkpoint(error_checkpoint_dir + "/chain_error.bin",
                            ChainCheckpoint{state, rng_to_string(rng), t1, t2, sigma_rw, hmc});
      io::save_pool(error_checkpoint_dir + "/pool_error.bin", pool);
      surrogate.save(error_checkpoint_dir + "/surrogate_error.bin");
    }
    throw;
  }
  const auto t_end = clock::now();

  Matrix phase1_states(cfg.M0, dim);
  for (Index i = 0; i < cfg.M0; ++i) phase1_states.row(i) = pool_states[i].transpose();

  return NipaRunResult{
      .pool_phase_states = std::move(phase1_states),
      .samples = std::move(samples),
      .records = std::move(records),
      .pool = std::move(pool),
      .surrogate = std::move(surrogate),
      .state = std::move(state),
      .phase1_seconds = seconds_between(t_phase1, t_phase2),
      .phase2_seconds = seconds_between(t_phase2, t_phase3),
      .phase3_seconds = seconds_between(t_phase3, t_end),
      .phase3_log_posterior_evals = target.exact_log_posterior_evals() - logpi0,
      .phase3_gradient_evals = target.exact_gradient_evals() - grad0,
      .t1 = t1,
      .t2 = t2,
      .sigma_rw = sigma_rw,
      .hmc_step_size = hmc.step_size,
      .mb_fraction = iters > 0 ? static_cast<double>(mb_count) / static_cast<double>(iters) : 0.0,
      .accept_rate = iters > 0 ? static_cast<double>(accepted) / static_cast<double>(iters) : 0.0};
}

// --- single-kernel baselines -------------------------------------------------

struct KernelRun {
  Matrix samples;
  std::vector<IterationRecord> records;
  double sampling_seconds = 0.0;
  double setup_seconds = 0.0;
  double accept_rate = 0.0;
  double step_size = 0.0;  // resolved HMC step size where applicable
};

inline KernelRun hmc_sample(const TargetModel& target, const Vector& theta0, HmcConfig cfg,
                            Index n_samples, Rng& rng) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  if (cfg.step_size <= 0.0)
    cfg.step_size = tune_step_size(target, theta0, cfg.leapfrog_steps, rng);
  cfg.validate();
  const auto t1 = clock::now();

  KernelRun out;
  out.samples.resize(n_samples, theta0.size());
  out.records.reserve(static_cast<std::size_t>(n_samples));
  Vector theta = theta0;
  long accepted = 0;
  for (Index t = 0; t < n_samples; ++t) {
    const auto it0 = clock::now();
    auto res = hmc_step(target, theta, cfg, rng);
    theta = std::move(res.theta);
    accepted += res.accepted;
    out.samples.row(t) = theta.transpose();
    IterationRecord rec;
    rec.t = t + 1;
    rec.branch = Branch::MB;
    rec.proposal_norm = res.proposal_dist;
    rec.accepted = res.accepted;
    rec.log_density_used = res.log_posterior;
    rec.wall_nanos = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - it0).count());
    out.records.push_back(rec);
  }
  out.sampling_seconds = std::chrono::duration<double>(clock::now() - t1).count();
  out.setup_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.accept_rate = static_cast<double>(accepted) / static_cast<double>(n_samples);
  out.step_size = cfg.step_size;
  return out;
}

/// Random-walk Metropolis with exact log-posterior evaluations.
inline KernelRun rw_sample(const TargetModel& target, const Vector& theta0, double sigma,
                           Index n_samples, Rng& rng) {
  if (sigma <= 0.0) throw std::invalid_argument("rw_sample: sigma must be positive");
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  KernelRun out;
  out.samples.resize(n_samples, theta0.size());
  out.records.reserve(static_cast<std::size_t>(n_samples));
  Vector theta = theta0;
  double logpi = target.log_posterior(theta);
  long accepted = 0;
  for (Index t = 0; t < n_samples; ++t) {
    const auto it0 = clock::now();
    const Vector candidate = rw_propose(theta, sigma, rng);
    const double logpi_cand = target.log_posterior(candidate);
    const bool acc = mh_accept(logpi_cand - logpi, rng);
    IterationRecord rec;
    rec.t = t + 1;
    rec.branch = Branch::MB;
    rec.proposal_norm = (candidate - theta).norm();
    rec.accepted = acc;
    if (acc) {
      theta = candidate;
      logpi = logpi_cand;
    }
    rec.log_density_used = logpi;
    accepted += acc;
    out.samples.row(t) = theta.transpose();
    rec.wall_nanos = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - it0).count());
    out.records.push_back(rec);
  }
  out.sampling_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  out.accept_rate = static_cast<double>(accepted) / static_cast<double>(n_samples);
  return out;
}

inline KernelRun sghmc_sample(const TargetModel& target, const Vector& theta0,
                              const SghmcConfig& cfg, Rng& rng) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto states = sghmc_run(target, theta0, cfg, rng);
  KernelRun out;
  out.samples.resize(static_cast<Index>(states.size()), theta0.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    out.samples.row(static_cast<Index>(i)) = states[i].transpose();
  out.sampling_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  out.accept_rate = 1.0;  // no Metropolis correction
  return out;
}

}  // namespace nipa
