// Transition kernels: Gaussian random-walk proposal, exact-gradient HMC with
// Metropolis correction, and SGHMC for initial-pool generation.
#pragma once

#include "nipa/targets.hpp"

#include <limits>

namespace nipa {

struct HmcConfig {
  double step_size = 0.0;  // 0 = tune before use
  int leapfrog_steps = 10;
  // Mass matrix is the identity.

  void validate() const {
    if (step_size <= 0.0) throw std::invalid_argument("HmcConfig: step_size must be positive");
    if (leapfrog_steps < 1)
      throw std::invalid_argument("HmcConfig: leapfrog_steps must be >= 1");
  }
};

struct SghmcConfig {
  double step_size = 2e-6;
  double friction = 0.1;
  int batch_size = 128;
  int steps = 1000;
  int thin = 10;

  void validate() const {
    if (step_size <= 0.0) throw std::invalid_argument("SghmcConfig: step_size must be positive");
    if (friction <= 0.0) throw std::invalid_argument("SghmcConfig: friction must be positive");
    if (batch_size < 1) throw std::invalid_argument("SghmcConfig: batch_size must be >= 1");
    if (steps < 1) throw std::invalid_argument("SghmcConfig: steps must be >= 1");
    if (thin < 1) throw std::invalid_argument("SghmcConfig: thin must be >= 1");
  }
};

/// Gaussian random-walk candidate theta + sigma_rw * N(0, I).
/// sigma_rw = 0 is allowed (returns theta; still consumes the noise draws).
inline Vector rw_propose(const Vector& theta, double sigma_rw, Rng& rng) {
  if (sigma_rw < 0.0) throw std::invalid_argument("rw_propose: sigma_rw must be >= 0");
  return theta + sigma_rw * standard_normal_vector(theta.size(), rng);
}

/// Accept with probability min(1, exp(log_ratio)). -inf never accepts.
inline bool mh_accept(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio)) throw std::invalid_argument("mh_accept: NaN log ratio");
  const double u = uniform01(rng);
  return std::log(u) < log_ratio;
}

struct LeapfrogResult {
  Vector theta;
  Vector momentum;
  bool diverged = false;  // non-finite trajectory; callers treat as rejection
};

/// Half-kick / drift / half-kick composition with identity mass. Gradient
/// evaluations: leapfrog_steps + 1.
inline LeapfrogResult leapfrog(const TargetModel& target, Vector theta, Vector momentum,
                               double step_size, int steps) {
  if (steps < 1) throw std::invalid_argument("leapfrog: steps must be >= 1");
  Vector p = std::move(momentum);
  p += 0.5 * step_size * target.grad_log_posterior(theta);
  for (int l = 0; l < steps; ++l) {
    theta += step_size * p;
    if (!all_finite(theta)) return {std::move(theta), std::move(p), true};
    const Vector g = target.grad_log_posterior(theta);
    p += (l + 1 < steps ? step_size : 0.5 * step_size) * g;
    if (!all_finite(p)) return {std::move(theta), std::move(p), true};
  }
  return {std::move(theta), std::move(p), false};
}

struct HmcStepResult {
  Vector theta;          // next state
  bool accepted = false;
  double log_posterior;  // exact log posterior of the returned state
  double delta_h;        // H(start) - H(proposal); 0 log-ratio means sure accept
  double proposal_dist;  // ||proposal - start||
};

constexpr double kDivergenceThreshold = 1000.0;  // |delta H| beyond this rejects

/// One HMC transition with Metropolis correction.
/// Exact-evaluation cost: 2 log-posterior calls and leapfrog_steps + 1
/// gradient calls, every call.
inline HmcStepResult hmc_step(const TargetModel& target, const Vector& theta,
                              const HmcConfig& cfg, Rng& rng) {
  if (cfg.leapfrog_steps < 1)
    throw std::invalid_argument("hmc_step: leapfrog_steps must be >= 1");
  const double logpi0 = target.log_posterior(theta);
  const Vector p0 = standard_normal_vector(theta.size(), rng);
  const double h0 = -logpi0 + 0.5 * p0.squaredNorm();

  auto traj = leapfrog(target, theta, p0, cfg.step_size, cfg.leapfrog_steps);
  const double proposal_dist = traj.diverged ? std::numeric_limits<double>::quiet_NaN()
                                             : (traj.theta - theta).norm();
  if (traj.diverged) {
    mh_accept(-std::numeric_limits<double>::infinity(), rng);  // keep the rng stream aligned
    return {theta, false, logpi0, std::numeric_limits<double>::infinity(), proposal_dist};
  }

  const double logpi1 = target.log_posterior(traj.theta);
  const double h1 = -logpi1 + 0.5 * traj.momentum.squaredNorm();
  const double delta_h = h0 - h1;
  const bool divergent = !std::isfinite(delta_h) || std::abs(delta_h) > kDivergenceThreshold;
  const bool accepted =
      divergent ? (mh_accept(-std::numeric_limits<double>::infinity(), rng), false)
                : mh_accept(delta_h, rng);
  if (accepted) return {std::move(traj.theta), true, logpi1, delta_h, proposal_dist};
  return {theta, false, logpi0, delta_h, proposal_dist};
}

struct SghmcDivergenceError : std::runtime_error {
  Vector last_stable;
  SghmcDivergenceError(std::string msg, Vector state)
      : std::runtime_error(std::move(msg)), last_stable(std::move(state)) {}
};

/// SGHMC with constant friction and identity mass:
///   v <- (1 - friction) v + step_size * grad_hat(theta) + N(0, 2 friction step_size)
///   theta <- theta + v
/// No Metropolis correction. Retains every thin-th state counted from the end
/// of the trajectory, in chronological order (floor(steps / thin) states).
/// With batch_size >= N the gradient is exact and no batch indices are drawn.
inline std::vector<Vector> sghmc_run(const TargetModel& target, Vector theta,
                                     const SghmcConfig& cfg, Rng& rng) {
  cfg.validate();
  const Index n_data = target.is_bnn() ? target.data().size() : Index{0};
  const bool full_batch = !target.is_bnn() || cfg.batch_size >= n_data;
  const double noise_sd = std::sqrt(2.0 * cfg.friction * cfg.step_size);

  std::vector<Index> batch(full_batch ? 0 : static_cast<std::size_t>(cfg.batch_size));
  std::uniform_int_distribution<Index> pick(0, std::max<Index>(n_data - 1, 0));

  const int retained = cfg.steps / cfg.thin;
  const int first_kept = cfg.steps - retained * cfg.thin;  // keep steps s with s > first_kept, s ≡ 0 (mod thin) from end
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(retained));

  Vector v = Vector::Zero(theta.size());
  for (int s = 1; s <= cfg.steps; ++s) {
    Vector grad;
    if (full_batch) {
      grad = target.grad_log_posterior(theta);
    } else {
      for (auto& b : batch) b = pick(rng);
      grad = target.stochastic_grad(theta, batch);
    }
    v = (1.0 - cfg.friction) * v + cfg.step_size * grad +
        noise_sd * standard_normal_vector(theta.size(), rng);
    if (!all_finite(v))
      throw SghmcDivergenceError("sghmc_run: momentum diverged at step " + std::to_string(s),
                                 std::move(theta));
    Vector next = theta + v;
    if (!all_finite(next))
      throw SghmcDivergenceError("sghmc_run: state diverged at step " + std::to_string(s),
                                 std::move(theta));
    theta = std::move(next);
    if (s > first_kept && (s - first_kept) % cfg.thin == 0) out.push_back(theta);
  }
  return out;
}

/// Doubling search for an HMC step size with acceptance near `target_accept`.
/// Deterministic given the rng state.
inline double tune_step_size(const TargetModel& target, const Vector& theta0, int leapfrog_steps,
                             Rng& rng, double target_accept = 0.7, double initial = 0.1,
                             int probe_steps = 15, int max_rounds = 18) {
  double eps = initial;
  auto acceptance = [&](double e) {
    HmcConfig cfg{e, leapfrog_steps};
    Vector theta = theta0;
    int acc = 0;
    for (int i = 0; i < probe_steps; ++i) {
      auto res = hmc_step(target, theta, cfg, rng);
      acc += res.accepted;
      theta = std::move(res.theta);
    }
    return static_cast<double>(acc) / probe_steps;
  };

  double rate = acceptance(eps);
  if (rate >= target_accept) {
    // Grow until acceptance drops below the target, return the last good size.
    for (int r = 0; r < max_rounds; ++r) {
      const double next = eps * 2.0;
      const double next_rate = acceptance(next);
      if (next_rate < target_accept) break;
      eps = next;
      rate = next_rate;
    }
  } else {
    for (int r = 0; r < max_rounds && rate < target_accept; ++r) {
      eps *= 0.5;
      rate = acceptance(eps);
    }
  }
  return eps;
}

}  // namespace nipa
