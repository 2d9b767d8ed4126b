// Log-posterior targets: Bayesian-NN regression (Gaussian likelihood),
// Bayesian-NN classification (Bernoulli logit), and low-dimensional analytic
// targets used for verification. Exact and minibatch-stochastic gradients.
//
// All log densities drop parameter-independent constants; only differences
// are ever consumed by acceptance ratios.
#pragma once

#include "nipa/net.hpp"

#include <atomic>
#include <memory>
#include <optional>
#include <span>

namespace nipa {

enum class TargetKind { BnnRegression, BnnClassification, AnalyticGaussian, AnalyticBanana };

enum class SplitTag { Train, Test };

struct Dataset {
  Matrix X;
  Vector y;
  bool classification = false;
  SplitTag tag = SplitTag::Train;

  Index size() const { return X.rows(); }

  void validate() const {
    if (X.rows() != y.size())
      throw std::invalid_argument("Dataset: X has " + std::to_string(X.rows()) +
                                  " rows but y has " + std::to_string(y.size()) + " entries");
    if (classification)
      for (Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0)
          throw std::invalid_argument("Dataset: classification label at row " +
                                      std::to_string(i) + " is " + std::to_string(y[i]) +
                                      ", expected 0 or 1");
  }
};

/// Counts full-data log-posterior and gradient evaluations. Shared between
/// copies of a TargetModel so instrumentation survives pass-by-value.
struct EvalCounter {
  std::atomic<std::uint64_t> log_posterior{0};
  std::atomic<std::uint64_t> gradient{0};
};

class TargetModel {
 public:
  static TargetModel bnn_regression(NetSpec spec, Dataset data, double noise_var,
                                    double prior_var = 1.0) {
    if (noise_var <= 0.0) throw std::invalid_argument("bnn_regression: noise_var must be positive");
    TargetModel t(TargetKind::BnnRegression, prior_var);
    spec.validate();
    data.validate();
    if (data.size() == 0) throw std::invalid_argument("bnn_regression: empty dataset");
    t.spec_ = std::move(spec);
    t.data_ = std::move(data);
    t.noise_var_ = noise_var;
    return t;
  }

  static TargetModel bnn_classification(NetSpec spec, Dataset data, double prior_var = 1.0) {
    TargetModel t(TargetKind::BnnClassification, prior_var);
    spec.validate();
    if (spec.output_dim() != 1)
      throw std::invalid_argument("bnn_classification: spec must end in a single logit");
    data.classification = true;
    data.validate();
    if (data.size() == 0) throw std::invalid_argument("bnn_classification: empty dataset");
    t.spec_ = std::move(spec);
    t.data_ = std::move(data);
    return t;
  }

  /// Standard normal in `dim` dimensions: log pi(theta) = -||theta||^2 / 2.
  static TargetModel analytic_gaussian(Index dim) {
    TargetModel t(TargetKind::AnalyticGaussian, 1.0);
    t.dim_ = dim;
    return t;
  }

  /// Rosenbrock-warped 2-d Gaussian: log pi = -t0^2/2 - (t1 - warp t0^2)^2/2.
  static TargetModel analytic_banana(double warp = 1.0) {
    TargetModel t(TargetKind::AnalyticBanana, 1.0);
    t.dim_ = 2;
    t.warp_ = warp;
    return t;
  }

  TargetKind kind() const { return kind_; }
  Index dim() const { return is_bnn() ? spec_.param_dim() : dim_; }
  double noise_var() const { return noise_var_; }
  double prior_var() const { return prior_var_; }
  const NetSpec& spec() const { return spec_; }
  const Dataset& data() const { return data_; }
  bool is_bnn() const {
    return kind_ == TargetKind::BnnRegression || kind_ == TargetKind::BnnClassification;
  }

  /// Test-only toggle: drop the likelihood term, leaving the Gaussian prior.
  void set_prior_only(bool v) { prior_only_ = v; }

  double log_posterior(const Vector& theta) const {
    counter_->log_posterior.fetch_add(1, std::memory_order_relaxed);
    return log_posterior_impl(theta);
  }

  Vector grad_log_posterior(const Vector& theta) const {
    counter_->gradient.fetch_add(1, std::memory_order_relaxed);
    return grad_impl(theta);
  }

  /// Likelihood gradient scaled by N/|batch| plus the full prior gradient.
  Vector stochastic_grad(const Vector& theta, std::span<const Index> batch) const {
    check_dim(theta);
    if (batch.empty()) throw std::invalid_argument("stochastic_grad: empty batch");
    if (!is_bnn() || prior_only_) {
      // No data subsampling applies; the exact gradient is the only gradient.
      return grad_impl(theta);
    }
    const Index n = data_.size();
    Matrix xb(static_cast<Index>(batch.size()), data_.X.cols());
    Matrix yb(static_cast<Index>(batch.size()), 1);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i] < 0 || batch[i] >= n)
        throw std::invalid_argument("stochastic_grad: batch index " + std::to_string(batch[i]) +
                                    " out of range [0," + std::to_string(n) + ")");
      xb.row(static_cast<Index>(i)) = data_.X.row(batch[i]);
      yb(static_cast<Index>(i), 0) = data_.y[batch[i]];
    }
    const LossTag tag = kind_ == TargetKind::BnnRegression ? LossTag::GaussianNll
                                                           : LossTag::BernoulliLogitNll;
    const auto res = loss_and_grad(spec_, theta, xb, yb, tag, noise_var_);
    const double scale = static_cast<double>(n) / static_cast<double>(batch.size());
    return -scale * res.grad - theta / prior_var_;
  }

  /// Forward pass of the underlying network (BNN kinds only).
  Matrix predict(const Matrix& X, const Vector& theta) const {
    if (!is_bnn()) throw std::logic_error("predict: not a BNN target");
    return forward(spec_, theta, X);
  }

  std::uint64_t exact_log_posterior_evals() const { return counter_->log_posterior.load(); }
  std::uint64_t exact_gradient_evals() const { return counter_->gradient.load(); }
  void reset_counters() const {
    counter_->log_posterior.store(0);
    counter_->gradient.store(0);
  }

 private:
  TargetModel(TargetKind kind, double prior_var)
      : kind_(kind), prior_var_(prior_var), counter_(std::make_shared<EvalCounter>()) {
    if (prior_var <= 0.0) throw std::invalid_argument("TargetModel: prior_var must be positive");
  }

  void check_dim(const Vector& theta) const {
    if (theta.size() != dim())
      throw std::invalid_argument("TargetModel: theta has dim " + std::to_string(theta.size()) +
                                  ", target expects " + std::to_string(dim()));
  }

  double log_prior(const Vector& theta) const { return -theta.squaredNorm() / (2.0 * prior_var_); }

  double log_posterior_impl(const Vector& theta) const {
    check_dim(theta);
    double lp = 0.0;
    switch (kind_) {
      case TargetKind::AnalyticGaussian:
        lp = -0.5 * theta.squaredNorm();
        break;
      case TargetKind::AnalyticBanana: {
        const double u = theta[0];
        const double v = theta[1] - warp_ * u * u;
        lp = -0.5 * (u * u + v * v);
        break;
      }
      case TargetKind::BnnRegression:
      case TargetKind::BnnClassification: {
        lp = log_prior(theta);
        if (!prior_only_) {
          const LossTag tag = kind_ == TargetKind::BnnRegression ? LossTag::GaussianNll
                                                                 : LossTag::BernoulliLogitNll;
          const auto res = loss_and_grad(spec_, theta, data_.X, data_.y, tag, noise_var_);
          lp -= res.loss;
        }
        break;
      }
    }
    if (!std::isfinite(lp))
      throw std::runtime_error("log_posterior: non-finite value " + std::to_string(lp) +
                               " at ||theta|| = " + std::to_string(theta.norm()));
    return lp;
  }

  Vector grad_impl(const Vector& theta) const {
    check_dim(theta);
    switch (kind_) {
      case TargetKind::AnalyticGaussian:
        return -theta;
      case TargetKind::AnalyticBanana: {
        const double u = theta[0];
        const double v = theta[1] - warp_ * u * u;
        Vector g(2);
        g[0] = -u + v * 2.0 * warp_ * u;
        g[1] = -v;
        return g;
      }
      case TargetKind::BnnRegression:
      case TargetKind::BnnClassification: {
        Vector g = -theta / prior_var_;
        if (!prior_only_) {
          const LossTag tag = kind_ == TargetKind::BnnRegression ? LossTag::GaussianNll
                                                                 : LossTag::BernoulliLogitNll;
          const auto res = loss_and_grad(spec_, theta, data_.X, data_.y, tag, noise_var_);
          g -= res.grad;
        }
        if (!all_finite(g))
          throw std::runtime_error("grad_log_posterior: non-finite gradient at ||theta|| = " +
                                   std::to_string(theta.norm()));
        return g;
      }
    }
    throw std::logic_error("grad_log_posterior: unknown target kind");
  }

  TargetKind kind_;
  NetSpec spec_;
  Dataset data_;
  double noise_var_ = 1.0;
  double prior_var_ = 1.0;
  double warp_ = 1.0;
  Index dim_ = 0;
  bool prior_only_ = false;
  std::shared_ptr<EvalCounter> counter_;
};

struct SyntheticRegression {
  NetSpec spec;
  Dataset train;
  Dataset test;
  Vector theta_star;
};

/// Two-hidden-layer ReLU regression benchmark: X ~ iid U(0,1), theta* ~ iid
/// U[-1,1], y = f(X; theta*) + N(0, noise_var). Split is first-rows train.
inline SyntheticRegression make_synthetic_regression(Index n, int d, int h1, int h2,
                                                     double noise_var, std::uint64_t seed,
                                                     double train_fraction = 0.9) {
  if (n < 2 || d <= 0 || h1 <= 0 || h2 <= 0)
    throw std::invalid_argument("make_synthetic_regression: sizes must be positive");
  if (noise_var < 0.0)
    throw std::invalid_argument("make_synthetic_regression: noise_var must be >= 0");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("make_synthetic_regression: train_fraction outside (0,1)");

  SyntheticRegression out;
  out.spec = make_mlp_spec({d, h1, h2, 1}, Activation::ReLU);

  Rng rng = make_rng(seed);
  Matrix X(n, d);
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = unif01(rng);

  std::uniform_real_distribution<double> unif11(-1.0, 1.0);
  out.theta_star = Vector::NullaryExpr(out.spec.param_dim(), [&](Index) { return unif11(rng); });

  Vector y = forward(out.spec, out.theta_star, X).col(0);
  if (noise_var > 0.0) {
    const double sd = std::sqrt(noise_var);
    for (Index i = 0; i < n; ++i) y[i] += sd * standard_normal(rng);
  }

  const Index n_train = std::clamp<Index>(static_cast<Index>(std::llround(train_fraction * n)),
                                          1, n - 1);
  out.train = Dataset{X.topRows(n_train), y.head(n_train), false, SplitTag::Train};
  out.test = Dataset{X.bottomRows(n - n_train), y.tail(n - n_train), false, SplitTag::Test};
  return out;
}

struct SyntheticClassification {
  NetSpec spec;
  Dataset train;
  Dataset test;
  Vector theta_star;
};

/// Per-block variances for theta*: one entry per weight/bias block in layer
/// order (W0, b0, W1, b1, ...). A single entry broadcasts to every block;
/// empty means weight variance 1/fan_in and bias variance 0.25.
inline SyntheticClassification make_synthetic_classification(Index n, int d, int h1, int h2,
                                                             std::vector<double> block_vars,
                                                             std::uint64_t seed,
                                                             double train_fraction = 0.9) {
  if (n < 2 || d <= 0 || h1 <= 0 || h2 <= 0)
    throw std::invalid_argument("make_synthetic_classification: sizes must be positive");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw std::invalid_argument("make_synthetic_classification: train_fraction outside (0,1)");

  SyntheticClassification out;
  out.spec = make_mlp_spec({d, h1, h2, 1}, Activation::ReLU);
  const auto offs = layer_offsets(out.spec);

  const std::size_t n_blocks = 2 * offs.size();
  if (block_vars.size() == 1) block_vars.assign(n_blocks, block_vars[0]);
  if (!block_vars.empty() && block_vars.size() != n_blocks)
    throw std::invalid_argument("make_synthetic_classification: need 1 or " +
                                std::to_string(n_blocks) + " block variances, got " +
                                std::to_string(block_vars.size()));
  for (double v : block_vars)
    if (v < 0.0)
      throw std::invalid_argument("make_synthetic_classification: block variance must be >= 0");

  Rng rng = make_rng(seed);
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = standard_normal(rng);

  out.theta_star = Vector::Zero(out.spec.param_dim());
  for (std::size_t l = 0; l < offs.size(); ++l) {
    const double wv = block_vars.empty() ? 1.0 / static_cast<double>(offs[l].fan_in)
                                         : block_vars[2 * l];
    const double bv = block_vars.empty() ? 0.25 : block_vars[2 * l + 1];
    const double wsd = std::sqrt(wv), bsd = std::sqrt(bv);
    for (Index i = 0; i < offs[l].fan_in * offs[l].fan_out; ++i)
      out.theta_star[offs[l].w_offset + i] = wsd * standard_normal(rng);
    for (Index i = 0; i < offs[l].fan_out; ++i)
      out.theta_star[offs[l].b_offset + i] = bsd * standard_normal(rng);
  }

  const Vector logits = forward(out.spec, out.theta_star, X).col(0);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = uniform01(rng) < sigmoid(logits[i]) ? 1.0 : 0.0;

  const Index n_train = std::clamp<Index>(static_cast<Index>(std::llround(train_fraction * n)),
                                          1, n - 1);
  out.train = Dataset{X.topRows(n_train), y.head(n_train), true, SplitTag::Train};
  out.test = Dataset{X.bottomRows(n - n_train), y.tail(n - n_train), true, SplitTag::Test};
  return out;
}

}  // namespace nipa
