// Sampling diagnostics and predictive metrics: effective sample size with the
// initial-monotone-sequence truncation, posterior predictive intervals,
// empirical coverage, RMSE and expected calibration error.
#pragma once

#include "nipa/targets.hpp"

#include <optional>

namespace nipa {

struct EssDetail {
  double ess;
  bool degenerate;  // zero-variance chain
};

/// Effective sample size of a scalar chain: S / (1 + 2 sum rho_k) with the
/// initial positive, monotone-decreasing truncation of paired autocorrelation
/// sums. Clamped to (0, S]. A zero-variance chain is defined as ESS = 1.
inline EssDetail ess_detail(const Eigen::Ref<const Vector>& chain) {
  const Index n = chain.size();
  if (n < 10) throw std::invalid_argument("ess: need at least 10 samples, got " + std::to_string(n));
  const double mean = chain.mean();
  const Vector centered = chain.array() - mean;
  const double gamma0 = centered.squaredNorm() / static_cast<double>(n);
  if (gamma0 <= 0.0) return {1.0, true};

  auto gamma = [&](Index lag) {
    return centered.head(n - lag).dot(centered.tail(n - lag)) / static_cast<double>(n);
  };

  // Sum of paired autocovariances Gamma_m = gamma_{2m} + gamma_{2m+1}, kept
  // while positive and clipped to be non-increasing.
  double pair_sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (Index m = 0; 2 * m + 1 < n; ++m) {
    double g = gamma(2 * m) + gamma(2 * m + 1);
    if (g <= 0.0) break;
    g = std::min(g, prev);
    pair_sum += g;
    prev = g;
  }
  const double tau = std::max(2.0 * pair_sum / gamma0 - 1.0, 1e-12);
  const double raw = static_cast<double>(n) / tau;
  return {std::clamp(raw, std::numeric_limits<double>::min(), static_cast<double>(n)), false};
}

inline double ess(const Eigen::Ref<const Vector>& chain) { return ess_detail(chain).ess; }

struct EssSummary {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double wall_seconds = 0.0;
  double min_ess_per_sec = 0.0;
  std::optional<double> speedup_vs_baseline;
  Index degenerate_columns = 0;
};

/// Per-column ESS of an S x D sample matrix summarized by min/median/max,
/// plus minESS per second and the speedup against a baseline rate.
inline EssSummary ess_summary(const Matrix& samples, double wall_seconds,
                              std::optional<double> baseline_min_ess_per_sec = std::nullopt) {
  if (samples.cols() < 1) throw std::invalid_argument("ess_summary: no columns");
  std::vector<double> per_col(static_cast<std::size_t>(samples.cols()));
  EssSummary out;
  for (Index j = 0; j < samples.cols(); ++j) {
    const auto detail = ess_detail(samples.col(j));
    per_col[static_cast<std::size_t>(j)] = detail.ess;
    out.degenerate_columns += detail.degenerate;
  }
  std::sort(per_col.begin(), per_col.end());
  out.min = per_col.front();
  out.max = per_col.back();
  const std::size_t mid = per_col.size() / 2;
  out.median = per_col.size() % 2 == 1 ? per_col[mid] : 0.5 * (per_col[mid - 1] + per_col[mid]);
  out.wall_seconds = wall_seconds;
  out.min_ess_per_sec = wall_seconds > 0.0 ? out.min / wall_seconds
                                           : std::numeric_limits<double>::quiet_NaN();
  if (baseline_min_ess_per_sec)
    out.speedup_vs_baseline = out.min_ess_per_sec / *baseline_min_ess_per_sec;
  return out;
}

struct PredictiveInterval {
  double lower;
  double upper;
};

/// Empirical posterior predictive intervals for a BNN regression target:
/// per test point, forward every posterior sample, add observation noise,
/// and take the symmetric empirical quantiles at the requested level.
inline std::vector<PredictiveInterval> predictive_intervals(const TargetModel& target,
                                                            const Matrix& posterior_samples,
                                                            const Matrix& x_test, double level,
                                                            Rng& rng) {
  if (target.kind() != TargetKind::BnnRegression)
    throw std::invalid_argument("predictive_intervals: regression targets only");
  if (posterior_samples.rows() < 50)
    throw std::invalid_argument("predictive_intervals: need at least 50 posterior samples, got " +
                                std::to_string(posterior_samples.rows()));
  if (level <= 0.0 || level >= 1.0)
    throw std::invalid_argument("predictive_intervals: level outside (0,1)");

  const Index s = posterior_samples.rows();
  const Index n = x_test.rows();
  const double noise_sd = std::sqrt(target.noise_var());
  Matrix draws(s, n);
  for (Index i = 0; i < s; ++i) {
    const Vector mu = target.predict(x_test, posterior_samples.row(i).transpose()).col(0);
    for (Index j = 0; j < n; ++j) draws(i, j) = mu[j] + noise_sd * standard_normal(rng);
  }

  const double alpha = (1.0 - level) / 2.0;
  std::vector<PredictiveInterval> out(static_cast<std::size_t>(n));
  std::vector<double> col(static_cast<std::size_t>(s));
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < s; ++i) col[static_cast<std::size_t>(i)] = draws(i, j);
    out[static_cast<std::size_t>(j)] = {quantile(col, alpha), quantile(col, 1.0 - alpha)};
  }
  return out;
}

/// Fraction of targets covered by their interval.
inline double cp95(const std::vector<PredictiveInterval>& intervals, const Vector& y_test) {
  if (static_cast<Index>(intervals.size()) != y_test.size())
    throw std::invalid_argument("cp95: " + std::to_string(intervals.size()) + " intervals vs " +
                                std::to_string(y_test.size()) + " targets");
  if (intervals.empty()) throw std::invalid_argument("cp95: empty input");
  Index covered = 0;
  for (Index i = 0; i < y_test.size(); ++i) {
    const auto& iv = intervals[static_cast<std::size_t>(i)];
    covered += (iv.lower <= y_test[i] && y_test[i] <= iv.upper);
  }
  return static_cast<double>(covered) / static_cast<double>(y_test.size());
}

inline double rmse(const Vector& pred, const Vector& y) {
  if (pred.size() != y.size())
    throw std::invalid_argument("rmse: length mismatch " + std::to_string(pred.size()) + " vs " +
                                std::to_string(y.size()));
  if (pred.size() == 0) throw std::invalid_argument("rmse: empty input");
  return std::sqrt((pred - y).squaredNorm() / static_cast<double>(pred.size()));
}

/// Expected calibration error over equal-width confidence bins.
/// mean_probs rows are per-class posterior-mean probabilities summing to 1;
/// confidence is the max-class probability, prediction the arg max.
inline double ece(const Matrix& mean_probs, const std::vector<int>& labels, int bins) {
  const Index n = mean_probs.rows();
  if (n == 0) throw std::invalid_argument("ece: empty input");
  if (static_cast<Index>(labels.size()) != n)
    throw std::invalid_argument("ece: " + std::to_string(labels.size()) + " labels vs " +
                                std::to_string(n) + " probability rows");
  if (bins < 1) throw std::invalid_argument("ece: bins must be >= 1");
  if (mean_probs.cols() < 2) throw std::invalid_argument("ece: need at least 2 classes");

  for (Index i = 0; i < n; ++i) {
    if (mean_probs.row(i).minCoeff() < -1e-9 ||
        std::abs(mean_probs.row(i).sum() - 1.0) > 1e-6)
      throw std::invalid_argument("ece: row " + std::to_string(i) +
                                  " is not a probability vector");
    if (labels[static_cast<std::size_t>(i)] < 0 ||
        labels[static_cast<std::size_t>(i)] >= mean_probs.cols())
      throw std::invalid_argument("ece: label out of range at row " + std::to_string(i));
  }

  std::vector<Index> count(static_cast<std::size_t>(bins), 0);
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> acc_sum(static_cast<std::size_t>(bins), 0.0);
  for (Index i = 0; i < n; ++i) {
    Index pred;
    const double conf = mean_probs.row(i).maxCoeff(&pred);
    const auto b = static_cast<std::size_t>(
        std::min<Index>(static_cast<Index>(conf * bins), bins - 1));
    ++count[b];
    conf_sum[b] += conf;
    acc_sum[b] += (pred == labels[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
  }
  double e = 0.0;
  for (std::size_t b = 0; b < static_cast<std::size_t>(bins); ++b) {
    if (count[b] == 0) continue;
    const double w = static_cast<double>(count[b]) / static_cast<double>(n);
    e += w * std::abs(acc_sum[b] / count[b] - conf_sum[b] / count[b]);
  }
  return e;
}

/// Posterior-mean predictor for regression: mean over samples of f(x; theta).
inline Vector posterior_mean_prediction(const TargetModel& target, const Matrix& samples,
                                        const Matrix& x_test) {
  if (samples.rows() == 0) throw std::invalid_argument("posterior_mean_prediction: no samples");
  Vector acc = Vector::Zero(x_test.rows());
  for (Index i = 0; i < samples.rows(); ++i)
    acc += target.predict(x_test, samples.row(i).transpose()).col(0);
  return acc / static_cast<double>(samples.rows());
}

/// Posterior-mean class probabilities for binary classification, averaging
/// inverse-logit outputs over samples. Column 1 is P(y = 1).
inline Matrix posterior_mean_probs(const TargetModel& target, const Matrix& samples,
                                   const Matrix& x_test) {
  if (samples.rows() == 0) throw std::invalid_argument("posterior_mean_probs: no samples");
  Vector p1 = Vector::Zero(x_test.rows());
  for (Index i = 0; i < samples.rows(); ++i) {
    const Vector logits = target.predict(x_test, samples.row(i).transpose()).col(0);
    for (Index j = 0; j < logits.size(); ++j) p1[j] += sigmoid(logits[j]);
  }
  p1 /= static_cast<double>(samples.rows());
  Matrix probs(x_test.rows(), 2);
  probs.col(0) = Vector::Ones(x_test.rows()) - p1;
  probs.col(1) = p1;
  return probs;
}

}  // namespace nipa
