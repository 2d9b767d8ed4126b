// Episodic memory pool: (theta, cached log-density, origin) tuples with
// coordinatewise standardization stats and exact nearest-neighbor queries
// under the standardized Euclidean distance.
#pragma once

#include "nipa/common.hpp"

namespace nipa {

enum class Origin : std::uint8_t { MB = 0, MF = 1 };

inline const char* to_string(Origin o) { return o == Origin::MB ? "MB" : "MF"; }

struct PoolEntry {
  Vector theta;
  double log_density;
  Origin origin;
};

/// Append-only pool. Mean and std are maintained incrementally (Welford) and
/// match a batch recomputation after every insert; std uses the population
/// convention and is floored at s_floor per coordinate.
class MemoryPool {
 public:
  explicit MemoryPool(Index dim, double s_floor = 1e-8)
      : dim_(dim), s_floor_(s_floor), mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)),
        std_(Vector::Constant(dim, s_floor)) {
    if (dim <= 0) throw std::invalid_argument("MemoryPool: dim must be positive");
    if (s_floor <= 0.0) throw std::invalid_argument("MemoryPool: s_floor must be positive");
  }

  Index dim() const { return dim_; }
  Index size() const { return static_cast<Index>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  double s_floor() const { return s_floor_; }

  const PoolEntry& entry(Index i) const { return entries_.at(static_cast<std::size_t>(i)); }
  const std::vector<PoolEntry>& entries() const { return entries_; }
  const Vector& mean() const { return mean_; }
  const Vector& stddev() const { return std_; }

  void insert(Vector theta, double log_density, Origin origin) {
    if (theta.size() != dim_)
      throw std::invalid_argument("MemoryPool::insert: theta has dim " +
                                  std::to_string(theta.size()) + ", pool expects " +
                                  std::to_string(dim_));
    if (!all_finite(theta) || !std::isfinite(log_density))
      throw std::invalid_argument("MemoryPool::insert: non-finite entry rejected");

    const double n = static_cast<double>(entries_.size() + 1);
    const Vector delta = theta - mean_;
    mean_ += delta / n;
    m2_ += delta.cwiseProduct(theta - mean_);
    std_ = (m2_ / n).cwiseSqrt().cwiseMax(s_floor_);
    entries_.push_back({std::move(theta), log_density, origin});
  }

  struct NearestResult {
    Index index;
    double d_star;
  };

  /// Minimizing entry under || (q - theta_i) / s ||_2; ties resolve to the
  /// lowest insertion index.
  NearestResult nearest(const Vector& query) const {
    if (entries_.empty()) throw std::logic_error("MemoryPool::nearest: empty pool");
    if (query.size() != dim_)
      throw std::invalid_argument("MemoryPool::nearest: query has dim " +
                                  std::to_string(query.size()) + ", pool expects " +
                                  std::to_string(dim_));
    Index best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < size(); ++i) {
      const double d2 =
          ((query - entries_[static_cast<std::size_t>(i)].theta).cwiseQuotient(std_)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    return {best, std::sqrt(best_d2)};
  }

  /// For every member, the standardized distance to its nearest other member.
  /// Used to derive distance-threshold quantiles.
  std::vector<double> nn_distances() const {
    const Index m = size();
    if (m < 2) throw std::logic_error("MemoryPool::nn_distances: need at least 2 entries");
    Matrix z(m, dim_);
    for (Index i = 0; i < m; ++i)
      z.row(i) = ((entries_[static_cast<std::size_t>(i)].theta - mean_).cwiseQuotient(std_))
                     .transpose();
    const Vector sq = z.rowwise().squaredNorm();
    const Matrix gram = z * z.transpose();
    std::vector<double> out(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < m; ++j) {
        if (i == j) continue;
        const double d2 = sq[i] + sq[j] - 2.0 * gram(i, j);
        best = std::min(best, std::max(d2, 0.0));
      }
      out[static_cast<std::size_t>(i)] = std::sqrt(best);
    }
    return out;
  }

 private:
  Index dim_;
  double s_floor_;
  std::vector<PoolEntry> entries_;
  Vector mean_;
  Vector m2_;  // running sum of squared deviations
  Vector std_;
};

}  // namespace nipa
