#include "nipa/pool.hpp"

#include <gtest/gtest.h>

#include <cstdio>

#include "nipa/serialize.hpp"
#include "testutil.hpp"

using namespace nipa;

namespace {

// Batch (two-pass) recomputation of the population mean/std with flooring.
void batch_stats(const std::vector<Vector>& thetas, double s_floor, Vector& mean, Vector& sd) {
  const auto n = static_cast<double>(thetas.size());
  mean = Vector::Zero(thetas[0].size());
  for (const auto& t : thetas) mean += t;
  mean /= n;
  Vector var = Vector::Zero(thetas[0].size());
  for (const auto& t : thetas) var += (t - mean).cwiseProduct(t - mean);
  var /= n;
  sd = var.cwiseSqrt().cwiseMax(s_floor);
}

// Exhaustive double-loop scan with explicit standardization of both points.
std::pair<Index, double> scan_oracle(const std::vector<Vector>& thetas, const Vector& mean,
                                     const Vector& sd, const Vector& query) {
  Index best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < query.size(); ++j) {
      const double a = (query[j] - mean[j]) / sd[j];
      const double b = (thetas[i][j] - mean[j]) / sd[j];
      acc += (a - b) * (a - b);
    }
    const double d = std::sqrt(acc);
    if (d < best_d) {
      best_d = d;
      best = static_cast<Index>(i);
    }
  }
  return {best, best_d};
}

}  // namespace

TEST(Pool, SingleEntryDegenerateStd) {
  MemoryPool pool(3);
  Vector theta(3);
  theta << 1.0, -2.0, 4.0;
  pool.insert(theta, -1.5, Origin::MB);
  EXPECT_TRUE(pool.mean() == theta);
  EXPECT_TRUE(pool.stddev() == Vector::Constant(3, pool.s_floor()));
}

TEST(Pool, TwoEntryHandArithmetic) {
  MemoryPool pool(1);
  pool.insert(Vector::Zero(1), 0.0, Origin::MB);
  pool.insert(Vector::Constant(1, 2.0), 0.0, Origin::MF);
  EXPECT_DOUBLE_EQ(pool.mean()[0], 1.0);
  EXPECT_DOUBLE_EQ(pool.stddev()[0], 1.0);  // population convention
}

TEST(Pool, IncrementalStatsMatchBatchRecomputation) {
  Rng rng = make_rng(81);
  MemoryPool pool(5);
  std::vector<Vector> thetas;
  for (int i = 0; i < 1000; ++i) {
    Vector t = 3.0 * standard_normal_vector(5, rng);
    t.array() += 10.0;
    thetas.push_back(t);
    pool.insert(t, standard_normal(rng), i % 2 ? Origin::MB : Origin::MF);
    if (i % 97 == 0 || i == 999) {
      Vector mean, sd;
      batch_stats(thetas, pool.s_floor(), mean, sd);
      EXPECT_LT((mean - pool.mean()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LT((sd - pool.stddev()).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Pool, RejectsNonFiniteEntries) {
  MemoryPool pool(2);
  Vector bad(2);
  bad << 1.0, std::numeric_limits<double>::infinity();
  EXPECT_THROW(pool.insert(bad, 0.0, Origin::MB), std::invalid_argument);
  EXPECT_THROW(pool.insert(Vector::Zero(2), std::numeric_limits<double>::quiet_NaN(), Origin::MB),
               std::invalid_argument);
  EXPECT_EQ(pool.size(), 0);
}

TEST(Nearest, ExactMemberHasZeroDistance) {
  Rng rng = make_rng(82);
  MemoryPool pool(4);
  std::vector<Vector> thetas;
  for (int i = 0; i < 20; ++i) {
    thetas.push_back(standard_normal_vector(4, rng));
    pool.insert(thetas.back(), 0.0, Origin::MB);
  }
  const auto res = pool.nearest(thetas[7]);
  EXPECT_EQ(res.index, 7);
  EXPECT_DOUBLE_EQ(res.d_star, 0.0);
}

TEST(Nearest, ZeroDistanceOnlyForExactMembers) {
  MemoryPool pool(2);
  Vector a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 1.0;
  pool.insert(a, 0.0, Origin::MB);
  pool.insert(b, 0.0, Origin::MB);
  Vector q(2);
  q << 0.0, 1e-7;  // differs in one coordinate
  EXPECT_GT(pool.nearest(q).d_star, 0.0);
}

TEST(Nearest, ProximityPreservedUnderStandardization) {
  MemoryPool pool(2);
  Vector a(2), b(2), q(2);
  a << 0.0, 0.0;
  b << 10.0, 0.0;
  q << 1.0, 0.0;
  pool.insert(a, 0.0, Origin::MB);
  pool.insert(b, 0.0, Origin::MF);
  EXPECT_EQ(pool.nearest(q).index, 0);
}

TEST(Nearest, MatchesLinearScanOracle) {
  Rng rng = make_rng(83);
  MemoryPool pool(6);
  std::vector<Vector> thetas;
  for (int i = 0; i < 300; ++i) {
    thetas.push_back(2.0 * standard_normal_vector(6, rng));
    pool.insert(thetas.back(), 0.0, Origin::MB);
  }
  for (int rep = 0; rep < 500; ++rep) {
    const Vector q = 2.5 * standard_normal_vector(6, rng);
    const auto got = pool.nearest(q);
    const auto [want_idx, want_d] = scan_oracle(thetas, pool.mean(), pool.stddev(), q);
    EXPECT_EQ(got.index, want_idx);
    EXPECT_NEAR(got.d_star, want_d, 1e-12);
  }
}

TEST(Nearest, TieBreaksToLowestIndex) {
  MemoryPool pool(1);
  pool.insert(Vector::Constant(1, 1.0), 0.0, Origin::MB);
  pool.insert(Vector::Constant(1, 3.0), 0.0, Origin::MF);
  pool.insert(Vector::Constant(1, 1.0), 0.0, Origin::MF);  // duplicate of entry 0
  const auto res = pool.nearest(Vector::Constant(1, 1.0));
  EXPECT_EQ(res.index, 0);
  // Equidistant case: query at 2.0 sits exactly between entries 0 and 1.
  const auto mid = pool.nearest(Vector::Constant(1, 2.0));
  EXPECT_EQ(mid.index, 0);
}

TEST(Nearest, SharedShiftLeavesDistancesUnchanged) {
  Rng rng = make_rng(84);
  const double shift = 7.3;
  MemoryPool pool(3), shifted(3);
  std::vector<Vector> thetas;
  for (int i = 0; i < 50; ++i) {
    const Vector t = standard_normal_vector(3, rng);
    thetas.push_back(t);
    pool.insert(t, 0.0, Origin::MB);
    shifted.insert(t.array() + shift, 0.0, Origin::MB);
  }
  for (int rep = 0; rep < 50; ++rep) {
    const Vector q = standard_normal_vector(3, rng);
    const auto a = pool.nearest(q);
    const auto b = shifted.nearest(Vector(q.array() + shift));
    EXPECT_EQ(a.index, b.index);
    EXPECT_NEAR(a.d_star, b.d_star, 1e-10);
  }
}

TEST(Nearest, EmptyPoolThrows) {
  MemoryPool pool(2);
  EXPECT_THROW(pool.nearest(Vector::Zero(2)), std::logic_error);
}

TEST(NnDistances, MatchesPairwiseOracle) {
  Rng rng = make_rng(85);
  MemoryPool pool(4);
  std::vector<Vector> thetas;
  for (int i = 0; i < 60; ++i) {
    thetas.push_back(standard_normal_vector(4, rng));
    pool.insert(thetas.back(), 0.0, Origin::MB);
  }
  const auto got = pool.nn_distances();
  ASSERT_EQ(got.size(), 60u);
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < thetas.size(); ++j) {
      if (i == j) continue;
      best = std::min(best,
                      ((thetas[i] - thetas[j]).cwiseQuotient(pool.stddev())).norm());
    }
    EXPECT_NEAR(got[i], best, 1e-9);
  }
}

TEST(PoolCheckpoint, ExactRoundtrip) {
  Rng rng = make_rng(86);
  MemoryPool pool(5);
  for (int i = 0; i < 40; ++i)
    pool.insert(standard_normal_vector(5, rng), standard_normal(rng),
                i % 3 ? Origin::MB : Origin::MF);

  const std::string path = ::testing::TempDir() + "pool_roundtrip.bin";
  io::save_pool(path, pool);
  const MemoryPool back = io::load_pool(path);
  std::remove(path.c_str());

  ASSERT_EQ(back.size(), pool.size());
  for (Index i = 0; i < pool.size(); ++i) {
    EXPECT_TRUE(back.entry(i).theta == pool.entry(i).theta);
    EXPECT_EQ(back.entry(i).log_density, pool.entry(i).log_density);
    EXPECT_EQ(back.entry(i).origin, pool.entry(i).origin);
  }
  EXPECT_TRUE(back.mean() == pool.mean());
  EXPECT_TRUE(back.stddev() == pool.stddev());
}
