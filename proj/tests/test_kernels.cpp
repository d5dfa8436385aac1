#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "exosolve/kernels.hpp"
#include "exosolve/rng.hpp"

using namespace exosolve;
using namespace exosolve::kernels;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Lengths that exercise empty input, partial vectors and vector tails.
const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 114, 257};

}  // namespace

TEST(Kernels, ScalarTableComesFirst) {
  const auto tables = available_tables();
  ASSERT_FALSE(tables.empty());
  EXPECT_EQ(tables.front(), &scalar_table());
  EXPECT_FALSE(active_table().name.empty());
}

TEST(Kernels, ScalarDotRowsMatchesDirectSum) {
  Rng rng(1);
  const std::size_t count = 9, dim = 13;
  const auto rows = random_vector(rng, count * dim);
  const auto q = random_vector(rng, dim);
  std::vector<double> out(count);
  scalar_table().dot_rows(rows.data(), count, dim, q.data(), out.data());
  for (std::size_t i = 0; i < count; ++i) {
    double expect = 0.0;
    for (std::size_t k = 0; k < dim; ++k) expect += rows[i * dim + k] * q[k];
    EXPECT_NEAR(out[i], expect, 1e-12);
  }
}

TEST(Kernels, VariantsAgreeWithScalarOnDotRows) {
  Rng rng(2);
  for (const KernelTable* t : available_tables()) {
    for (std::size_t dim : kSizes) {
      if (dim == 0) continue;
      const std::size_t count = 11;
      const auto rows = random_vector(rng, count * dim);
      const auto q = random_vector(rng, dim);
      std::vector<double> ref(count), got(count);
      scalar_table().dot_rows(rows.data(), count, dim, q.data(), ref.data());
      t->dot_rows(rows.data(), count, dim, q.data(), got.data());
      for (std::size_t i = 0; i < count; ++i)
        EXPECT_NEAR(got[i], ref[i], 1e-12 * (1.0 + std::abs(ref[i]))) << t->name << " dim " << dim;
    }
  }
}

TEST(Kernels, VariantsAgreeWithScalarOnGeometry) {
  Rng rng(3);
  const Vec3 center{0.3, -1.2, 0.8};
  const Vec3 origin{1.0, 2.0, 1.5};
  Vec3 dir{0.6, -0.3, -0.2};
  dir = dir * (1.0 / dir.norm());
  for (const KernelTable* t : available_tables()) {
    for (std::size_t n : kSizes) {
      auto xs = random_vector(rng, n), ys = random_vector(rng, n), zs = random_vector(rng, n);
      if (n > 2) {  // one point exactly at the origin
        xs[1] = origin.x;
        ys[1] = origin.y;
        zs[1] = origin.z;
      }
      std::vector<double> ref(n), got(n);
      scalar_table().squared_distances(xs.data(), ys.data(), zs.data(), n, center, ref.data());
      t->squared_distances(xs.data(), ys.data(), zs.data(), n, center, got.data());
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], ref[i], 1e-12) << t->name;

      scalar_table().direction_cosines(xs.data(), ys.data(), zs.data(), n, origin, dir, ref.data());
      t->direction_cosines(xs.data(), ys.data(), zs.data(), n, origin, dir, got.data());
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], ref[i], 1e-12) << t->name;
      if (n > 2) EXPECT_EQ(got[1], 0.0) << t->name;
    }
  }
}

TEST(Kernels, VariantsAgreeWithScalarOnTripleProduct) {
  Rng rng(4);
  for (const KernelTable* t : available_tables()) {
    for (std::size_t n : kSizes) {
      const auto a = random_vector(rng, n, 0.0, 1.0), b = random_vector(rng, n, 0.0, 1.0),
                 c = random_vector(rng, n, 0.0, 1.0);
      std::vector<double> ref(n), got(n);
      const double sref = scalar_table().triple_product(a.data(), b.data(), c.data(), n, ref.data());
      const double sgot = t->triple_product(a.data(), b.data(), c.data(), n, got.data());
      EXPECT_NEAR(sgot, sref, 1e-12) << t->name;
      for (std::size_t i = 0; i < n; ++i) EXPECT_DOUBLE_EQ(got[i], a[i] * b[i] * c[i]) << t->name;
    }
  }
}

TEST(Kernels, DirectionCosinesMatchGeometry) {
  const std::vector<double> xs{1.0, 0.0, -1.0}, ys{0.0, 1.0, 0.0}, zs{0.0, 0.0, 0.0};
  std::vector<double> out(3);
  direction_cosines({xs, ys, zs}, {0, 0, 0}, {1, 0, 0}, out);
  EXPECT_NEAR(out[0], 1.0, 1e-15);
  EXPECT_NEAR(out[1], 0.0, 1e-15);
  EXPECT_NEAR(out[2], -1.0, 1e-15);
}

TEST(Kernels, SpanWrappersRejectShapeMismatch) {
  std::vector<double> rows(6), q(3), out(3);
  EXPECT_THROW(dot_rows(rows, 3, q, out), std::invalid_argument);
  std::vector<double> a(2), b(3), c(2), o(2);
  EXPECT_THROW(triple_product(a, b, c, o), std::invalid_argument);
  std::vector<double> xs(2), ys(2), zs(1), d(2);
  EXPECT_THROW(squared_distances({xs, ys, zs}, {}, d), std::invalid_argument);
}
