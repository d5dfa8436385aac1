#include <immintrin.h>

#include <cmath>

#include "variants.hpp"

namespace exosolve::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void dot_rows_avx2(const double* rows, std::size_t count, std::size_t dim, const double* query,
                   double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    const double* row = rows + i * dim;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= dim; k += 8) {
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(query + k), acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(row + k + 4), _mm256_loadu_pd(query + k + 4), acc1);
    }
    if (k + 4 <= dim) {
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + k), _mm256_loadu_pd(query + k), acc0);
      k += 4;
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < dim; ++k) acc += row[k] * query[k];
    out[i] = acc;
  }
}

void squared_distances_avx2(const double* xs, const double* ys, const double* zs,
                            std::size_t count, Vec3 center, double* out) {
  const __m256d cx = _mm256_set1_pd(center.x);
  const __m256d cy = _mm256_set1_pd(center.y);
  const __m256d cz = _mm256_set1_pd(center.z);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), cx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), cy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), cz);
    __m256d d2 = _mm256_mul_pd(dx, dx);
    d2 = _mm256_fmadd_pd(dy, dy, d2);
    d2 = _mm256_fmadd_pd(dz, dz, d2);
    _mm256_storeu_pd(out + i, d2);
  }
  for (; i < count; ++i) {
    const double dx = xs[i] - center.x;
    const double dy = ys[i] - center.y;
    const double dz = zs[i] - center.z;
    out[i] = dx * dx + dy * dy + dz * dz;
  }
}

void direction_cosines_avx2(const double* xs, const double* ys, const double* zs,
                            std::size_t count, Vec3 origin, Vec3 unit_dir, double* out) {
  const __m256d ox = _mm256_set1_pd(origin.x);
  const __m256d oy = _mm256_set1_pd(origin.y);
  const __m256d oz = _mm256_set1_pd(origin.z);
  const __m256d ux = _mm256_set1_pd(unit_dir.x);
  const __m256d uy = _mm256_set1_pd(unit_dir.y);
  const __m256d uz = _mm256_set1_pd(unit_dir.z);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), ox);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), oy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), oz);
    __m256d len2 = _mm256_mul_pd(dx, dx);
    len2 = _mm256_fmadd_pd(dy, dy, len2);
    len2 = _mm256_fmadd_pd(dz, dz, len2);
    __m256d proj = _mm256_mul_pd(dx, ux);
    proj = _mm256_fmadd_pd(dy, uy, proj);
    proj = _mm256_fmadd_pd(dz, uz, proj);
    const __m256d len = _mm256_sqrt_pd(len2);
    const __m256d nonzero = _mm256_cmp_pd(len, zero, _CMP_GT_OQ);
    // Coincident points would divide by zero; blend them to 0.
    const __m256d cosine = _mm256_div_pd(proj, _mm256_blendv_pd(_mm256_set1_pd(1.0), len, nonzero));
    _mm256_storeu_pd(out + i, _mm256_and_pd(cosine, nonzero));
  }
  for (; i < count; ++i) {
    const double dx = xs[i] - origin.x;
    const double dy = ys[i] - origin.y;
    const double dz = zs[i] - origin.z;
    const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    out[i] = len > 0.0 ? (dx * unit_dir.x + dy * unit_dir.y + dz * unit_dir.z) / len : 0.0;
  }
}

double triple_product_avx2(const double* a, const double* b, const double* c, std::size_t count,
                           double* out) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d p =
        _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)),
                      _mm256_loadu_pd(c + i));
    _mm256_storeu_pd(out + i, p);
    acc = _mm256_add_pd(acc, p);
  }
  double sum = hsum(acc);
  for (; i < count; ++i) {
    out[i] = a[i] * b[i] * c[i];
    sum += out[i];
  }
  return sum;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", dot_rows_avx2, squared_distances_avx2,
                                 direction_cosines_avx2, triple_product_avx2};
  return table;
}

}  // namespace exosolve::kernels
