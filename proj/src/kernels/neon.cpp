#include <arm_neon.h>

#include <cmath>

#include "variants.hpp"

namespace exosolve::kernels {
namespace {

void dot_rows_neon(const double* rows, std::size_t count, std::size_t dim, const double* query,
                   double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    const double* row = rows + i * dim;
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 4 <= dim; k += 4) {
      acc0 = vfmaq_f64(acc0, vld1q_f64(row + k), vld1q_f64(query + k));
      acc1 = vfmaq_f64(acc1, vld1q_f64(row + k + 2), vld1q_f64(query + k + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; k < dim; ++k) acc += row[k] * query[k];
    out[i] = acc;
  }
}

void squared_distances_neon(const double* xs, const double* ys, const double* zs,
                            std::size_t count, Vec3 center, double* out) {
  const float64x2_t cx = vdupq_n_f64(center.x);
  const float64x2_t cy = vdupq_n_f64(center.y);
  const float64x2_t cz = vdupq_n_f64(center.z);
  std::size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(xs + i), cx);
    const float64x2_t dy = vsubq_f64(vld1q_f64(ys + i), cy);
    const float64x2_t dz = vsubq_f64(vld1q_f64(zs + i), cz);
    float64x2_t d2 = vmulq_f64(dx, dx);
    d2 = vfmaq_f64(d2, dy, dy);
    d2 = vfmaq_f64(d2, dz, dz);
    vst1q_f64(out + i, d2);
  }
  for (; i < count; ++i) {
    const double dx = xs[i] - center.x;
    const double dy = ys[i] - center.y;
    const double dz = zs[i] - center.z;
    out[i] = dx * dx + dy * dy + dz * dz;
  }
}

void direction_cosines_neon(const double* xs, const double* ys, const double* zs,
                            std::size_t count, Vec3 origin, Vec3 unit_dir, double* out) {
  const float64x2_t ox = vdupq_n_f64(origin.x);
  const float64x2_t oy = vdupq_n_f64(origin.y);
  const float64x2_t oz = vdupq_n_f64(origin.z);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(xs + i), ox);
    const float64x2_t dy = vsubq_f64(vld1q_f64(ys + i), oy);
    const float64x2_t dz = vsubq_f64(vld1q_f64(zs + i), oz);
    float64x2_t len2 = vmulq_f64(dx, dx);
    len2 = vfmaq_f64(len2, dy, dy);
    len2 = vfmaq_f64(len2, dz, dz);
    float64x2_t proj = vmulq_n_f64(dx, unit_dir.x);
    proj = vfmaq_n_f64(proj, dy, unit_dir.y);
    proj = vfmaq_n_f64(proj, dz, unit_dir.z);
    const float64x2_t len = vsqrtq_f64(len2);
    const uint64x2_t nonzero = vcgtq_f64(len, zero);
    const float64x2_t cosine = vdivq_f64(proj, vbslq_f64(nonzero, len, one));
    vst1q_f64(out + i, vbslq_f64(nonzero, cosine, zero));
  }
  for (; i < count; ++i) {
    const double dx = xs[i] - origin.x;
    const double dy = ys[i] - origin.y;
    const double dz = zs[i] - origin.z;
    const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    out[i] = len > 0.0 ? (dx * unit_dir.x + dy * unit_dir.y + dz * unit_dir.z) / len : 0.0;
  }
}

double triple_product_neon(const double* a, const double* b, const double* c, std::size_t count,
                           double* out) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= count; i += 2) {
    const float64x2_t p = vmulq_f64(vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)), vld1q_f64(c + i));
    vst1q_f64(out + i, p);
    acc = vaddq_f64(acc, p);
  }
  double sum = vaddvq_f64(acc);
  for (; i < count; ++i) {
    out[i] = a[i] * b[i] * c[i];
    sum += out[i];
  }
  return sum;
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{"neon", dot_rows_neon, squared_distances_neon,
                                 direction_cosines_neon, triple_product_neon};
  return table;
}

}  // namespace exosolve::kernels
