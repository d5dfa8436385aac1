#include <cmath>

#include "variants.hpp"

namespace exosolve::kernels {
namespace {

void dot_rows_scalar(const double* rows, std::size_t count, std::size_t dim, const double* query,
                     double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    const double* row = rows + i * dim;
    double acc = 0.0;
    for (std::size_t k = 0; k < dim; ++k) acc += row[k] * query[k];
    out[i] = acc;
  }
}

void squared_distances_scalar(const double* xs, const double* ys, const double* zs,
                              std::size_t count, Vec3 center, double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = xs[i] - center.x;
    const double dy = ys[i] - center.y;
    const double dz = zs[i] - center.z;
    out[i] = dx * dx + dy * dy + dz * dz;
  }
}

void direction_cosines_scalar(const double* xs, const double* ys, const double* zs,
                              std::size_t count, Vec3 origin, Vec3 unit_dir, double* out) {
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = xs[i] - origin.x;
    const double dy = ys[i] - origin.y;
    const double dz = zs[i] - origin.z;
    const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
    out[i] = len > 0.0 ? (dx * unit_dir.x + dy * unit_dir.y + dz * unit_dir.z) / len : 0.0;
  }
}

double triple_product_scalar(const double* a, const double* b, const double* c, std::size_t count,
                             double* out) {
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = a[i] * b[i] * c[i];
    sum += out[i];
  }
  return sum;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", dot_rows_scalar, squared_distances_scalar,
                                 direction_cosines_scalar, triple_product_scalar};
  return table;
}

}  // namespace exosolve::kernels
