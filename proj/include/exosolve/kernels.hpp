#pragma once

// Data-parallel inner loops used by the estimators.
//
// Every kernel has a scalar reference implementation. Vector variants (AVX2+FMA
// on x86-64, NEON on aarch64) are compiled when the toolchain supports them and
// selected at runtime. Variants agree with the scalar reference to within a few
// ulps; summation order differs, so results are not bit-identical across
// variants. Set EXOSOLVE_SIMD=scalar to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "exosolve/vec3.hpp"

namespace exosolve::kernels {

/// Structure-of-arrays view of object positions.
struct PositionsView {
  std::span<const double> xs;
  std::span<const double> ys;
  std::span<const double> zs;

  std::size_t size() const { return xs.size(); }
};

struct KernelTable {
  std::string_view name;
  // out[i] = <rows[i*dim .. i*dim+dim), query>
  void (*dot_rows)(const double* rows, std::size_t count, std::size_t dim, const double* query,
                   double* out);
  // out[i] = |p_i - center|^2
  void (*squared_distances)(const double* xs, const double* ys, const double* zs, std::size_t count,
                            Vec3 center, double* out);
  // out[i] = cos of the angle between (p_i - origin) and unit_dir; 0 when p_i == origin
  void (*direction_cosines)(const double* xs, const double* ys, const double* zs, std::size_t count,
                            Vec3 origin, Vec3 unit_dir, double* out);
  // out[i] = a[i]*b[i]*c[i]; returns the sum of out
  double (*triple_product)(const double* a, const double* b, const double* c, std::size_t count,
                           double* out);
};

const KernelTable& scalar_table();

/// Every variant usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// The variant chosen for this process (first call decides; thread-safe).
const KernelTable& active_table();

void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out);
void squared_distances(const PositionsView& pos, Vec3 center, std::span<double> out);
void direction_cosines(const PositionsView& pos, Vec3 origin, Vec3 unit_dir, std::span<double> out);
double triple_product(std::span<const double> a, std::span<const double> b,
                      std::span<const double> c, std::span<double> out);

}  // namespace exosolve::kernels
