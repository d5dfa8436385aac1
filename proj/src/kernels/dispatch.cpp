#include <cstdlib>
#include <stdexcept>
#include <string>

#include "variants.hpp"

namespace exosolve::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(EXOSOLVE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select_table() {
  const char* env = std::getenv("EXOSOLVE_SIMD");
  const std::string request = env ? env : "auto";
  if (request == "scalar") return scalar_table();
  const auto tables = available_tables();
  if (request == "auto") return *tables.back();
  for (const KernelTable* t : tables)
    if (t->name == request) return *t;
  throw std::runtime_error("EXOSOLVE_SIMD=" + request + " is not available on this machine");
}

}  // namespace

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> tables{&scalar_table()};
#if defined(EXOSOLVE_HAVE_AVX2)
  if (cpu_has_avx2()) tables.push_back(&avx2_table());
#endif
#if defined(EXOSOLVE_HAVE_NEON)
  tables.push_back(&neon_table());
#endif
  return tables;
}

const KernelTable& active_table() {
  static const KernelTable& table = select_table();
  return table;
}

void dot_rows(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) {
  if (query.size() != dim || rows.size() != out.size() * dim)
    throw std::invalid_argument("dot_rows: shape mismatch");
  active_table().dot_rows(rows.data(), out.size(), dim, query.data(), out.data());
}

void squared_distances(const PositionsView& pos, Vec3 center, std::span<double> out) {
  if (pos.ys.size() != pos.size() || pos.zs.size() != pos.size() || out.size() != pos.size())
    throw std::invalid_argument("squared_distances: shape mismatch");
  active_table().squared_distances(pos.xs.data(), pos.ys.data(), pos.zs.data(), out.size(), center,
                                   out.data());
}

void direction_cosines(const PositionsView& pos, Vec3 origin, Vec3 unit_dir, std::span<double> out) {
  if (pos.ys.size() != pos.size() || pos.zs.size() != pos.size() || out.size() != pos.size())
    throw std::invalid_argument("direction_cosines: shape mismatch");
  active_table().direction_cosines(pos.xs.data(), pos.ys.data(), pos.zs.data(), out.size(), origin,
                                   unit_dir, out.data());
}

double triple_product(std::span<const double> a, std::span<const double> b,
                      std::span<const double> c, std::span<double> out) {
  if (a.size() != out.size() || b.size() != out.size() || c.size() != out.size())
    throw std::invalid_argument("triple_product: shape mismatch");
  return active_table().triple_product(a.data(), b.data(), c.data(), out.size(), out.data());
}

}  // namespace exosolve::kernels
