#pragma once

#include "exosolve/kernels.hpp"

namespace exosolve::kernels {

#if defined(EXOSOLVE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

#if defined(EXOSOLVE_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace exosolve::kernels
