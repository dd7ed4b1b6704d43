#include <omp.h>

#include <algorithm>
#include <cstddef>

#include "hsi/kernels.hpp"

#define HSI_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")

namespace hsi::kernels {

void set_threads(int n) { omp_set_num_threads(std::max(1, n)); }
int threads() { return omp_get_max_threads(); }

namespace omp {
#include "kernels_body.inc"
}  // namespace omp

}  // namespace hsi::kernels
