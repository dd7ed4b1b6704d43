#include <cstddef>

#include "hsi/kernels.hpp"

#define HSI_PARALLEL_FOR

namespace hsi::kernels::serial {
#include "kernels_body.inc"
}  // namespace hsi::kernels::serial
