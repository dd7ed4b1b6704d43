#pragma once

// Hot loops of the pipeline. Every kernel exists twice: `serial` is the
// reference, `omp` splits the outermost independent loop across threads.
// Each output element is produced by exactly one thread with the same
// accumulation order as the serial version, so both are bit-identical for any
// thread count.

#include <cstddef>
#include <cstdint>

namespace hsi::kernels {

/// Batched valid 3-D cross-correlation geometry.
/// input [batch, in_ch, d1, d2, d3]; weights [out_ch, k1, k2, k3, in_ch];
/// output [batch, out_ch, d1-k1+1, d2-k2+1, d3-k3+1].
struct Conv3dDims {
  std::size_t batch, in_ch, d1, d2, d3, out_ch, k1, k2, k3;

  std::size_t o1() const { return d1 - k1 + 1; }
  std::size_t o2() const { return d2 - k2 + 1; }
  std::size_t o3() const { return d3 - k3 + 1; }
  std::size_t in_volume() const { return d1 * d2 * d3; }
  std::size_t out_volume() const { return o1() * o2() * o3(); }
  std::size_t kernel_volume() const { return k1 * k2 * k3; }
};

struct DenseDims {
  std::size_t batch, n_in, n_out;
};

// Patch gather: centres are (p, q) pixel coordinates into a [width, height,
// bands] cube; out receives [count, size, size, bands], zero outside the cube.
struct PatchDims {
  std::size_t width, height, bands, size, count;
};

#define HSI_KERNEL_DECLS                                                                          \
  template <typename T>                                                                           \
  void conv3d_forward(const Conv3dDims& d, const T* in, const T* w, const T* bias, T* out);       \
  template <typename T>                                                                           \
  void conv3d_backward_input(const Conv3dDims& d, const T* w, const T* grad_out, T* grad_in);     \
  template <typename T>                                                                           \
  void conv3d_backward_weights(const Conv3dDims& d, const T* in, const T* grad_out, T* grad_w,    \
                               T* grad_b);                                                        \
  template <typename T>                                                                           \
  void dense_forward(const DenseDims& d, const T* in, const T* w, const T* bias, T* out);         \
  template <typename T>                                                                           \
  void dense_backward_input(const DenseDims& d, const T* w, const T* grad_out, T* grad_in);       \
  template <typename T>                                                                           \
  void dense_backward_weights(const DenseDims& d, const T* in, const T* grad_out, T* grad_w,      \
                              T* grad_b);                                                         \
  /* Upper and lower triangles of x^T x / divisor for row-major x [rows, cols]. */                \
  void scatter_matrix(std::size_t rows, std::size_t cols, const double* x, double divisor,        \
                      double* out);                                                               \
  void gather_patches(const PatchDims& d, const float* cube, const std::uint32_t* centres,        \
                      float* out);

namespace serial {
HSI_KERNEL_DECLS
}  // namespace serial

namespace omp {
HSI_KERNEL_DECLS
}  // namespace omp

#undef HSI_KERNEL_DECLS

/// Threads used by the omp kernels; 1 reproduces the serial path exactly.
void set_threads(int n);
int threads();

}  // namespace hsi::kernels
