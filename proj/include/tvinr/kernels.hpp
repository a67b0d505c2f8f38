#pragma once

#include <cstddef>

// Data-parallel inner loops used by the tensor engine. Every kernel exists as
// a scalar reference implementation and, where the target supports it, a SIMD
// variant. The active backend is picked once at startup (overridable with the
// TVINR_KERNEL environment variable or set_backend()).
//
// Contract: for axpy/add/sub/mul/scale the scalar and SIMD variants are
// bit-identical (same per-element operation order, no FMA). dot/sum accumulate
// in lane-parallel order and may differ from scalar in the last ulps; nothing
// on the model's forward/backward path relies on them.

namespace tvinr::kernels {

struct Backend {
  const char* name;
  void (*axpy)(std::size_t n, double a, const double* x, double* y);   // y += a*x
  void (*add)(std::size_t n, const double* x, const double* y, double* out);
  void (*sub)(std::size_t n, const double* x, const double* y, double* out);
  void (*mul)(std::size_t n, const double* x, const double* y, double* out);
  void (*scale)(std::size_t n, double a, const double* x, double* out);
  double (*dot)(std::size_t n, const double* x, const double* y);
  double (*sum)(std::size_t n, const double* x);
};

const Backend& scalar_backend();
#ifdef TVINR_BUILD_AVX2
const Backend& avx2_backend();
#endif

/// Currently active backend.
const Backend& backend();

/// Force a backend by name ("scalar", "avx2"). Throws if unavailable.
void set_backend(const char* name);

/// Names of all backends usable on this machine.
int available_backends(const Backend** out, int cap);

// GEMM entry points built on the kernel set above. Row-major, contiguous.
// C is ar×bc (or the transposed analogue); accumulate=false overwrites C.

/// C = A(ar×ac) * B(ac×bc)
void gemm_nn(const double* a, std::size_t ar, std::size_t ac,
             const double* b, std::size_t bc, double* c, bool accumulate);

/// C = A(ar×ac)^T * B(ar×bc)   (result ac×bc)
void gemm_tn(const double* a, std::size_t ar, std::size_t ac,
             const double* b, std::size_t bc, double* c, bool accumulate);

/// C = A(ar×ac) * B(br×ac)^T   (result ar×br)
void gemm_nt(const double* a, std::size_t ar, std::size_t ac,
             const double* b, std::size_t br, double* c, bool accumulate);

}  // namespace tvinr::kernels
