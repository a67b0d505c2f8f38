#include "tvinr/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvinr::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(TVINR_BUILD_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Backend* pick_default() {
#ifdef TVINR_BUILD_AVX2
  if (cpu_has_avx2()) return &avx2_backend();
#endif
  return &scalar_backend();
}

const Backend* lookup(const char* name) {
  if (std::strcmp(name, "scalar") == 0) return &scalar_backend();
#ifdef TVINR_BUILD_AVX2
  if (std::strcmp(name, "avx2") == 0 && cpu_has_avx2()) return &avx2_backend();
#endif
  return nullptr;
}

const Backend*& active_slot() {
  static const Backend* active = [] {
    if (const char* env = std::getenv("TVINR_KERNEL")) {
      if (const Backend* b = lookup(env)) return b;
      // Unknown or unsupported request falls back to auto selection.
    }
    return pick_default();
  }();
  return active;
}

}  // namespace

const Backend& backend() { return *active_slot(); }

void set_backend(const char* name) {
  const Backend* b = lookup(name);
  if (!b) throw std::runtime_error("kernel backend unavailable: " + std::string(name));
  active_slot() = b;
}

int available_backends(const Backend** out, int cap) {
  int n = 0;
  if (n < cap) out[n] = &scalar_backend();
  ++n;
#ifdef TVINR_BUILD_AVX2
  if (cpu_has_avx2()) {
    if (n < cap) out[n] = &avx2_backend();
    ++n;
  }
#endif
  return n;
}

void gemm_nn(const double* a, std::size_t ar, std::size_t ac,
             const double* b, std::size_t bc, double* c, bool accumulate) {
  const Backend& k = backend();
  if (!accumulate) std::memset(c, 0, ar * bc * sizeof(double));
  for (std::size_t i = 0; i < ar; ++i) {
    double* crow = c + i * bc;
    const double* arow = a + i * ac;
    for (std::size_t p = 0; p < ac; ++p) {
      const double aip = arow[p];
      if (aip != 0.0) k.axpy(bc, aip, b + p * bc, crow);
    }
  }
}

void gemm_tn(const double* a, std::size_t ar, std::size_t ac,
             const double* b, std::size_t bc, double* c, bool accumulate) {
  const Backend& k = backend();
  if (!accumulate) std::memset(c, 0, ac * bc * sizeof(double));
  for (std::size_t p = 0; p < ar; ++p) {
    const double* arow = a + p * ac;
    const double* brow = b + p * bc;
    for (std::size_t i = 0; i < ac; ++i) {
      const double v = arow[i];
      if (v != 0.0) k.axpy(bc, v, brow, c + i * bc);
    }
  }
}

void gemm_nt(const double* a, std::size_t ar, std::size_t ac,
             const double* b, std::size_t br, double* c, bool accumulate) {
  // Materialize B^T so the accumulation order matches gemm_nn exactly; keeps
  // scalar and SIMD paths bit-identical at O(br*ac) extra copies.
  std::vector<double> bt(ac * br);
  for (std::size_t i = 0; i < br; ++i)
    for (std::size_t j = 0; j < ac; ++j) bt[j * br + i] = b[i * ac + j];
  gemm_nn(a, ar, ac, bt.data(), br, c, accumulate);
}

}  // namespace tvinr::kernels
