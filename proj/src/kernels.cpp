// Runtime backend selection.  The default is the widest variant the cpu
// supports; CNSLAB_KERNELS=scalar|avx2 forces a backend (useful for
// debugging and for the equivalence tests).

#include <cstdlib>
#include <cstring>

#include "cns/kernels.hpp"

namespace cns::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_default() {
  if (const char* env = std::getenv("CNSLAB_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && supported(Backend::avx2))
      return Backend::avx2;
  }
  return supported(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

Backend& slot() {
  static Backend b = detect_default();
  return b;
}

}  // namespace

const char* name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

bool compiled(Backend b) {
  if (b == Backend::scalar) return true;
#if defined(CNS_HAVE_AVX2_TU)
  return b == Backend::avx2;
#else
  return false;
#endif
}

bool supported(Backend b) {
  if (b == Backend::scalar) return true;
  return compiled(b) && cpu_has_avx2();
}

Backend active() { return slot(); }

bool select(Backend b) {
  if (!supported(b)) return false;
  slot() = b;
  return true;
}

#if defined(CNS_HAVE_AVX2_TU)
#define CNS_DISPATCH(call) \
  return active() == Backend::avx2 ? avx2::call : ref::call
#else
#define CNS_DISPATCH(call) return ref::call
#endif

void axpby(double a, const double* x, double b, const double* y, double* out,
           std::size_t n) {
  CNS_DISPATCH(axpby(a, x, b, y, out, n));
}
void mul(const double* x, const double* y, double* out, std::size_t n) {
  CNS_DISPATCH(mul(x, y, out, n));
}
void mul_acc(const double* x, const double* y, double* acc, std::size_t n) {
  CNS_DISPATCH(mul_acc(x, y, acc, n));
}
void scale(double a, const double* x, double* out, std::size_t n) {
  CNS_DISPATCH(scale(a, x, out, n));
}
void cmul_real(std::complex<double>* z, const double* m, std::size_t n) {
  CNS_DISPATCH(cmul_real(z, m, n));
}
double sum(const double* x, std::size_t n) { CNS_DISPATCH(sum(x, n)); }
double dot(const double* x, const double* y, std::size_t n) {
  CNS_DISPATCH(dot(x, y, n));
}
double sum_sq(const double* x, std::size_t n) { CNS_DISPATCH(sum_sq(x, n)); }
double sum_cube(const double* x, std::size_t n) {
  CNS_DISPATCH(sum_cube(x, n));
}
double max_val(const double* x, std::size_t n) { CNS_DISPATCH(max_val(x, n)); }
double min_val(const double* x, std::size_t n) { CNS_DISPATCH(min_val(x, n)); }
double max_abs(const double* x, std::size_t n) { CNS_DISPATCH(max_abs(x, n)); }

#undef CNS_DISPATCH

}  // namespace cns::kernels
