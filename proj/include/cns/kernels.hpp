// ============================================================================
//  kernels.hpp -- flat array kernels underneath field arithmetic + quadrature
//
//  Every grid operation in the solver reduces to one of these loops over
//  contiguous double (or interleaved complex) arrays.  Each kernel has a
//  scalar reference implementation (cns::kernels::ref) and, when the build
//  provides it, an AVX2+FMA variant (cns::kernels::avx2) compiled in its own
//  translation unit.  The unqualified entry points dispatch at runtime: the
//  backend is picked once (cpu detection, overridable with the environment
//  variable CNSLAB_KERNELS=scalar|avx2) and the two implementations are held
//  to agree within floating-point reassociation tolerance by the
//  equivalence tests.
// ============================================================================
#pragma once

#include <complex>
#include <cstddef>

namespace cns::kernels {

enum class Backend { scalar, avx2 };

const char* name(Backend b);
bool compiled(Backend b);   // variant present in this binary
bool supported(Backend b);  // compiled and runnable on this cpu
Backend active();
bool select(Backend b);     // returns false (and keeps current) if unsupported

// --- pointwise ---------------------------------------------------------
// out[i] = a*x[i] + b*y[i]
void axpby(double a, const double* x, double b, const double* y, double* out,
           std::size_t n);
// out[i] = x[i]*y[i]
void mul(const double* x, const double* y, double* out, std::size_t n);
// acc[i] += x[i]*y[i]
void mul_acc(const double* x, const double* y, double* acc, std::size_t n);
// out[i] = a*x[i]
void scale(double a, const double* x, double* out, std::size_t n);
// z[i] *= m[i], complex z against a real multiplier array
void cmul_real(std::complex<double>* z, const double* m, std::size_t n);

// --- reductions (n >= 1 required for min/max) --------------------------
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
double sum_cube(const double* x, std::size_t n);  // signed x^3
double max_val(const double* x, std::size_t n);
double min_val(const double* x, std::size_t n);
double max_abs(const double* x, std::size_t n);

namespace ref {
void axpby(double a, const double* x, double b, const double* y, double* out,
           std::size_t n);
void mul(const double* x, const double* y, double* out, std::size_t n);
void mul_acc(const double* x, const double* y, double* acc, std::size_t n);
void scale(double a, const double* x, double* out, std::size_t n);
void cmul_real(std::complex<double>* z, const double* m, std::size_t n);
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
double sum_cube(const double* x, std::size_t n);
double max_val(const double* x, std::size_t n);
double min_val(const double* x, std::size_t n);
double max_abs(const double* x, std::size_t n);
}  // namespace ref

#if defined(CNS_HAVE_AVX2_TU)
namespace avx2 {
void axpby(double a, const double* x, double b, const double* y, double* out,
           std::size_t n);
void mul(const double* x, const double* y, double* out, std::size_t n);
void mul_acc(const double* x, const double* y, double* acc, std::size_t n);
void scale(double a, const double* x, double* out, std::size_t n);
void cmul_real(std::complex<double>* z, const double* m, std::size_t n);
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
double sum_cube(const double* x, std::size_t n);
double max_val(const double* x, std::size_t n);
double min_val(const double* x, std::size_t n);
double max_abs(const double* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace cns::kernels
