#pragma once

#include <cstddef>

#include "hq/core.hpp"

namespace hq::simd {

enum class Mode { Auto, Scalar };

// Forces the scalar path (tests and benchmarks); Auto picks AVX2 when the CPU has it.
void set_mode(Mode m);
bool avx2_available();
bool avx2_active();

// sum_k (ar + i ai)_k (br + i bi)_k over split real/imaginary arrays
cplx cdot_split(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n);
// sum_k a_k b_k
double dot(const double* a, const double* b, std::size_t n);

cplx cdot_split_scalar(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n);
double dot_scalar(const double* a, const double* b, std::size_t n);
// only call when avx2_available()
cplx cdot_split_avx2(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n);
double dot_avx2(const double* a, const double* b, std::size_t n);

}  // namespace hq::simd
