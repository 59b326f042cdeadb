#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the distance computations and the
// hash projections. Scalar reference kernels are always available; wider
// variants are selected once at startup based on what the CPU supports
// (override with CHAC_SIMD=scalar|avx2).
namespace chac::simd {

enum class Variant { scalar, avx2 };

// Squared Euclidean distance between two length-n coordinate arrays.
double l2_sq(const double* a, const double* b, std::size_t n);

// Inner product of two length-n coordinate arrays.
double dot(const double* a, const double* b, std::size_t n);

// Reference implementations, independent of the dispatch table.
double l2_sq_scalar(const double* a, const double* b, std::size_t n);
double dot_scalar(const double* a, const double* b, std::size_t n);

Variant active_variant();
bool variant_available(Variant v);
// Switch the dispatch table at runtime; returns false (and leaves the table
// unchanged) if the requested variant is not available on this machine.
bool set_variant(Variant v);
const char* variant_name(Variant v);

}  // namespace chac::simd
