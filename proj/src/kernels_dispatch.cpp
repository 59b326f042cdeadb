#include "chac/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace chac::simd {

#if defined(CHAC_HAVE_AVX2)
double l2_sq_avx2(const double* a, const double* b, std::size_t n);
double dot_avx2(const double* a, const double* b, std::size_t n);
#endif

namespace {

using KernelFn = double (*)(const double*, const double*, std::size_t);

bool cpu_has_avx2() {
#if defined(CHAC_HAVE_AVX2) && defined(__x86_64__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct Dispatch {
    KernelFn l2_sq;
    KernelFn dot;
    Variant variant;
};

Dispatch make_dispatch(Variant v) {
#if defined(CHAC_HAVE_AVX2)
    if (v == Variant::avx2) {
        return {l2_sq_avx2, dot_avx2, Variant::avx2};
    }
#endif
    return {l2_sq_scalar, dot_scalar, Variant::scalar};
}

Dispatch initial_dispatch() {
    Variant v = cpu_has_avx2() ? Variant::avx2 : Variant::scalar;
    if (const char* env = std::getenv("CHAC_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) {
            v = Variant::scalar;
        } else if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) {
            v = Variant::avx2;
        }
    }
    return make_dispatch(v);
}

Dispatch g_dispatch = initial_dispatch();

}  // namespace

double l2_sq(const double* a, const double* b, std::size_t n) {
    return g_dispatch.l2_sq(a, b, n);
}

double dot(const double* a, const double* b, std::size_t n) {
    return g_dispatch.dot(a, b, n);
}

Variant active_variant() { return g_dispatch.variant; }

bool variant_available(Variant v) {
    return v == Variant::scalar || (v == Variant::avx2 && cpu_has_avx2());
}

bool set_variant(Variant v) {
    if (!variant_available(v)) {
        return false;
    }
    g_dispatch = make_dispatch(v);
    return true;
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::scalar: return "scalar";
        case Variant::avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace chac::simd
