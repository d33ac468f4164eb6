#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "sagp/simd/ops.hpp"

namespace sagp::simd {
namespace {

const Ops& pick() {
    const bool cpu_ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    if (const char* req = std::getenv("SAGP_SIMD")) {
        if (std::strcmp(req, "scalar") == 0) return ops_scalar();
        if (std::strcmp(req, "avx2") == 0) {
            if (cpu_ok) return *ops_avx2();
            std::fprintf(stderr, "sagp: SAGP_SIMD=avx2 requested but CPU lacks AVX2/FMA; using scalar\n");
            return ops_scalar();
        }
        std::fprintf(stderr, "sagp: unknown SAGP_SIMD value '%s' (want scalar|avx2); using default\n", req);
    }
    return cpu_ok ? *ops_avx2() : ops_scalar();
}

}  // namespace

const Ops& ops() {
    static const Ops& chosen = pick();
    return chosen;
}

}  // namespace sagp::simd
