#pragma once

#include <cstddef>

namespace sagp::simd {

// Flat-array kernels behind the three hot loops: squared distances from one
// point to a set of points, exponential scaling of a covariance row, and the
// diagonal-Gaussian log-density reduction. Each has a scalar reference
// implementation and an AVX2+FMA variant; everything else in the library goes
// through Eigen and stays ISA-independent.
struct Ops {
    const char* name;

    // dst[k] = sum_l (centers[l*stride + k] - x[l])^2 for k in [0, m).
    // centers is column-major: dimension l occupies centers[l*stride ...].
    void (*sq_dist_point_to_set)(const double* centers, std::size_t m, std::size_t stride,
                                 const double* x, std::size_t d, double* dst);

    // dst[k] = inv_eta * exp(ln_rho * sq[k]); ln_rho <= 0, sq[k] >= 0.
    void (*exp_scale)(const double* sq, std::size_t m, double ln_rho, double inv_eta,
                      double* dst);

    // sum_i [ -0.5*log(2*pi*var[i]) - 0.5*resid[i]^2/var[i] ].
    // var entries must be positive normal doubles.
    double (*gaussian_diag_loglik)(const double* resid, const double* var, std::size_t n);
};

// Active implementation: honors SAGP_SIMD=scalar|avx2 (checked once), else
// picks the widest ISA the CPU supports.
const Ops& ops();

const Ops& ops_scalar();
// nullptr when the CPU lacks AVX2/FMA.
const Ops* ops_avx2();

}  // namespace sagp::simd
