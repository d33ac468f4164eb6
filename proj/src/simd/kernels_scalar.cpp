#include <cmath>
#include <numbers>

#include "sagp/simd/ops.hpp"

namespace sagp::simd {
namespace {

void sq_dist_scalar(const double* centers, std::size_t m, std::size_t stride,
                    const double* x, std::size_t d, double* dst) {
    for (std::size_t k = 0; k < m; ++k) {
        double acc = 0.0;
        for (std::size_t l = 0; l < d; ++l) {
            const double diff = centers[l * stride + k] - x[l];
            acc += diff * diff;
        }
        dst[k] = acc;
    }
}

void exp_scale_scalar(const double* sq, std::size_t m, double ln_rho, double inv_eta,
                      double* dst) {
    for (std::size_t k = 0; k < m; ++k) dst[k] = inv_eta * std::exp(ln_rho * sq[k]);
}

double loglik_scalar(const double* resid, const double* var, std::size_t n) {
    constexpr double ln_two_pi = 1.8378770664093454836;  // log(2*pi)
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += -0.5 * (ln_two_pi + std::log(var[i])) - 0.5 * resid[i] * resid[i] / var[i];
    return acc;
}

}  // namespace

const Ops& ops_scalar() {
    static const Ops table{"scalar", &sq_dist_scalar, &exp_scale_scalar, &loglik_scalar};
    return table;
}

}  // namespace sagp::simd
