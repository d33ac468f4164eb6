#pragma once

#include <Eigen/Dense>

#include "sagp/kernel.hpp"

namespace sagp {

// Cholesky factor of a PSD matrix after diagonal perturbation.
struct PsdFactor {
    Eigen::MatrixXd lower;
    double jitter_used = 0.0;
};

// Factor a symmetric matrix, escalating the diagonal perturbation from
// 1e-10*mean(diag) by factors of 10 up to 1e-4*mean(diag) (after first
// trying no perturbation at all). The all-zero matrix factors to zero.
// Throws numerical_error (carrying the final attempted jitter) when the
// ceiling is exceeded, invalid_input_error when the input is not symmetric
// to 1e-10 relative.
PsdFactor chol_jitter(const Eigen::MatrixXd& m);

// Solve (L L^T) x = rhs.
Eigen::VectorXd chol_solve(const PsdFactor& factor, const Eigen::VectorXd& rhs);
Eigen::MatrixXd chol_solve(const PsdFactor& factor, const Eigen::MatrixXd& rhs);

// log det(L L^T) = 2 * sum(log diag L).
double chol_log_det(const PsdFactor& factor);

struct GpPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Dense GP posterior of f at the training inputs: the exact (non-sparse)
// answer, used as the oracle the sparse machinery is tested against and as
// a small-n baseline. Kernel support defaults to the unit cube.
GpPosterior full_gp_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const KernelParams& params, double sigma2_eps,
                              int dense_ceiling = 500);

// Same posterior evaluated at new locations: mean and covariance of f(X_star)
// given y. Used by tests and the simulation-study baseline.
GpPosterior full_gp_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& X_star, const KernelParams& params,
                            double sigma2_eps, int dense_ceiling = 500);

}  // namespace sagp
