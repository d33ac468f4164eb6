#pragma once

#include <Eigen/Dense>

#include "sagp/geometry.hpp"

namespace sagp {

// Isotropic Gaussian kernel K(x,x') = (1/eta) * rho^(||x-x'||^2), supported
// inside a box and extended by zero outside it. rho enters only through its
// logarithm so bases down to 1e-50 stay well-behaved.
struct KernelParams {
    KernelParams(double rho, double eta);

    double rho;
    double eta;
    double ln_rho;
};

// Single-entry evaluation; the scalar reference the vectorized paths are
// tested against. Throws invalid_input_error on non-finite coordinates or
// dimension mismatch.
double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                   const KernelParams& params, const Box& support);

// |a| x |b| covariance block; rows of a and b are points. Entry (i,k) equals
// kernel_eval(a_i, b_k). Uses the dispatched flat-array kernels row by row.
Eigen::MatrixXd cov_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const KernelParams& params, const Box& support);

// One covariance row k(x, pts) written into out (resized to pts.rows()).
// Allocation-free when out already has the right size; used in inner loops.
void cross_cov_row(const Eigen::VectorXd& x, const Eigen::MatrixXd& pts,
                   const KernelParams& params, const Box& support,
                   Eigen::VectorXd& out);

}  // namespace sagp
