#include "sagp/linalg.hpp"

#include <cmath>
#include <string>

#include "sagp/errors.hpp"

namespace sagp {

PsdFactor chol_jitter(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw invalid_input_error("chol_jitter: matrix not square");
    if (m.size() == 0) return PsdFactor{Eigen::MatrixXd(0, 0), 0.0};
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(scale, 1e-300))
        throw invalid_input_error("chol_jitter: matrix not symmetric to 1e-10 relative");
    if (scale == 0.0)  // exactly zero: factor is zero, nothing to perturb
        return PsdFactor{Eigen::MatrixXd::Zero(m.rows(), m.cols()), 0.0};

    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const double diag_mean = sym.diagonal().mean();
    double jitter = 0.0;
    double last_attempt = 0.0;
    for (;;) {
        Eigen::LLT<Eigen::MatrixXd> llt(
            jitter == 0.0
                ? sym
                : Eigen::MatrixXd(sym + jitter * Eigen::MatrixXd::Identity(m.rows(), m.cols())));
        if (llt.info() == Eigen::Success) return PsdFactor{llt.matrixL(), jitter};
        last_attempt = jitter;
        if (diag_mean <= 0.0) break;  // perturbation schedule needs a positive diagonal
        if (jitter == 0.0)
            jitter = 1e-10 * diag_mean;
        else
            jitter *= 10.0;
        if (jitter > 1e-4 * diag_mean * (1.0 + 1e-12)) break;
    }
    throw numerical_error("chol_jitter: factorization failed at maximum jitter " +
                              std::to_string(last_attempt),
                          last_attempt);
}

Eigen::VectorXd chol_solve(const PsdFactor& factor, const Eigen::VectorXd& rhs) {
    Eigen::VectorXd x = factor.lower.triangularView<Eigen::Lower>().solve(rhs);
    factor.lower.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
}

Eigen::MatrixXd chol_solve(const PsdFactor& factor, const Eigen::MatrixXd& rhs) {
    Eigen::MatrixXd x = factor.lower.triangularView<Eigen::Lower>().solve(rhs);
    factor.lower.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
}

double chol_log_det(const PsdFactor& factor) {
    return 2.0 * factor.lower.diagonal().array().log().sum();
}

GpPosterior full_gp_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const KernelParams& params, double sigma2_eps,
                              int dense_ceiling) {
    if (X.rows() != y.size())
        throw invalid_input_error("full_gp_posterior: X and y row counts differ");
    if (X.rows() > dense_ceiling)
        throw invalid_input_error("full_gp_posterior: n exceeds the dense ceiling");
    if (!(sigma2_eps >= 0.0))
        throw invalid_input_error("full_gp_posterior: negative noise variance");

    const Box domain = Box::unit(static_cast<int>(X.cols()));
    const Eigen::MatrixXd K = cov_matrix(X, X, params, domain);
    const auto n = X.rows();
    const PsdFactor noisy =
        chol_jitter(K + sigma2_eps * Eigen::MatrixXd::Identity(n, n));
    GpPosterior post;
    post.mean = K * chol_solve(noisy, y);
    Eigen::MatrixXd cov = K - K * chol_solve(noisy, K);
    post.cov = 0.5 * (cov + cov.transpose());
    return post;
}

GpPosterior full_gp_predict(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& X_star, const KernelParams& params,
                            double sigma2_eps, int dense_ceiling) {
    if (X.rows() != y.size())
        throw invalid_input_error("full_gp_predict: X and y row counts differ");
    if (X.rows() > dense_ceiling)
        throw invalid_input_error("full_gp_predict: n exceeds the dense ceiling");

    const Box domain = Box::unit(static_cast<int>(X.cols()));
    const Eigen::MatrixXd K = cov_matrix(X, X, params, domain);
    const Eigen::MatrixXd K_star = cov_matrix(X_star, X, params, domain);
    const Eigen::MatrixXd K_ss = cov_matrix(X_star, X_star, params, domain);
    const auto n = X.rows();
    const PsdFactor noisy =
        chol_jitter(K + sigma2_eps * Eigen::MatrixXd::Identity(n, n));
    GpPosterior post;
    post.mean = K_star * chol_solve(noisy, y);
    const Eigen::MatrixXd K_star_t = K_star.transpose();
    Eigen::MatrixXd cov = K_ss - K_star * chol_solve(noisy, K_star_t);
    post.cov = 0.5 * (cov + cov.transpose());
    return post;
}

}  // namespace sagp
