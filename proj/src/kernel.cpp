#include "sagp/kernel.hpp"

#include <cmath>
#include <vector>

#include "sagp/errors.hpp"
#include "sagp/simd/ops.hpp"

namespace sagp {

KernelParams::KernelParams(double rho_in, double eta_in) : rho(rho_in), eta(eta_in) {
    if (!std::isfinite(rho) || !(rho > 0.0) || !(rho < 1.0))
        throw invalid_input_error("KernelParams: rho must lie in (0,1)");
    if (!std::isfinite(eta) || !(eta > 0.0))
        throw invalid_input_error("KernelParams: eta must be positive");
    ln_rho = std::log(rho);
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                   const KernelParams& params, const Box& support) {
    if (x.size() != support.dim() || x2.size() != support.dim())
        throw invalid_input_error("kernel_eval: point dimension does not match support box");
    if (!x.allFinite() || !x2.allFinite())
        throw invalid_input_error("kernel_eval: non-finite coordinate");
    if (!support.contains(x) || !support.contains(x2)) return 0.0;
    const double sq = (x - x2).squaredNorm();
    return std::exp(params.ln_rho * sq) / params.eta;
}

void cross_cov_row(const Eigen::VectorXd& x, const Eigen::MatrixXd& pts,
                   const KernelParams& params, const Box& support,
                   Eigen::VectorXd& out) {
    const auto m = pts.rows();
    out.resize(m);
    if (!support.contains(x)) {
        out.setZero();
        return;
    }
    const auto& ops = simd::ops();
    // out doubles as the squared-distance scratch; exp_scale allows dst == src
    ops.sq_dist_point_to_set(pts.data(), static_cast<std::size_t>(m),
                             static_cast<std::size_t>(m), x.data(),
                             static_cast<std::size_t>(x.size()), out.data());
    ops.exp_scale(out.data(), static_cast<std::size_t>(m), params.ln_rho,
                  1.0 / params.eta, out.data());
    for (Eigen::Index k = 0; k < m; ++k)
        if (!support.contains(pts.row(k).transpose())) out[k] = 0.0;
}

Eigen::MatrixXd cov_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const KernelParams& params, const Box& support) {
    if (a.cols() != support.dim() || b.cols() != support.dim())
        throw invalid_input_error("cov_matrix: point dimension does not match support box");
    if (!a.allFinite() || !b.allFinite())
        throw invalid_input_error("cov_matrix: non-finite coordinate");

    const auto n = a.rows();
    const auto m = b.rows();
    std::vector<char> b_inside(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k)
        b_inside[static_cast<std::size_t>(k)] = support.contains(b.row(k).transpose());

    const auto& ops = simd::ops();
    Eigen::MatrixXd result(n, m);
    Eigen::VectorXd point(a.cols());
    Eigen::VectorXd row(m);
    for (Eigen::Index i = 0; i < n; ++i) {
        point = a.row(i);
        if (!support.contains(point)) {
            result.row(i).setZero();
            continue;
        }
        ops.sq_dist_point_to_set(b.data(), static_cast<std::size_t>(m),
                                 static_cast<std::size_t>(m), point.data(),
                                 static_cast<std::size_t>(point.size()), row.data());
        ops.exp_scale(row.data(), static_cast<std::size_t>(m), params.ln_rho,
                      1.0 / params.eta, row.data());
        for (Eigen::Index k = 0; k < m; ++k)
            if (!b_inside[static_cast<std::size_t>(k)]) row[k] = 0.0;
        result.row(i) = row;
    }
    return result;
}

}  // namespace sagp
