#include "sagp/sgp.hpp"

#include <cfloat>
#include <cmath>

#include "sagp/errors.hpp"
#include "sagp/kernel.hpp"
#include "sagp/simd/ops.hpp"

namespace sagp {
namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= X.rows())
            throw invalid_input_error("pseudo-input index out of range");
        out.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
    }
    return out;
}

}  // namespace

ComponentFactor build_component_factor(const ComponentState& state,
                                       const Eigen::MatrixXd& X, const Box& box) {
    const KernelParams params(state.rho, state.eta);
    ComponentFactor factor;
    factor.pseudo_X = gather_rows(X, state.pseudo_input_idx);
    factor.K_m = cov_matrix(factor.pseudo_X, factor.pseudo_X, params, box);
    factor.chol_m = chol_jitter(factor.K_m);
    return factor;
}

ComponentCache build_component_cache(const ComponentState& state,
                                     const Eigen::MatrixXd& X, const Box& box) {
    const KernelParams params(state.rho, state.eta);
    ComponentCache cache;
    cache.factor = build_component_factor(state, X, box);
    cache.cross = cov_matrix(X, cache.factor.pseudo_X, params, box);

    // lambda_i = K(x_i,x_i) - ||L^{-1} k_i||^2; rows outside the box have
    // k_i = 0 and K(x_i,x_i) = 0, so they land on zero automatically
    const Eigen::MatrixXd half =
        cache.factor.chol_m.lower.triangularView<Eigen::Lower>().solve(
            cache.cross.transpose());
    const auto n = X.rows();
    cache.lambda.resize(n);
    const double k_diag = 1.0 / state.eta;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double self = box.contains(X.row(i).transpose()) ? k_diag : 0.0;
        cache.lambda[i] = std::max(0.0, self - half.col(i).squaredNorm());
    }
    // a pseudo-input is explained exactly; pin the cancellation residue to 0
    for (const int idx : state.pseudo_input_idx) cache.lambda[idx] = 0.0;

    refresh_contribution(cache, state);
    return cache;
}

void refresh_contribution(ComponentCache& cache, const ComponentState& state) {
    if (state.pseudo_targets.size() != cache.factor.K_m.rows())
        throw invalid_input_error("refresh_contribution: pseudo-target length mismatch");
    cache.contribution = cache.cross * chol_solve(cache.factor.chol_m, state.pseudo_targets);
}

void rescale_cache_eta(ComponentCache& cache, double eta_old, double eta_new) {
    if (!(eta_old > 0.0) || !(eta_new > 0.0))
        throw invalid_input_error("rescale_cache_eta: eta must be positive");
    const double c = eta_old / eta_new;
    cache.factor.K_m *= c;
    cache.factor.chol_m.lower *= std::sqrt(c);
    cache.factor.chol_m.jitter_used *= c;
    cache.cross *= c;
    cache.lambda *= c;
}

Eigen::VectorXd lambda_diag(const ComponentState& state, const Eigen::MatrixXd& X,
                            const Box& box) {
    return build_component_cache(state, X, box).lambda;
}

Eigen::VectorXd contribution(const ComponentState& state, const Eigen::MatrixXd& X,
                             const Box& box) {
    return build_component_cache(state, X, box).contribution;
}

double model_log_likelihood(const Eigen::VectorXd& y,
                            const std::vector<const ComponentCache*>& caches,
                            double sigma2_eps) {
    if (!(sigma2_eps > 0.0) || !std::isfinite(sigma2_eps))
        throw invalid_input_error("model_log_likelihood: noise variance must be positive");
    const auto n = y.size();
    Eigen::VectorXd resid = y;
    Eigen::VectorXd var = Eigen::VectorXd::Constant(n, sigma2_eps);
    for (const ComponentCache* cache : caches) {
        if (cache->contribution.size() != n || cache->lambda.size() != n)
            throw invalid_input_error("model_log_likelihood: cache length mismatch");
        resid -= cache->contribution;
        var += cache->lambda;
    }
    if ((var.array() < DBL_MIN).any())
        throw internal_error("model_log_likelihood: nonpositive variance entry");
    return simd::ops().gaussian_diag_loglik(resid.data(), var.data(),
                                            static_cast<std::size_t>(n));
}

MvnMoments pseudo_target_full_conditional(const ComponentState& state,
                                          const ComponentCache& cache,
                                          const Eigen::VectorXd& r, double sigma2_eps) {
    if (!(sigma2_eps > 0.0))
        throw invalid_input_error("pseudo_target_full_conditional: noise variance must be positive");
    if (r.size() != cache.cross.rows())
        throw invalid_input_error("pseudo_target_full_conditional: residual length mismatch");
    (void)state;

    // Posterior in whitened form: with K_m = L L^T, G = D^{-1/2} K_nm L^{-T},
    // and M = I + G^T G, the moments K_m Q^{-1} K_m and K_m Q^{-1} A^T D^{-1} r
    // (Q = K_m + A^T D^{-1} A) become L M^{-1} L^T and L M^{-1} G^T D^{-1/2} r.
    // M has unit pivots plus a Gram term, so the factorization cannot break
    // down and every intermediate stays bounded by the prior scale even when
    // K_m is close to singular (anchors packed tightly against the base rho).
    const Eigen::ArrayXd d_inv_sqrt = (cache.lambda.array() + sigma2_eps).rsqrt();
    Eigen::MatrixXd g = d_inv_sqrt.matrix().asDiagonal() * cache.cross;  // n x m
    cache.factor.chol_m.lower.triangularView<Eigen::Lower>()
        .transpose()
        .solveInPlace<Eigen::OnTheRight>(g);
    const Eigen::Index m = cache.factor.K_m.rows();
    const Eigen::MatrixXd gram =
        Eigen::MatrixXd::Identity(m, m) + g.transpose() * g;
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw numerical_error("pseudo_target_full_conditional: Gram factorization failed");

    MvnMoments out;
    const Eigen::VectorXd b = g.transpose() * (d_inv_sqrt * r.array()).matrix();
    out.mean = cache.factor.chol_m.lower.triangularView<Eigen::Lower>() * llt.solve(b);
    Eigen::MatrixXd t = cache.factor.chol_m.lower.transpose();
    llt.matrixL().solveInPlace(t);
    Eigen::MatrixXd cov = t.transpose() * t;
    out.cov = 0.5 * (cov + cov.transpose());
    return out;
}

std::pair<double, double> component_predict(const ComponentState& state,
                                            const ComponentFactor& factor, const Box& box,
                                            const Eigen::VectorXd& x_star) {
    Eigen::VectorXd scratch;
    const Eigen::VectorXd weights = chol_solve(factor.chol_m, state.pseudo_targets);
    return component_predict_with_weights(state, factor, weights, box, x_star, scratch);
}

std::pair<double, double> component_predict_with_weights(
    const ComponentState& state, const ComponentFactor& factor,
    const Eigen::VectorXd& weights, const Box& box, const Eigen::VectorXd& x_star,
    Eigen::VectorXd& scratch) {
    if (!box.contains(x_star)) return {0.0, 0.0};
    const KernelParams params(state.rho, state.eta);
    cross_cov_row(x_star, factor.pseudo_X, params, box, scratch);
    const double mean = scratch.dot(weights);
    factor.chol_m.lower.triangularView<Eigen::Lower>().solveInPlace(scratch);
    const double var = std::max(0.0, 1.0 / state.eta - scratch.squaredNorm());
    return {mean, var};
}

}  // namespace sagp
