#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sagp/geometry.hpp"
#include "sagp/linalg.hpp"

namespace sagp {

// Sampled parameters of one additive component: which training points anchor
// it, the latent values at those anchors, and the kernel hyper-parameters
// (rho fixed per layer, eta sampled).
struct ComponentState {
    int component_id = 0;
    std::vector<int> pseudo_input_idx;
    Eigen::VectorXd pseudo_targets;
    double eta = 1.0;
    double rho = 0.1;
};

// K_m and its factor: the part of the component math needed both in fitting
// and in prediction.
struct ComponentFactor {
    Eigen::MatrixXd pseudo_X;  // m x d
    Eigen::MatrixXd K_m;       // m x m
    PsdFactor chol_m;          // factor of K_m (jitter included)
};

// Training-side derived quantities, recomputed whenever the pseudo-inputs or
// eta change and reused across the pseudo-target and eta updates of a sweep.
struct ComponentCache {
    ComponentFactor factor;
    Eigen::MatrixXd cross;         // n x m, K(x_i, xbar_k); zero rows off-box
    Eigen::VectorXd lambda;        // n; zero off-box and exactly zero at pseudo-inputs
    Eigen::VectorXd contribution;  // n; K_nm K_m^{-1} f_bar
};

ComponentFactor build_component_factor(const ComponentState& state,
                                       const Eigen::MatrixXd& X, const Box& box);

ComponentCache build_component_cache(const ComponentState& state,
                                     const Eigen::MatrixXd& X, const Box& box);

// Recompute the contribution after the pseudo-targets changed.
void refresh_contribution(ComponentCache& cache, const ComponentState& state);

// Rescale a cache for a new eta. All kernel quantities are proportional to
// 1/eta, so this is O(n m) with no factorization; the fitted contribution is
// scale-invariant and stays put.
void rescale_cache_eta(ComponentCache& cache, double eta_old, double eta_new);

// FITC correction diagonal: K(x_i,x_i) - k_i^T K_m^{-1} k_i, clamped at zero,
// exactly zero at the pseudo-inputs themselves and at points outside the box.
Eigen::VectorXd lambda_diag(const ComponentState& state, const Eigen::MatrixXd& X,
                            const Box& box);

// Fitted contribution K_nm K_m^{-1} f_bar at the training inputs.
Eigen::VectorXd contribution(const ComponentState& state, const Eigen::MatrixXd& X,
                             const Box& box);

// log N(y | sum_j contribution_j, sigma2_eps I + sum_j Lambda_j): the
// collapsed model likelihood. Cost O(n N) given current caches.
double model_log_likelihood(const Eigen::VectorXd& y,
                            const std::vector<const ComponentCache*>& caches,
                            double sigma2_eps);

struct MvnMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Full conditional of the pseudo-targets given the partial residual r:
//   Q_m  = K_m + K_mn (Lambda + sigma2 I)^{-1} K_nm
//   mean = K_m Q_m^{-1} K_mn (Lambda + sigma2 I)^{-1} r
//   cov  = K_m Q_m^{-1} K_m
MvnMoments pseudo_target_full_conditional(const ComponentState& state,
                                          const ComponentCache& cache,
                                          const Eigen::VectorXd& r, double sigma2_eps);

// Mean and conditional variance of this component's function value at one
// location given the current pseudo-target draw; (0,0) outside the box.
std::pair<double, double> component_predict(const ComponentState& state,
                                            const ComponentFactor& factor, const Box& box,
                                            const Eigen::VectorXd& x_star);

// Same, with K_m^{-1} f_bar precomputed once per draw; scratch must be
// reusable storage (resized to m). Used by the prediction inner loop.
std::pair<double, double> component_predict_with_weights(
    const ComponentState& state, const ComponentFactor& factor,
    const Eigen::VectorXd& weights, const Box& box, const Eigen::VectorXd& x_star,
    Eigen::VectorXd& scratch);

}  // namespace sagp
