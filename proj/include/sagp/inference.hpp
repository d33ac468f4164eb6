#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sagp/dataset.hpp"
#include "sagp/partition.hpp"
#include "sagp/rng.hpp"
#include "sagp/sampler.hpp"

namespace sagp {

struct PredictionResult {
    Eigen::MatrixXd locations;  // the standardized query points, pre-clipping
    Eigen::VectorXd mean;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    Eigen::MatrixXd per_component_mean;  // n_active x n_locations, rows follow component_ids
    std::vector<int> component_ids;
    long clipped_count = 0;  // locations nudged back into the unit cube
};

// Posterior predictive at standardized locations: per draw the component
// means add along the active containment path, a y-draw adds Gaussian noise
// with the conditional variances plus that draw's sigma2_eps, and the
// interval is the empirical (alpha/2, 1-alpha/2) quantile of the y-draws.
// Means and bounds come back on the original y scale.
PredictionResult predict(const PosteriorSamples& samples, const RpScheme& scheme,
                         const Dataset& data, const Eigen::MatrixXd& x_stars, double alpha,
                         Rng& rng);

double mse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

// s_alpha = (u-l) + (2/alpha)(l-y) if y < l, + (2/alpha)(y-u) if y > u
double interval_score(double lower, double upper, double y, double alpha);
double mean_interval_score(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const Eigen::VectorXd& y, double alpha);

double coverage(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                const Eigen::VectorXd& y);

// Linear-interpolation sample quantile (R type 7) of an unsorted sample.
double sample_quantile(std::vector<double> values, double p);

struct CvOptions {
    std::vector<int> branching;  // empty = 2 per dimension
    std::string prior_preset = "amplitude_decay";
    McmcConfig mcmc;
    double alpha = 0.05;
    int folds = 10;
    bool one_se_rule = true;
    std::uint64_t seed = 42;
    int jobs = 1;
};

struct CvReport {
    std::vector<int> L_candidates;
    Eigen::MatrixXd fold_mse;  // folds x |L_candidates|
    Eigen::VectorXd mean_mse;
    Eigen::VectorXd se_mse;
    int selected_L = 0;
};

// K-fold CV over the layer-count candidates; each fold rebuilds and prunes
// its own scheme and fits an independent seeded chain. Selection is argmin
// mean MSE, optionally relaxed to the smallest L within one standard error.
CvReport cv_select_layers(const Dataset& data, int m, const std::vector<int>& L_candidates,
                          const CvOptions& options);

// The selection rule alone: argmin of mean MSE (ties to the smaller L), or
// with the one-SE rule the smallest L whose mean is within one standard
// error of the argmin's.
int select_layer(const std::vector<int>& L_candidates, const Eigen::VectorXd& mean_mse,
                 const Eigen::VectorXd& se_mse, bool one_se_rule);

// Unit-operation count sum_l prod_i b_i^(l-1) * n * m^2, saturating at the
// uint64 ceiling instead of overflowing.
std::uint64_t complexity_estimate(int d, const std::vector<int>& branching, int L, long n,
                                  int m);

}  // namespace sagp
