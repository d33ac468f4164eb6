#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sagp/partition.hpp"
#include "sagp/rng.hpp"
#include "sagp/sgp.hpp"

namespace sagp {

struct LayerPrior {
    double alpha_eta;
    double beta_eta;
    double rho;
};

struct Priors {
    double alpha_eps = 1.0;
    double beta_eps = 1.0;
    std::vector<LayerPrior> layers;  // index = layer - 1

    void validate() const;  // throws invalid_input_error listing violations
};

// rho_1 = 1e-1 down to rho_L = 1e-50, equally spaced in log10.
std::vector<double> rho_schedule(int L);

// Preset "amplitude_decay": kernel amplitude E[1/eta] shrinks tenfold per
// layer. Preset "paper_literal": eta prior means 1e-1, 1e-10, 1e-50 at
// L = 3, interpolated in log10 for other depths. Both use alpha_eta = 2.
Priors make_priors(const std::string& preset, int L);

struct McmcConfig {
    long n_iter = 2000;
    long burn_in = 1000;
    long thin = 1;
    std::uint64_t seed = 42;
    double init_bandwidth = 0.1;  // relative: bandwidth starts at this times initial eta
    long adapt_every = 0;         // 0 means max(1, burn_in/20)
    double target_low = 0.39;     // acceptance band (target_low, target_high]
    double target_high = 0.49;
    long resample_every = 1;      // pseudo-input refresh cadence
    bool sample_eta = true;       // fixing eta/sigma2 turns the chain into a
    bool sample_sigma2 = true;    // conditional sampler; used by tests

    long effective_adapt_every() const;
    void validate() const;
};

// One active component's fitting state: sampled parameters, derived caches,
// and the adaptive-proposal bookkeeping.
struct McmcComponent {
    ComponentState state;
    ComponentCache cache;
    Box box;
    int layer = 0;
    double bandwidth = 0.1;
    long proposals = 0;
    long accepts = 0;
};

struct ModelState {
    std::vector<McmcComponent> comps;  // active components in ascending id order
    double sigma2_eps = 1.0;
};

struct ComponentDraw {
    std::vector<int> pseudo_input_idx;
    Eigen::VectorXd pseudo_targets;
    double eta = 0.0;
};

struct Draw {
    long iteration = 0;
    double sigma2_eps = 0.0;
    std::vector<ComponentDraw> comps;
};

struct PosteriorSamples {
    std::vector<int> component_ids;     // ascending, matching Draw::comps order
    std::vector<int> component_layers;
    int m = 0;
    std::vector<Draw> draws;
};

// Pseudo-input sets for all active components, deepest components first so a
// child never finds its pool drained by an ancestor. Returned vector is
// indexed by component id - 1 (inactive ids stay empty). Draws are uniform
// without replacement from the component's tie-broken box members minus
// everything already taken.
std::vector<std::vector<int>> sample_pseudo_inputs(const RpScheme& scheme,
                                                   const Eigen::MatrixXd& X, Rng& rng);

// Same, with membership lists precomputed by membership(); the form the
// sampler loop uses so the per-iteration cost stays O(N m + n).
std::vector<std::vector<int>> sample_pseudo_inputs_from_members(
    const RpScheme& scheme, const std::vector<std::vector<int>>& members, Rng& rng);

// mean + chol(cov) * z with z standard normal; the zero matrix yields the
// mean exactly.
Eigen::VectorXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, Rng& rng);

// One back-fitting sweep: for each component in turn, draw the pseudo-targets
// from their full conditional given the partial residual, refreshing the
// fitted contribution before the next component.
void gibbs_pseudo_targets(ModelState& model, const Eigen::VectorXd& y, Rng& rng);

// Adaptive-bandwidth uniform-proposal MH update of one component's eta.
// Returns true on acceptance. comp_pos indexes ModelState::comps.
bool mh_eta_step(ModelState& model, std::size_t comp_pos, const Eigen::VectorXd& y,
                 const Priors& priors, Rng& rng);

// Multiplicative bandwidth adaptation: outside (target_low, target_high] the
// bandwidth scales by rate/0.44, clamped to [1e-12, 1e3].
double adapt_bandwidth(long proposals, long accepts, double bandwidth, double target_low,
                       double target_high);

// Conjugate inverse-gamma draw of the noise variance given the residual.
void gibbs_sigma2(ModelState& model, const Eigen::VectorXd& y, const Priors& priors,
                  Rng& rng);

// The full Metropolis-within-Gibbs back-fitting chain. X and y must already
// be standardized; the scheme must be pruned against X.
PosteriorSamples run_mcmc(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const RpScheme& scheme, const Priors& priors,
                          const McmcConfig& config);

// Columnar text round trip (one row per kept draw).
void save_samples(const PosteriorSamples& samples, std::ostream& out);
PosteriorSamples load_samples(std::istream& in);

}  // namespace sagp
