#include "sagp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sagp/errors.hpp"
#include "sagp/simd/ops.hpp"
#include "sagp/textio.hpp"

namespace sagp {
namespace {

double inv_gamma_logpdf(double x, double alpha, double beta) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * std::log(x) -
           beta / x;
}

// One component's pseudo-target Gibbs draw against the running contribution
// total; keeps the total current (the back-fitting residual bookkeeping).
// When fresh anchors are supplied the swap happens here, right before this
// component's own redraw: pairing new anchors with the not-yet-redrawn targets
// would put the old target vector outside the smooth range of the new K_m and
// turn the fitted contribution into garbage of size ||f|| / sqrt(lambda_min),
// so the residual below must use the last consistent (anchors, targets) fit.
void draw_component_targets(ModelState& model, std::size_t pos, const Eigen::VectorXd& y,
                            Eigen::VectorXd& total, Rng& rng,
                            const Eigen::MatrixXd* X = nullptr,
                            const std::vector<int>* fresh_idx = nullptr) {
    McmcComponent& c = model.comps[pos];
    const bool unbuilt = c.cache.cross.size() == 0;
    const Eigen::VectorXd old_contribution =
        unbuilt ? Eigen::VectorXd::Zero(y.size()) : c.cache.contribution;
    if (fresh_idx && (c.state.pseudo_input_idx != *fresh_idx || unbuilt)) {
        c.state.pseudo_input_idx = *fresh_idx;
        c.cache = build_component_cache(c.state, *X, c.box);
    }
    const Eigen::VectorXd r = y - (total - old_contribution);
    const MvnMoments moments =
        pseudo_target_full_conditional(c.state, c.cache, r, model.sigma2_eps);
    total -= old_contribution;
    c.state.pseudo_targets = draw_mvn(moments.mean, moments.cov, rng);
    refresh_contribution(c.cache, c.state);
    total += c.cache.contribution;
}

Eigen::VectorXd contribution_total(const ModelState& model, Eigen::Index n) {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(n);
    for (const McmcComponent& c : model.comps) total += c.cache.contribution;
    return total;
}

}  // namespace

void Priors::validate() const {
    std::string problems;
    auto complain = [&](const std::string& msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    if (!(alpha_eps > 0.0)) complain("alpha_eps must be positive");
    if (!(beta_eps > 0.0)) complain("beta_eps must be positive");
    if (layers.empty()) complain("at least one layer prior is required");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string where = "layer " + std::to_string(l + 1) + " ";
        if (!(layers[l].alpha_eta > 1.0))
            complain(where + "alpha_eta must exceed 1 (the prior mean seeds the chain)");
        if (!(layers[l].beta_eta > 0.0)) complain(where + "beta_eta must be positive");
        if (!(layers[l].rho > 0.0) || !(layers[l].rho < 1.0))
            complain(where + "rho must lie in (0,1)");
        if (l > 0 && !(layers[l].rho < layers[l - 1].rho))
            complain(where + "rho must decrease strictly with depth");
    }
    if (!problems.empty()) throw invalid_input_error("priors: " + problems);
}

std::vector<double> rho_schedule(int L) {
    if (L < 1) throw invalid_input_error("rho_schedule: L must be at least 1");
    std::vector<double> rho(static_cast<std::size_t>(L));
    if (L == 1) {
        rho[0] = 1e-1;
        return rho;
    }
    for (int l = 0; l < L; ++l) {
        const double frac = static_cast<double>(l) / static_cast<double>(L - 1);
        const double log10_rho = -1.0 + frac * (-50.0 - -1.0);
        rho[static_cast<std::size_t>(l)] = std::pow(10.0, log10_rho);
    }
    return rho;
}

Priors make_priors(const std::string& preset, int L) {
    if (L < 1) throw invalid_input_error("make_priors: L must be at least 1");
    Priors priors;
    const std::vector<double> rho = rho_schedule(L);
    priors.layers.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        LayerPrior& lp = priors.layers[static_cast<std::size_t>(l)];
        lp.rho = rho[static_cast<std::size_t>(l)];
        lp.alpha_eta = 2.0;
        if (preset == "amplitude_decay") {
            // E[1/eta] = 10^-l: the kernel amplitude shrinks tenfold per layer
            lp.beta_eta = 2.0 * std::pow(10.0, l);
        } else if (preset == "paper_literal") {
            // eta prior means 1e-1, 1e-10, 1e-50 at L=3; log10 interpolation
            // over the layer fraction elsewhere
            const double frac =
                L == 1 ? 0.0 : static_cast<double>(l) / static_cast<double>(L - 1);
            const double log10_mean =
                frac <= 0.5 ? -1.0 + (frac / 0.5) * (-10.0 - -1.0)
                            : -10.0 + ((frac - 0.5) / 0.5) * (-50.0 - -10.0);
            lp.beta_eta = std::pow(10.0, log10_mean);  // mean * (alpha - 1), alpha = 2
        } else {
            throw invalid_input_error("make_priors: unknown preset '" + preset +
                                      "' (want amplitude_decay or paper_literal)");
        }
    }
    priors.validate();
    return priors;
}

long McmcConfig::effective_adapt_every() const {
    return adapt_every > 0 ? adapt_every : std::max<long>(1, burn_in / 20);
}

void McmcConfig::validate() const {
    std::string problems;
    auto complain = [&](const char* msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    if (n_iter < 1) complain("n_iter must be at least 1");
    if (burn_in < 0) complain("burn_in must be nonnegative");
    if (burn_in >= n_iter) complain("burn_in must be smaller than n_iter");
    if (thin < 1) complain("thin must be at least 1");
    if (!(init_bandwidth > 0.0)) complain("init_bandwidth must be positive");
    if (adapt_every < 0) complain("adapt_every must be nonnegative");
    if (resample_every < 1) complain("resample_every must be at least 1");
    if (!(target_low >= 0.0) || !(target_high <= 1.0) || !(target_low < target_high))
        complain("acceptance band must satisfy 0 <= low < high <= 1");
    if (!problems.empty()) throw invalid_input_error(std::string("mcmc config: ") + problems);
}

std::vector<std::vector<int>> sample_pseudo_inputs(const RpScheme& scheme,
                                                   const Eigen::MatrixXd& X, Rng& rng) {
    return sample_pseudo_inputs_from_members(scheme, membership(scheme, X), rng);
}

std::vector<std::vector<int>> sample_pseudo_inputs_from_members(
    const RpScheme& scheme, const std::vector<std::vector<int>>& members, Rng& rng) {
    if (members.size() != scheme.components.size())
        throw invalid_input_error("sample_pseudo_inputs: membership list size mismatch");
    std::size_t n = 0;
    for (const auto& list : members)
        for (const int idx : list) n = std::max(n, static_cast<std::size_t>(idx) + 1);

    std::vector<std::vector<int>> sets(scheme.components.size());
    std::vector<char> taken(n, 0);
    const std::size_t m = static_cast<std::size_t>(scheme.m_required);
    // deepest-first: ids ascend with layer, so walk them backwards
    for (int id = static_cast<int>(scheme.components.size()); id >= 1; --id) {
        if (!scheme.comp(id).active) continue;
        std::vector<int> pool;
        for (const int idx : members[static_cast<std::size_t>(id - 1)])
            if (!taken[static_cast<std::size_t>(idx)]) pool.push_back(idx);
        if (pool.size() < m)
            throw internal_error("sample_pseudo_inputs: component " + std::to_string(id) +
                                 " has too few free points; was the scheme pruned?");
        std::vector<int> chosen = rng.sample_without_replacement(std::move(pool), m);
        std::sort(chosen.begin(), chosen.end());
        for (const int idx : chosen) taken[static_cast<std::size_t>(idx)] = 1;
        sets[static_cast<std::size_t>(id - 1)] = std::move(chosen);
    }
    return sets;
}

Eigen::VectorXd draw_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                         Rng& rng) {
    const PsdFactor factor = chol_jitter(cov);
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return mean + factor.lower.triangularView<Eigen::Lower>() * z;
}

void gibbs_pseudo_targets(ModelState& model, const Eigen::VectorXd& y, Rng& rng) {
    Eigen::VectorXd total = contribution_total(model, y.size());
    for (std::size_t pos = 0; pos < model.comps.size(); ++pos)
        draw_component_targets(model, pos, y, total, rng);
}

bool mh_eta_step(ModelState& model, std::size_t comp_pos, const Eigen::VectorXd& y,
                 const Priors& priors, Rng& rng) {
    McmcComponent& c = model.comps.at(comp_pos);
    if (static_cast<std::size_t>(c.layer) > priors.layers.size())
        throw invalid_input_error("mh_eta_step: no prior for this component's layer");
    const LayerPrior& lp = priors.layers[static_cast<std::size_t>(c.layer - 1)];

    ++c.proposals;
    const double eta_cur = c.state.eta;
    const double eta_new = rng.uniform(eta_cur - c.bandwidth, eta_cur + c.bandwidth);
    const double u = rng.uniform();
    if (!(eta_new > 0.0)) return false;  // prior support ends at zero

    // Only this component's lambda changes under an eta move (the fitted
    // contribution K_nm K_m^{-1} f_bar is scale-free), so the likelihood
    // ratio needs one variance rescale, not a cache rebuild.
    const auto n = y.size();
    Eigen::VectorXd resid = y;
    Eigen::VectorXd var_cur = Eigen::VectorXd::Constant(n, model.sigma2_eps);
    for (const McmcComponent& other : model.comps) {
        resid -= other.cache.contribution;
        var_cur += other.cache.lambda;
    }
    const double scale = eta_cur / eta_new;
    const Eigen::VectorXd var_new = var_cur + (scale - 1.0) * c.cache.lambda;

    const auto& ops = simd::ops();
    const double ll_cur =
        ops.gaussian_diag_loglik(resid.data(), var_cur.data(), static_cast<std::size_t>(n));
    const double ll_new =
        ops.gaussian_diag_loglik(resid.data(), var_new.data(), static_cast<std::size_t>(n));
    const double log_ratio = (ll_new + inv_gamma_logpdf(eta_new, lp.alpha_eta, lp.beta_eta)) -
                             (ll_cur + inv_gamma_logpdf(eta_cur, lp.alpha_eta, lp.beta_eta));

    if (std::log(u) > log_ratio) return false;
    rescale_cache_eta(c.cache, eta_cur, eta_new);
    c.state.eta = eta_new;
    ++c.accepts;
    return true;
}

double adapt_bandwidth(long proposals, long accepts, double bandwidth, double target_low,
                       double target_high) {
    if (proposals <= 0) return bandwidth;
    const double rate = static_cast<double>(accepts) / static_cast<double>(proposals);
    if (rate > target_low && rate <= target_high) return bandwidth;
    return std::clamp(bandwidth * (rate / 0.44), 1e-12, 1e3);
}

void gibbs_sigma2(ModelState& model, const Eigen::VectorXd& y, const Priors& priors,
                  Rng& rng) {
    const Eigen::VectorXd resid = y - contribution_total(model, y.size());
    const double shape = priors.alpha_eps + 0.5 * static_cast<double>(y.size());
    const double scale = priors.beta_eps + 0.5 * resid.squaredNorm();
    model.sigma2_eps = rng.inverse_gamma(shape, scale);
}

PosteriorSamples run_mcmc(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const RpScheme& scheme, const Priors& priors,
                          const McmcConfig& config) {
    config.validate();
    priors.validate();
    if (X.rows() != y.size()) throw invalid_input_error("run_mcmc: X and y row counts differ");
    if (X.cols() != scheme.d) throw invalid_input_error("run_mcmc: X dimension mismatch");
    if (static_cast<int>(priors.layers.size()) < scheme.L)
        throw invalid_input_error("run_mcmc: fewer layer priors than scheme layers");

    const std::vector<std::vector<int>> members = membership(scheme, X);
    Rng rng(config.seed);

    ModelState model;
    model.sigma2_eps = 1.0;
    PosteriorSamples samples;
    samples.m = scheme.m_required;
    for (const int id : scheme.active_ids()) {
        McmcComponent c;
        const Component& node = scheme.comp(id);
        c.layer = node.layer;
        c.box = node.box;
        const LayerPrior& lp = priors.layers[static_cast<std::size_t>(node.layer - 1)];
        c.state.component_id = id;
        c.state.rho = lp.rho;
        c.state.eta = lp.beta_eta / (lp.alpha_eta - 1.0);  // prior mean
        c.state.pseudo_targets = Eigen::VectorXd::Zero(scheme.m_required);
        c.bandwidth = config.init_bandwidth * c.state.eta;
        model.comps.push_back(std::move(c));
        samples.component_ids.push_back(id);
        samples.component_layers.push_back(node.layer);
    }

    const long adapt_every = config.effective_adapt_every();
    const long kept = (config.n_iter - config.burn_in) / config.thin;
    samples.draws.reserve(static_cast<std::size_t>(std::max<long>(kept, 0)));

    Eigen::VectorXd total = Eigen::VectorXd::Zero(y.size());
    for (long it = 1; it <= config.n_iter; ++it) {
        try {
            std::vector<std::vector<int>> sets;
            if ((it - 1) % config.resample_every == 0)
                sets = sample_pseudo_inputs_from_members(scheme, members, rng);

            // First iteration: assign the initial anchors and build every cache
            // up front. All targets are still zero, so the fitted contributions
            // are exactly zero and the eta steps see complete variance terms.
            if (it == 1) {
                for (McmcComponent& c : model.comps) {
                    c.state.pseudo_input_idx =
                        sets[static_cast<std::size_t>(c.state.component_id - 1)];
                    c.cache = build_component_cache(c.state, X, c.box);
                }
                total = contribution_total(model, y.size());
            }

            for (std::size_t pos = 0; pos < model.comps.size(); ++pos) {
                const std::vector<int>* fresh =
                    sets.empty() ? nullptr
                                 : &sets[static_cast<std::size_t>(
                                       model.comps[pos].state.component_id - 1)];
                draw_component_targets(model, pos, y, total, rng, &X, fresh);
                if (config.sample_eta) {
                    mh_eta_step(model, pos, y, priors, rng);
                    McmcComponent& c = model.comps[pos];
                    if (it <= config.burn_in && it % adapt_every == 0) {
                        c.bandwidth = adapt_bandwidth(c.proposals, c.accepts, c.bandwidth,
                                                      config.target_low, config.target_high);
                        c.proposals = 0;
                        c.accepts = 0;
                    }
                }
            }

            if (config.sample_sigma2) gibbs_sigma2(model, y, priors, rng);
        } catch (const numerical_error& e) {
            throw numerical_error("iteration " + std::to_string(it) + ": " + e.what(),
                                  e.final_jitter);
        } catch (const internal_error& e) {
            throw internal_error("iteration " + std::to_string(it) + ": " + e.what());
        }

        if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) {
            Draw draw;
            draw.iteration = it;
            draw.sigma2_eps = model.sigma2_eps;
            draw.comps.reserve(model.comps.size());
            for (const McmcComponent& c : model.comps)
                draw.comps.push_back(
                    ComponentDraw{c.state.pseudo_input_idx, c.state.pseudo_targets, c.state.eta});
            samples.draws.push_back(std::move(draw));
        }
    }
    return samples;
}

void save_samples(const PosteriorSamples& samples, std::ostream& out) {
    out << "sagp-samples v1\n";
    out << "components " << samples.component_ids.size() << "\n";
    out << "m " << samples.m << "\n";
    for (std::size_t k = 0; k < samples.component_ids.size(); ++k)
        out << "component " << samples.component_ids[k] << " " << samples.component_layers[k]
            << "\n";
    out << "draws " << samples.draws.size() << "\n";
    out << "# columns: iteration sigma2_eps then per component: eta f_bar*m idx*m\n";
    for (const Draw& draw : samples.draws) {
        out << draw.iteration << " " << format_double(draw.sigma2_eps);
        for (const ComponentDraw& c : draw.comps) {
            out << " " << format_double(c.eta);
            for (Eigen::Index i = 0; i < c.pseudo_targets.size(); ++i)
                out << " " << format_double(c.pseudo_targets[i]);
            for (const int idx : c.pseudo_input_idx) out << " " << idx;
        }
        out << "\n";
    }
}

PosteriorSamples load_samples(std::istream& in) {
    std::string line;
    auto next_line = [&](const char* what) {
        while (std::getline(in, line)) {
            const auto stripped = strip_cr(line);
            if (!stripped.empty() && stripped[0] != '#') {
                line.assign(stripped);
                return;
            }
        }
        throw data_error(std::string("samples file: missing ") + what);
    };
    auto to_int = [](std::string_view sv, const char* what) {
        std::int64_t v;
        if (!parse_int64(sv, v))
            throw data_error(std::string("samples file: bad integer for ") + what);
        return v;
    };
    auto to_double = [](std::string_view sv, const char* what) {
        double v;
        if (!parse_double(sv, v))
            throw data_error(std::string("samples file: bad number for ") + what);
        return v;
    };

    next_line("header");
    if (line != "sagp-samples v1") throw data_error("samples file: unrecognized header");

    PosteriorSamples samples;
    next_line("component count");
    auto parts = split_ws(line);
    if (parts.size() != 2 || parts[0] != "components")
        throw data_error("samples file: expected component count");
    const auto n_comp = to_int(parts[1], "components");

    next_line("m");
    parts = split_ws(line);
    if (parts.size() != 2 || parts[0] != "m") throw data_error("samples file: expected m");
    samples.m = static_cast<int>(to_int(parts[1], "m"));

    for (std::int64_t k = 0; k < n_comp; ++k) {
        next_line("component row");
        parts = split_ws(line);
        if (parts.size() != 3 || parts[0] != "component")
            throw data_error("samples file: expected component row");
        samples.component_ids.push_back(static_cast<int>(to_int(parts[1], "component id")));
        samples.component_layers.push_back(
            static_cast<int>(to_int(parts[2], "component layer")));
    }

    next_line("draw count");
    parts = split_ws(line);
    if (parts.size() != 2 || parts[0] != "draws")
        throw data_error("samples file: expected draw count");
    const auto n_draws = to_int(parts[1], "draws");

    const std::size_t per_comp = 1 + 2 * static_cast<std::size_t>(samples.m);
    const std::size_t expected = 2 + static_cast<std::size_t>(n_comp) * per_comp;
    samples.draws.reserve(static_cast<std::size_t>(n_draws));
    for (std::int64_t row = 0; row < n_draws; ++row) {
        next_line("draw row");
        parts = split_ws(line);
        if (parts.size() != expected) throw data_error("samples file: draw row has wrong width");
        Draw draw;
        std::size_t at = 0;
        draw.iteration = to_int(parts[at++], "iteration");
        draw.sigma2_eps = to_double(parts[at++], "sigma2_eps");
        for (std::int64_t k = 0; k < n_comp; ++k) {
            ComponentDraw c;
            c.eta = to_double(parts[at++], "eta");
            c.pseudo_targets.resize(samples.m);
            for (int i = 0; i < samples.m; ++i)
                c.pseudo_targets[i] = to_double(parts[at++], "pseudo-target");
            for (int i = 0; i < samples.m; ++i)
                c.pseudo_input_idx.push_back(static_cast<int>(to_int(parts[at++], "index")));
            draw.comps.push_back(std::move(c));
        }
        samples.draws.push_back(std::move(draw));
    }
    return samples;
}

}  // namespace sagp
