#include "sagp/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "sagp/errors.hpp"
#include "sagp/sgp.hpp"

namespace sagp {
namespace {

std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 wide = static_cast<unsigned __int128>(a) * b;
    const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
    return wide > cap ? cap : static_cast<std::uint64_t>(wide);
}

std::uint64_t add_sat(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
    return a > cap - b ? cap : a + b;
}

}  // namespace

PredictionResult predict(const PosteriorSamples& samples, const RpScheme& scheme,
                         const Dataset& data, const Eigen::MatrixXd& x_stars, double alpha,
                         Rng& rng) {
    if (samples.draws.empty()) throw invalid_input_error("predict: no posterior draws");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw invalid_input_error("predict: alpha must lie in (0,1]");
    if (x_stars.cols() != scheme.d)
        throw invalid_input_error("predict: location dimension does not match the scheme");
    if (samples.component_ids != scheme.active_ids())
        throw data_error("predict: samples and scheme disagree on active components");
    if (samples.m != scheme.m_required)
        throw data_error("predict: samples and scheme disagree on m");

    const Eigen::Index T = x_stars.rows();
    const std::size_t S = samples.draws.size();
    const std::size_t N = samples.component_ids.size();

    PredictionResult result;
    result.locations = x_stars;
    result.component_ids = samples.component_ids;

    // Clip into the unit cube (extrapolation outside the training range).
    Eigen::MatrixXd Xq = x_stars;
    for (Eigen::Index t = 0; t < T; ++t) {
        bool any = false;
        for (Eigen::Index k = 0; k < Xq.cols(); ++k)
            if (Xq(t, k) < 0.0 || Xq(t, k) > 1.0) {
                Xq(t, k) = std::clamp(Xq(t, k), 0.0, 1.0);
                any = true;
            }
        result.clipped_count += any;
    }

    // Containment paths are draw-independent; resolve them once.
    std::vector<int> pos_of_id(scheme.components.size() + 1, -1);
    for (std::size_t k = 0; k < N; ++k) pos_of_id[static_cast<std::size_t>(samples.component_ids[k])] = static_cast<int>(k);
    std::vector<std::vector<int>> paths(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) {
        for (const int id : locate(Xq.row(t).transpose(), scheme)) {
            const int pos = pos_of_id[static_cast<std::size_t>(id)];
            if (pos < 0) throw data_error("predict: located component missing from samples");
            paths[static_cast<std::size_t>(t)].push_back(pos);
        }
    }

    Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(T);
    Eigen::MatrixXd comp_acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), T);
    std::vector<std::vector<double>> ydraws(static_cast<std::size_t>(T),
                                            std::vector<double>(S));

    const std::vector<double> layer_rho = rho_schedule(scheme.L);
    std::vector<ComponentFactor> factors(N);
    std::vector<Eigen::VectorXd> weights(N);
    std::vector<ComponentState> states(N);
    Eigen::VectorXd scratch;
    for (std::size_t s = 0; s < S; ++s) {
        const Draw& draw = samples.draws[s];
        if (draw.comps.size() != N) throw data_error("predict: draw has wrong component count");
        for (std::size_t k = 0; k < N; ++k) {
            const int id = samples.component_ids[k];
            const int layer = samples.component_layers[k];
            if (layer < 1 || layer > scheme.L)
                throw data_error("predict: component layer outside the scheme");
            ComponentState& st = states[k];
            st.component_id = id;
            st.rho = layer_rho[static_cast<std::size_t>(layer - 1)];
            st.pseudo_input_idx = draw.comps[k].pseudo_input_idx;
            st.pseudo_targets = draw.comps[k].pseudo_targets;
            st.eta = draw.comps[k].eta;
            factors[k] = build_component_factor(st, data.X, scheme.comp(id).box);
            weights[k] = chol_solve(factors[k].chol_m, st.pseudo_targets);
        }
        for (Eigen::Index t = 0; t < T; ++t) {
            const Eigen::VectorXd x = Xq.row(t).transpose();
            double mean_t = 0.0;
            double var_t = draw.sigma2_eps;
            for (const int pos : paths[static_cast<std::size_t>(t)]) {
                const auto pk = static_cast<std::size_t>(pos);
                const auto [comp_mean, comp_var] = component_predict_with_weights(
                    states[pk], factors[pk], weights[pk], scheme.comp(samples.component_ids[pk]).box,
                    x, scratch);
                mean_t += comp_mean;
                var_t += comp_var;
                comp_acc(pos, t) += comp_mean;
            }
            mean_acc[t] += mean_t;
            ydraws[static_cast<std::size_t>(t)][s] = mean_t + rng.normal() * std::sqrt(var_t);
        }
    }

    const double inv_s = 1.0 / static_cast<double>(S);
    const Transform& tr = data.transform;
    result.mean.resize(T);
    result.lower.resize(T);
    result.upper.resize(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        result.mean[t] = tr.from_standard_y(mean_acc[t] * inv_s);
        result.lower[t] =
            tr.from_standard_y(sample_quantile(ydraws[static_cast<std::size_t>(t)], alpha / 2.0));
        result.upper[t] = tr.from_standard_y(
            sample_quantile(std::move(ydraws[static_cast<std::size_t>(t)]), 1.0 - alpha / 2.0));
    }
    // Components live on the standardized scale; the shift belongs to the
    // always-active root so the rows still sum to the total mean.
    result.per_component_mean = comp_acc * (inv_s * tr.y_sd);
    const int root_pos = pos_of_id[1];
    if (root_pos >= 0)
        result.per_component_mean.row(root_pos).array() += tr.y_mean;
    return result;
}

double mse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() == 0) throw invalid_input_error("mse: empty input");
    if (y_true.size() != y_pred.size()) throw invalid_input_error("mse: length mismatch");
    return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

double interval_score(double lower, double upper, double y, double alpha) {
    if (!(lower <= upper)) throw invalid_input_error("interval_score: lower exceeds upper");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw invalid_input_error("interval_score: alpha must lie in (0,1)");
    double s = upper - lower;
    if (y < lower) s += (2.0 / alpha) * (lower - y);
    if (y > upper) s += (2.0 / alpha) * (y - upper);
    return s;
}

double mean_interval_score(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const Eigen::VectorXd& y, double alpha) {
    if (y.size() == 0) throw invalid_input_error("interval_score: empty input");
    if (lower.size() != y.size() || upper.size() != y.size())
        throw invalid_input_error("interval_score: length mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        total += interval_score(lower[i], upper[i], y[i], alpha);
    return total / static_cast<double>(y.size());
}

double coverage(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                const Eigen::VectorXd& y) {
    if (y.size() == 0) throw invalid_input_error("coverage: empty input");
    if (lower.size() != y.size() || upper.size() != y.size())
        throw invalid_input_error("coverage: length mismatch");
    long inside = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        inside += (lower[i] <= y[i] && y[i] <= upper[i]);
    return static_cast<double>(inside) / static_cast<double>(y.size());
}

double sample_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw invalid_input_error("sample_quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw invalid_input_error("sample_quantile: p outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

CvReport cv_select_layers(const Dataset& data, int m, const std::vector<int>& L_candidates,
                          const CvOptions& options) {
    if (L_candidates.empty()) throw invalid_input_error("cv: no layer candidates");
    std::vector<int> Ls = L_candidates;
    std::sort(Ls.begin(), Ls.end());
    Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
    if (Ls.front() < 1) throw invalid_input_error("cv: layer candidates must be at least 1");
    const auto n = data.X.rows();
    const int folds = options.folds;
    if (folds < 2) throw invalid_input_error("cv: need at least 2 folds");
    if (n < folds) throw invalid_input_error("cv: fewer data points than folds");
    const int d = static_cast<int>(data.X.cols());
    std::vector<int> branching = options.branching;
    if (branching.empty()) branching.assign(static_cast<std::size_t>(d), 2);
    const int jobs = std::max(1, options.jobs);

    // One shared fold assignment so every L sees the same partition.
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = static_cast<int>(i);
    Rng fold_rng(options.seed);
    perm = fold_rng.sample_without_replacement(std::move(perm), perm.size());
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < perm.size(); ++k)
        fold_of[static_cast<std::size_t>(perm[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));

    CvReport report;
    report.L_candidates = Ls;
    report.fold_mse.setConstant(folds, static_cast<Eigen::Index>(Ls.size()),
                                std::numeric_limits<double>::quiet_NaN());

    struct Task {
        std::size_t li;
        int fold;
    };
    std::vector<Task> tasks;
    for (std::size_t li = 0; li < Ls.size(); ++li)
        for (int f = 0; f < folds; ++f) tasks.push_back(Task{li, f});
    std::vector<std::exception_ptr> task_error(tasks.size());

    auto run_task = [&](const Task& task) {
        const int L = Ls[task.li];
        std::vector<int> train_idx;
        std::vector<int> test_idx;
        for (Eigen::Index i = 0; i < n; ++i)
            (fold_of[static_cast<std::size_t>(i)] == task.fold ? test_idx : train_idx)
                .push_back(static_cast<int>(i));

        Dataset train;
        train.transform = data.transform;
        train.X.resize(static_cast<Eigen::Index>(train_idx.size()), d);
        train.y.resize(static_cast<Eigen::Index>(train_idx.size()));
        for (std::size_t r = 0; r < train_idx.size(); ++r) {
            train.X.row(static_cast<Eigen::Index>(r)) = data.X.row(train_idx[r]);
            train.y[static_cast<Eigen::Index>(r)] = data.y[train_idx[r]];
        }
        Eigen::MatrixXd x_test(static_cast<Eigen::Index>(test_idx.size()), d);
        Eigen::VectorXd y_test(static_cast<Eigen::Index>(test_idx.size()));
        for (std::size_t r = 0; r < test_idx.size(); ++r) {
            x_test.row(static_cast<Eigen::Index>(r)) = data.X.row(test_idx[r]);
            y_test[static_cast<Eigen::Index>(r)] = data.transform.from_standard_y(data.y[test_idx[r]]);
        }

        RpScheme scheme = build_full_rp(d, branching, L, m);
        try {
            scheme = prune(scheme, train.X);
        } catch (const std::exception& e) {
            throw data_error("cv: fold " + std::to_string(task.fold + 1) + " (L=" +
                             std::to_string(L) + ") infeasible: " + e.what());
        }
        const Priors priors = make_priors(options.prior_preset, L);
        McmcConfig cfg = options.mcmc;
        const std::uint64_t stream = static_cast<std::uint64_t>(task.li) * 0x10000ull +
                                     static_cast<std::uint64_t>(task.fold);
        cfg.seed = Rng(options.seed).split(stream).seed();
        const PosteriorSamples samples = run_mcmc(train.X, train.y, scheme, priors, cfg);
        Rng noise_rng = Rng(options.seed).split(stream ^ 0x8000000000000000ull);
        const PredictionResult pred =
            predict(samples, scheme, train, x_test, options.alpha, noise_rng);
        report.fold_mse(task.fold, static_cast<Eigen::Index>(task.li)) = mse(y_test, pred.mean);
    };

    if (jobs == 1) {
        for (const Task& task : tasks) run_task(task);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                const std::size_t k = next.fetch_add(1);
                if (k >= tasks.size()) return;
                try {
                    run_task(tasks[k]);
                } catch (...) {
                    task_error[k] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), tasks.size());
        pool.reserve(n_threads);
        for (std::size_t w = 0; w < n_threads; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
        for (const std::exception_ptr& err : task_error)
            if (err) std::rethrow_exception(err);
    }

    const auto nL = static_cast<Eigen::Index>(Ls.size());
    report.mean_mse = report.fold_mse.colwise().mean();
    report.se_mse.resize(nL);
    for (Eigen::Index c = 0; c < nL; ++c) {
        const double sd = std::sqrt(
            (report.fold_mse.col(c).array() - report.mean_mse[c]).square().sum() /
            static_cast<double>(folds - 1));
        report.se_mse[c] = sd / std::sqrt(static_cast<double>(folds));
    }

    report.selected_L = select_layer(Ls, report.mean_mse, report.se_mse, options.one_se_rule);
    return report;
}

int select_layer(const std::vector<int>& L_candidates, const Eigen::VectorXd& mean_mse,
                 const Eigen::VectorXd& se_mse, bool one_se_rule) {
    const auto nL = static_cast<Eigen::Index>(L_candidates.size());
    if (nL == 0 || mean_mse.size() != nL || se_mse.size() != nL)
        throw invalid_input_error("select_layer: size mismatch");
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < nL; ++c)
        if (mean_mse[c] < mean_mse[best]) best = c;
    Eigen::Index chosen = best;
    if (one_se_rule) {
        const double threshold = mean_mse[best] + se_mse[best];
        for (Eigen::Index c = 0; c < nL; ++c)
            if (mean_mse[c] <= threshold) {
                chosen = c;
                break;
            }
    }
    return L_candidates[static_cast<std::size_t>(chosen)];
}

std::uint64_t complexity_estimate(int d, const std::vector<int>& branching, int L, long n,
                                  int m) {
    if (d < 1 || L < 1 || n < 0 || m < 0)
        throw invalid_input_error("complexity_estimate: invalid parameters");
    std::vector<int> b = branching;
    if (b.size() == 1 && d > 1) b.assign(static_cast<std::size_t>(d), b[0]);
    if (b.size() != static_cast<std::size_t>(d))
        throw invalid_input_error("complexity_estimate: branching size mismatch");
    for (const int bi : b)
        if (bi < 2) throw invalid_input_error("complexity_estimate: branching factors must be >= 2");

    std::uint64_t boxes_per_layer = 1;  // prod_i b_i^(l-1)
    std::uint64_t total_boxes = 0;
    std::uint64_t layer_product = 1;
    for (const int bi : b) layer_product = mul_sat(layer_product, static_cast<std::uint64_t>(bi));
    for (int l = 1; l <= L; ++l) {
        total_boxes = add_sat(total_boxes, boxes_per_layer);
        if (l < L) boxes_per_layer = mul_sat(boxes_per_layer, layer_product);
    }
    const std::uint64_t nm2 = mul_sat(static_cast<std::uint64_t>(n),
                                      mul_sat(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(m)));
    return mul_sat(total_boxes, nm2);
}

}  // namespace sagp
