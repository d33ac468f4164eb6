#include "sagp/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "sagp/errors.hpp"
#include "sagp/inference.hpp"
#include "sagp/partition.hpp"

namespace sagp {

double true_mean(double x) {
    if (!std::isfinite(x)) throw invalid_input_error("true_mean: x must be finite");
    const double pi = std::numbers::pi;
    return -5.0 - 6.0 * x * x * x + 30.0 * (x - 0.5) * (x - 0.5) + 3.0 * std::exp(2.0 * x - 1.0) +
           3.0 * x * x * std::sin(12.0 * pi * x) + std::cos(6.0 * pi * x);
}

void SimScenario::validate() const {
    std::string problems;
    auto complain = [&](const char* msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    if (n < 2) complain("n must be at least 2");
    if (!(noise_var > 0.0)) complain("noise_var must be positive");
    if (train_size < 1) complain("train_size must be at least 1");
    if (train_size >= n) complain("train_size must be smaller than n");
    if (!problems.empty()) throw invalid_input_error(std::string("scenario: ") + problems);
}

SimData generate(const SimScenario& scenario) {
    scenario.validate();
    Rng rng(scenario.seed);
    const long n = scenario.n;
    Eigen::VectorXd x(n), y(n);
    for (long i = 0; i < n; ++i) x[i] = rng.uniform();
    const double sd = std::sqrt(scenario.noise_var);
    for (long i = 0; i < n; ++i) y[i] = true_mean(x[i]) + rng.normal(0.0, sd);

    const long n_test = n - scenario.train_size;
    std::vector<int> test_idx;
    if (scenario.split == SplitKind::random) {
        std::vector<int> all(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = static_cast<int>(i);
        test_idx = rng.sample_without_replacement(std::move(all), static_cast<std::size_t>(n_test));
    } else {
        std::vector<int> order(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return std::abs(x[a] - 0.5) < std::abs(x[b] - 0.5);
        });
        test_idx.assign(order.begin(), order.begin() + n_test);
    }
    std::sort(test_idx.begin(), test_idx.end());

    std::vector<char> in_test(static_cast<std::size_t>(n), 0);
    for (const int i : test_idx) in_test[static_cast<std::size_t>(i)] = 1;

    SimData out;
    out.train.X.resize(scenario.train_size, 1);
    out.train.y.resize(scenario.train_size);
    out.test.X.resize(n_test, 1);
    out.test.y.resize(n_test);
    long tr = 0, te = 0;
    for (long i = 0; i < n; ++i) {
        if (in_test[static_cast<std::size_t>(i)]) {
            out.test.X(te, 0) = x[i];
            out.test.y[te++] = y[i];
        } else {
            out.train.X(tr, 0) = x[i];
            out.train.y[tr++] = y[i];
        }
    }
    return out;
}

std::vector<StudyModelConfig> default_study_configs() {
    return {StudyModelConfig{5, 4}, StudyModelConfig{10, 3}, StudyModelConfig{15, 3}};
}

std::string split_name(SplitKind split) {
    return split == SplitKind::random ? "random" : "interval";
}

StudyResult run_study(long batches, const std::vector<StudyModelConfig>& configs,
                      const SimScenario& scenario, const StudyOptions& options) {
    if (batches < 1) throw invalid_input_error("run_study: batches must be at least 1");
    if (configs.empty()) throw invalid_input_error("run_study: no model configs");
    scenario.validate();
    for (const StudyModelConfig& cfg : configs)
        if (cfg.m < 1 || cfg.L < 1)
            throw invalid_input_error("run_study: config " + cfg.name() + " is invalid");
    (void)make_priors(options.prior_preset, 1);  // unknown presets fail every config alike
    if (!(options.alpha > 0.0 && options.alpha < 1.0))
        throw invalid_input_error("run_study: alpha must be in (0, 1)");

    const std::string scen = split_name(scenario.split);
    struct BatchOut {
        std::vector<StudyRow> rows;
        std::vector<std::string> failures;
    };
    std::vector<BatchOut> per_batch(static_cast<std::size_t>(batches));

    auto run_batch = [&](long b) {
        BatchOut& out = per_batch[static_cast<std::size_t>(b)];
        SimScenario batch_scenario = scenario;
        batch_scenario.seed = Rng(scenario.seed).split(static_cast<std::uint64_t>(b)).seed();
        SimData sim;
        try {
            sim = generate(batch_scenario);
        } catch (const std::exception& e) {
            out.failures.push_back("batch " + std::to_string(b + 1) + ": " + e.what());
            return;
        }
        for (std::size_t c = 0; c < configs.size(); ++c) {
            const StudyModelConfig& mc = configs[c];
            try {
                const Dataset train = standardize(sim.train);
                RpScheme scheme = prune(build_full_rp(1, {2}, mc.L, mc.m), train.X);
                const Priors priors = make_priors(options.prior_preset, mc.L);
                McmcConfig fit_cfg = options.mcmc;
                const std::uint64_t stream =
                    static_cast<std::uint64_t>(b) * 64ull + static_cast<std::uint64_t>(c);
                fit_cfg.seed = Rng(scenario.seed).split(stream ^ 0x517cc1b727220a95ull).seed();
                const PosteriorSamples samples =
                    run_mcmc(train.X, train.y, scheme, priors, fit_cfg);

                long clipped = 0;
                const Eigen::MatrixXd x_test =
                    standardize_points(sim.test.X, train.transform, &clipped);
                Rng noise_rng = Rng(scenario.seed).split(stream ^ 0x2545f4914f6cdd1dull);
                const PredictionResult pred =
                    predict(samples, scheme, train, x_test, options.alpha, noise_rng);

                out.rows.push_back(StudyRow{b + 1, mc.name(), scen, "mse",
                                            mse(sim.test.y, pred.mean)});
                out.rows.push_back(StudyRow{b + 1, mc.name(), scen, "coverage",
                                            coverage(pred.lower, pred.upper, sim.test.y)});
                out.rows.push_back(StudyRow{b + 1, mc.name(), scen, "interval_score",
                                            mean_interval_score(pred.lower, pred.upper,
                                                                sim.test.y, options.alpha)});
            } catch (const std::exception& e) {
                out.failures.push_back("batch " + std::to_string(b + 1) + " config " + mc.name() +
                                       ": " + e.what());
            }
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (long b = 0; b < batches; ++b) run_batch(b);
    } else {
        std::atomic<long> next{0};
        auto worker = [&]() {
            while (true) {
                const long b = next.fetch_add(1);
                if (b >= batches) return;
                run_batch(b);
            }
        };
        std::vector<std::thread> pool;
        const long n_threads = std::min<long>(jobs, batches);
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (long w = 0; w < n_threads; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    StudyResult result;
    for (const BatchOut& out : per_batch) {
        result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
        result.failures.insert(result.failures.end(), out.failures.begin(), out.failures.end());
    }
    return result;
}

}  // namespace sagp
