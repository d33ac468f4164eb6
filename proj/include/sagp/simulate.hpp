#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sagp/dataset.hpp"
#include "sagp/sampler.hpp"

namespace sagp {

// Fixed nonstationary benchmark mean on [0,1]:
// f(x) = -5 - 6x^3 + 30(x-1/2)^2 + 3exp(2x-1) + 3x^2 sin(12 pi x) + cos(6 pi x)
double true_mean(double x);

enum class SplitKind { random, interval };

struct SimScenario {
    long n = 200;
    double noise_var = 0.1;
    SplitKind split = SplitKind::random;
    long train_size = 150;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SimData {
    RawTable train;
    RawTable test;
};

// x_i ~ U[0,1], y_i = f(x_i) + N(0, noise_var). Random split holds out a
// uniform subset; interval split holds out the n - train_size points nearest
// x = 0.5 (ties to the lower index).
SimData generate(const SimScenario& scenario);

struct StudyModelConfig {
    int m = 10;
    int L = 3;
    std::string name() const { return "m" + std::to_string(m) + "_L" + std::to_string(L); }
};

struct StudyOptions {
    std::string prior_preset = "amplitude_decay";
    McmcConfig mcmc;
    double alpha = 0.05;
    int jobs = 1;
};

struct StudyRow {
    long batch = 0;
    std::string config;
    std::string scenario;
    std::string metric;  // mse | coverage | interval_score
    double value = 0.0;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    std::vector<std::string> failures;  // "batch B config C: reason", study continues
};

std::vector<StudyModelConfig> default_study_configs();  // (5,4), (10,3), (15,3)

// Per batch: fresh dataset with a batch-derived seed, then fit+evaluate each
// model config. Batches may run in parallel; output order is deterministic.
StudyResult run_study(long batches, const std::vector<StudyModelConfig>& configs,
                      const SimScenario& scenario, const StudyOptions& options);

std::string split_name(SplitKind split);

}  // namespace sagp
