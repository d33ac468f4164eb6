#include "sagp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sagp/config.hpp"
#include "sagp/dataset.hpp"
#include "sagp/errors.hpp"
#include "sagp/inference.hpp"
#include "sagp/partition.hpp"
#include "sagp/sampler.hpp"
#include "sagp/simulate.hpp"
#include "sagp/textio.hpp"

namespace sagp {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kPredictStream = 0x70726564696374ull;
constexpr std::uint64_t kCostWarnThreshold = 50'000'000'000ull;

// Flag values are kept as raw strings and pushed through the same key=value
// machinery as config files, so precedence is just application order:
// defaults, then file, then flags.
struct ModelOpts {
    std::string config_path;
    std::map<std::string, std::string> flags;
};

void add_model_flags(CLI::App* cmd, ModelOpts& mo, bool include_shape = true) {
    cmd->add_option("--config", mo.config_path, "key=value config file");
    auto kv = [cmd, &mo](const std::string& flag, const std::string& key,
                         const std::string& desc) {
        cmd->add_option_function<std::string>(
            flag, [&mo, key](const std::string& v) { mo.flags[key] = v; }, desc);
    };
    if (include_shape) {
        kv("--m", "m", "pseudo-inputs per component");
        kv("--L", "L", "number of layers");
    }
    kv("--branching", "branching", "per-dimension branching factors, comma separated");
    kv("--priors", "priors", "prior preset: amplitude_decay or paper_literal");
    kv("--alpha", "alpha", "prediction-interval miss level");
    kv("--seed", "seed", "master RNG seed");
    kv("--n-iter", "n_iter", "total MCMC iterations");
    kv("--burn-in", "burn_in", "burn-in iterations");
    kv("--thin", "thin", "thinning stride");
    kv("--init-bandwidth", "init_bandwidth", "initial eta proposal bandwidth, relative");
    kv("--adapt-every", "adapt_every", "bandwidth adaptation cadence (0 = burn_in/20)");
    kv("--resample-every", "resample_every", "pseudo-input resampling cadence");
}

RunConfig resolve_config(const ModelOpts& mo) {
    RunConfig cfg;
    if (!mo.config_path.empty())
        apply_config(cfg, parse_key_values_file(mo.config_path), mo.config_path);
    apply_config(cfg, mo.flags, "flags");
    cfg.validate();
    return cfg;
}

std::vector<int> resolve_branching(const std::vector<int>& branching, int d) {
    if (branching.empty()) return std::vector<int>(static_cast<std::size_t>(d), 2);
    if (branching.size() == 1 && d > 1)
        return std::vector<int>(static_cast<std::size_t>(d), branching[0]);
    if (branching.size() != static_cast<std::size_t>(d))
        throw invalid_input_error("branching lists " + std::to_string(branching.size()) +
                                  " factors for " + std::to_string(d) + "-dimensional data");
    return branching;
}

std::vector<int> parse_layer_candidates(const std::string& text) {
    std::vector<int> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        std::int64_t lo, hi;
        if (!parse_int64(std::string_view(text).substr(0, dots), lo) ||
            !parse_int64(std::string_view(text).substr(dots + 2), hi) || lo < 1 || hi < lo)
            throw invalid_input_error("--L: cannot parse range '" + text + "'");
        for (std::int64_t L = lo; L <= hi; ++L) out.push_back(static_cast<int>(L));
        return out;
    }
    for (const auto part : split(text, ',')) {
        std::int64_t v;
        if (!parse_int64(part, v) || v < 1)
            throw invalid_input_error("--L: cannot parse '" + std::string(part) + "'");
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) throw invalid_input_error("--L: empty candidate list");
    return out;
}

std::vector<StudyModelConfig> parse_study_configs(const std::string& text) {
    std::vector<StudyModelConfig> out;
    for (const auto part : split(text, ',')) {
        const auto colon = part.find(':');
        std::int64_t m, L;
        if (colon == std::string_view::npos || !parse_int64(part.substr(0, colon), m) ||
            !parse_int64(part.substr(colon + 1), L) || m < 1 || L < 1)
            throw invalid_input_error("--configs: cannot parse '" + std::string(part) +
                                      "' (want m:L)");
        out.push_back(StudyModelConfig{static_cast<int>(m), static_cast<int>(L)});
    }
    if (out.empty()) throw invalid_input_error("--configs: empty list");
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error(path + ": cannot open for writing");
    out << content;
    if (!out) throw data_error(path + ": write failed");
}

std::ostream& open_sink(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw data_error(path + ": cannot open for writing");
    return file;
}

void warn_if_costly(int d, const std::vector<int>& branching, int L, long n, int m) {
    const std::uint64_t cost = complexity_estimate(d, branching, L, n, m);
    if (cost > kCostWarnThreshold)
        std::cerr << "warning: estimated per-iteration cost is about " << cost
                  << " unit operations; this fit may take a long time\n";
}

struct FitOpts {
    std::string data_path;
    std::string out_dir;
    ModelOpts model;
};

int run_fit(const FitOpts& opt) {
    const RunConfig base = resolve_config(opt.model);
    const RawTable raw = load_csv(opt.data_path);
    const Dataset data = standardize(raw);
    const int d = static_cast<int>(data.X.cols());

    RunConfig cfg = base;
    cfg.branching = resolve_branching(base.branching, d);
    warn_if_costly(d, cfg.branching, cfg.L, data.X.rows(), cfg.m);

    RpScheme scheme = prune(build_full_rp(d, cfg.branching, cfg.L, cfg.m), data.X);
    const Priors priors = make_priors(cfg.priors, cfg.L);
    cfg.mcmc.seed = cfg.seed;
    const PosteriorSamples samples = run_mcmc(data.X, data.y, scheme, priors, cfg.mcmc);

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);

    std::ostringstream scheme_text;
    save_scheme(scheme, scheme_text);
    write_file((out / "scheme.txt").string(), scheme_text.str());

    std::ostringstream data_text;
    save_dataset(data, data_text);
    const std::string data_blob = std::move(data_text).str();
    write_file((out / "data.txt").string(), data_blob);

    std::ostringstream samples_text;
    save_samples(samples, samples_text);
    write_file((out / "samples.txt").string(), samples_text.str());

    std::ostringstream manifest_text;
    save_manifest(manifest_text, cfg, to_hex(scheme_hash(scheme)), to_hex(fnv1a_64(data_blob)));
    write_file((out / "manifest.txt").string(), manifest_text.str());

    std::cout << "n=" << data.X.rows() << " d=" << d << "\n";
    std::cout << "active_components=" << scheme.n_active() << "\n";
    std::cout << "kept_draws=" << samples.draws.size() << "\n";
    std::cout << "run=" << opt.out_dir << "\n";
    return 0;
}

struct PredictOpts {
    std::string run_dir;
    std::string grid_path;
    std::string out_path;
    std::string alpha_override;
};

int run_predict(const PredictOpts& opt) {
    const fs::path run(opt.run_dir);
    std::string scheme_digest, data_digest;
    RunConfig cfg;
    {
        std::istringstream in(read_file((run / "manifest.txt").string()));
        cfg = load_manifest(in, &scheme_digest, &data_digest);
    }
    const std::string data_blob = read_file((run / "data.txt").string());
    if (to_hex(fnv1a_64(data_blob)) != data_digest)
        throw data_error("predict: data.txt does not match the manifest hash");
    Dataset data;
    {
        std::istringstream in(data_blob);
        data = load_dataset(in);
    }
    RpScheme scheme;
    {
        std::istringstream in(read_file((run / "scheme.txt").string()));
        scheme = load_scheme(in);
    }
    if (to_hex(scheme_hash(scheme)) != scheme_digest)
        throw data_error("predict: scheme.txt does not match the manifest hash");
    PosteriorSamples samples;
    {
        std::istringstream in(read_file((run / "samples.txt").string()));
        samples = load_samples(in);
    }

    double alpha = cfg.alpha;
    if (!opt.alpha_override.empty()) {
        if (!parse_double(opt.alpha_override, alpha))
            throw invalid_input_error("--alpha: cannot parse '" + opt.alpha_override + "'");
    }

    const Eigen::MatrixXd grid = load_points_csv(opt.grid_path);
    if (grid.cols() != scheme.d)
        throw data_error("predict: grid has " + std::to_string(grid.cols()) +
                         " coordinates, run expects " + std::to_string(scheme.d));
    long clipped = 0;
    const Eigen::MatrixXd x_std = standardize_points(grid, data.transform, &clipped);
    if (clipped > 0)
        std::cerr << "warning: " << clipped
                  << " location(s) outside the training range were clipped to the unit cube\n";

    Rng rng = Rng(cfg.seed).split(kPredictStream);
    const PredictionResult result = predict(samples, scheme, data, x_std, alpha, rng);

    std::vector<std::string> header;
    for (Eigen::Index k = 0; k < grid.cols(); ++k) header.push_back("x" + std::to_string(k + 1));
    header.insert(header.end(), {"mean", "lower", "upper"});
    Eigen::MatrixXd table(grid.rows(), grid.cols() + 3);
    table.leftCols(grid.cols()) = grid;
    table.col(grid.cols()) = result.mean;
    table.col(grid.cols() + 1) = result.lower;
    table.col(grid.cols() + 2) = result.upper;

    std::ofstream file;
    write_csv(open_sink(opt.out_path, file), header, table);
    return 0;
}

struct CvOpts {
    std::string data_path;
    std::string candidates;
    std::string out_path;
    int m = 10;
    int folds = 10;
    int jobs = 1;
    bool no_one_se = false;
    ModelOpts model;
};

int run_cv(const CvOpts& opt) {
    const RunConfig cfg = resolve_config(opt.model);
    const std::vector<int> candidates = parse_layer_candidates(opt.candidates);
    const Dataset data = standardize(load_csv(opt.data_path));

    CvOptions options;
    options.branching = cfg.branching;
    options.prior_preset = cfg.priors;
    options.mcmc = cfg.mcmc;
    options.alpha = cfg.alpha;
    options.folds = opt.folds;
    options.one_se_rule = !opt.no_one_se;
    options.seed = cfg.seed;
    options.jobs = opt.jobs;
    if (!options.branching.empty())
        options.branching = resolve_branching(options.branching, static_cast<int>(data.X.cols()));

    const CvReport report = cv_select_layers(data, opt.m, candidates, options);

    std::ofstream file;
    std::ostream& out = open_sink(opt.out_path, file);
    out << "L,mean_mse,se_mse\n";
    for (std::size_t k = 0; k < report.L_candidates.size(); ++k)
        out << report.L_candidates[k] << "," << format_double(report.mean_mse[static_cast<Eigen::Index>(k)])
            << "," << format_double(report.se_mse[static_cast<Eigen::Index>(k)]) << "\n";
    out << "selected_L=" << report.selected_L << "\n";
    return 0;
}

struct SimulateOpts {
    std::string out_dir;
    std::string scenario = "random";
    SimScenario sim;
};

SimScenario make_scenario(const std::string& name, const SimScenario& base) {
    SimScenario s = base;
    if (name == "random")
        s.split = SplitKind::random;
    else if (name == "interval")
        s.split = SplitKind::interval;
    else
        throw invalid_input_error("--scenario must be random or interval, got '" + name + "'");
    return s;
}

int run_simulate(const SimulateOpts& opt) {
    const SimScenario scenario = make_scenario(opt.scenario, opt.sim);
    const SimData sim = generate(scenario);
    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);

    auto dump = [](const std::string& path, const RawTable& table) {
        std::ofstream file(path, std::ios::binary);
        if (!file) throw data_error(path + ": cannot open for writing");
        Eigen::MatrixXd cols(table.X.rows(), table.X.cols() + 1);
        cols.leftCols(table.X.cols()) = table.X;
        cols.col(table.X.cols()) = table.y;
        std::vector<std::string> header;
        for (Eigen::Index k = 0; k < table.X.cols(); ++k)
            header.push_back("x" + std::to_string(k + 1));
        header.push_back("y");
        write_csv(file, header, cols);
    };
    dump((out / "train.csv").string(), sim.train);
    dump((out / "test.csv").string(), sim.test);
    std::cout << "train=" << sim.train.X.rows() << " test=" << sim.test.X.rows() << " out="
              << opt.out_dir << "\n";
    return 0;
}

struct StudyOpts {
    long batches = 20;
    std::string configs = "5:4,10:3,15:3";
    std::string scenario = "random";
    std::string out_path;
    int jobs = 1;
    SimScenario sim;
    ModelOpts model;
};

int run_study_cmd(const StudyOpts& opt) {
    const RunConfig cfg = resolve_config(opt.model);
    const SimScenario scenario = make_scenario(opt.scenario, opt.sim);
    const std::vector<StudyModelConfig> configs = parse_study_configs(opt.configs);

    StudyOptions options;
    options.prior_preset = cfg.priors;
    options.mcmc = cfg.mcmc;
    options.alpha = cfg.alpha;
    options.jobs = opt.jobs;

    const StudyResult result = run_study(opt.batches, configs, scenario, options);

    std::ofstream file;
    std::ostream& out = open_sink(opt.out_path, file);
    out << "batch,config,scenario,metric,value\n";
    for (const StudyRow& row : result.rows)
        out << row.batch << "," << row.config << "," << row.scenario << "," << row.metric << ","
            << format_double(row.value) << "\n";

    out << "# summary\n";
    out << "config,metric,q1,median,q3\n";
    for (const StudyModelConfig& mc : configs) {
        for (const std::string metric : {"mse", "coverage", "interval_score"}) {
            std::vector<double> values;
            for (const StudyRow& row : result.rows)
                if (row.config == mc.name() && row.metric == metric) values.push_back(row.value);
            if (values.empty()) continue;
            out << mc.name() << "," << metric << ","
                << format_double(sample_quantile(values, 0.25)) << ","
                << format_double(sample_quantile(values, 0.5)) << ","
                << format_double(sample_quantile(values, 0.75)) << "\n";
        }
    }
    for (const std::string& failure : result.failures)
        std::cerr << "warning: " << failure << "\n";
    return 0;
}

struct MetricsOpts {
    std::string pred_path;
    std::string truth_path;
    double alpha = 0.05;
};

int run_metrics(const MetricsOpts& opt) {
    const Eigen::MatrixXd pred = load_columns_csv(opt.pred_path, {"mean", "lower", "upper"});
    const RawTable truth = load_csv(opt.truth_path);
    if (pred.rows() != truth.y.size())
        throw data_error("metrics: prediction and truth row counts differ");
    std::cout << "metric,value\n";
    std::cout << "mse," << format_double(mse(truth.y, pred.col(0))) << "\n";
    std::cout << "coverage," << format_double(coverage(pred.col(1), pred.col(2), truth.y))
              << "\n";
    std::cout << "interval_score,"
              << format_double(mean_interval_score(pred.col(1), pred.col(2), truth.y, opt.alpha))
              << "\n";
    return 0;
}

struct PruneInfoOpts {
    std::string data_path;
    std::string out_path;
    ModelOpts model;
};

int run_prune_info(const PruneInfoOpts& opt) {
    const RunConfig base = resolve_config(opt.model);
    const Dataset data = standardize(load_csv(opt.data_path));
    const int d = static_cast<int>(data.X.cols());
    const std::vector<int> branching = resolve_branching(base.branching, d);
    const RpScheme scheme = prune(build_full_rp(d, branching, base.L, base.m), data.X);
    const std::vector<std::vector<int>> members = membership(scheme, data.X);

    std::cout << "id,layer,parent,active,points\n";
    for (const Component& comp : scheme.components)
        std::cout << comp.id << "," << comp.layer << "," << comp.parent << ","
                  << (comp.active ? 1 : 0) << ","
                  << members[static_cast<std::size_t>(comp.id - 1)].size() << "\n";
    std::cout << "active_components=" << scheme.n_active() << "\n";

    if (!opt.out_path.empty()) {
        std::ofstream file(opt.out_path, std::ios::binary);
        if (!file) throw data_error(opt.out_path + ": cannot open for writing");
        save_scheme(scheme, file);
    }
    return 0;
}

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Sparse additive Gaussian process regression", "sagp"};
    app.require_subcommand(1);

    FitOpts fit;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model and write a run directory");
    fit_cmd->add_option("--data", fit.data_path, "training CSV (x1..xd,y)")->required();
    fit_cmd->add_option("--out", fit.out_dir, "output run directory")->required();
    add_model_flags(fit_cmd, fit.model);

    PredictOpts pred;
    CLI::App* pred_cmd = app.add_subcommand("predict", "predict from a fitted run");
    pred_cmd->add_option("--run", pred.run_dir, "run directory written by fit")->required();
    pred_cmd->add_option("--at", pred.grid_path, "CSV of locations (x1..xd)")->required();
    pred_cmd->add_option("--out", pred.out_path, "output CSV (default stdout)");
    pred_cmd->add_option("--alpha", pred.alpha_override, "prediction-interval miss level");

    CvOpts cv;
    CLI::App* cv_cmd = app.add_subcommand("cv", "cross-validate the layer count");
    cv_cmd->add_option("--data", cv.data_path, "training CSV (x1..xd,y)")->required();
    cv_cmd->add_option("--m", cv.m, "pseudo-inputs per component")->required();
    cv_cmd->add_option("--L", cv.candidates, "layer candidates, e.g. 1..4 or 1,2,3")->required();
    cv_cmd->add_option("--folds", cv.folds, "number of folds");
    cv_cmd->add_option("--jobs", cv.jobs, "worker threads");
    cv_cmd->add_option("--out", cv.out_path, "output report file (default stdout)");
    cv_cmd->add_flag("--no-one-se", cv.no_one_se, "select the raw argmin, not the one-SE rule");
    add_model_flags(cv_cmd, cv.model, /*include_shape=*/false);

    SimulateOpts sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "generate a benchmark dataset");
    sim_cmd->add_option("--out", sim.out_dir, "output directory")->required();
    sim_cmd->add_option("--scenario", sim.scenario, "random or interval");
    sim_cmd->add_option("--n", sim.sim.n, "total sample size");
    sim_cmd->add_option("--noise-var", sim.sim.noise_var, "observation noise variance");
    sim_cmd->add_option("--train-size", sim.sim.train_size, "training subset size");
    sim_cmd->add_option("--seed", sim.sim.seed, "RNG seed");

    StudyOpts study;
    CLI::App* study_cmd = app.add_subcommand("study", "run the batched simulation study");
    study_cmd->add_option("--batches", study.batches, "number of dataset batches");
    study_cmd->add_option("--configs", study.configs, "model configs as m:L, comma separated");
    study_cmd->add_option("--scenario", study.scenario, "random or interval");
    study_cmd->add_option("--n", study.sim.n, "total sample size per batch");
    study_cmd->add_option("--noise-var", study.sim.noise_var, "observation noise variance");
    study_cmd->add_option("--train-size", study.sim.train_size, "training subset size");
    study_cmd->add_option("--jobs", study.jobs, "worker threads");
    study_cmd->add_option("--out", study.out_path, "output table file (default stdout)");
    add_model_flags(study_cmd, study.model, /*include_shape=*/false);

    MetricsOpts metrics;
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "score predictions against truth");
    metrics_cmd->add_option("--pred", metrics.pred_path, "prediction CSV (mean,lower,upper)")
        ->required();
    metrics_cmd->add_option("--truth", metrics.truth_path, "truth CSV (x1..xd,y)")->required();
    metrics_cmd->add_option("--alpha", metrics.alpha, "interval-score miss level");

    PruneInfoOpts prune_info;
    CLI::App* prune_cmd = app.add_subcommand("prune-info", "show the pruned partition scheme");
    prune_cmd->add_option("--data", prune_info.data_path, "training CSV (x1..xd,y)")->required();
    prune_cmd->add_option("--out", prune_info.out_path, "write the serialized scheme here");
    add_model_flags(prune_cmd, prune_info.model);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << "\n";
        return 2;
    }

    try {
        // study.sim.seed rides on the shared --seed model flag
        if (auto it = study.model.flags.find("seed"); it != study.model.flags.end()) {
            std::int64_t v;
            if (parse_int64(it->second, v) && v >= 0) study.sim.seed = static_cast<std::uint64_t>(v);
        }
        if (app.got_subcommand(fit_cmd)) return run_fit(fit);
        if (app.got_subcommand(pred_cmd)) return run_predict(pred);
        if (app.got_subcommand(cv_cmd)) return run_cv(cv);
        if (app.got_subcommand(sim_cmd)) return run_simulate(sim);
        if (app.got_subcommand(study_cmd)) return run_study_cmd(study);
        if (app.got_subcommand(metrics_cmd)) return run_metrics(metrics);
        if (app.got_subcommand(prune_cmd)) return run_prune_info(prune_info);
        std::cerr << "error: usage: no subcommand\n";
        return 2;
    } catch (const invalid_input_error& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "error: data: " << one_line(e.what()) << "\n";
        return 3;
    } catch (const numerical_error& e) {
        std::cerr << "error: numerical: " << one_line(e.what()) << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << one_line(e.what()) << "\n";
        return 4;
    }
}

}  // namespace sagp
