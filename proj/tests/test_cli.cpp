#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sagp/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.emplace_back("sagp");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const std::string& a : full) argv.push_back(a.c_str());

    std::ostringstream out, err;
    std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
    CliResult r;
    try {
        r.code = sagp::cli_main(static_cast<int>(argv.size()), argv.data());
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Scratch directory under the test's working directory, wiped on entry and exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path("cli_tmp_" + tag) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out);
    out << content;
}

// Copy the x1 column of a simulate output into a points-only grid file.
void extract_grid(const std::string& csv_path, const std::string& grid_path) {
    std::ifstream in(csv_path);
    REQUIRE(in);
    std::ofstream out(grid_path);
    REQUIRE(out);
    out << "x1\n";
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out << line.substr(0, line.find(',')) << "\n";
    }
}

double metric_value(const std::string& table, const std::string& name) {
    std::istringstream in(table);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(name + ",", 0) == 0) return std::stod(line.substr(name.size() + 1));
    FAIL("metric not found: ", name);
    return NAN;
}

std::vector<std::string> simulate_args(const TempDir& dir) {
    return {"simulate", "--out", dir.file("sim"),    "--n",    "60",
            "--train-size", "45",  "--seed", "11"};
}

}  // namespace

TEST_CASE("bad invocations exit with the usage code") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"fit"}).code == 2);  // missing required flags
    CHECK(run_cli({"fit", "--data", "x.csv"}).code == 2);
    const CliResult r = run_cli({"predict", "--run", "nowhere", "--at", "nothing"});
    CHECK(r.code == 3);  // flags fine, files missing
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("help prints the subcommands and succeeds") {
    const CliResult r = run_cli({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("fit") != std::string::npos);
    CHECK(r.out.find("predict") != std::string::npos);
    CHECK(r.out.find("simulate") != std::string::npos);
}

TEST_CASE("simulate writes the two split files") {
    TempDir dir("simulate");
    const CliResult r = run_cli(simulate_args(dir));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("train=45 test=15") != std::string::npos);
    const std::string train = read_file(dir.file("sim/train.csv"));
    CHECK(train.rfind("x1,y\n", 0) == 0);
    CHECK(std::count(train.begin(), train.end(), '\n') == 46);
    const std::string test = read_file(dir.file("sim/test.csv"));
    CHECK(std::count(test.begin(), test.end(), '\n') == 16);
    CHECK(run_cli({"simulate", "--out", dir.file("x"), "--scenario", "bogus"}).code == 2);
    CHECK(run_cli({"simulate", "--out", dir.file("x"), "--n", "5", "--train-size", "9"}).code ==
          2);
}

TEST_CASE("the fit, predict, metrics pipeline runs end to end") {
    TempDir dir("pipeline");
    REQUIRE(run_cli(simulate_args(dir)).code == 0);

    const CliResult fit = run_cli({"fit", "--data", dir.file("sim/train.csv"), "--out",
                                   dir.file("run"), "--m", "4", "--L", "2", "--n-iter", "30",
                                   "--burn-in", "10", "--seed", "3"});
    REQUIRE(fit.code == 0);
    CHECK(fit.out.find("n=45 d=1") != std::string::npos);
    CHECK(fit.out.find("kept_draws=20") != std::string::npos);
    for (const char* name : {"scheme.txt", "data.txt", "samples.txt", "manifest.txt"})
        CHECK(fs::exists(dir.path / "run" / name));

    extract_grid(dir.file("sim/test.csv"), dir.file("grid.csv"));
    const CliResult pred = run_cli({"predict", "--run", dir.file("run"), "--at",
                                    dir.file("grid.csv"), "--out", dir.file("pred.csv")});
    REQUIRE(pred.code == 0);
    const std::string pred_csv = read_file(dir.file("pred.csv"));
    CHECK(pred_csv.rfind("x1,mean,lower,upper\n", 0) == 0);
    CHECK(std::count(pred_csv.begin(), pred_csv.end(), '\n') == 16);

    const CliResult metrics = run_cli({"metrics", "--pred", dir.file("pred.csv"), "--truth",
                                       dir.file("sim/test.csv")});
    REQUIRE(metrics.code == 0);
    CHECK(metrics.out.rfind("metric,value\n", 0) == 0);
    const double err = metric_value(metrics.out, "mse");
    const double cov = metric_value(metrics.out, "coverage");
    const double score = metric_value(metrics.out, "interval_score");
    CHECK(std::isfinite(err));
    CHECK(err >= 0.0);
    CHECK(cov >= 0.0);
    CHECK(cov <= 1.0);
    CHECK(score > 0.0);
}

TEST_CASE("refitting with the same seed reproduces every output byte") {
    TempDir dir("determinism");
    REQUIRE(run_cli(simulate_args(dir)).code == 0);
    const std::vector<std::string> base{"fit",      "--data", dir.file("sim/train.csv"),
                                        "--m",      "4",      "--L",
                                        "2",        "--n-iter", "30",
                                        "--burn-in", "10",     "--seed",
                                        "3"};
    std::vector<std::string> first = base;
    first.insert(first.end(), {"--out", dir.file("run_a")});
    std::vector<std::string> second = base;
    second.insert(second.end(), {"--out", dir.file("run_b")});
    REQUIRE(run_cli(first).code == 0);
    REQUIRE(run_cli(second).code == 0);
    for (const char* name : {"scheme.txt", "data.txt", "samples.txt", "manifest.txt"})
        CHECK(read_file(dir.file(std::string("run_a/") + name)) ==
              read_file(dir.file(std::string("run_b/") + name)));

    extract_grid(dir.file("sim/test.csv"), dir.file("grid.csv"));
    REQUIRE(run_cli({"predict", "--run", dir.file("run_a"), "--at", dir.file("grid.csv"),
                     "--out", dir.file("p1.csv")})
                .code == 0);
    REQUIRE(run_cli({"predict", "--run", dir.file("run_b"), "--at", dir.file("grid.csv"),
                     "--out", dir.file("p2.csv")})
                .code == 0);
    CHECK(read_file(dir.file("p1.csv")) == read_file(dir.file("p2.csv")));
}

TEST_CASE("a smaller confidence level narrows the interval") {
    TempDir dir("alpha");
    REQUIRE(run_cli(simulate_args(dir)).code == 0);
    REQUIRE(run_cli({"fit", "--data", dir.file("sim/train.csv"), "--out", dir.file("run"),
                     "--m", "4", "--L", "1", "--n-iter", "40", "--burn-in", "10", "--seed", "5"})
                .code == 0);
    write_file(dir.file("grid.csv"), "x1\n0.2\n0.5\n0.8\n");
    REQUIRE(run_cli({"predict", "--run", dir.file("run"), "--at", dir.file("grid.csv"), "--out",
                     dir.file("wide.csv")})
                .code == 0);
    REQUIRE(run_cli({"predict", "--run", dir.file("run"), "--at", dir.file("grid.csv"), "--out",
                     dir.file("narrow.csv"), "--alpha", "0.5"})
                .code == 0);
    auto mean_width = [](const std::string& csv) {
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        double total = 0.0;
        int rows = 0;
        while (std::getline(in, line)) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            const auto c3 = line.find(',', c2 + 1);
            total += std::stod(line.substr(c3 + 1)) -
                     std::stod(line.substr(c2 + 1, c3 - c2 - 1));
            ++rows;
        }
        return total / rows;
    };
    CHECK(mean_width(read_file(dir.file("narrow.csv"))) <
          mean_width(read_file(dir.file("wide.csv"))));
    CHECK(run_cli({"predict", "--run", dir.file("run"), "--at", dir.file("grid.csv"),
                   "--alpha", "huh"})
              .code == 2);
}

TEST_CASE("tampered run directories are refused") {
    TempDir dir("tamper");
    REQUIRE(run_cli(simulate_args(dir)).code == 0);
    REQUIRE(run_cli({"fit", "--data", dir.file("sim/train.csv"), "--out", dir.file("run"),
                     "--m", "4", "--L", "1", "--n-iter", "20", "--burn-in", "5", "--seed", "7"})
                .code == 0);
    write_file(dir.file("grid.csv"), "x1\n0.5\n");
    write_file(dir.file("run/data.txt"), read_file(dir.file("run/data.txt")) + "tail\n");
    const CliResult r = run_cli(
        {"predict", "--run", dir.file("run"), "--at", dir.file("grid.csv")});
    CHECK(r.code == 3);
    CHECK(r.err.find("does not match") != std::string::npos);
}

TEST_CASE("a grid of the wrong dimension is a data problem") {
    TempDir dir("griddim");
    REQUIRE(run_cli(simulate_args(dir)).code == 0);
    REQUIRE(run_cli({"fit", "--data", dir.file("sim/train.csv"), "--out", dir.file("run"),
                     "--m", "4", "--L", "1", "--n-iter", "20", "--burn-in", "5"})
                .code == 0);
    write_file(dir.file("grid.csv"), "x1,x2\n0.5,0.5\n");
    const CliResult r = run_cli(
        {"predict", "--run", dir.file("run"), "--at", dir.file("grid.csv")});
    CHECK(r.code == 3);
    CHECK(r.err.find("2 coordinates") != std::string::npos);
}

TEST_CASE("cross-validation reports a selection") {
    TempDir dir("cv");
    REQUIRE(run_cli(simulate_args(dir)).code == 0);
    const CliResult r = run_cli({"cv", "--data", dir.file("sim/train.csv"), "--m", "4", "--L",
                                 "1,2", "--folds", "3", "--n-iter", "20", "--burn-in", "5",
                                 "--seed", "9", "--out", dir.file("cv.csv")});
    REQUIRE(r.code == 0);
    const std::string report = read_file(dir.file("cv.csv"));
    CHECK(report.rfind("L,mean_mse,se_mse\n", 0) == 0);
    CHECK(report.find("\n1,") != std::string::npos);
    CHECK(report.find("\n2,") != std::string::npos);
    CHECK(report.find("selected_L=") != std::string::npos);
    CHECK(run_cli({"cv", "--data", dir.file("sim/train.csv"), "--m", "4", "--L", "0..2"}).code ==
          2);
}

TEST_CASE("layer ranges expand like the comma form") {
    TempDir dir("cvrange");
    REQUIRE(run_cli(simulate_args(dir)).code == 0);
    const std::vector<std::string> common{"--data", dir.file("sim/train.csv"), "--m", "4",
                                          "--folds", "3", "--n-iter", "15", "--burn-in", "5",
                                          "--seed", "9"};
    std::vector<std::string> range{"cv", "--L", "1..2", "--out", dir.file("a.csv")};
    std::vector<std::string> list{"cv", "--L", "1,2", "--out", dir.file("b.csv")};
    range.insert(range.end(), common.begin(), common.end());
    list.insert(list.end(), common.begin(), common.end());
    REQUIRE(run_cli(range).code == 0);
    REQUIRE(run_cli(list).code == 0);
    CHECK(read_file(dir.file("a.csv")) == read_file(dir.file("b.csv")));
}

TEST_CASE("the study command writes rows and a quartile summary") {
    TempDir dir("study");
    const CliResult r = run_cli({"study", "--batches", "2", "--configs", "4:1", "--n", "60",
                                 "--train-size", "45", "--n-iter", "20", "--burn-in", "5",
                                 "--seed", "13", "--out", dir.file("study.csv")});
    REQUIRE(r.code == 0);
    const std::string table = read_file(dir.file("study.csv"));
    CHECK(table.rfind("batch,config,scenario,metric,value\n", 0) == 0);
    CHECK(table.find("1,m4_L1,random,mse,") != std::string::npos);
    CHECK(table.find("2,m4_L1,random,interval_score,") != std::string::npos);
    CHECK(table.find("# summary\n") != std::string::npos);
    CHECK(table.find("config,metric,q1,median,q3\n") != std::string::npos);
    CHECK(run_cli({"study", "--batches", "1", "--configs", "4-1"}).code == 2);
}

TEST_CASE("prune-info prints the per-component table") {
    TempDir dir("pruneinfo");
    REQUIRE(run_cli(simulate_args(dir)).code == 0);
    const CliResult r = run_cli({"prune-info", "--data", dir.file("sim/train.csv"), "--m", "4",
                                 "--L", "2", "--out", dir.file("scheme.txt")});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("id,layer,parent,active,points\n", 0) == 0);
    CHECK(r.out.find("1,1,0,1,45") != std::string::npos);  // the root holds everything
    CHECK(r.out.find("active_components=") != std::string::npos);
    CHECK(fs::exists(dir.path / "scheme.txt"));
}

TEST_CASE("metrics refuses mismatched tables") {
    TempDir dir("metricsbad");
    write_file(dir.file("pred.csv"), "mean,lower,upper\n0,0,1\n");
    write_file(dir.file("truth.csv"), "x1,y\n0.1,0\n0.2,1\n");
    const CliResult r = run_cli(
        {"metrics", "--pred", dir.file("pred.csv"), "--truth", dir.file("truth.csv")});
    CHECK(r.code == 3);
    CHECK(r.err.find("row counts differ") != std::string::npos);
}
