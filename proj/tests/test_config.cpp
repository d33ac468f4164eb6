#include <doctest.h>

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sagp/config.hpp"
#include "sagp/errors.hpp"

using sagp::apply_config;
using sagp::branching_to_string;
using sagp::load_manifest;
using sagp::parse_branching;
using sagp::parse_key_values;
using sagp::RunConfig;
using sagp::save_manifest;

namespace {

std::map<std::string, std::string> parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in, "test.cfg");
}

}  // namespace

TEST_CASE("defaults form a valid configuration") {
    RunConfig cfg;
    CHECK(cfg.m == 10);
    CHECK(cfg.L == 3);
    CHECK(cfg.branching.empty());
    CHECK(cfg.priors == "amplitude_decay");
    CHECK(cfg.alpha == 0.05);
    CHECK(cfg.seed == 42);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("key=value text ignores comments and whitespace") {
    const auto keys = parse_text("# a comment\n  m = 7 \n\nL=2\n   # indented comment\nseed=9\n");
    REQUIRE(keys.size() == 3);
    CHECK(keys.at("m") == "7");
    CHECK(keys.at("L") == "2");
    CHECK(keys.at("seed") == "9");
}

TEST_CASE("malformed lines and duplicates are all listed") {
    try {
        (void)parse_text("m=1\nno equals sign\nm=2\n=5\n");
        FAIL("expected invalid_input_error");
    } catch (const sagp::invalid_input_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("test.cfg:") != std::string::npos);
        CHECK(msg.find("line 2: expected key=value") != std::string::npos);
        CHECK(msg.find("line 3: duplicate key 'm'") != std::string::npos);
        CHECK(msg.find("line 4: empty key") != std::string::npos);
    }
}

TEST_CASE("values land on the right fields") {
    RunConfig cfg;
    apply_config(cfg,
                 parse_text("m=5\nL=2\nbranching=3,2\npriors=paper_literal\nalpha=0.1\n"
                            "seed=7\nn_iter=500\nburn_in=100\nthin=2\ninit_bandwidth=0.5\n"
                            "adapt_every=25\nresample_every=10\n"),
                 "test.cfg");
    CHECK(cfg.m == 5);
    CHECK(cfg.L == 2);
    CHECK(cfg.branching == std::vector<int>{3, 2});
    CHECK(cfg.priors == "paper_literal");
    CHECK(cfg.alpha == 0.1);
    CHECK(cfg.seed == 7);
    CHECK(cfg.mcmc.n_iter == 500);
    CHECK(cfg.mcmc.burn_in == 100);
    CHECK(cfg.mcmc.thin == 2);
    CHECK(cfg.mcmc.init_bandwidth == 0.5);
    CHECK(cfg.mcmc.adapt_every == 25);
    CHECK(cfg.mcmc.resample_every == 10);
    CHECK(cfg.mcmc.seed == 7);  // the one seed feeds the chain
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("later applications override earlier ones key by key") {
    RunConfig cfg;
    apply_config(cfg, parse_text("m=5\nL=4\n"), "file");
    apply_config(cfg, parse_text("m=8\n"), "flags");
    CHECK(cfg.m == 8);  // the flag wins
    CHECK(cfg.L == 4);  // the file survives
    CHECK(cfg.priors == "amplitude_decay");  // the default survives
}

TEST_CASE("unknown keys and unparsable values are all reported") {
    RunConfig cfg;
    try {
        apply_config(cfg, parse_text("m=abc\nwibble=1\nalpha=much\n"), "test.cfg");
        FAIL("expected invalid_input_error");
    } catch (const sagp::invalid_input_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("key m: cannot parse 'abc'") != std::string::npos);
        CHECK(msg.find("unknown key 'wibble'") != std::string::npos);
        CHECK(msg.find("key alpha: cannot parse 'much'") != std::string::npos);
    }
    CHECK_THROWS_AS(apply_config(cfg, parse_text("seed=-1\n"), "t"), sagp::invalid_input_error);
    CHECK_THROWS_AS(apply_config(cfg, parse_text("branching=2,x\n"), "t"),
                    sagp::invalid_input_error);
}

TEST_CASE("validation lists every violated constraint at once") {
    RunConfig cfg;
    cfg.m = 0;
    cfg.L = 0;
    cfg.branching = {1};
    cfg.priors = "nonsense";
    cfg.alpha = 1.5;
    cfg.mcmc.n_iter = 0;
    try {
        cfg.validate();
        FAIL("expected invalid_input_error");
    } catch (const sagp::invalid_input_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("config:") != std::string::npos);
        CHECK(msg.find("m must") != std::string::npos);
        CHECK(msg.find("L must") != std::string::npos);
        CHECK(msg.find("branching factors") != std::string::npos);
        CHECK(msg.find("priors must") != std::string::npos);
        CHECK(msg.find("alpha must") != std::string::npos);
        CHECK(msg.find("n_iter") != std::string::npos);
    }
}

TEST_CASE("branching lists parse both ways") {
    CHECK(parse_branching("2") == std::vector<int>{2});
    CHECK(parse_branching("2,3,2") == std::vector<int>{2, 3, 2});
    CHECK(branching_to_string({2, 3, 2}) == "2,3,2");
    CHECK(branching_to_string({}) == "");
    CHECK_THROWS_AS((void)parse_branching(""), sagp::invalid_input_error);
    CHECK_THROWS_AS((void)parse_branching("2,,3"), sagp::invalid_input_error);
    CHECK_THROWS_AS((void)parse_branching("a"), sagp::invalid_input_error);
}

TEST_CASE("a manifest records the run and reads back identically") {
    RunConfig cfg;
    cfg.m = 6;
    cfg.L = 2;
    cfg.branching = {2, 3};
    cfg.priors = "paper_literal";
    cfg.alpha = 0.1;
    cfg.seed = 99;
    cfg.mcmc.n_iter = 400;
    cfg.mcmc.burn_in = 50;
    cfg.mcmc.thin = 2;
    cfg.mcmc.init_bandwidth = 0.25;
    cfg.mcmc.seed = cfg.seed;
    std::ostringstream out;
    save_manifest(out, cfg, "abc123", "def456");
    std::istringstream in(out.str());
    std::string scheme_hash, data_hash;
    const RunConfig back = load_manifest(in, &scheme_hash, &data_hash);
    CHECK(scheme_hash == "abc123");
    CHECK(data_hash == "def456");
    CHECK(back.m == cfg.m);
    CHECK(back.L == cfg.L);
    CHECK(back.branching == cfg.branching);
    CHECK(back.priors == cfg.priors);
    CHECK(back.alpha == cfg.alpha);
    CHECK(back.seed == cfg.seed);
    CHECK(back.mcmc.n_iter == cfg.mcmc.n_iter);
    CHECK(back.mcmc.burn_in == cfg.mcmc.burn_in);
    CHECK(back.mcmc.thin == cfg.mcmc.thin);
    CHECK(back.mcmc.init_bandwidth == cfg.mcmc.init_bandwidth);
    CHECK(back.mcmc.seed == cfg.seed);
    // a second save of the reloaded config is byte-identical
    std::ostringstream out2;
    save_manifest(out2, back, scheme_hash, data_hash);
    CHECK(out.str() == out2.str());
}

TEST_CASE("an unresolved branching survives the manifest") {
    RunConfig cfg;  // branching empty = resolved at fit time
    std::ostringstream out;
    save_manifest(out, cfg, "a", "b");
    std::istringstream in(out.str());
    const RunConfig back = load_manifest(in);
    CHECK(back.branching.empty());
}

TEST_CASE("manifests missing their hashes are refused") {
    RunConfig cfg;
    std::ostringstream out;
    save_manifest(out, cfg, "a", "b");
    const std::string text = out.str();
    {
        std::istringstream in(std::string(text).erase(text.find("scheme_hash"), 14));
        CHECK_THROWS_AS((void)load_manifest(in), sagp::data_error);
    }
    {
        std::istringstream in("scheme_hash=a\ndata_hash=b\nm=0\n");
        CHECK_THROWS_AS((void)load_manifest(in), sagp::invalid_input_error);
    }
}
