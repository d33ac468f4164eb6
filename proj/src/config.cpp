#include "sagp/config.hpp"

#include <fstream>
#include <sstream>

#include "sagp/errors.hpp"
#include "sagp/textio.hpp"

namespace sagp {
namespace {

std::string trim(std::string_view sv) {
    std::size_t b = 0, e = sv.size();
    while (b < e && (sv[b] == ' ' || sv[b] == '\t')) ++b;
    while (e > b && (sv[e - 1] == ' ' || sv[e - 1] == '\t')) --e;
    return std::string(sv.substr(b, e - b));
}

}  // namespace

void RunConfig::validate() const {
    std::string problems;
    auto complain = [&](const std::string& msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    if (m < 1) complain("m must be at least 1");
    if (L < 1) complain("L must be at least 1");
    for (const int b : branching)
        if (b < 2) complain("branching factors must be at least 2");
    if (priors != "amplitude_decay" && priors != "paper_literal")
        complain("priors must be amplitude_decay or paper_literal");
    if (!(alpha > 0.0 && alpha <= 1.0)) complain("alpha must lie in (0,1]");
    try {
        mcmc.validate();
    } catch (const invalid_input_error& e) {
        complain(e.what());
    }
    if (!problems.empty()) throw invalid_input_error("config: " + problems);
}

std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& name) {
    std::map<std::string, std::string> keys;
    std::string line;
    long line_no = 0;
    std::string problems;
    auto complain = [&](const std::string& msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view stripped = strip_cr(line);
        const std::string text = trim(stripped);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            complain("line " + std::to_string(line_no) + ": expected key=value");
            continue;
        }
        const std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) {
            complain("line " + std::to_string(line_no) + ": empty key");
            continue;
        }
        if (keys.count(key)) {
            complain("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            continue;
        }
        keys[key] = value;
    }
    if (!problems.empty()) throw invalid_input_error(name + ": " + problems);
    return keys;
}

std::map<std::string, std::string> parse_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input_error(path + ": cannot open file");
    return parse_key_values(in, path);
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& keys,
                  const std::string& source) {
    std::string problems;
    auto complain = [&](const std::string& msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    auto bad_value = [&](const std::string& key, const std::string& value) {
        complain("key " + key + ": cannot parse '" + value + "'");
    };

    for (const auto& [key, value] : keys) {
        std::int64_t iv = 0;
        double dv = 0.0;
        if (key == "m") {
            parse_int64(value, iv) ? void(cfg.m = static_cast<int>(iv)) : bad_value(key, value);
        } else if (key == "L") {
            parse_int64(value, iv) ? void(cfg.L = static_cast<int>(iv)) : bad_value(key, value);
        } else if (key == "branching") {
            if (value.empty()) {
                cfg.branching.clear();  // empty = per-dimension default
            } else {
                try {
                    cfg.branching = parse_branching(value);
                } catch (const invalid_input_error&) {
                    bad_value(key, value);
                }
            }
        } else if (key == "priors") {
            cfg.priors = value;
        } else if (key == "alpha") {
            parse_double(value, dv) ? void(cfg.alpha = dv) : bad_value(key, value);
        } else if (key == "seed") {
            parse_int64(value, iv) && iv >= 0
                ? void(cfg.seed = static_cast<std::uint64_t>(iv))
                : bad_value(key, value);
        } else if (key == "n_iter") {
            parse_int64(value, iv) ? void(cfg.mcmc.n_iter = iv) : bad_value(key, value);
        } else if (key == "burn_in") {
            parse_int64(value, iv) ? void(cfg.mcmc.burn_in = iv) : bad_value(key, value);
        } else if (key == "thin") {
            parse_int64(value, iv) ? void(cfg.mcmc.thin = iv) : bad_value(key, value);
        } else if (key == "init_bandwidth") {
            parse_double(value, dv) ? void(cfg.mcmc.init_bandwidth = dv) : bad_value(key, value);
        } else if (key == "adapt_every") {
            parse_int64(value, iv) ? void(cfg.mcmc.adapt_every = iv) : bad_value(key, value);
        } else if (key == "resample_every") {
            parse_int64(value, iv) ? void(cfg.mcmc.resample_every = iv) : bad_value(key, value);
        } else {
            complain("unknown key '" + key + "'");
        }
    }
    cfg.mcmc.seed = cfg.seed;
    if (!problems.empty()) throw invalid_input_error(source + ": " + problems);
}

std::vector<int> parse_branching(const std::string& text) {
    std::vector<int> out;
    for (const auto part : split(text, ',')) {
        std::int64_t v;
        if (!parse_int64(part, v))
            throw invalid_input_error("branching: cannot parse '" + std::string(part) + "'");
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) throw invalid_input_error("branching: empty list");
    return out;
}

std::string branching_to_string(const std::vector<int>& branching) {
    std::string out;
    for (std::size_t i = 0; i < branching.size(); ++i)
        out += (i ? "," : "") + std::to_string(branching[i]);
    return out;
}

void save_manifest(std::ostream& out, const RunConfig& cfg, const std::string& scheme_hash,
                   const std::string& data_hash) {
    out << "m=" << cfg.m << "\n";
    out << "L=" << cfg.L << "\n";
    out << "branching=" << branching_to_string(cfg.branching) << "\n";
    out << "priors=" << cfg.priors << "\n";
    out << "alpha=" << format_double(cfg.alpha) << "\n";
    out << "seed=" << cfg.seed << "\n";
    out << "n_iter=" << cfg.mcmc.n_iter << "\n";
    out << "burn_in=" << cfg.mcmc.burn_in << "\n";
    out << "thin=" << cfg.mcmc.thin << "\n";
    out << "init_bandwidth=" << format_double(cfg.mcmc.init_bandwidth) << "\n";
    out << "adapt_every=" << cfg.mcmc.adapt_every << "\n";
    out << "resample_every=" << cfg.mcmc.resample_every << "\n";
    out << "scheme_hash=" << scheme_hash << "\n";
    out << "data_hash=" << data_hash << "\n";
}

RunConfig load_manifest(std::istream& in, std::string* scheme_hash, std::string* data_hash) {
    auto keys = parse_key_values(in, "manifest");
    if (auto it = keys.find("scheme_hash"); it != keys.end()) {
        if (scheme_hash) *scheme_hash = it->second;
        keys.erase(it);
    } else {
        throw data_error("manifest: missing scheme_hash");
    }
    if (auto it = keys.find("data_hash"); it != keys.end()) {
        if (data_hash) *data_hash = it->second;
        keys.erase(it);
    } else {
        throw data_error("manifest: missing data_hash");
    }
    RunConfig cfg;
    apply_config(cfg, keys, "manifest");
    cfg.validate();
    return cfg;
}

}  // namespace sagp
