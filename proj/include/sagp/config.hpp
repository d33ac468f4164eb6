#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sagp/sampler.hpp"

namespace sagp {

// Everything a fit needs beyond the data itself. One seed feeds the whole
// pipeline; the MCMC seed is always set from it.
struct RunConfig {
    int m = 10;
    int L = 3;
    std::vector<int> branching;  // empty = 2 per dimension, resolved at fit time
    std::string priors = "amplitude_decay";
    double alpha = 0.05;
    std::uint64_t seed = 42;
    McmcConfig mcmc;  // mcmc.seed is overwritten with `seed`

    void validate() const;  // throws listing every violated constraint
};

// Flat key=value text, '#' comments, unknown keys rejected. Later calls can
// override individual keys (CLI flags beat the file, the file beats defaults).
std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& name);
std::map<std::string, std::string> parse_key_values_file(const std::string& path);

// Applies keys onto cfg, collecting every bad key/value into one error.
void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& keys,
                  const std::string& source);

std::vector<int> parse_branching(const std::string& text);  // "2" or "2,3,2"
std::string branching_to_string(const std::vector<int>& branching);

void save_manifest(std::ostream& out, const RunConfig& cfg, const std::string& scheme_hash,
                   const std::string& data_hash);
RunConfig load_manifest(std::istream& in, std::string* scheme_hash = nullptr,
                        std::string* data_hash = nullptr);

}  // namespace sagp
