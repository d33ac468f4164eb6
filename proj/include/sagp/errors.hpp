#pragma once

#include <stdexcept>
#include <string>

namespace sagp {

// Error taxonomy, kept deliberately small. The CLI maps these onto exit codes
// (usage 2, data 3, numerical 4); library callers can catch them individually.

// An argument violates an operation's preconditions (wrong dimension,
// non-finite coordinate, empty vector, ...).
struct invalid_input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The data cannot support the requested model (too few rows, constant
// column, unparseable cell, missing file).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numerical routine failed beyond recovery (factorization of an
// indefinite matrix after the full jitter schedule).
struct numerical_error : std::runtime_error {
    numerical_error(const std::string& what, double final_jitter = 0.0)
        : std::runtime_error(what), final_jitter(final_jitter) {}
    double final_jitter;
};

// A "cannot happen" condition happened; indicates a bug, not bad input.
struct internal_error : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace sagp
