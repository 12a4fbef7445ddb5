#pragma once

#include <stdexcept>
#include <string>

namespace tamix {

// Raised for malformed or inconsistent configuration (CLI exit code 2).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for invalid datasets, manifests or annotation files (CLI exit code 3).
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for runtime failures such as divergence or shape mismatches mid-run
// (CLI exit code 4).
struct compute_error : std::runtime_error {
    explicit compute_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tamix
