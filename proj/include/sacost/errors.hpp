#pragma once

#include <stdexcept>
#include <string>

namespace sacost {

// Input/schema problems: malformed documents, invariant violations,
// shape mismatches. Maps to CLI exit code 1.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Cost-model problems: missing LUT, unsupported layer for a model.
// Maps to CLI exit code 2.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Simulation infeasibility (layer does not fit on the accelerator).
// Maps to CLI exit code 2.
class SimError : public std::runtime_error {
public:
    SimError(const std::string& msg, int layer_index = -1)
        : std::runtime_error(msg), layer_index_(layer_index) {}
    int layer_index() const { return layer_index_; }

private:
    int layer_index_;
};

// Optimization failures (non-finite loss or gradient). Exit code 3.
class OptimError : public std::runtime_error {
public:
    OptimError(const std::string& msg, int iteration = -1)
        : std::runtime_error(msg), iteration_(iteration) {}
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

} // namespace sacost
