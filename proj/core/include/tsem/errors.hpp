#ifndef TSEM_ERRORS_HPP
#define TSEM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tsem {

// Shape/axis disagreements between tensors or layers.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, divergence, failed numeric routines.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: backward on a tape-less tensor, bad config, unknown method id.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// File parsing / dataset ingestion problems.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tsem

#endif
