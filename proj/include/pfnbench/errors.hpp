#pragma once

#include <stdexcept>
#include <string>

namespace pfnbench {

// Error taxonomy shared across the library. Every throw site uses one of
// these so callers (and the CLI exit-code mapping) can distinguish bad
// configuration from runtime faults and numeric aborts.

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or length mismatch between operands.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// NaN/Inf where finite values are required, or a numeric contract broke.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Input exceeds a fixed model capacity (feature count, class count, tokens).
struct CapacityError : Error {
    explicit CapacityError(const std::string& msg) : Error(msg) {}
};

// Invalid user-supplied configuration or unsatisfiable protocol constraint.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Out-of-range index (class label, row, column).
struct IndexError : Error {
    explicit IndexError(const std::string& msg) : Error(msg) {}
};

// Malformed input file.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Filesystem failure (open/read/write).
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Stored data fails its checksum or structural validation.
struct CorruptionError : Error {
    explicit CorruptionError(const std::string& msg) : Error(msg) {}
};

// Synthetic-task generation could not satisfy its invariants in budget.
struct GenerationError : Error {
    explicit GenerationError(const std::string& msg) : Error(msg) {}
};

}  // namespace pfnbench
