#pragma once

#include <stdexcept>
#include <string>

namespace mdlab {

// Error categories map onto the CLI exit codes (2/3/4).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

class InvariantViolation : public std::runtime_error {
public:
    explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw PreconditionError(what);
}

inline void requireConfig(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

}  // namespace mdlab
