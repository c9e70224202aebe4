#ifndef EPSLAB_ERRORS_HPP
#define EPSLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epslab {

/// Bad user input: grid/coefficient/config parameters that violate a
/// documented precondition. CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A verification audit found a violated inequality. CLI maps this to exit 1.
class audit_error : public std::runtime_error {
public:
    explicit audit_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Iterative solver or eigensolver failed to reach its tolerance.
class numerics_error : public std::runtime_error {
public:
    explicit numerics_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values appeared during time stepping.
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& msg, double t, double dt)
        : std::runtime_error(msg), t(t), dt(dt) {}
    double t;
    double dt;
};

} // namespace epslab

#endif
