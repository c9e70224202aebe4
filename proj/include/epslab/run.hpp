#ifndef EPSLAB_RUN_HPP
#define EPSLAB_RUN_HPP

#include <string>
#include <vector>

namespace epslab {

/// Config-driven experiment runner behind the epslab binary. Subcommands:
/// simulate, energy-audit, growth-audit, tails, attractor, sweep,
/// oracle-check. Returns the process exit code: 0 success, 1 audit/runtime
/// failure, 2 configuration error.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

} // namespace epslab

#endif
