#ifndef EPSLAB_TAILS_HPP
#define EPSLAB_TAILS_HPP

#include <vector>

#include "epslab/cutoff.hpp"
#include "epslab/dynamics.hpp"

namespace epslab {

/// Rejects radii whose ramp region [k, sqrt(2) k] does not fit inside the
/// box (the cutoff would be identically zero beyond it).
void check_tail_radius(const Grid& grid, int k);

/// Exterior energy |theta_k u|_H1^2 + eps |theta_k v|_L2^2.
double tail_energy(const DiscreteOperator& op, const HyperbolicState& s, int k);
double tail_energy(const DiscreteOperator& op, const HyperbolicState& s,
                   const CutoffField& cutoff);

/// Decomposition of the exterior energy: gradient part of the H1 norm, the
/// beta part, and the eps-weighted kinetic part. The beta and kinetic parts
/// are exactly monotone under k-refinement; the gradient part carries the
/// cutoff commutator and is reported separately.
struct TailEnergyParts {
    double grad = 0;
    double beta = 0;
    double kinetic = 0;
    double total() const { return grad + beta + kinetic; }
};
TailEnergyParts tail_energy_parts(const DiscreteOperator& op, const HyperbolicState& s,
                                  const CutoffField& cutoff);

/// tail_energy over (snapshot time) x (cutoff radius).
struct TailProfile {
    std::vector<double> times;
    std::vector<int> ks;
    Eigen::MatrixXd values; // rows: times, cols: ks
};
TailProfile tail_profile(const DiscreteOperator& op, const Trajectory& traj,
                         const std::vector<int>& ks);

/// Joint nonnegative least-squares fit of every profile column to
/// c_k + M exp(-rho t): rho and M shared across columns, c_k per column.
/// Fitting uses log-spaced time samples after discarding the first 10% of
/// the span. Columns that vanish identically are flagged and excluded.
struct TailFit {
    std::vector<double> c_k;
    double m = 0;
    double rho = 0;
    std::vector<double> column_residuals; // rms per column over the fit samples
    std::vector<char> degenerate;
    int samples_used = 0;
};
TailFit tail_fit(const TailProfile& profile);

} // namespace epslab

#endif
