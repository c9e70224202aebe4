#ifndef EPSLAB_CUTOFF_HPP
#define EPSLAB_CUTOFF_HPP

#include "epslab/grid.hpp"

namespace epslab {

/// Ramp for the exterior cutoffs: 0 on (-inf,1], 1 on [2,infty), and the
/// quintic smoothstep 6t^5-15t^4+10t^3 (t = s-1) in between, which is C^2
/// and monotone. Fixed for reproducibility.
double cutoff_ramp(double s);

/// Nodal values of theta_bar_k(x) = ramp(|x|^2/k^2) and theta_k = theta_bar_k^2.
/// theta_k vanishes for |x| <= k and equals 1 for |x| >= sqrt(2) k.
struct CutoffField {
    int k = 0;
    Field theta_bar;
    Field theta;
};

CutoffField cutoff_field(const Grid& grid, int k);

} // namespace epslab

#endif
