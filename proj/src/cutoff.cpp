#include "epslab/cutoff.hpp"

#include "epslab/errors.hpp"

namespace epslab {

double cutoff_ramp(double s) {
    if (s <= 1.0) return 0.0;
    if (s >= 2.0) return 1.0;
    const double t = s - 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

CutoffField cutoff_field(const Grid& grid, int k) {
    if (k < 1) throw config_error("cutoff_field: k must be >= 1, got " + std::to_string(k));
    CutoffField cf;
    cf.k = k;
    cf.theta_bar.resize(grid.size());
    cf.theta.resize(grid.size());
    const double k2 = static_cast<double>(k) * static_cast<double>(k);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double r = grid.radius(i);
        const double tb = cutoff_ramp(r * r / k2);
        cf.theta_bar[i] = tb;
        cf.theta[i] = tb * tb;
    }
    return cf;
}

} // namespace epslab
