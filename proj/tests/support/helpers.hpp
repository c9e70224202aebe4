#ifndef EPSLAB_TEST_HELPERS_HPP
#define EPSLAB_TEST_HELPERS_HPP

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "epslab/dynamics.hpp"
#include "epslab/nonlinearity.hpp"
#include "epslab/operator.hpp"

namespace epslab::test {

/// Interval (0, len) realized on the centered box [-len/2, len/2].
inline Grid interval_grid(double len, int n) {
    GridSpec spec;
    spec.dimension = 1;
    spec.extent[0] = len / 2.0;
    spec.nodes[0] = n;
    return Grid::build(spec);
}

/// Samples fn(s) with s in (0, len), i.e. the shifted coordinate.
inline Field sample_interval(const Grid& grid,
                             const std::function<double(double)>& fn) {
    return grid.sample([&](const std::array<double, 3>& x) {
        return fn(x[0] + grid.extent(0));
    });
}

inline DiscreteOperator laplacian(const Grid& grid, double beta = 0.0) {
    return DiscreteOperator::build(grid, CoefficientField::constant(grid, 1.0, beta));
}

/// Laplacian on (0, pi): lambda1 ~ 1, eigenvector sin(s).
inline Grid pi_grid(int n) { return interval_grid(M_PI, n); }

inline Nonlinearity chafee_infante(const Grid& grid, double lambda = 2.0,
                                   double gamma = 1.0) {
    return Nonlinearity::cubic_const(grid, lambda, gamma, 0.0, 4.0);
}

inline Nonlinearity zero_nonlinearity(const Grid& grid) {
    return Nonlinearity::tabulated(grid, -1.0, 1.0, {0, 0, 0, 0}, 1.0, 0.0);
}

/// Newton polish of A_h u = f(u) from a guess; returns the equilibrium.
inline Field newton_equilibrium(const DiscreteOperator& op, const Nonlinearity& nl,
                                Field u, double tol = 1e-12, int max_iter = 50) {
    const Eigen::MatrixXd a(op.matrix());
    for (int it = 0; it < max_iter; ++it) {
        const Field r = op.apply(u) - nl.f(u);
        if (r.norm() <= tol * std::max(1.0, u.norm())) break;
        Eigen::MatrixXd j = a;
        const Field d = nl.dfu(u);
        for (Eigen::Index i = 0; i < u.size(); ++i) j(i, i) -= d[i];
        u -= j.partialPivLu().solve(r);
    }
    return u;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

} // namespace epslab::test

#endif
