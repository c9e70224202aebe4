#ifndef EPSLAB_ORACLE_HPP
#define EPSLAB_ORACLE_HPP

#include <Eigen/Dense>

#include "epslab/dynamics.hpp"
#include "epslab/nonlinearity.hpp"
#include "epslab/operator.hpp"

namespace epslab {

/// Exact solution of the linear (f == 0) two-component system at time t,
/// computed mode by mode from the dense eigendecomposition: for each
/// eigenvalue lam the scalar problem eps s^2 + s + lam = 0 is solved in
/// closed form (complex roots handled in real arithmetic, confluent roots
/// by the degenerate formula). Machine precision, independent of the
/// time steppers.
HyperbolicState dense_linear_solution(const DiscreteOperator& op, double eps,
                                      const HyperbolicState& z0, double t);

/// H^-1 norm through a dense Cholesky factorization; reference for the
/// sparse/iterative path.
double dense_hminus1(const Field& w, const DiscreteOperator& op);

/// Max nodewise |(F(u+du) - F(u-du))/(2 du) - f(u)|: antiderivative
/// consistency check, O(du^2) for smooth families.
double fd_gradient_check(const Nonlinearity& nl, const Field& u, double du);

/// Brute-force dense assembly of the flux-form operator; reference for the
/// sparse assembly.
Eigen::MatrixXd dense_operator_matrix(const Grid& grid, const CoefficientField& coeffs);

} // namespace epslab

#endif
