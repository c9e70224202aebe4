#ifndef EPSLAB_ENERGY_HPP
#define EPSLAB_ENERGY_HPP

#include <limits>
#include <vector>

#include "epslab/dynamics.hpp"

namespace epslab {

/// Per-trajectory record of a functional and the residual of its
/// differential identity (central differences at interior snapshots).
/// When a dt-ladder has been run, the ladder arrays and the fitted
/// convergence order (log-log least squares, with R^2) are attached.
struct EnergyReport {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> residuals; // size = snapshots - 2
    double worst = 0;
    double dt = 0;

    std::vector<double> ladder_dts;
    std::vector<double> ladder_worst;
    double order = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
};

/// (1/2)<u,u>_H1 + (eps/2)<v,v>_L2 - integral of F.
double tilde_v(const DiscreteOperator& op, const Nonlinearity& nl,
               const HyperbolicState& s);

/// (1/2)<v,v>_L2 + (eps/2)<w,w>_H-1 on the lower rung of the hierarchy.
double v_lower(const DiscreteOperator& op, const Field& v, const Field& w, double eps);

/// Damped functional with shift delta:
/// (eps/2)|delta u + v|^2 + (1/2)<A grad u, grad u> +
/// (1/2)<(beta - delta + delta^2 eps) u, u> - integral of F,
/// the gradient term realized as inner_h1 minus the beta part.
double f_eps(const DiscreteOperator& op, const Nonlinearity& nl,
             const HyperbolicState& s, double delta);

/// Limit-flow counterpart: (1/2)<A grad u, grad u> + (1/2)<(beta-delta)u,u>
/// - integral of F.
double f_zero(const DiscreteOperator& op, const Nonlinearity& nl, const Field& u,
              double delta);

/// Residual of (tilde_v o z)' = -|v|^2_L2 along a stride-1 trajectory.
EnergyReport tilde_v_identity(const DiscreteOperator& op, const Nonlinearity& nl,
                              const Trajectory& traj);

/// Residual of alpha' = -<w,w>_H-1 + <g,w>_H-1 with w the acceleration and
/// g = (f_u o u) v.
EnergyReport v_identity(const DiscreteOperator& op, const Nonlinearity& nl,
                        const Trajectory& traj);

/// Residual of (f_eps o z)' + 2 delta f_eps(z) =
/// (2 delta eps - 1)|delta u + v|^2 + delta <u, f(u)> - 2 delta int F.
EnergyReport f_eps_identity(const DiscreteOperator& op, const Nonlinearity& nl,
                            const Trajectory& traj, double delta);

/// Residual of (f_zero o u)' + 2 delta f_zero(u) =
/// -|delta u + eta|^2 + delta <u, f(u)> - 2 delta int F, eta = -A_h u + f(u).
EnergyReport f_zero_identity(const DiscreteOperator& op, const Nonlinearity& nl,
                             const Trajectory& traj, double delta);

struct UniformBoundReport {
    double r = 0; // sup |u|_H1^2 + eps |v|_L2^2
    double s = 0; // sup |v|_L2^2 + eps |w|_H-1^2
    std::vector<double> times;
    std::vector<double> values; // per-snapshot |v|^2 + eps |w|^2
};
UniformBoundReport uniform_bound_report(const DiscreteOperator& op,
                                        const Nonlinearity& nl, const Trajectory& traj);

/// Default shift 0.4 min(lambda1, 1/(2 eps0)); satisfies both admissibility
/// constraints with margin.
double default_delta(double lambda1, double eps0);
/// Throws config_error quoting the violated constraint(s)
/// lambda1 - delta > 0 and 1 - 2 delta eps0 > 0.
void check_delta(double delta, double lambda1, double eps0);

/// Max |residual| over snapshots with t >= t_min. Ladder fits use a cutoff
/// common to all rungs so the location of the maximum cannot drift with dt
/// (the first samples sit inside the startup layer).
double worst_residual_after(const EnergyReport& report, double t_min);

struct OrderFit {
    double order = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
};
/// Log-log least squares of worst residual against dt.
OrderFit fit_order(const std::vector<double>& dts, const std::vector<double>& worsts);
/// Stores the ladder data and its fit on an existing report.
void attach_ladder(EnergyReport& report, std::vector<double> dts,
                   std::vector<double> worsts);

} // namespace epslab

#endif
