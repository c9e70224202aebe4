#ifndef EPSLAB_DYNAMICS_HPP
#define EPSLAB_DYNAMICS_HPP

#include <memory>
#include <string>
#include <vector>

#include "epslab/nonlinearity.hpp"
#include "epslab/operator.hpp"

namespace epslab {

struct HyperbolicState {
    Field u; // H1 component
    Field v; // L2 component, du/dt
    double t = 0;
    double eps = 0;
};

struct ParabolicState {
    Field u;
    double t = 0;
};

enum class FlowKind { hyperbolic, parabolic };

struct Snapshot {
    double t = 0;
    Field u;
    Field v; // empty for raw parabolic snapshots; filled by the lift
};

struct Trajectory {
    FlowKind kind = FlowKind::hyperbolic;
    double eps = 0; // 0 for parabolic
    double dt = 0;
    int stride = 1;
    std::vector<Snapshot> snapshots;
    bool diverged = false;
    std::string divergence_message;

    const Snapshot& back() const { return snapshots.back(); }
    /// Throws divergence_error if the run aborted early.
    void require_ok() const;
};

/// One IMEX step of eps u_tt + u_t + A_h u = f(u) written as
/// u' = v, eps v' = -v - A_h u + f(u): the linear part is implicit, f is
/// taken at the current u, and the 2x2 block is eliminated exactly, leaving
/// one SPD solve with (eps+dt) I + dt^2 A_h per step. As eps -> 0 the update
/// degenerates to the parabolic IMEX step.
class HyperbolicStepper {
public:
    HyperbolicStepper(const DiscreteOperator& op, const Nonlinearity& nl, double eps,
                      double dt);
    HyperbolicState step(const HyperbolicState& s) const;
    double dt() const { return dt_; }
    double eps() const { return eps_; }

private:
    const DiscreteOperator& op_;
    const Nonlinearity& nl_;
    double eps_, dt_;
    Eigen::SparseMatrix<double> system_;
    std::shared_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
};

/// IMEX step of the limit problem: (I + dt A_h) u+ = u + dt f(u).
class ParabolicStepper {
public:
    ParabolicStepper(const DiscreteOperator& op, const Nonlinearity& nl, double dt);
    ParabolicState step(const ParabolicState& s) const;
    double dt() const { return dt_; }

private:
    const DiscreteOperator& op_;
    const Nonlinearity& nl_;
    double dt_;
    Eigen::SparseMatrix<double> system_;
    std::shared_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
};

HyperbolicState step_hyperbolic(const DiscreteOperator& op, const Nonlinearity& nl,
                                const HyperbolicState& s, double dt);
ParabolicState step_parabolic(const DiscreteOperator& op, const Nonlinearity& nl,
                              const ParabolicState& s, double dt);

/// ceil(T/dt) steps from the initial state; snapshots at the given stride,
/// always including the initial and final states. On divergence the
/// trajectory carries the snapshots recorded so far and the diverged flag.
Trajectory integrate_hyperbolic(const DiscreteOperator& op, const Nonlinearity& nl,
                                const HyperbolicState& s0, double T, double dt,
                                int stride = 1);
Trajectory integrate_parabolic(const DiscreteOperator& op, const Nonlinearity& nl,
                               const ParabolicState& s0, double T, double dt,
                               int stride = 1);

/// w = dv/dt realized through the equation: (1/eps)(-v - A_h u + f(u)).
Field acceleration(const DiscreteOperator& op, const Nonlinearity& nl,
                   const HyperbolicState& s);

/// Lift of a limit-flow state into the two-component phase space:
/// (u, -A_h u + f(u)); the second component is the parabolic time derivative.
Snapshot gamma_lift(const DiscreteOperator& op, const Nonlinearity& nl, const Field& u);

} // namespace epslab

#endif
