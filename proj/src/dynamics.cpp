#include "epslab/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "epslab/errors.hpp"

namespace epslab {

namespace {

Eigen::SparseMatrix<double> shifted_system(const DiscreteOperator& op, double diag,
                                           double scale) {
    // diag * I + scale * A_h
    Eigen::SparseMatrix<double> m = scale * op.matrix();
    Eigen::SparseMatrix<double> id(op.size(), op.size());
    id.setIdentity();
    m += diag * id;
    m.makeCompressed();
    return m;
}

void check_solve(const Eigen::SparseMatrix<double>& sys, const Field& x, const Field& rhs,
                 double t, double dt) {
    const double bn = rhs.norm();
    if (bn == 0.0) return;
    const double res = (sys * x - rhs).norm() / bn;
    if (res > DiscreteOperator::kSolveTol) {
        std::ostringstream os;
        os << "implicit stage solve residual " << res << " above tolerance "
           << DiscreteOperator::kSolveTol << " at t=" << t << ", dt=" << dt;
        throw numerics_error(os.str());
    }
}

void check_finite(const Field& u, const Field& v, double t, double dt) {
    if (u.allFinite() && (v.size() == 0 || v.allFinite())) return;
    std::ostringstream os;
    os << "non-finite field values at t=" << t << " with dt=" << dt
       << "; the explicit reaction term likely exceeded the stable step size";
    throw divergence_error(os.str(), t, dt);
}

long step_count(double T, double dt) {
    return static_cast<long>(std::ceil(T / dt - 1e-9));
}

} // namespace

void Trajectory::require_ok() const {
    if (diverged)
        throw divergence_error(divergence_message, snapshots.empty() ? 0.0 : back().t, dt);
}

HyperbolicStepper::HyperbolicStepper(const DiscreteOperator& op, const Nonlinearity& nl,
                                     double eps, double dt)
    : op_(op), nl_(nl), eps_(eps), dt_(dt) {
    if (!(dt > 0)) throw config_error("step_hyperbolic: dt must be positive");
    if (!(eps > 0)) throw config_error("step_hyperbolic: eps must be positive");
    system_ = shifted_system(op, eps + dt, dt * dt);
    llt_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
    llt_->compute(system_);
    if (llt_->info() != Eigen::Success)
        throw numerics_error("step_hyperbolic: implicit system factorization failed");
}

HyperbolicState HyperbolicStepper::step(const HyperbolicState& s) const {
    // [(eps+dt) I + dt^2 A] v+ = eps v + dt (f(u) - A u);  u+ = u + dt v+.
    const Field rhs = eps_ * s.v + dt_ * (nl_.f(s.u) - op_.apply(s.u));
    Field vnew = llt_->solve(rhs);
    check_solve(system_, vnew, rhs, s.t, dt_);
    HyperbolicState out;
    out.u = s.u + dt_ * vnew;
    out.v = std::move(vnew);
    out.t = s.t + dt_;
    out.eps = eps_;
    check_finite(out.u, out.v, out.t, dt_);
    return out;
}

ParabolicStepper::ParabolicStepper(const DiscreteOperator& op, const Nonlinearity& nl,
                                   double dt)
    : op_(op), nl_(nl), dt_(dt) {
    if (!(dt > 0)) throw config_error("step_parabolic: dt must be positive");
    system_ = shifted_system(op, 1.0, dt);
    llt_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
    llt_->compute(system_);
    if (llt_->info() != Eigen::Success)
        throw numerics_error("step_parabolic: implicit system factorization failed");
}

ParabolicState ParabolicStepper::step(const ParabolicState& s) const {
    const Field rhs = s.u + dt_ * nl_.f(s.u);
    Field unew = llt_->solve(rhs);
    check_solve(system_, unew, rhs, s.t, dt_);
    ParabolicState out;
    out.u = std::move(unew);
    out.t = s.t + dt_;
    check_finite(out.u, Field(), out.t, dt_);
    return out;
}

HyperbolicState step_hyperbolic(const DiscreteOperator& op, const Nonlinearity& nl,
                                const HyperbolicState& s, double dt) {
    return HyperbolicStepper(op, nl, s.eps, dt).step(s);
}

ParabolicState step_parabolic(const DiscreteOperator& op, const Nonlinearity& nl,
                              const ParabolicState& s, double dt) {
    return ParabolicStepper(op, nl, dt).step(s);
}

Trajectory integrate_hyperbolic(const DiscreteOperator& op, const Nonlinearity& nl,
                                const HyperbolicState& s0, double T, double dt,
                                int stride) {
    if (T < 0) throw config_error("integrate: T must be nonnegative");
    if (stride < 1) throw config_error("integrate: stride must be >= 1");
    Trajectory traj;
    traj.kind = FlowKind::hyperbolic;
    traj.eps = s0.eps;
    traj.dt = dt;
    traj.stride = stride;
    traj.snapshots.push_back({s0.t, s0.u, s0.v});
    if (T == 0) return traj;
    const HyperbolicStepper stepper(op, nl, s0.eps, dt);
    const long steps = step_count(T, dt);
    HyperbolicState s = s0;
    for (long k = 1; k <= steps; ++k) {
        try {
            s = stepper.step(s);
        } catch (const divergence_error& e) {
            traj.diverged = true;
            traj.divergence_message = e.what();
            return traj;
        }
        if (k % stride == 0 || k == steps) traj.snapshots.push_back({s.t, s.u, s.v});
    }
    return traj;
}

Trajectory integrate_parabolic(const DiscreteOperator& op, const Nonlinearity& nl,
                               const ParabolicState& s0, double T, double dt,
                               int stride) {
    if (T < 0) throw config_error("integrate: T must be nonnegative");
    if (stride < 1) throw config_error("integrate: stride must be >= 1");
    Trajectory traj;
    traj.kind = FlowKind::parabolic;
    traj.eps = 0;
    traj.dt = dt;
    traj.stride = stride;
    traj.snapshots.push_back({s0.t, s0.u, Field()});
    if (T == 0) return traj;
    const ParabolicStepper stepper(op, nl, dt);
    const long steps = step_count(T, dt);
    ParabolicState s = s0;
    for (long k = 1; k <= steps; ++k) {
        try {
            s = stepper.step(s);
        } catch (const divergence_error& e) {
            traj.diverged = true;
            traj.divergence_message = e.what();
            return traj;
        }
        if (k % stride == 0 || k == steps) traj.snapshots.push_back({s.t, s.u, Field()});
    }
    return traj;
}

Field acceleration(const DiscreteOperator& op, const Nonlinearity& nl,
                   const HyperbolicState& s) {
    if (!(s.eps > 0)) throw config_error("acceleration: eps must be positive");
    return (nl.f(s.u) - op.apply(s.u) - s.v) / s.eps;
}

Snapshot gamma_lift(const DiscreteOperator& op, const Nonlinearity& nl, const Field& u) {
    Snapshot out;
    out.u = u;
    out.v = nl.f(u) - op.apply(u);
    return out;
}

} // namespace epslab
