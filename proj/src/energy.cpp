#include "epslab/energy.hpp"

#include <cmath>
#include <sstream>

#include "epslab/errors.hpp"

namespace epslab {

namespace {

void require_identity_input(const Trajectory& traj, FlowKind kind, const char* what) {
    if (traj.kind != kind)
        throw config_error(std::string(what) + ": trajectory has the wrong flow kind");
    if (traj.stride != 1)
        throw config_error(std::string(what) + ": identity residuals need stride-1 snapshots");
    if (traj.snapshots.size() < 3)
        throw config_error(std::string(what) + ": need at least 3 snapshots, got " +
                           std::to_string(traj.snapshots.size()));
}

EnergyReport finalize(EnergyReport rep) {
    rep.worst = 0;
    for (double r : rep.residuals) rep.worst = std::max(rep.worst, std::abs(r));
    return rep;
}

} // namespace

double tilde_v(const DiscreteOperator& op, const Nonlinearity& nl,
               const HyperbolicState& s) {
    return 0.5 * op.inner_h1(s.u, s.u) +
           0.5 * s.eps * inner_l2(s.v, s.v, op.grid()) - nl.total_F(s.u);
}

double v_lower(const DiscreteOperator& op, const Field& v, const Field& w, double eps) {
    return 0.5 * inner_l2(v, v, op.grid()) + 0.5 * eps * op.inner_hminus1(w, w);
}

double f_eps(const DiscreteOperator& op, const Nonlinearity& nl,
             const HyperbolicState& s, double delta) {
    const Field dz = delta * s.u + s.v;
    const double grad = op.inner_h1(s.u, s.u) - op.inner_beta(s.u, s.u);
    const double zeroth = op.inner_beta(s.u, s.u) +
                          (delta * delta * s.eps - delta) * inner_l2(s.u, s.u, op.grid());
    return 0.5 * s.eps * inner_l2(dz, dz, op.grid()) + 0.5 * grad + 0.5 * zeroth -
           nl.total_F(s.u);
}

double f_zero(const DiscreteOperator& op, const Nonlinearity& nl, const Field& u,
              double delta) {
    const double grad = op.inner_h1(u, u) - op.inner_beta(u, u);
    const double zeroth = op.inner_beta(u, u) - delta * inner_l2(u, u, op.grid());
    return 0.5 * grad + 0.5 * zeroth - nl.total_F(u);
}

EnergyReport tilde_v_identity(const DiscreteOperator& op, const Nonlinearity& nl,
                              const Trajectory& traj) {
    require_identity_input(traj, FlowKind::hyperbolic, "tilde_v_identity");
    EnergyReport rep;
    rep.dt = traj.dt;
    const auto& snaps = traj.snapshots;
    HyperbolicState s;
    s.eps = traj.eps;
    for (const auto& sn : snaps) {
        s.u = sn.u;
        s.v = sn.v;
        rep.times.push_back(sn.t);
        rep.values.push_back(tilde_v(op, nl, s));
    }
    for (std::size_t i = 1; i + 1 < snaps.size(); ++i) {
        const double deriv = (rep.values[i + 1] - rep.values[i - 1]) / (2.0 * traj.dt);
        rep.residuals.push_back(deriv + inner_l2(snaps[i].v, snaps[i].v, op.grid()));
    }
    return finalize(std::move(rep));
}

EnergyReport v_identity(const DiscreteOperator& op, const Nonlinearity& nl,
                        const Trajectory& traj) {
    require_identity_input(traj, FlowKind::hyperbolic, "v_identity");
    EnergyReport rep;
    rep.dt = traj.dt;
    const auto& snaps = traj.snapshots;
    const double vol = op.grid().cell_volume();

    std::vector<double> ww(snaps.size()), gw(snaps.size());
    HyperbolicState s;
    s.eps = traj.eps;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        s.u = snaps[i].u;
        s.v = snaps[i].v;
        const Field w = acceleration(op, nl, s);
        const Field aw = op.solve(w); // A_h^{-1} w, shared by both pairings
        ww[i] = vol * w.dot(aw);
        gw[i] = vol * nl.linearized_forcing(s.u, s.v).dot(aw);
        rep.times.push_back(snaps[i].t);
        rep.values.push_back(0.5 * vol * s.v.dot(s.v) + 0.5 * traj.eps * ww[i]);
    }
    for (std::size_t i = 1; i + 1 < snaps.size(); ++i) {
        const double deriv = (rep.values[i + 1] - rep.values[i - 1]) / (2.0 * traj.dt);
        rep.residuals.push_back(deriv + ww[i] - gw[i]);
    }
    return finalize(std::move(rep));
}

EnergyReport f_eps_identity(const DiscreteOperator& op, const Nonlinearity& nl,
                            const Trajectory& traj, double delta) {
    require_identity_input(traj, FlowKind::hyperbolic, "f_eps_identity");
    check_delta(delta, op.lambda1(), traj.eps);
    EnergyReport rep;
    rep.dt = traj.dt;
    const auto& snaps = traj.snapshots;
    std::vector<double> rhs(snaps.size());
    HyperbolicState s;
    s.eps = traj.eps;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        s.u = snaps[i].u;
        s.v = snaps[i].v;
        rep.times.push_back(snaps[i].t);
        rep.values.push_back(f_eps(op, nl, s, delta));
        const Field dz = delta * s.u + s.v;
        rhs[i] = (2.0 * delta * traj.eps - 1.0) * inner_l2(dz, dz, op.grid()) +
                 delta * inner_l2(s.u, nl.f(s.u), op.grid()) -
                 2.0 * delta * nl.total_F(s.u);
    }
    for (std::size_t i = 1; i + 1 < snaps.size(); ++i) {
        const double deriv = (rep.values[i + 1] - rep.values[i - 1]) / (2.0 * traj.dt);
        rep.residuals.push_back(deriv + 2.0 * delta * rep.values[i] - rhs[i]);
    }
    return finalize(std::move(rep));
}

EnergyReport f_zero_identity(const DiscreteOperator& op, const Nonlinearity& nl,
                             const Trajectory& traj, double delta) {
    require_identity_input(traj, FlowKind::parabolic, "f_zero_identity");
    check_delta(delta, op.lambda1(), 0.0);
    EnergyReport rep;
    rep.dt = traj.dt;
    const auto& snaps = traj.snapshots;
    std::vector<double> rhs(snaps.size());
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        const Field& u = snaps[i].u;
        rep.times.push_back(snaps[i].t);
        rep.values.push_back(f_zero(op, nl, u, delta));
        const Field eta = gamma_lift(op, nl, u).v;
        const Field dz = delta * u + eta;
        rhs[i] = -inner_l2(dz, dz, op.grid()) +
                 delta * inner_l2(u, nl.f(u), op.grid()) - 2.0 * delta * nl.total_F(u);
    }
    for (std::size_t i = 1; i + 1 < snaps.size(); ++i) {
        const double deriv = (rep.values[i + 1] - rep.values[i - 1]) / (2.0 * traj.dt);
        rep.residuals.push_back(deriv + 2.0 * delta * rep.values[i] - rhs[i]);
    }
    return finalize(std::move(rep));
}

UniformBoundReport uniform_bound_report(const DiscreteOperator& op,
                                        const Nonlinearity& nl, const Trajectory& traj) {
    if (traj.kind != FlowKind::hyperbolic)
        throw config_error("uniform_bound_report: needs a hyperbolic trajectory");
    UniformBoundReport rep;
    HyperbolicState s;
    s.eps = traj.eps;
    for (const auto& sn : traj.snapshots) {
        s.u = sn.u;
        s.v = sn.v;
        const double z = op.inner_h1(s.u, s.u) + traj.eps * inner_l2(s.v, s.v, op.grid());
        rep.r = std::max(rep.r, z);
        const Field w = acceleration(op, nl, s);
        const double val =
            inner_l2(s.v, s.v, op.grid()) + traj.eps * op.inner_hminus1(w, w);
        rep.s = std::max(rep.s, val);
        rep.times.push_back(sn.t);
        rep.values.push_back(val);
    }
    return rep;
}

double default_delta(double lambda1, double eps0) {
    const double cap = (eps0 > 0) ? 1.0 / (2.0 * eps0) : lambda1;
    return 0.4 * std::min(lambda1, cap);
}

void check_delta(double delta, double lambda1, double eps0) {
    if (delta < 0) throw config_error("delta must be nonnegative");
    const bool c1 = lambda1 - delta > 0;
    const bool c2 = 1.0 - 2.0 * delta * eps0 > 0;
    if (c1 && c2) return;
    std::ostringstream os;
    os << "delta = " << delta << " violates the admissibility constraints:";
    if (!c1) os << " lambda1 - delta > 0 fails (lambda1 = " << lambda1 << ");";
    if (!c2) os << " 1 - 2 delta eps0 > 0 fails (eps0 = " << eps0 << ");";
    throw config_error(os.str());
}

double worst_residual_after(const EnergyReport& report, double t_min) {
    double m = 0;
    for (std::size_t i = 0; i < report.residuals.size(); ++i) {
        // residual i belongs to the interior snapshot i+1
        if (report.times[i + 1] >= t_min)
            m = std::max(m, std::abs(report.residuals[i]));
    }
    return m;
}

OrderFit fit_order(const std::vector<double>& dts, const std::vector<double>& worsts) {
    OrderFit fit;
    if (dts.size() != worsts.size() || dts.size() < 2) return fit;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        if (dts[i] > 0 && worsts[i] > 0) {
            x.push_back(std::log(dts[i]));
            y.push_back(std::log(worsts[i]));
        }
    }
    const std::size_t n = x.size();
    if (n < 2) return fit;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0) return fit;
    fit.order = sxy / sxx;
    fit.r2 = (syy == 0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

void attach_ladder(EnergyReport& report, std::vector<double> dts,
                   std::vector<double> worsts) {
    const OrderFit fit = fit_order(dts, worsts);
    report.ladder_dts = std::move(dts);
    report.ladder_worst = std::move(worsts);
    report.order = fit.order;
    report.r2 = fit.r2;
}

} // namespace epslab
