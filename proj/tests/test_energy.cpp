#include <doctest.h>

#include <cmath>

#include "epslab/energy.hpp"
#include "epslab/errors.hpp"
#include "support/helpers.hpp"

using namespace epslab;
using namespace epslab::test;

namespace {

HyperbolicState smooth_state(const Grid& g, double eps) {
    HyperbolicState z;
    z.u = sample_interval(g, [](double s) { return 0.8 * std::sin(s) + 0.2 * std::sin(2 * s); });
    z.v = sample_interval(g, [](double s) { return 0.3 * std::sin(s); });
    z.eps = eps;
    return z;
}

} // namespace

TEST_CASE("tilde_v values") {
    const Grid g = pi_grid(32);
    const auto op = laplacian(g);
    const auto nl = zero_nonlinearity(g);

    HyperbolicState zero{Field::Zero(g.size()), Field::Zero(g.size()), 0.0, 1.0};
    CHECK(tilde_v(op, nl, zero) == 0.0);

    HyperbolicState kin{Field::Zero(g.size()),
                        sample_interval(g, [](double s) { return std::sin(s); }), 0.0, 1.0};
    CHECK(tilde_v(op, nl, kin) == doctest::Approx(0.5 * M_PI / 2).epsilon(1e-10));
}

TEST_CASE("tilde_v decays along trajectories") {
    const Grid g = pi_grid(48);
    const auto op = laplacian(g);

    SUBCASE("exactly nonincreasing for the pure linear flow") {
        const auto nl = zero_nonlinearity(g);
        HyperbolicState z0 = smooth_state(g, 0.3);
        Trajectory traj = integrate_hyperbolic(op, nl, z0, 2.0, 1e-2, 1);
        traj.require_ok();
        const EnergyReport rep = tilde_v_identity(op, nl, traj);
        for (std::size_t i = 1; i < rep.values.size(); ++i)
            CHECK(rep.values[i] <= rep.values[i - 1] + 1e-12 * std::abs(rep.values[0]));
    }

    SUBCASE("nonincreasing up to the residual for the cubic flow") {
        const auto nl = chafee_infante(g);
        HyperbolicState z0 = smooth_state(g, 0.1);
        const double dt = 1e-3;
        Trajectory traj = integrate_hyperbolic(op, nl, z0, 2.0, dt, 1);
        traj.require_ok();
        const EnergyReport rep = tilde_v_identity(op, nl, traj);
        for (std::size_t i = 1; i < rep.values.size(); ++i)
            CHECK(rep.values[i] <= rep.values[i - 1] + 10.0 * (rep.worst + 1e-12) * dt);
    }
}

TEST_CASE("tilde_v identity residual") {
    const Grid g = pi_grid(48);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);

    SUBCASE("equilibrium trajectory has zero residual") {
        const Field phi = newton_equilibrium(
            op, nl, sample_interval(g, [](double s) { return 1.3 * std::sin(s); }));
        HyperbolicState z{phi, Field::Zero(g.size()), 0.0, 0.1};
        Trajectory traj = integrate_hyperbolic(op, nl, z, 0.2, 1e-2, 1);
        traj.require_ok();
        CHECK(tilde_v_identity(op, nl, traj).worst < 1e-8);
    }

    SUBCASE("first-order ladder on the linear problem") {
        const auto nl0 = zero_nonlinearity(g);
        HyperbolicState z0 = smooth_state(g, 0.2);
        std::vector<double> dts{4e-3, 2e-3}, worsts;
        for (double dt : dts) {
            Trajectory traj = integrate_hyperbolic(op, nl0, z0, 1.0, dt, 1);
            traj.require_ok();
            worsts.push_back(tilde_v_identity(op, nl0, traj).worst);
        }
        const double ratio = worsts[0] / worsts[1];
        CHECK(ratio >= 1.7);
        CHECK(ratio <= 2.3);
    }

    SUBCASE("needs at least three stride-1 snapshots") {
        HyperbolicState z0 = smooth_state(g, 0.2);
        Trajectory traj = integrate_hyperbolic(op, nl, z0, 0.01, 1e-2, 1);
        traj.require_ok();
        CHECK_THROWS_AS(tilde_v_identity(op, nl, traj), config_error);
        Trajectory strided = integrate_hyperbolic(op, nl, z0, 0.1, 1e-2, 2);
        strided.require_ok();
        CHECK_THROWS_AS(tilde_v_identity(op, nl, strided), config_error);
    }
}

TEST_CASE("v identity on the lower rung") {
    SUBCASE("trivial values") {
        const Grid g = pi_grid(16);
        const auto op = laplacian(g);
        CHECK(v_lower(op, Field::Zero(16), Field::Zero(16), 0.5) == 0.0);
    }

    SUBCASE("single-mode problem matches a scalar reconstruction") {
        // one interior node: everything is scalar arithmetic
        const Grid g = Grid::build({1, {2.0, 0, 0}, {1, 0, 0}});
        const auto op = DiscreteOperator::build(g, CoefficientField::constant(g, 1.0, 0.5));
        const double a = Eigen::MatrixXd(op.matrix())(0, 0); // = 1
        const double vol = g.cell_volume();
        const auto nl = Nonlinearity::tabulated(g, -4.0, 4.0, {-0.8, -0.4, 0.0, 0.4, 0.8},
                                                1.0, 1.0); // f(u) = 0.2 u
        const double eps = 0.4, dt = 1e-3;
        HyperbolicState z0{Field::Constant(1, 0.9), Field::Constant(1, -0.1), 0.0, eps};
        Trajectory traj = integrate_hyperbolic(op, nl, z0, 0.5, dt, 1);
        traj.require_ok();
        const EnergyReport rep = v_identity(op, nl, traj);

        // scalar oracle for the same snapshots
        auto w_of = [&](double u, double v) { return (0.2 * u - a * u - v) / eps; };
        std::vector<double> alpha;
        for (const auto& sn : traj.snapshots) {
            const double w = w_of(sn.u[0], sn.v[0]);
            alpha.push_back(0.5 * vol * sn.v[0] * sn.v[0] +
                            0.5 * eps * vol * w * w / a);
        }
        for (std::size_t i = 1; i + 1 < traj.snapshots.size(); ++i) {
            const double u = traj.snapshots[i].u[0], v = traj.snapshots[i].v[0];
            const double w = w_of(u, v);
            const double g_val = 0.2 * v;
            const double expect = (alpha[i + 1] - alpha[i - 1]) / (2 * dt) +
                                  vol * w * w / a - vol * g_val * w / a;
            CHECK(rep.residuals[i - 1] == doctest::Approx(expect).epsilon(1e-9));
        }
    }

    SUBCASE("first-order ladder on the cubic problem") {
        const Grid g = pi_grid(32);
        const auto op = laplacian(g);
        const auto nl = chafee_infante(g);
        HyperbolicState z0 = smooth_state(g, 0.1);
        std::vector<double> dts{4e-3, 2e-3, 1e-3}, worsts;
        for (double dt : dts) {
            Trajectory traj = integrate_hyperbolic(op, nl, z0, 1.0, dt, 1);
            traj.require_ok();
            worsts.push_back(worst_residual_after(v_identity(op, nl, traj), 0.2));
        }
        const OrderFit fit = fit_order(dts, worsts);
        CHECK(fit.order >= 0.95);
        CHECK(fit.r2 >= 0.98);
    }
}

TEST_CASE("f_eps functional and identity") {
    const Grid g = pi_grid(32);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);

    SUBCASE("vanishes at the origin") {
        HyperbolicState zero{Field::Zero(g.size()), Field::Zero(g.size()), 0.0, 0.1};
        CHECK(f_eps(op, nl, zero, 0.3) == 0.0);
    }

    SUBCASE("delta = 0 reduces to tilde_v") {
        HyperbolicState z = smooth_state(g, 0.1);
        CHECK(f_eps(op, nl, z, 0.0) == doctest::Approx(tilde_v(op, nl, z)).epsilon(1e-13));
        Trajectory traj = integrate_hyperbolic(op, nl, z, 0.2, 1e-3, 1);
        traj.require_ok();
        const double w0 = tilde_v_identity(op, nl, traj).worst;
        const double w1 = f_eps_identity(op, nl, traj, 0.0).worst;
        CHECK(w1 == doctest::Approx(w0).epsilon(1e-9));
    }

    SUBCASE("inadmissible delta is rejected with both constraints quoted") {
        HyperbolicState z = smooth_state(g, 0.1);
        Trajectory traj = integrate_hyperbolic(op, nl, z, 0.1, 1e-3, 1);
        traj.require_ok();
        try {
            f_eps_identity(op, nl, traj, 10.0);
            CHECK(false);
        } catch (const config_error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("lambda1") != std::string::npos);
            CHECK(msg.find("eps") != std::string::npos);
        }
        CHECK(default_delta(op.lambda1(), 0.1) < op.lambda1());
        CHECK_NOTHROW(check_delta(default_delta(op.lambda1(), 0.1), op.lambda1(), 0.1));
    }

    SUBCASE("first-order ladder") {
        HyperbolicState z0 = smooth_state(g, 0.1);
        const double delta = default_delta(op.lambda1(), 0.1);
        std::vector<double> dts{4e-3, 2e-3, 1e-3}, worsts;
        for (double dt : dts) {
            Trajectory traj = integrate_hyperbolic(op, nl, z0, 1.0, dt, 1);
            traj.require_ok();
            worsts.push_back(
                worst_residual_after(f_eps_identity(op, nl, traj, delta), 0.2));
        }
        const OrderFit fit = fit_order(dts, worsts);
        CHECK(fit.order >= 0.95);
        CHECK(fit.r2 >= 0.98);
    }
}

TEST_CASE("f_zero functional and identity") {
    const Grid g = pi_grid(48);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);
    const double delta = default_delta(op.lambda1(), 0.1);

    SUBCASE("vanishes at the origin") {
        CHECK(f_zero(op, nl, Field::Zero(g.size()), delta) == 0.0);
    }

    SUBCASE("identity balances at a computed equilibrium") {
        const Field phi = newton_equilibrium(
            op, nl, sample_interval(g, [](double s) { return 1.3 * std::sin(s); }));
        // left side: derivative vanishes, so 2 delta F0(phi)
        const double lhs = 2.0 * delta * f_zero(op, nl, phi, delta);
        // right side evaluated independently with eta = 0
        const double rhs = -delta * delta * inner_l2(phi, phi, g) +
                           delta * inner_l2(phi, nl.f(phi), g) - 2.0 * delta * nl.total_F(phi);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));

        ParabolicState p{phi, 0.0};
        Trajectory traj = integrate_parabolic(op, nl, p, 0.2, 1e-2, 1);
        traj.require_ok();
        CHECK(f_zero_identity(op, nl, traj, delta).worst < 1e-7);
    }

    SUBCASE("first-order ladder on the parabolic flow") {
        ParabolicState p0{sample_interval(g, [](double s) {
                              return 0.8 * std::sin(s) + 0.2 * std::sin(2 * s);
                          }),
                          0.0};
        std::vector<double> dts{4e-3, 2e-3, 1e-3}, worsts;
        for (double dt : dts) {
            Trajectory traj = integrate_parabolic(op, nl, p0, 1.0, dt, 1);
            traj.require_ok();
            worsts.push_back(
                worst_residual_after(f_zero_identity(op, nl, traj, delta), 0.2));
        }
        const OrderFit fit = fit_order(dts, worsts);
        CHECK(fit.order >= 0.95);
        CHECK(fit.r2 >= 0.98);
    }
}

TEST_CASE("uniform bound report") {
    const Grid g = pi_grid(32);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);

    SUBCASE("equilibrium gives S = 0") {
        const Field phi = newton_equilibrium(
            op, nl, sample_interval(g, [](double s) { return 1.3 * std::sin(s); }));
        HyperbolicState z{phi, Field::Zero(g.size()), 0.0, 0.1};
        Trajectory traj = integrate_hyperbolic(op, nl, z, 0.5, 1e-2, 1);
        traj.require_ok();
        const auto rep = uniform_bound_report(op, nl, traj);
        CHECK(rep.s < 1e-14);
        CHECK(rep.r > 0);
    }

    SUBCASE("sup over a tail window never exceeds the full sup") {
        HyperbolicState z0 = smooth_state(g, 0.2);
        Trajectory traj = integrate_hyperbolic(op, nl, z0, 2.0, 1e-2, 1);
        traj.require_ok();
        const auto full = uniform_bound_report(op, nl, traj);
        Trajectory tail = traj;
        tail.snapshots.assign(traj.snapshots.begin() + traj.snapshots.size() / 2,
                              traj.snapshots.end());
        const auto half = uniform_bound_report(op, nl, tail);
        CHECK(half.s <= full.s);
        CHECK(half.r <= full.r);
    }
}

TEST_CASE("order fit") {
    std::vector<double> dts{4e-3, 2e-3, 1e-3};
    std::vector<double> worsts{8e-2, 4e-2, 2e-2}; // exact slope 1
    const OrderFit fit = fit_order(dts, worsts);
    CHECK(fit.order == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

    EnergyReport rep;
    attach_ladder(rep, dts, worsts);
    CHECK(rep.order == doctest::Approx(1.0));
    CHECK(rep.ladder_dts.size() == 3);
}
