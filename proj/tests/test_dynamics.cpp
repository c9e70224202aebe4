#include <doctest.h>

#include <cmath>

#include "epslab/errors.hpp"
#include "epslab/oracle.hpp"
#include "epslab/rng.hpp"
#include "support/helpers.hpp"

using namespace epslab;
using namespace epslab::test;

TEST_CASE("rest state is an equilibrium of both steppers") {
    const Grid g = pi_grid(24);
    const auto op = laplacian(g);
    const auto nl = zero_nonlinearity(g);

    HyperbolicState z;
    z.u = Field::Zero(g.size());
    z.v = Field::Zero(g.size());
    z.eps = 0.2;
    const auto z1 = step_hyperbolic(op, nl, z, 1e-2);
    CHECK(z1.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(z1.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(z1.t == doctest::Approx(1e-2));

    ParabolicState p{Field::Zero(g.size()), 0.0};
    CHECK(step_parabolic(op, nl, p, 1e-2).u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hyperbolic IMEX tracks the dense linear oracle") {
    const Grid g = pi_grid(64);
    const auto op = laplacian(g);
    const auto nl = zero_nonlinearity(g);
    HyperbolicState z0;
    z0.u = sample_interval(g, [](double s) { return std::sin(s); });
    z0.v = Field::Zero(g.size());
    z0.eps = 0.1;

    auto err_at = [&](double dt) {
        Trajectory traj = integrate_hyperbolic(op, nl, z0, 1.0, dt, 1 << 30);
        traj.require_ok();
        const auto exact = dense_linear_solution(op, 0.1, z0, traj.back().t);
        return norm_l2(traj.back().u - exact.u, g) / norm_l2(exact.u, g);
    };
    const double e = err_at(1e-4);
    CHECK(e <= 1e-3);
    // first order: halving dt halves the error
    const double ratio = err_at(2e-3) / err_at(1e-3);
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
}

TEST_CASE("cubic equilibrium is preserved by the hyperbolic stepper") {
    const Grid g = pi_grid(48);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);
    const Field phi = newton_equilibrium(
        op, nl, sample_interval(g, [](double s) { return 1.3 * std::sin(s); }));
    CHECK((op.apply(phi) - nl.f(phi)).norm() < 1e-10);

    HyperbolicState z{phi, Field::Zero(g.size()), 0.0, 0.1};
    Trajectory traj = integrate_hyperbolic(op, nl, z, 1.0, 1e-3, 1 << 30);
    traj.require_ok();
    CHECK((traj.back().u - phi).norm() <= 1e-8 * phi.norm());
    CHECK(traj.back().v.norm() <= 1e-8);
}

TEST_CASE("parabolic stepper: single-mode decay and fixed point") {
    const Grid g = pi_grid(96);
    const auto op = laplacian(g);
    const auto nl = zero_nonlinearity(g);
    const Field s = sample_interval(g, [](double x) { return std::sin(x); });

    ParabolicState p{s, 0.0};
    Trajectory traj = integrate_parabolic(op, nl, p, 1.0, 1e-3, 1 << 30);
    traj.require_ok();
    const Field expect = std::exp(-op.lambda1() * traj.back().t) * s;
    CHECK(norm_l2(traj.back().u - expect, g) / norm_l2(expect, g) < 2e-3);

    // small positive bump converges to the positive Chafee-Infante state
    const auto nlc = chafee_infante(g);
    ParabolicState q{0.1 * s, 0.0};
    Trajectory bump = integrate_parabolic(op, nlc, q, 30.0, 1e-2, 1 << 30);
    bump.require_ok();
    const Field& phi = bump.back().u;
    CHECK((op.apply(phi) - nlc.f(phi)).norm() <= 1e-6);
    CHECK(phi.maxCoeff() > 1.0); // genuinely the nonzero branch
}

TEST_CASE("integrate snapshot contract") {
    const Grid g = pi_grid(8);
    const auto op = laplacian(g);
    const auto nl = zero_nonlinearity(g);
    HyperbolicState z0{Field::Ones(8), Field::Zero(8), 0.0, 0.5};

    Trajectory t0 = integrate_hyperbolic(op, nl, z0, 0.0, 0.1, 1);
    CHECK(t0.snapshots.size() == 1);

    Trajectory t1 = integrate_hyperbolic(op, nl, z0, 1.0, 0.1, 1);
    CHECK(t1.snapshots.size() == 11);
    CHECK(t1.snapshots.front().t == 0.0);
    CHECK(t1.snapshots.back().t == doctest::Approx(1.0));
    for (std::size_t i = 1; i < t1.snapshots.size(); ++i)
        CHECK(t1.snapshots[i].t > t1.snapshots[i - 1].t);

    Trajectory t2 = integrate_hyperbolic(op, nl, z0, 1.0, 0.1, 4);
    CHECK(t2.snapshots.size() == 4); // t = 0, 0.4, 0.8, 1.0
    CHECK(t2.snapshots.back().t == doctest::Approx(1.0));
}

TEST_CASE("divergence is detected and reported") {
    const Grid g = pi_grid(16);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);
    ParabolicState p{Field::Constant(16, 50.0), 0.0};
    Trajectory traj = integrate_parabolic(op, nl, p, 10.0, 1.0, 1);
    CHECK(traj.diverged);
    CHECK(traj.divergence_message.find("dt=") != std::string::npos);
    CHECK_THROWS_AS(traj.require_ok(), divergence_error);
    CHECK(!traj.snapshots.empty()); // last good snapshot retained
}

TEST_CASE("eps robustness of the hyperbolic stepper") {
    const Grid g = pi_grid(32);
    const auto op = laplacian(g);
    const auto nl = zero_nonlinearity(g);
    const Field u0 = sample_interval(g, [](double s) { return std::sin(s) + 0.3 * std::sin(3 * s); });
    for (double eps : {1.0, 1e-1, 1e-2, 1e-3}) {
        HyperbolicState z0{u0, Field::Zero(g.size()), 0.0, eps};
        const double z0norm = op.inner_h1(u0, u0);
        Trajectory traj = integrate_hyperbolic(op, nl, z0, 10.0, 1e-3, 1 << 30);
        traj.require_ok();
        const double zt = op.inner_h1(traj.back().u, traj.back().u) +
                          eps * inner_l2(traj.back().v, traj.back().v, g);
        CHECK(zt <= z0norm * 1.01);
        CHECK(std::isfinite(zt));
    }
}

TEST_CASE("singular limit: hyperbolic u-trace approaches the parabolic flow") {
    const Grid g = pi_grid(48);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);
    const Field u0 = sample_interval(g, [](double s) { return 0.5 * std::sin(s) + 0.1 * std::sin(2 * s); });
    const double dt = 1e-3, T = 1.0;

    ParabolicState p0{u0, 0.0};
    Trajectory par = integrate_parabolic(op, nl, p0, T, dt, 1 << 30);
    par.require_ok();

    const Field v0 = gamma_lift(op, nl, u0).v;
    double prev = std::numeric_limits<double>::infinity();
    std::vector<double> errs;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        HyperbolicState z0{u0, v0, 0.0, eps};
        Trajectory hyp = integrate_hyperbolic(op, nl, z0, T, dt, 1 << 30);
        hyp.require_ok();
        const double err = norm_l2(hyp.back().u - par.back().u, g);
        errs.push_back(err);
        CHECK(err <= prev * 1.1);
        prev = err;
    }
    CHECK(errs.back() < errs.front() / 10.0);
}

TEST_CASE("discrete semigroup property (bit-for-bit restart)") {
    const Grid g = pi_grid(24);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);
    HyperbolicState z0;
    z0.u = sample_interval(g, [](double s) { return 0.4 * std::sin(s); });
    z0.v = sample_interval(g, [](double s) { return 0.2 * std::sin(2 * s); });
    z0.eps = 0.2;
    const double dt = 1e-2;

    Trajectory whole = integrate_hyperbolic(op, nl, z0, 0.8, dt, 1 << 30);
    whole.require_ok();
    Trajectory first = integrate_hyperbolic(op, nl, z0, 0.3, dt, 1 << 30);
    first.require_ok();
    HyperbolicState mid{first.back().u, first.back().v, first.back().t, 0.2};
    Trajectory second = integrate_hyperbolic(op, nl, mid, 0.5, dt, 1 << 30);
    second.require_ok();

    CHECK((whole.back().u.array() == second.back().u.array()).all());
    CHECK((whole.back().v.array() == second.back().v.array()).all());
}

TEST_CASE("acceleration field") {
    const Grid g = pi_grid(40);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);

    SUBCASE("vanishes at equilibria") {
        const Field phi = newton_equilibrium(
            op, nl, sample_interval(g, [](double s) { return 1.3 * std::sin(s); }));
        HyperbolicState z{phi, Field::Zero(g.size()), 0.0, 0.1};
        CHECK(acceleration(op, nl, z).norm() < 1e-9);
    }

    SUBCASE("pure damping algebra") {
        const auto nl0 = zero_nonlinearity(g);
        Field v0 = sample_interval(g, [](double s) { return std::sin(2 * s); });
        HyperbolicState z{Field::Zero(g.size()), v0, 0.0, 0.25};
        const Field w = acceleration(op, nl0, z);
        CHECK((w + v0 / 0.25).cwiseAbs().maxCoeff() < 1e-14);
    }

    SUBCASE("matches the central difference of the exact v at O(dt^2)") {
        const auto nl0 = zero_nonlinearity(g);
        HyperbolicState z0;
        z0.u = sample_interval(g, [](double s) { return std::sin(s) + 0.2 * std::sin(2 * s); });
        z0.v = sample_interval(g, [](double s) { return 0.1 * std::sin(s); });
        z0.eps = 0.3;
        auto resid = [&](double dt) {
            const auto mid = dense_linear_solution(op, z0.eps, z0, 0.5);
            const auto lo = dense_linear_solution(op, z0.eps, z0, 0.5 - dt);
            const auto hi = dense_linear_solution(op, z0.eps, z0, 0.5 + dt);
            HyperbolicState s{mid.u, mid.v, mid.t, z0.eps};
            const Field w = acceleration(op, nl0, s);
            return op.norm_hminus1(w - (hi.v - lo.v) / (2 * dt));
        };
        const double r1 = resid(1e-2);
        const double r2 = resid(5e-3);
        CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.25));
    }
}

TEST_CASE("gamma lift") {
    const Grid g = pi_grid(40);
    const auto op = laplacian(g);
    const auto nl = chafee_infante(g);

    SUBCASE("equilibria lift with vanishing second component") {
        const Field phi = newton_equilibrium(
            op, nl, sample_interval(g, [](double s) { return 1.3 * std::sin(s); }));
        CHECK(gamma_lift(op, nl, phi).v.norm() < 1e-9);
    }

    SUBCASE("pure diffusion: lift equals -A_h u") {
        const auto nl0 = zero_nonlinearity(g);
        const Field s = sample_interval(g, [](double x) { return std::sin(x); });
        const Field lifted = gamma_lift(op, nl0, s).v;
        CHECK((lifted + op.apply(s)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((lifted + op.lambda1() * s).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("matches the parabolic central difference at O(dt^2)") {
        const auto nl0 = zero_nonlinearity(g);
        const Field s = sample_interval(g, [](double x) { return std::sin(x); });
        const double lam = op.lambda1();
        auto resid = [&](double dt) {
            const double t = 0.4;
            const Field ut = std::exp(-lam * t) * s;
            const Field lo = std::exp(-lam * (t - dt)) * s;
            const Field hi = std::exp(-lam * (t + dt)) * s;
            return norm_l2(gamma_lift(op, nl0, ut).v - (hi - lo) / (2 * dt), g);
        };
        CHECK(resid(1e-2) / resid(5e-3) == doctest::Approx(4.0).epsilon(0.2));
    }
}
