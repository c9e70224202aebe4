#include <doctest.h>

#include <cmath>

#include "epslab/errors.hpp"
#include "epslab/rng.hpp"
#include "epslab/tails.hpp"
#include "support/helpers.hpp"

using namespace epslab;
using namespace epslab::test;

namespace {

Field bump(const Grid& g, double radius, double amp = 1.0) {
    return g.sample([&](const std::array<double, 3>& x) {
        const double q = (x[0] * x[0]) / (radius * radius);
        return q >= 1.0 ? 0.0 : amp * std::exp(1.0 - 1.0 / (1.0 - q));
    });
}

} // namespace

TEST_CASE("tail energy support exactness") {
    const Grid g = interval_grid(40.0, 399); // box [-20,20], h = 0.1
    const auto op = laplacian(g, 0.2);

    HyperbolicState z;
    z.u = Field::Zero(g.size());
    z.v = Field::Zero(g.size());
    z.eps = 0.1;
    CHECK(tail_energy(op, z, 4) == 0.0);

    // data supported in |x| <= k gives exactly zero tail energy
    z.u = bump(g, 3.0);
    z.v = bump(g, 2.5, 0.4);
    CHECK(tail_energy(op, z, 4) == 0.0);
    CHECK(tail_energy(op, z, 3) == 0.0);
    CHECK(tail_energy(op, z, 2) > 0.0); // the cutoff ramp overlaps the bump

    CHECK_THROWS_AS(tail_energy(op, z, 15), config_error); // sqrt(2)*15 > 20
    CHECK_THROWS_AS(check_tail_radius(g, 0), config_error);
}

TEST_CASE("tail energy parts and k-monotonicity accounting") {
    const Grid g = interval_grid(40.0, 399);
    const auto op = laplacian(g, 0.3);
    Rng rng(5);
    HyperbolicState z;
    z.u = g.sample([&](const std::array<double, 3>& x) {
        return std::exp(-0.1 * x[0] * x[0]) * std::sin(3 * x[0]);
    });
    z.v = g.sample([&](const std::array<double, 3>& x) {
        return std::exp(-0.2 * x[0] * x[0]);
    });
    z.eps = 0.25;

    const auto c1 = cutoff_field(g, 5);
    const auto c2 = cutoff_field(g, 9);
    const auto p1 = tail_energy_parts(op, z, c1);
    const auto p2 = tail_energy_parts(op, z, c2);

    CHECK(p1.total() == doctest::Approx(tail_energy(op, z, 5)).epsilon(1e-12));
    // L2-type parts are exactly monotone under k-refinement
    CHECK(p2.beta <= p1.beta);
    CHECK(p2.kinetic <= p1.kinetic);
    // the total obeys the explicit gradient-term accounting
    CHECK(p2.total() <= p1.total() + std::max(0.0, p2.grad - p1.grad) + 1e-15);
}

TEST_CASE("tail profile rows and columns") {
    const Grid g = interval_grid(60.0, 599); // box [-30,30]
    const auto op = laplacian(g, 0.2);
    const auto nl = zero_nonlinearity(g);
    HyperbolicState z0;
    z0.u = bump(g, 3.0);
    z0.v = Field::Zero(g.size());
    z0.eps = 0.1;
    Trajectory traj = integrate_hyperbolic(op, nl, z0, 8.0, 2e-3, 40);
    traj.require_ok();

    const std::vector<int> ks{4, 8, 16};
    const TailProfile prof = tail_profile(op, traj, ks);
    CHECK(prof.times.size() == traj.snapshots.size());

    // compact initial data: the t=0 row vanishes for k >= support radius
    for (std::size_t k = 0; k < ks.size(); ++k)
        CHECK(prof.values(0, static_cast<Eigen::Index>(k)) == 0.0);

    // decaying flow: every column ends at or below its own peak, and the
    // last row is below the global energy at t=0
    for (std::size_t k = 0; k < ks.size(); ++k) {
        const auto col = prof.values.col(static_cast<Eigen::Index>(k));
        CHECK(col(col.size() - 1) <= col.maxCoeff() + 1e-15);
    }
    // columns are pointwise nonincreasing in k
    for (Eigen::Index i = 0; i < prof.values.rows(); ++i) {
        CHECK(prof.values(i, 1) <= prof.values(i, 0) * (1.0 + 1e-9) + 1e-15);
        CHECK(prof.values(i, 2) <= prof.values(i, 1) * (1.0 + 1e-9) + 1e-15);
    }

    Trajectory par;
    par.kind = FlowKind::parabolic;
    CHECK_THROWS_AS(tail_profile(op, par, ks), config_error);
}

TEST_CASE("tail fit") {
    SUBCASE("all-zero profile is degenerate") {
        TailProfile prof;
        prof.ks = {2, 4};
        for (int i = 0; i < 20; ++i) prof.times.push_back(0.5 * i);
        prof.values = Eigen::MatrixXd::Zero(20, 2);
        const TailFit fit = tail_fit(prof);
        CHECK(fit.c_k[0] == 0.0);
        CHECK(fit.c_k[1] == 0.0);
        CHECK(fit.m == 0.0);
        CHECK(fit.degenerate[0] == 1);
        CHECK(fit.degenerate[1] == 1);
    }

    SUBCASE("synthetic profile is recovered within 1 percent") {
        TailProfile prof;
        prof.ks = {5, 10, 20};
        const double ck[3] = {0.35, 0.06, 0.007};
        const double M = 1.7, rho = 0.45;
        const int rows = 160;
        prof.values.resize(rows, 3);
        for (int i = 0; i < rows; ++i) {
            prof.times.push_back(0.125 * i);
            for (int k = 0; k < 3; ++k)
                prof.values(i, k) = ck[k] + M * std::exp(-rho * prof.times[i]);
        }
        const TailFit fit = tail_fit(prof);
        CHECK(rel_err(fit.m, M) < 0.01);
        CHECK(rel_err(fit.rho, rho) < 0.01);
        for (int k = 0; k < 3; ++k) CHECK(rel_err(fit.c_k[k], ck[k]) < 0.01);
        for (int k = 0; k < 3; ++k) CHECK(fit.column_residuals[k] < 1e-10);
    }

    SUBCASE("mixed degenerate column") {
        TailProfile prof;
        prof.ks = {3, 6};
        const int rows = 40;
        prof.values.resize(rows, 2);
        for (int i = 0; i < rows; ++i) {
            prof.times.push_back(0.25 * i);
            prof.values(i, 0) = 0.2 + std::exp(-0.7 * prof.times[i]);
            prof.values(i, 1) = 0.0;
        }
        const TailFit fit = tail_fit(prof);
        CHECK(fit.degenerate[0] == 0);
        CHECK(fit.degenerate[1] == 1);
        CHECK(fit.c_k[1] == 0.0);
        CHECK(rel_err(fit.c_k[0], 0.2) < 0.02);
        CHECK(rel_err(fit.rho, 0.7) < 0.02);
    }

    SUBCASE("too few samples are rejected") {
        TailProfile prof;
        prof.ks = {2};
        for (int i = 0; i < 4; ++i) prof.times.push_back(i);
        prof.values = Eigen::MatrixXd::Ones(4, 1);
        CHECK_THROWS_AS(tail_fit(prof), config_error);
    }
}

TEST_CASE("fitted plateau decays in k on a localized dissipative run") {
    // compact reaction well; the long-run state is localized, so exterior
    // plateaus drop with the cutoff radius
    const Grid g = interval_grid(60.0, 599);
    auto one = [](const std::array<double, 3>&) { return 1.0; };
    auto beta_fn = [](const std::array<double, 3>&) { return 0.25; };
    const auto op =
        DiscreteOperator::build(g, CoefficientField::isotropic(g, one, beta_fn, 1.0, 1.0));
    const Field lam = g.sample([](const std::array<double, 3>& x) {
        return 2.0 * std::exp(-(x[0] * x[0]) / 16.0);
    });
    const auto nl = Nonlinearity::cubic(g, lam, Field::Constant(g.size(), 1.0),
                                        Field::Zero(g.size()), 2.0);
    HyperbolicState z0;
    z0.u = bump(g, 3.0);
    z0.v = Field::Zero(g.size());
    z0.eps = 0.1;
    Trajectory traj = integrate_hyperbolic(op, nl, z0, 12.0, 2e-3, 60);
    traj.require_ok();
    const TailProfile prof = tail_profile(op, traj, {4, 8, 16});
    const TailFit fit = tail_fit(prof);
    CHECK(fit.c_k[0] >= fit.c_k[1]);
    CHECK(fit.c_k[1] >= fit.c_k[2]);
    CHECK(fit.c_k[2] < fit.c_k[0]);
}
