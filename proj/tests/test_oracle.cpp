#include <doctest.h>

#include <cmath>

#include "epslab/oracle.hpp"
#include "epslab/rng.hpp"
#include "support/helpers.hpp"

using namespace epslab;
using namespace epslab::test;

namespace {

// Single-degree-of-freedom operator with A_h = [1]: box of half-width 2,
// one interior node, a = 1, beta = 0.5 gives 2/h^2 + beta = 1.
DiscreteOperator unit_scalar_operator() {
    const Grid g = Grid::build({1, {2.0, 0, 0}, {1, 0, 0}});
    return DiscreteOperator::build(g, CoefficientField::constant(g, 1.0, 0.5));
}

} // namespace

TEST_CASE("dense_linear_solution: semigroup identity at t=0") {
    const Grid g = pi_grid(24);
    const auto op = laplacian(g);
    Rng rng(9);
    HyperbolicState z0;
    z0.u = Field(g.size());
    z0.v = Field(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        z0.u[i] = rng.normal();
        z0.v[i] = rng.normal();
    }
    z0.eps = 0.3;
    const auto z = dense_linear_solution(op, 0.3, z0, 0.0);
    CHECK((z.u - z0.u).norm() < 1e-12 * z0.u.norm());
    CHECK((z.v - z0.v).norm() < 1e-12 * z0.v.norm());
}

TEST_CASE("dense_linear_solution matches hand closed forms on one mode") {
    const auto op = unit_scalar_operator();
    REQUIRE(op.size() == 1);
    REQUIRE(Eigen::MatrixXd(op.matrix())(0, 0) == doctest::Approx(1.0));

    HyperbolicState z0;
    z0.u = Field::Constant(1, 0.7);
    z0.v = Field::Constant(1, -0.4);

    SUBCASE("underdamped, eps = 1") {
        // u'' + u' + u = 0: u = e^{-t/2}(A cos wt + B sin wt), w = sqrt(3)/2
        const double w = std::sqrt(3.0) / 2.0;
        const double A = 0.7;
        const double B = (-0.4 + 0.5 * 0.7) / w;
        for (double t : {0.3, 1.0, 2.5}) {
            const auto z = dense_linear_solution(op, 1.0, z0, t);
            const double expect =
                std::exp(-t / 2) * (A * std::cos(w * t) + B * std::sin(w * t));
            CHECK(z.u[0] == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    SUBCASE("overdamped, eps = 0.05") {
        const double disc = std::sqrt(1.0 - 4.0 * 0.05);
        const double s1 = (-1.0 + disc) / 0.1;
        const double s2 = (-1.0 - disc) / 0.1;
        const double c1 = (-0.4 - s2 * 0.7) / (s1 - s2);
        const double c2 = 0.7 - c1;
        for (double t : {0.2, 1.0}) {
            const auto z = dense_linear_solution(op, 0.05, z0, t);
            const double expect = c1 * std::exp(s1 * t) + c2 * std::exp(s2 * t);
            CHECK(z.u[0] == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    SUBCASE("confluent double root, eps = 0.25") {
        // s = -2 twice: u = e^{-2t}(u0 + (v0 + 2 u0) t)
        for (double t : {0.5, 1.5}) {
            const auto z = dense_linear_solution(op, 0.25, z0, t);
            const double expect = std::exp(-2 * t) * (0.7 + (-0.4 + 2 * 0.7) * t);
            CHECK(z.u[0] == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("dense_linear_solution: group property") {
    const Grid g = pi_grid(16);
    const auto op = laplacian(g, 0.2);
    Rng rng(21);
    HyperbolicState z0;
    z0.u = Field(g.size());
    z0.v = Field(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        z0.u[i] = rng.normal();
        z0.v[i] = rng.normal();
    }
    z0.eps = 0.15;
    const auto direct = dense_linear_solution(op, 0.15, z0, 0.9);
    const auto mid = dense_linear_solution(op, 0.15, z0, 0.4);
    const auto restart = dense_linear_solution(op, 0.15, mid, 0.5);
    CHECK((direct.u - restart.u).norm() <= 1e-10 * (1 + direct.u.norm()));
    CHECK((direct.v - restart.v).norm() <= 1e-10 * (1 + direct.v.norm()));
}

TEST_CASE("dense_hminus1 reference") {
    const Grid g = pi_grid(8);
    const auto op = laplacian(g, 0.1);
    CHECK(dense_hminus1(Field::Zero(8), op) == 0.0);

    Rng rng(33);
    Field w(8), u(8);
    for (int i = 0; i < 8; ++i) {
        w[i] = rng.normal();
        u[i] = rng.normal();
    }
    CHECK(rel_err(dense_hminus1(w, op), op.norm_hminus1(w)) < 1e-8);
    // |A_h u|_{H^-1} = |u|_{H^1} by definition of the realized norms
    CHECK(rel_err(dense_hminus1(op.apply(u), op), op.norm_h1(u)) < 1e-10);
}
