#include "epslab/coefficients.hpp"

#include <cmath>
#include <sstream>

#include "epslab/errors.hpp"
#include "epslab/rng.hpp"

namespace epslab {

namespace {

// Closed grid (interior nodes plus boundary layer), axis 0 fastest.
struct ClosedIndexer {
    int dim;
    std::array<int, 3> count{1, 1, 1}; // n_a + 2
    explicit ClosedIndexer(const Grid& g) : dim(g.dimension()) {
        for (int a = 0; a < dim; ++a) count[a] = g.nodes(a) + 2;
    }
    Eigen::Index size() const {
        Eigen::Index s = 1;
        for (int a = 0; a < dim; ++a) s *= count[a];
        return s;
    }
    Eigen::Index index(const std::array<int, 3>& c) const {
        Eigen::Index idx = c[dim - 1];
        for (int a = dim - 2; a >= 0; --a) idx = idx * count[a] + c[a];
        return idx;
    }
    std::array<int, 3> multi(Eigen::Index idx) const {
        std::array<int, 3> c{0, 0, 0};
        for (int a = 0; a < dim; ++a) {
            c[a] = static_cast<int>(idx % count[a]);
            idx /= count[a];
        }
        return c;
    }
};

std::array<double, 3> closed_coords(const Grid& g, const std::array<int, 3>& c) {
    std::array<double, 3> x{0, 0, 0};
    for (int a = 0; a < g.dimension(); ++a)
        x[a] = -g.extent(a) + c[a] * g.spacing(a);
    return x;
}

void check_bounds(const SymMat& m, int dim, const std::array<double, 3>& x,
                  double a0, double a1) {
    const double tol = 1e-12 * std::max(1.0, a1);
    auto reject = [&](double q, double n2) {
        std::ostringstream os;
        os << "coefficients: ellipticity violation at x=(" << x[0];
        if (dim > 1) os << "," << x[1];
        if (dim > 2) os << "," << x[2];
        os << "): xi'A xi = " << q << " outside [" << a0 * n2 << ", " << a1 * n2 << "]";
        throw config_error(os.str());
    };
    for (int i = 0; i < dim; ++i) {
        const double q = m(i, i);
        if (q < a0 - tol || q > a1 + tol) reject(q, 1.0);
    }
    return;
}

void check_random_direction(const SymMat& m, int dim, const std::array<double, 3>& x,
                            double a0, double a1, Rng& rng) {
    std::array<double, 3> xi{0, 0, 0};
    double n2 = 0;
    for (int a = 0; a < dim; ++a) {
        xi[a] = rng.normal();
        n2 += xi[a] * xi[a];
    }
    if (n2 == 0) return;
    double q = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) q += xi[i] * m(i, j) * xi[j];
    const double tol = 1e-12 * std::max(1.0, a1) * n2;
    if (q < a0 * n2 - tol || q > a1 * n2 + tol) {
        std::ostringstream os;
        os << "coefficients: ellipticity violation for random direction at x=("
           << x[0] << (dim > 1 ? "," : "") << (dim > 1 ? std::to_string(x[1]) : "")
           << "): xi'A xi = " << q << " with a0|xi|^2 = " << a0 * n2
           << ", a1|xi|^2 = " << a1 * n2;
        throw config_error(os.str());
    }
}

} // namespace

CoefficientField CoefficientField::sample(const Grid& grid, const MatrixFn& a,
                                          const ScalarFn& beta, double a0, double a1) {
    if (!(a0 > 0.0) || !(a1 > 0.0) || a1 < a0)
        throw config_error("coefficients: need 0 < a0 <= a1");
    const int dim = grid.dimension();

    ClosedIndexer closed(grid);
    std::vector<SymMat> samples(static_cast<std::size_t>(closed.size()));
    for (Eigen::Index i = 0; i < closed.size(); ++i) {
        const auto c = closed.multi(i);
        samples[static_cast<std::size_t>(i)] = a(closed_coords(grid, c));
    }

    // Ellipticity: canonical directions everywhere, random directions on a
    // seeded node sample.
    for (Eigen::Index i = 0; i < closed.size(); ++i)
        check_bounds(samples[static_cast<std::size_t>(i)], dim,
                     closed_coords(grid, closed.multi(i)), a0, a1);
    Rng rng(0xE11ABC0FFEEULL);
    const int random_checks = 256;
    for (int s = 0; s < random_checks; ++s) {
        const Eigen::Index i =
            static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(closed.size()));
        check_random_direction(samples[static_cast<std::size_t>(i)], dim,
                               closed_coords(grid, closed.multi(i)), a0, a1, rng);
    }

    CoefficientField cf(grid);
    cf.a0_ = a0;
    cf.a1_ = a1;
    cf.beta_ = grid.sample(beta);

    for (int axis = 0; axis < dim; ++axis) {
        Eigen::Index nfaces = grid.nodes(axis) + 1;
        for (int o = 0; o < dim; ++o)
            if (o != axis) nfaces *= grid.nodes(o);
        cf.face_diag_[axis].resize(nfaces);
    }
    // Face values: mean of the two adjacent nodal samples along the axis.
    for (int axis = 0; axis < dim; ++axis) {
        const int nf = grid.nodes(axis) + 1;
        Eigen::Index t_count = 1;
        for (int o = 0; o < dim; ++o)
            if (o != axis) t_count *= grid.nodes(o);
        for (Eigen::Index t = 0; t < t_count; ++t) {
            // decode transverse interior multi-index
            std::array<int, 3> m{0, 0, 0};
            Eigen::Index rem = t;
            for (int o = 0; o < dim; ++o) {
                if (o == axis) continue;
                m[o] = static_cast<int>(rem % grid.nodes(o));
                rem /= grid.nodes(o);
            }
            std::array<int, 3> c{0, 0, 0};
            for (int o = 0; o < dim; ++o) c[o] = (o == axis) ? 0 : m[o] + 1;
            for (int fa = 0; fa < nf; ++fa) {
                c[axis] = fa;
                const double lo = samples[static_cast<std::size_t>(closed.index(c))](axis, axis);
                c[axis] = fa + 1;
                const double hi = samples[static_cast<std::size_t>(closed.index(c))](axis, axis);
                cf.face_diag_[axis][fa + static_cast<Eigen::Index>(nf) * t] = 0.5 * (lo + hi);
            }
        }
    }
    // Off-diagonal entries at interior nodes.
    if (dim >= 2) {
        static constexpr int pair_i[3] = {0, 0, 1};
        static constexpr int pair_j[3] = {1, 2, 2};
        const int npairs = dim * (dim - 1) / 2;
        for (int p = 0; p < npairs; ++p) cf.node_off_[p].resize(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const auto m = grid.multi_index(i);
            std::array<int, 3> c{0, 0, 0};
            for (int o = 0; o < dim; ++o) c[o] = m[o] + 1;
            const SymMat& s = samples[static_cast<std::size_t>(closed.index(c))];
            int p = 0;
            for (int q = 0; q < 3 && p < npairs; ++q) {
                if (pair_i[q] < dim && pair_j[q] < dim) {
                    cf.node_off_[p][i] = s(pair_i[q], pair_j[q]);
                    ++p;
                }
            }
        }
    }
    return cf;
}

CoefficientField CoefficientField::isotropic(const Grid& grid, const ScalarFn& a,
                                             const ScalarFn& beta, double a0, double a1) {
    return sample(
        grid,
        [&a, &grid](const std::array<double, 3>& x) {
            SymMat m = SymMat::identity(a(x));
            for (int i = 0; i < grid.dimension(); ++i)
                for (int j = i + 1; j < grid.dimension(); ++j) m(i, j) = 0.0;
            return m;
        },
        beta, a0, a1);
}

CoefficientField CoefficientField::constant(const Grid& grid, double a, double beta) {
    return isotropic(
        grid, [a](const std::array<double, 3>&) { return a; },
        [beta](const std::array<double, 3>&) { return beta; }, a, a);
}

Eigen::Index CoefficientField::face_index(int axis, int face_along,
                                          const std::array<int, 3>& m) const {
    const int nf = grid_.nodes(axis) + 1;
    Eigen::Index t = 0, mult = 1;
    for (int o = 0; o < grid_.dimension(); ++o) {
        if (o == axis) continue;
        t += mult * m[o];
        mult *= grid_.nodes(o);
    }
    return face_along + static_cast<Eigen::Index>(nf) * t;
}

double CoefficientField::face_diag(int axis, int face_along,
                                   const std::array<int, 3>& m) const {
    return face_diag_[axis][face_index(axis, face_along, m)];
}

double CoefficientField::node_offdiag(int i, int j, Eigen::Index node) const {
    if (i > j) std::swap(i, j);
    static constexpr int pair_of[3][3] = {{-1, 0, 1}, {0, -1, 2}, {1, 2, -1}};
    return node_off_[pair_of[i][j]][node];
}

} // namespace epslab
