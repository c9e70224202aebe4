#include "epslab/oracle.hpp"

#include <cmath>
#include <complex>

#include "epslab/errors.hpp"

namespace epslab {

HyperbolicState dense_linear_solution(const DiscreteOperator& op, double eps,
                                      const HyperbolicState& z0, double t) {
    if (!(eps > 0)) throw config_error("dense_linear_solution: eps must be positive");
    const auto& es = op.eigensystem();
    const Eigen::Index n = op.size();
    const Eigen::VectorXd a = es.vectors.transpose() * z0.u;
    const Eigen::VectorXd b = es.vectors.transpose() * z0.v;

    Eigen::VectorXd ut(n), vt(n);
    using cd = std::complex<double>;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double lam = es.values[k];
        const cd disc = std::sqrt(cd(1.0 - 4.0 * eps * lam, 0.0));
        const cd s1 = (-1.0 + disc) / (2.0 * eps);
        const cd s2 = (-1.0 - disc) / (2.0 * eps);
        cd u, v;
        if (std::abs(s1 - s2) <= 1e-8 * (std::abs(s1) + std::abs(s2) + 1.0)) {
            // confluent pair: u = e^{st}(u0 + (v0 - s u0) t)
            const cd s = 0.5 * (s1 + s2);
            const cd e = std::exp(s * t);
            const cd c = b[k] - s * a[k];
            u = e * (a[k] + c * t);
            v = e * (s * (a[k] + c * t) + c);
        } else {
            const cd c1 = (b[k] - s2 * a[k]) / (s1 - s2);
            const cd c2 = a[k] - c1;
            const cd e1 = std::exp(s1 * t);
            const cd e2 = std::exp(s2 * t);
            u = c1 * e1 + c2 * e2;
            v = c1 * s1 * e1 + c2 * s2 * e2;
        }
        ut[k] = u.real();
        vt[k] = v.real();
    }
    HyperbolicState out;
    out.u = es.vectors * ut;
    out.v = es.vectors * vt;
    out.t = z0.t + t;
    out.eps = eps;
    return out;
}

double dense_hminus1(const Field& w, const DiscreteOperator& op) {
    if (w.size() != op.size()) throw config_error("dense_hminus1: field size mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(op.matrix()));
    if (llt.info() != Eigen::Success)
        throw numerics_error("dense_hminus1: dense Cholesky failed");
    const Field x = llt.solve(w);
    return std::sqrt(std::max(0.0, op.grid().cell_volume() * w.dot(x)));
}

double fd_gradient_check(const Nonlinearity& nl, const Field& u, double du) {
    if (!(du > 0)) throw config_error("fd_gradient_check: du must be positive");
    double worst = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double d =
            (nl.F_at(i, u[i] + du) - nl.F_at(i, u[i] - du)) / (2.0 * du) - nl.f_at(i, u[i]);
        worst = std::max(worst, std::abs(d));
    }
    return worst;
}

Eigen::MatrixXd dense_operator_matrix(const Grid& grid, const CoefficientField& coeffs) {
    const int dim = grid.dimension();
    const Eigen::Index n = grid.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);

    for (Eigen::Index i = 0; i < n; ++i) {
        auto mi = grid.multi_index(i);
        m(i, i) += coeffs.beta()[i];
        for (int a = 0; a < dim; ++a) {
            const double h2 = grid.spacing(a) * grid.spacing(a);
            const double alo = coeffs.face_diag(a, mi[a], mi);
            const double ahi = coeffs.face_diag(a, mi[a] + 1, mi);
            m(i, i) += (alo + ahi) / h2;
            auto left = mi;
            left[a] -= 1;
            if (left[a] >= 0) m(i, grid.index(left)) -= alo / h2;
            auto right = mi;
            right[a] += 1;
            if (right[a] < grid.nodes(a)) m(i, grid.index(right)) -= ahi / h2;
        }
        for (int ai = 0; ai < dim; ++ai) {
            for (int aj = ai + 1; aj < dim; ++aj) {
                const double aij = coeffs.node_offdiag(ai, aj, i);
                if (aij == 0.0) continue;
                const double c0 = aij / (4.0 * grid.spacing(ai) * grid.spacing(aj));
                for (int si = -1; si <= 1; si += 2) {
                    auto p = mi;
                    p[ai] += si;
                    if (p[ai] < 0 || p[ai] >= grid.nodes(ai)) continue;
                    for (int sj = -1; sj <= 1; sj += 2) {
                        auto q = mi;
                        q[aj] += sj;
                        if (q[aj] < 0 || q[aj] >= grid.nodes(aj)) continue;
                        m(grid.index(p), grid.index(q)) += si * sj * c0;
                        m(grid.index(q), grid.index(p)) += si * sj * c0;
                    }
                }
            }
        }
    }
    return m;
}

} // namespace epslab
