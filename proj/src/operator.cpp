#include "epslab/operator.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "epslab/errors.hpp"

namespace epslab {

struct DiscreteOperator::EigCache {
    std::mutex mutex;
    bool ready = false;
    Eigensystem sys;
};

namespace {

std::array<int, 3> shifted(std::array<int, 3> m, int axis, int delta) {
    m[axis] += delta;
    return m;
}

bool in_range(const Grid& g, const std::array<int, 3>& m) {
    for (int a = 0; a < g.dimension(); ++a)
        if (m[a] < 0 || m[a] >= g.nodes(a)) return false;
    return true;
}

} // namespace

DiscreteOperator DiscreteOperator::build(const Grid& grid, const CoefficientField& coeffs,
                                         Eigen::Index dense_cap) {
    if (!(coeffs.grid() == grid))
        throw config_error("build_operator: coefficient samples incompatible with grid");

    const int dim = grid.dimension();
    const Eigen::Index n = grid.size();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * (2 * dim + 1));

    // Flux form for the diagonal diffusion terms: each face between adjacent
    // nodes contributes a_face/h^2 to the 3-point stencil along its axis.
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto m = grid.multi_index(i);
        double diag = coeffs.beta()[i];
        for (int a = 0; a < dim; ++a) {
            const double h2 = grid.spacing(a) * grid.spacing(a);
            const double alo = coeffs.face_diag(a, m[a], m);
            const double ahi = coeffs.face_diag(a, m[a] + 1, m);
            diag += (alo + ahi) / h2;
            const auto mlo = shifted(m, a, -1);
            if (in_range(grid, mlo)) trips.emplace_back(i, grid.index(mlo), -alo / h2);
            const auto mhi = shifted(m, a, +1);
            if (in_range(grid, mhi)) trips.emplace_back(i, grid.index(mhi), -ahi / h2);
        }
        trips.emplace_back(i, i, diag);
    }

    // Mixed terms via central differences, assembled as a quadratic form so
    // the matrix stays exactly symmetric.
    if (dim >= 2) {
        for (Eigen::Index node = 0; node < n; ++node) {
            const auto m = grid.multi_index(node);
            for (int ai = 0; ai < dim; ++ai) {
                for (int aj = ai + 1; aj < dim; ++aj) {
                    const double aij = coeffs.node_offdiag(ai, aj, node);
                    if (aij == 0.0) continue;
                    const double c0 = aij / (4.0 * grid.spacing(ai) * grid.spacing(aj));
                    for (int si = -1; si <= 1; si += 2) {
                        const auto p = shifted(m, ai, si);
                        if (!in_range(grid, p)) continue;
                        for (int sj = -1; sj <= 1; sj += 2) {
                            const auto q = shifted(m, aj, sj);
                            if (!in_range(grid, q)) continue;
                            const double c = si * sj * c0;
                            trips.emplace_back(grid.index(p), grid.index(q), c);
                            trips.emplace_back(grid.index(q), grid.index(p), c);
                        }
                    }
                }
            }
        }
    }

    DiscreteOperator op(grid);
    op.beta_ = coeffs.beta();
    op.dense_cap_ = dense_cap;
    op.matrix_.resize(n, n);
    op.matrix_.setFromTriplets(trips.begin(), trips.end());
    op.matrix_.makeCompressed();
    op.eig_ = std::make_shared<EigCache>();

    op.inv_diag_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = op.matrix_.coeff(i, i);
        op.inv_diag_[i] = (d > 0) ? 1.0 / d : 1.0;
    }

    if (n <= dense_cap) {
        op.llt_ = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
        op.llt_->compute(op.matrix_);
        if (op.llt_->info() != Eigen::Success)
            throw numerics_error(
                "build_operator: Cholesky factorization failed; operator is not "
                "positive definite (check beta against the lambda1 > 0 assumption)");
    }

    // Smallest eigenvalue by inverse power iteration.
    Field x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 1e-3 * std::sin(double(i + 1));
    x.normalize();
    double lam = 0;
    bool converged = false;
    double res = 0;
    for (long it = 0; it < kLambdaMaxIter; ++it) {
        Field y = op.solve(x);
        y.normalize();
        const Field ay = op.matrix_ * y;
        lam = y.dot(ay);
        res = (ay - lam * y).norm();
        x = y;
        if (res <= kLambdaTol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "lambda1: inverse power iteration did not reach tolerance " << kLambdaTol
           << " within " << kLambdaMaxIter << " iterations (residual " << res << ")";
        throw numerics_error(os.str());
    }
    if (!(lam > 0))
        throw numerics_error("lambda1: smallest eigenvalue is not positive: " +
                             std::to_string(lam));
    op.lambda1_ = lam;
    return op;
}

Field DiscreteOperator::apply(const Field& u) const {
    if (u.size() != size()) throw config_error("apply: field size mismatch");
    return matrix_ * u;
}

Field DiscreteOperator::pcg(const Field& w, const Field& x0, double tol, long max_iter,
                            double* out_residual) const {
    Field x = x0;
    Field r = w - matrix_ * x;
    const double bnorm = w.norm();
    if (bnorm == 0.0) {
        if (out_residual) *out_residual = 0;
        return Field::Zero(w.size());
    }
    Field z = inv_diag_.cwiseProduct(r);
    Field p = z;
    double rz = r.dot(z);
    double relres = r.norm() / bnorm;
    for (long it = 0; it < max_iter && relres > tol; ++it) {
        const Field ap = matrix_ * p;
        const double alpha = rz / p.dot(ap);
        x += alpha * p;
        r -= alpha * ap;
        relres = r.norm() / bnorm;
        z = inv_diag_.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    if (out_residual) *out_residual = relres;
    return x;
}

Field DiscreteOperator::solve(const Field& w, double* rel_residual) const {
    if (w.size() != size()) throw config_error("solve: field size mismatch");
    const double bnorm = w.norm();
    if (bnorm == 0.0) {
        if (rel_residual) *rel_residual = 0;
        return Field::Zero(size());
    }
    Field x;
    if (llt_) {
        x = llt_->solve(w);
    } else {
        x = Field::Zero(size());
    }
    double relres = (w - matrix_ * x).norm() / bnorm;
    if (relres > kSolveTol) {
        const long max_iter = std::max<long>(2000, 20 * size());
        x = pcg(w, x, kSolveTol, max_iter, &relres);
    }
    if (relres > kSolveTol) {
        std::ostringstream os;
        os << "solve: residual " << relres << " above tolerance " << kSolveTol;
        throw numerics_error(os.str());
    }
    if (rel_residual) *rel_residual = relres;
    return x;
}

double DiscreteOperator::inner_h1(const Field& u, const Field& v) const {
    if (u.size() != size() || v.size() != size())
        throw config_error("inner_h1: field size mismatch");
    return grid_.cell_volume() * u.dot(matrix_ * v);
}

double DiscreteOperator::norm_h1(const Field& u) const {
    return std::sqrt(std::max(0.0, inner_h1(u, u)));
}

double DiscreteOperator::inner_beta(const Field& u, const Field& v) const {
    if (u.size() != size() || v.size() != size())
        throw config_error("inner_beta: field size mismatch");
    return grid_.cell_volume() * u.dot(beta_.cwiseProduct(v));
}

double DiscreteOperator::inner_hminus1(const Field& w1, const Field& w2) const {
    if (w1.size() != size() || w2.size() != size())
        throw config_error("inner_hminus1: field size mismatch");
    return grid_.cell_volume() * solve(w1).dot(w2);
}

double DiscreteOperator::norm_hminus1(const Field& w) const {
    return std::sqrt(std::max(0.0, inner_hminus1(w, w)));
}

const DiscreteOperator::Eigensystem& DiscreteOperator::eigensystem() const {
    if (!dense_available()) {
        std::ostringstream os;
        os << "eigensystem: size " << size() << " above dense cap " << dense_cap_;
        throw config_error(os.str());
    }
    std::lock_guard<std::mutex> lock(eig_->mutex);
    if (!eig_->ready) {
        const Eigen::MatrixXd dense(matrix_);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
        if (es.info() != Eigen::Success)
            throw numerics_error("eigensystem: dense eigensolver failed");
        eig_->sys.values = es.eigenvalues();
        eig_->sys.vectors = es.eigenvectors();
        if (eig_->sys.values[0] <= 0)
            throw numerics_error("eigensystem: operator is not positive definite");
        eig_->ready = true;
    }
    return eig_->sys;
}

double DiscreteOperator::fractional_norm(const Field& w, double alpha) const {
    if (w.size() != size()) throw config_error("fractional_norm: field size mismatch");
    if (alpha < 0.0 || alpha > 1.0)
        throw config_error("fractional_norm: alpha must lie in [0,1], got " +
                           std::to_string(alpha));
    if (!dense_available()) {
        if (alpha == 0.0) return norm_l2(w, grid_);
        if (alpha == 1.0) return norm_hminus1(w);
        std::ostringstream os;
        os << "fractional_norm: size " << size() << " above dense cap " << dense_cap_
           << "; only alpha in {0,1} is available on this grid";
        throw config_error(os.str());
    }
    const Eigensystem& es = eigensystem();
    const Eigen::VectorXd c = es.vectors.transpose() * w;
    double s = 0;
    for (Eigen::Index i = 0; i < c.size(); ++i)
        s += std::pow(es.values[i], -alpha) * c[i] * c[i];
    return std::sqrt(grid_.cell_volume() * s);
}

DiscreteOperator build_operator(const Grid& grid, const CoefficientField& coeffs) {
    return DiscreteOperator::build(grid, coeffs);
}
double inner_h1(const Field& u, const Field& v, const DiscreteOperator& op) {
    return op.inner_h1(u, v);
}
double norm_hminus1(const Field& w, const DiscreteOperator& op) {
    return op.norm_hminus1(w);
}
double fractional_norm(const Field& w, const DiscreteOperator& op, double alpha) {
    return op.fractional_norm(w, alpha);
}
double lambda1(const DiscreteOperator& op) { return op.lambda1(); }

} // namespace epslab
