#ifndef EPSLAB_OPERATOR_HPP
#define EPSLAB_OPERATOR_HPP

#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "epslab/coefficients.hpp"
#include "epslab/grid.hpp"

namespace epslab {

/// Sparse symmetric realization A_h of u -> beta u - div(A grad u) with
/// homogeneous Dirichlet boundary, plus the norm hierarchy it induces:
///
///   <u,v>_H1    = <A_h u, v>_L2
///   |w|_H-1^2   = <A_h^{-1} w, w>_L2
///   |w|_H-alpha = |A_h^{-alpha/2} w|_L2   (spectral, dense path)
///
/// Instances are immutable after build() and cheap to copy; internal caches
/// (factorization, eigensystem) are shared and thread-safe.
class DiscreteOperator {
public:
    static constexpr Eigen::Index kDefaultDenseCap = 4096;

    /// Flux-form second-order assembly. Diagonal coefficient terms use the
    /// half-point face samples; mixed terms (d >= 2) use symmetrized central
    /// differences with nodal samples. Positive definiteness is established
    /// during construction (Cholesky below the dense cap) and lambda1 is
    /// computed by inverse power iteration (tolerance 1e-8, capped at 1e5
    /// iterations).
    static DiscreteOperator build(const Grid& grid, const CoefficientField& coeffs,
                                  Eigen::Index dense_cap = kDefaultDenseCap);

    const Grid& grid() const { return grid_; }
    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
    const Field& beta() const { return beta_; }
    Eigen::Index size() const { return matrix_.rows(); }
    Eigen::Index dense_cap() const { return dense_cap_; }
    double lambda1() const { return lambda1_; }

    Field apply(const Field& u) const;

    /// Solve A_h x = w. Direct Cholesky below the dense cap, preconditioned
    /// conjugate gradients above it; either way the result is refined until
    /// |A_h x - w| <= 1e-10 |w|. Throws numerics_error (with the residual)
    /// if that cannot be reached.
    Field solve(const Field& w, double* rel_residual = nullptr) const;

    double inner_h1(const Field& u, const Field& v) const;
    double norm_h1(const Field& u) const;
    /// <beta u, v>_L2 — the zeroth-order part of the H1 product.
    double inner_beta(const Field& u, const Field& v) const;

    double inner_hminus1(const Field& w1, const Field& w2) const;
    double norm_hminus1(const Field& w) const;

    /// |A_h^{-alpha/2} w|_L2 for alpha in [0,1]. Uses the dense eigensystem
    /// when the size permits; otherwise only alpha in {0,1} is served.
    double fractional_norm(const Field& w, double alpha) const;

    struct Eigensystem {
        Eigen::VectorXd values;  // ascending
        Eigen::MatrixXd vectors; // Euclidean-orthonormal columns
    };
    /// Dense eigendecomposition, computed once on demand (size <= dense cap).
    const Eigensystem& eigensystem() const;
    bool dense_available() const { return size() <= dense_cap_; }

    static constexpr double kSolveTol = 1e-10;
    static constexpr double kLambdaTol = 1e-8;
    static constexpr long kLambdaMaxIter = 100000;

private:
    DiscreteOperator(Grid grid) : grid_(std::move(grid)) {}

    Field pcg(const Field& w, const Field& x0, double tol, long max_iter,
              double* out_residual) const;

    Grid grid_;
    Field beta_;
    Eigen::SparseMatrix<double> matrix_;
    Field inv_diag_;
    double lambda1_ = 0;
    Eigen::Index dense_cap_ = kDefaultDenseCap;

    std::shared_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
    struct EigCache;
    std::shared_ptr<EigCache> eig_;
};

/// Spec-level wrapper names.
DiscreteOperator build_operator(const Grid& grid, const CoefficientField& coeffs);
double inner_h1(const Field& u, const Field& v, const DiscreteOperator& op);
double norm_hminus1(const Field& w, const DiscreteOperator& op);
double fractional_norm(const Field& w, const DiscreteOperator& op, double alpha);
double lambda1(const DiscreteOperator& op);

} // namespace epslab

#endif
