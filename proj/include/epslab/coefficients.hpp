#ifndef EPSLAB_COEFFICIENTS_HPP
#define EPSLAB_COEFFICIENTS_HPP

#include <array>
#include <functional>
#include <vector>

#include "epslab/grid.hpp"

namespace epslab {

/// Symmetric d x d coefficient matrix, upper triangle in the order
/// (0,0),(0,1),(0,2),(1,1),(1,2),(2,2).
struct SymMat {
    std::array<double, 6> a{1, 0, 0, 1, 0, 1};

    static int tri_index(int i, int j) {
        if (i > j) std::swap(i, j);
        static constexpr int base[3] = {0, 3, 5};
        return base[i] + (j - i);
    }
    double operator()(int i, int j) const { return a[tri_index(i, j)]; }
    double& operator()(int i, int j) { return a[tri_index(i, j)]; }
    static SymMat identity(double s = 1.0) {
        SymMat m;
        m.a = {s, 0, 0, s, 0, s};
        return m;
    }
};

/// Diffusion matrix field A(x) and zeroth-order coefficient beta(x) for the
/// operator u -> beta u - div(A grad u), together with the declared
/// ellipticity bounds a0, a1.
///
/// The diagonal entries a_kk are held at the cell half-points used by the
/// flux-form stencil (obtained by arithmetic averaging of the nodal samples
/// along axis k); the off-diagonal entries are held at interior nodes; beta
/// is held at interior nodes. Ellipticity is verified at construction on the
/// canonical directions at every nodal sample and on a random sample of
/// (node, direction) pairs.
class CoefficientField {
public:
    using MatrixFn = std::function<SymMat(const std::array<double, 3>&)>;
    using ScalarFn = std::function<double(const std::array<double, 3>&)>;

    static CoefficientField sample(const Grid& grid, const MatrixFn& a,
                                   const ScalarFn& beta, double a0, double a1);
    static CoefficientField isotropic(const Grid& grid, const ScalarFn& a,
                                      const ScalarFn& beta, double a0, double a1);
    static CoefficientField constant(const Grid& grid, double a, double beta);

    double a0() const { return a0_; }
    double a1() const { return a1_; }
    const Field& beta() const { return beta_; }

    /// a_{axis,axis} at the face between interior nodes (face_along-1) and
    /// face_along on the given axis; face_along runs 0..n_axis, transverse
    /// coordinates taken from m (component `axis` of m ignored).
    double face_diag(int axis, int face_along, const std::array<int, 3>& m) const;

    /// a_{i,j}, i != j, at an interior node.
    double node_offdiag(int i, int j, Eigen::Index node) const;

    const Grid& grid() const { return grid_; }

private:
    CoefficientField(Grid grid) : grid_(std::move(grid)) {}

    Eigen::Index face_index(int axis, int face_along, const std::array<int, 3>& m) const;

    Grid grid_;
    double a0_ = 0, a1_ = 0;
    Field beta_;
    std::array<Field, 3> face_diag_;   // per axis, size (n_a+1) * (N / n_a)
    std::array<Field, 3> node_off_;    // pairs (0,1),(0,2),(1,2), size N each
};

} // namespace epslab

#endif
