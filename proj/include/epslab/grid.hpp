#ifndef EPSLAB_GRID_HPP
#define EPSLAB_GRID_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace epslab {

using Field = Eigen::VectorXd;

struct GridSpec {
    int dimension = 1;
    std::array<double, 3> extent{0, 0, 0}; // box is [-L_i, L_i] per axis
    std::array<int, 3> nodes{0, 0, 0};     // interior node count per axis
};

/// Uniform tensor grid on a centered box with homogeneous Dirichlet boundary.
/// Only interior nodes are indexed; boundary values are identically zero and
/// never stored. Node j along an axis sits at -L + (j+1)*h, h = 2L/(n+1).
class Grid {
public:
    static Grid build(const GridSpec& spec);

    int dimension() const { return dim_; }
    double extent(int axis) const { return extent_[axis]; }
    int nodes(int axis) const { return count_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    Eigen::Index size() const { return total_; }
    double cell_volume() const { return cell_volume_; }

    /// Lexicographic interior index: axis 0 fastest.
    Eigen::Index index(const std::array<int, 3>& m) const {
        Eigen::Index idx = m[dim_ - 1];
        for (int a = dim_ - 2; a >= 0; --a) idx = idx * count_[a] + m[a];
        return idx;
    }
    std::array<int, 3> multi_index(Eigen::Index idx) const {
        std::array<int, 3> m{0, 0, 0};
        for (int a = 0; a < dim_; ++a) {
            m[a] = static_cast<int>(idx % count_[a]);
            idx /= count_[a];
        }
        return m;
    }
    std::array<double, 3> coords(Eigen::Index idx) const {
        const auto m = multi_index(idx);
        std::array<double, 3> x{0, 0, 0};
        for (int a = 0; a < dim_; ++a) x[a] = -extent_[a] + (m[a] + 1) * spacing_[a];
        return x;
    }
    /// Euclidean distance of node to the origin (box center).
    double radius(Eigen::Index idx) const {
        const auto x = coords(idx);
        double s = 0;
        for (int a = 0; a < dim_; ++a) s += x[a] * x[a];
        return std::sqrt(s);
    }

    /// Nodal sampling of a scalar function of position.
    Field sample(const std::function<double(const std::array<double, 3>&)>& fn) const;

    /// Hash of the geometry (dimension, extents, counts); identifies
    /// compatible snapshot sets.
    std::uint64_t hash() const;

    bool operator==(const Grid& o) const {
        return dim_ == o.dim_ && extent_ == o.extent_ && count_ == o.count_;
    }

private:
    int dim_ = 1;
    std::array<double, 3> extent_{0, 0, 0};
    std::array<int, 3> count_{1, 1, 1};
    std::array<double, 3> spacing_{0, 0, 0};
    Eigen::Index total_ = 0;
    double cell_volume_ = 0;
};

/// L2 inner product of two nodal fields: cell_volume * sum(u_i v_i).
double inner_l2(const Field& u, const Field& v, const Grid& grid);
double norm_l2(const Field& u, const Grid& grid);

/// Lp norm (p >= 1) of a nodal field under the same quadrature.
double norm_lp(const Field& u, double p, const Grid& grid);

} // namespace epslab

#endif
