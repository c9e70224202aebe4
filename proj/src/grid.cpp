#include "epslab/grid.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "epslab/errors.hpp"

namespace epslab {

Grid Grid::build(const GridSpec& spec) {
    if (spec.dimension < 1 || spec.dimension > 3)
        throw config_error("grid: dimension must be 1, 2 or 3, got " +
                           std::to_string(spec.dimension));
    Grid g;
    g.dim_ = spec.dimension;
    g.total_ = 1;
    g.cell_volume_ = 1.0;
    for (int a = 0; a < g.dim_; ++a) {
        if (!(spec.extent[a] > 0.0)) {
            std::ostringstream os;
            os << "grid: extent along axis " << a << " must be positive, got "
               << spec.extent[a];
            throw config_error(os.str());
        }
        if (spec.nodes[a] < 1)
            throw config_error("grid: node count along axis " + std::to_string(a) +
                               " must be >= 1, got " + std::to_string(spec.nodes[a]));
        g.extent_[a] = spec.extent[a];
        g.count_[a] = spec.nodes[a];
        g.spacing_[a] = 2.0 * spec.extent[a] / (spec.nodes[a] + 1);
        g.total_ *= spec.nodes[a];
        g.cell_volume_ *= g.spacing_[a];
    }
    return g;
}

Field Grid::sample(const std::function<double(const std::array<double, 3>&)>& fn) const {
    Field out(total_);
    for (Eigen::Index i = 0; i < total_; ++i) out[i] = fn(coords(i));
    return out;
}

std::uint64_t Grid::hash() const {
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    auto mix = [&h](const void* p, std::size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    mix(&dim_, sizeof dim_);
    for (int a = 0; a < dim_; ++a) {
        mix(&extent_[a], sizeof(double));
        mix(&count_[a], sizeof(int));
    }
    return h;
}

double inner_l2(const Field& u, const Field& v, const Grid& grid) {
    if (u.size() != grid.size() || v.size() != grid.size())
        throw config_error("inner_l2: field size mismatch with grid");
    return grid.cell_volume() * u.dot(v);
}

double norm_l2(const Field& u, const Grid& grid) {
    return std::sqrt(inner_l2(u, u, grid));
}

double norm_lp(const Field& u, double p, const Grid& grid) {
    if (u.size() != grid.size())
        throw config_error("norm_lp: field size mismatch with grid");
    double s = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i]), p);
    return std::pow(grid.cell_volume() * s, 1.0 / p);
}

} // namespace epslab
