#ifndef EPSLAB_NONLINEARITY_HPP
#define EPSLAB_NONLINEARITY_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "epslab/grid.hpp"
#include "epslab/operator.hpp"
#include "epslab/rng.hpp"

namespace epslab {

enum class FamilyKind { cubic, tabulated };

/// Reaction term f(x,u) together with its exact antiderivative F (F(x,0)=0),
/// its exact u-derivative, and the dissipativity metadata (mu_bar, c(x)).
///
/// Built-in family: f(x,u) = lambda(x) u - gamma(x) u^3 + g(x) with
/// gamma >= gamma0 > 0. A tabulated family (cubic Hermite interpolation of
/// f samples on a uniform u-grid, shared across nodes) is available as an
/// escape hatch; its growth constants are estimated numerically.
class Nonlinearity {
public:
    static Nonlinearity cubic(const Grid& grid, Field lambda, Field gamma, Field g,
                              double mu_bar, std::optional<Field> c = std::nullopt);
    static Nonlinearity cubic_const(const Grid& grid, double lambda, double gamma,
                                    double g, double mu_bar);
    static Nonlinearity tabulated(const Grid& grid, double u_min, double u_max,
                                  std::vector<double> f_samples, double mu_bar,
                                  double c_bound);

    FamilyKind kind() const { return kind_; }
    const Grid& grid() const { return grid_; }
    double mu_bar() const { return mu_bar_; }
    /// Pointwise dissipativity bound c(x).
    const Field& c_bound() const { return c_; }

    /// Family constant C with |f_u| <= C(1+u^2), |f_u(x,v)-f_u(x,u)| <=
    /// C(1+|u|+|v-u|)|v-u| and the Taylor-remainder bound; for the cubic
    /// family C = max(|lambda|_inf, 6|gamma|_inf).
    double growth_c() const { return growth_c_; }
    /// Tighter constant for the first bound alone: max(|lambda|_inf, 3|gamma|_inf).
    double dfu_bound_constant() const { return dfu_bound_c_; }
    /// C-bar with |f_uu| <= C-bar (1 + |u|).
    double cbar() const { return cbar_; }

    double f_at(Eigen::Index node, double u) const;
    double F_at(Eigen::Index node, double u) const;
    double dfu_at(Eigen::Index node, double u) const;

    Field f(const Field& u) const;
    Field F(const Field& u) const;
    Field dfu(const Field& u) const;
    const Field& f_zero() const { return f_zero_; } // f(x,0)

    /// (f_u o u) . v, the derivative of f o u along v.
    Field linearized_forcing(const Field& u, const Field& v) const;

    /// Nodal quadrature of the potential: cell_volume * sum F(x_i, u_i).
    double total_F(const Field& u) const;

private:
    explicit Nonlinearity(Grid grid) : grid_(std::move(grid)) {}

    Grid grid_;
    FamilyKind kind_ = FamilyKind::cubic;
    double mu_bar_ = 0;
    Field c_;
    double growth_c_ = 0, dfu_bound_c_ = 0, cbar_ = 0;
    Field f_zero_;

    // cubic family
    Field lambda_, gamma_, g_;

    // tabulated family: Hermite segments on a uniform u-grid
    double u_min_ = 0, du_ = 0;
    std::vector<double> tab_f_, tab_m_;  // values and slopes at knots
    std::vector<double> tab_Fk_;         // exact antiderivative at knots
};

struct DissipativityReport {
    bool passed = true;
    double worst_margin_fu = std::numeric_limits<double>::infinity(); // min(c - (fu - mu F))
    double worst_margin_F = std::numeric_limits<double>::infinity();  // min(c - F)
    Eigen::Index witness_node = -1;
    double witness_u = 0;
    std::string witness_kind; // "fu-muF" or "F"
    long samples = 0;
};

/// Checks f(x,u)u - mu_bar F(x,u) <= c(x) and F(x,u) <= c(x) on a uniform
/// u-sample of [-u_max, u_max] at every node.
DissipativityReport dissipativity_audit(const Nonlinearity& nl, double u_max,
                                        int u_samples);

struct EmbeddingConstants {
    double c2 = 0, c3 = 0, c4 = 0, c6 = 0;
    double of(int s) const;
};

/// Empirical discrete embedding constants sup |u|_Ls / |u|_H1 over a mixed
/// random ensemble (iid noise, low modes, localized peaks, the ground
/// eigenvector). Reproducible for a fixed seed.
EmbeddingConstants estimate_embedding_constants(const DiscreteOperator& op,
                                                int ensemble_size, std::uint64_t seed);

struct GrowthAuditConfig {
    EmbeddingConstants constants;
    double inflation = 1.05; // safety factor applied to the estimates
    int ensemble_size = 512;
    std::uint64_t seed = 0;
};

struct InequalityResult {
    std::string name;
    double worst_margin = std::numeric_limits<double>::infinity(); // min(rhs - lhs)
    double worst_relative = std::numeric_limits<double>::infinity();
    long witness = -1;
    long violations = 0;
};

struct GrowthAuditReport {
    std::vector<InequalityResult> inequalities;
    long pairs = 0;
    bool passed = true;
};

/// Verifies the six Nemitski growth inequalities (L2/L1/H-1 bounds on f, F,
/// their differences and the Taylor remainder) on the supplied trial pairs,
/// using the family constant and the inflated embedding constants.
GrowthAuditReport growth_audit(const Nonlinearity& nl, const DiscreteOperator& op,
                               const GrowthAuditConfig& cfg,
                               std::span<const std::pair<Field, Field>> trials);

struct ForcingBoundCheck {
    double lhs = 0;         // |(f_u o u) v|_H-1
    double rhs = 0;         // C (C2 + C6 C3^2 |u|_H1^2) |v|_L2
    double rhs_direct = 0;  // C (C2 + C6 |u|_L6^2) |v|_L2
    bool ok = false;
};
ForcingBoundCheck check_linearized_forcing_bound(const Nonlinearity& nl,
                                                 const DiscreteOperator& op,
                                                 const GrowthAuditConfig& cfg,
                                                 const Field& u, const Field& v);

/// Mixed-style random field used by audits and the embedding estimator.
Field random_trial_field(const Grid& grid, Rng& rng);
std::vector<std::pair<Field, Field>> make_trial_pairs(const Grid& grid, long count,
                                                      std::uint64_t seed);

/// Real roots of a x^3 + b x^2 + c x + d (degenerate degrees handled).
int real_roots_cubic(double a, double b, double c, double d, double roots[3]);

} // namespace epslab

#endif
