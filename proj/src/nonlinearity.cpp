#include "epslab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epslab/errors.hpp"

namespace epslab {

namespace {

double max_abs(const Field& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

double polish_root(double a, double b, double c, double d, double x) {
    for (int it = 0; it < 3; ++it) {
        const double p = ((a * x + b) * x + c) * x + d;
        const double dp = (3 * a * x + 2 * b) * x + c;
        if (dp == 0) break;
        x -= p / dp;
    }
    return x;
}

} // namespace

int real_roots_cubic(double a, double b, double c, double d, double roots[3]) {
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (scale == 0) return 0;
    if (std::abs(a) < 1e-14 * scale) {
        // quadratic b x^2 + c x + d
        if (std::abs(b) < 1e-14 * scale) {
            if (std::abs(c) < 1e-14 * scale) return 0;
            roots[0] = -d / c;
            return 1;
        }
        const double disc = c * c - 4 * b * d;
        if (disc < 0) return 0;
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (c + (c >= 0 ? sq : -sq));
        roots[0] = q / b;
        roots[1] = (q != 0) ? d / q : -c / b - roots[0];
        return 2;
    }
    // depressed cubic t^3 + pt + q, x = t - b/(3a)
    const double bn = b / a, cn = c / a, dn = d / a;
    const double p = cn - bn * bn / 3.0;
    const double q = 2.0 * bn * bn * bn / 27.0 - bn * cn / 3.0 + dn;
    const double shift = -bn / 3.0;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    int n = 0;
    if (disc > 0) {
        const double sq = std::sqrt(disc);
        const double t = std::cbrt(-q / 2.0 + sq) + std::cbrt(-q / 2.0 - sq);
        roots[n++] = polish_root(a, b, c, d, t + shift);
    } else {
        const double r = std::sqrt(std::max(0.0, -p / 3.0));
        if (r == 0.0) {
            roots[n++] = polish_root(a, b, c, d, shift);
        } else {
            const double cosarg = std::clamp(3.0 * q / (2.0 * p * r), -1.0, 1.0);
            const double phi = std::acos(cosarg);
            for (int k = 0; k < 3; ++k) {
                const double t = 2.0 * r * std::cos(phi / 3.0 - 2.0943951023931953 * k);
                roots[n++] = polish_root(a, b, c, d, t + shift);
            }
        }
    }
    return n;
}

Nonlinearity Nonlinearity::cubic(const Grid& grid, Field lambda, Field gamma, Field g,
                                 double mu_bar, std::optional<Field> c) {
    if (lambda.size() != grid.size() || gamma.size() != grid.size() ||
        g.size() != grid.size())
        throw config_error("nonlinearity: parameter field size mismatch with grid");
    if (!(mu_bar > 0)) throw config_error("nonlinearity: mu_bar must be positive");
    if (gamma.minCoeff() <= 0)
        throw config_error("nonlinearity: cubic family requires gamma(x) >= gamma0 > 0");

    Nonlinearity nl(grid);
    nl.kind_ = FamilyKind::cubic;
    nl.mu_bar_ = mu_bar;
    nl.lambda_ = std::move(lambda);
    nl.gamma_ = std::move(gamma);
    nl.g_ = std::move(g);
    nl.f_zero_ = nl.g_;
    nl.dfu_bound_c_ = std::max(max_abs(nl.lambda_), 3.0 * max_abs(nl.gamma_));
    nl.growth_c_ = std::max(max_abs(nl.lambda_), 6.0 * max_abs(nl.gamma_));
    nl.cbar_ = 6.0 * max_abs(nl.gamma_);

    if (c) {
        if (c->size() != grid.size())
            throw config_error("nonlinearity: c(x) field size mismatch with grid");
        nl.c_ = std::move(*c);
    } else {
        // Analytic default: c(x) = max(sup_u [fu - mu F], sup_u F, 0), the
        // sups evaluated at the critical points.
        nl.c_.resize(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            const double la = nl.lambda_[i], ga = nl.gamma_[i], gg = nl.g_[i];
            const double a4 = (mu_bar / 4.0 - 1.0) * ga;
            const double a2 = (1.0 - mu_bar / 2.0) * la;
            const double a1 = (1.0 - mu_bar) * gg;
            if (a4 > 0 || (a4 == 0 && (a2 > 0 || (a2 == 0 && a1 != 0)))) {
                std::ostringstream os;
                os << "nonlinearity: f u - mu_bar F is unbounded above for mu_bar = "
                   << mu_bar << " at node " << i << "; supply c(x) explicitly or lower mu_bar";
                throw config_error(os.str());
            }
            double best = 0.0;
            double r[3];
            int nr = real_roots_cubic(4.0 * a4, 0.0, 2.0 * a2, a1, r);
            for (int j = 0; j < nr; ++j) {
                const double u = r[j];
                best = std::max(best, ((a4 * u * u + a2) * u + a1) * u);
            }
            nr = real_roots_cubic(-ga, 0.0, la, gg, r);
            for (int j = 0; j < nr; ++j) {
                const double u = r[j];
                best = std::max(best, ((-ga / 4.0 * u * u + la / 2.0) * u + gg) * u);
            }
            nl.c_[i] = best;
        }
    }
    return nl;
}

Nonlinearity Nonlinearity::cubic_const(const Grid& grid, double lambda, double gamma,
                                       double g, double mu_bar) {
    return cubic(grid, Field::Constant(grid.size(), lambda),
                 Field::Constant(grid.size(), gamma), Field::Constant(grid.size(), g),
                 mu_bar);
}

Nonlinearity Nonlinearity::tabulated(const Grid& grid, double u_min, double u_max,
                                     std::vector<double> f_samples, double mu_bar,
                                     double c_bound) {
    if (f_samples.size() < 4)
        throw config_error("nonlinearity: tabulated family needs at least 4 samples");
    if (!(u_min < 0.0 && u_max > 0.0))
        throw config_error("nonlinearity: tabulated u-range must contain 0");
    if (!(mu_bar > 0)) throw config_error("nonlinearity: mu_bar must be positive");

    Nonlinearity nl(grid);
    nl.kind_ = FamilyKind::tabulated;
    nl.mu_bar_ = mu_bar;
    nl.u_min_ = u_min;
    const std::size_t m = f_samples.size();
    nl.du_ = (u_max - u_min) / static_cast<double>(m - 1);
    nl.tab_f_ = std::move(f_samples);
    nl.tab_m_.resize(m);
    for (std::size_t k = 1; k + 1 < m; ++k)
        nl.tab_m_[k] = (nl.tab_f_[k + 1] - nl.tab_f_[k - 1]) / (2.0 * nl.du_);
    nl.tab_m_[0] = (nl.tab_f_[1] - nl.tab_f_[0]) / nl.du_;
    nl.tab_m_[m - 1] = (nl.tab_f_[m - 1] - nl.tab_f_[m - 2]) / nl.du_;

    // Exact antiderivative of the Hermite interpolant at the knots.
    nl.tab_Fk_.resize(m);
    nl.tab_Fk_[0] = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const double seg = nl.du_ * (0.5 * (nl.tab_f_[k] + nl.tab_f_[k + 1]) +
                                     nl.du_ * (nl.tab_m_[k] - nl.tab_m_[k + 1]) / 12.0);
        nl.tab_Fk_[k + 1] = nl.tab_Fk_[k] + seg;
    }
    // Shift the knot antiderivative so that F(0) = 0.
    const double F0 = nl.F_at(0, 0.0);
    for (double& v : nl.tab_Fk_) v -= F0;

    nl.f_zero_ = Field::Constant(grid.size(), nl.f_at(0, 0.0));
    nl.c_ = Field::Constant(grid.size(), c_bound);

    // Estimated growth constants from a dense scan of the table range.
    double c1 = 0, cb = 0;
    const int scan = 4 * static_cast<int>(m);
    for (int i = 0; i <= scan; ++i) {
        const double u = u_min + (u_max - u_min) * i / scan;
        c1 = std::max(c1, std::abs(nl.dfu_at(0, u)) / (1.0 + u * u));
        const double h = nl.du_ * 0.25;
        const double fuu = (nl.dfu_at(0, u + h) - nl.dfu_at(0, u - h)) / (2 * h);
        cb = std::max(cb, std::abs(fuu) / (1.0 + std::abs(u)));
    }
    nl.dfu_bound_c_ = 1.02 * c1;
    nl.growth_c_ = 1.02 * std::max(c1, 2.0 * cb);
    nl.cbar_ = 1.02 * cb;
    return nl;
}

double Nonlinearity::f_at(Eigen::Index node, double u) const {
    if (kind_ == FamilyKind::cubic)
        return (lambda_[node] - gamma_[node] * u * u) * u + g_[node];
    const double umax = u_min_ + du_ * double(tab_f_.size() - 1);
    if (u < u_min_) return tab_f_.front() + tab_m_.front() * (u - u_min_);
    if (u > umax) return tab_f_.back() + tab_m_.back() * (u - umax);
    std::size_t k = std::min<std::size_t>(
        tab_f_.size() - 2, static_cast<std::size_t>(std::max(0.0, (u - u_min_) / du_)));
    const double t = (u - (u_min_ + k * du_)) / du_;
    const double t2 = t * t, t3 = t2 * t;
    return tab_f_[k] * (2 * t3 - 3 * t2 + 1) + du_ * tab_m_[k] * (t3 - 2 * t2 + t) +
           tab_f_[k + 1] * (-2 * t3 + 3 * t2) + du_ * tab_m_[k + 1] * (t3 - t2);
}

double Nonlinearity::F_at(Eigen::Index node, double u) const {
    if (kind_ == FamilyKind::cubic) {
        const double u2 = u * u;
        return (lambda_[node] / 2.0 - gamma_[node] / 4.0 * u2) * u2 + g_[node] * u;
    }
    const double umax = u_min_ + du_ * double(tab_f_.size() - 1);
    if (u < u_min_) {
        const double d = u - u_min_;
        return tab_Fk_.front() + tab_f_.front() * d + 0.5 * tab_m_.front() * d * d;
    }
    if (u > umax) {
        const double d = u - umax;
        return tab_Fk_.back() + tab_f_.back() * d + 0.5 * tab_m_.back() * d * d;
    }
    std::size_t k = std::min<std::size_t>(
        tab_f_.size() - 2, static_cast<std::size_t>(std::max(0.0, (u - u_min_) / du_)));
    const double t = (u - (u_min_ + k * du_)) / du_;
    const double t2 = t * t, t3 = t2 * t, t4 = t2 * t2;
    return tab_Fk_[k] + du_ * (tab_f_[k] * (t4 / 2 - t3 + t) +
                               du_ * tab_m_[k] * (t4 / 4 - 2 * t3 / 3 + t2 / 2) +
                               tab_f_[k + 1] * (-t4 / 2 + t3) +
                               du_ * tab_m_[k + 1] * (t4 / 4 - t3 / 3));
}

double Nonlinearity::dfu_at(Eigen::Index node, double u) const {
    if (kind_ == FamilyKind::cubic) return lambda_[node] - 3.0 * gamma_[node] * u * u;
    const double umax = u_min_ + du_ * double(tab_f_.size() - 1);
    if (u < u_min_) return tab_m_.front();
    if (u > umax) return tab_m_.back();
    std::size_t k = std::min<std::size_t>(
        tab_f_.size() - 2, static_cast<std::size_t>(std::max(0.0, (u - u_min_) / du_)));
    const double t = (u - (u_min_ + k * du_)) / du_;
    const double t2 = t * t;
    return (tab_f_[k] * (6 * t2 - 6 * t) + du_ * tab_m_[k] * (3 * t2 - 4 * t + 1) +
            tab_f_[k + 1] * (-6 * t2 + 6 * t) + du_ * tab_m_[k + 1] * (3 * t2 - 2 * t)) /
           du_;
}

Field Nonlinearity::f(const Field& u) const {
    if (u.size() != grid_.size()) throw config_error("eval_f: field size mismatch");
    Field out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = f_at(i, u[i]);
    return out;
}

Field Nonlinearity::F(const Field& u) const {
    if (u.size() != grid_.size()) throw config_error("eval_F: field size mismatch");
    Field out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = F_at(i, u[i]);
    return out;
}

Field Nonlinearity::dfu(const Field& u) const {
    if (u.size() != grid_.size()) throw config_error("eval_dfu: field size mismatch");
    Field out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = dfu_at(i, u[i]);
    return out;
}

Field Nonlinearity::linearized_forcing(const Field& u, const Field& v) const {
    if (u.size() != grid_.size() || v.size() != grid_.size())
        throw config_error("linearized_forcing: field size mismatch");
    Field out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = dfu_at(i, u[i]) * v[i];
    return out;
}

double Nonlinearity::total_F(const Field& u) const {
    double s = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) s += F_at(i, u[i]);
    return grid_.cell_volume() * s;
}

DissipativityReport dissipativity_audit(const Nonlinearity& nl, double u_max,
                                        int u_samples) {
    if (!(u_max > 0) || u_samples < 2)
        throw config_error("dissipativity_audit: need u_max > 0 and u_samples >= 2");
    DissipativityReport rep;
    const Grid& grid = nl.grid();
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double c = nl.c_bound()[i];
        for (int s = 0; s < u_samples; ++s) {
            const double u = -u_max + 2.0 * u_max * s / (u_samples - 1);
            const double Fv = nl.F_at(i, u);
            const double m1 = c - (nl.f_at(i, u) * u - nl.mu_bar() * Fv);
            const double m2 = c - Fv;
            if (m1 < rep.worst_margin_fu) {
                rep.worst_margin_fu = m1;
                if (m1 < 0 && rep.passed) {
                    rep.witness_node = i;
                    rep.witness_u = u;
                    rep.witness_kind = "fu-muF";
                }
            }
            if (m2 < rep.worst_margin_F) {
                rep.worst_margin_F = m2;
                if (m2 < 0 && rep.passed) {
                    rep.witness_node = i;
                    rep.witness_u = u;
                    rep.witness_kind = "F";
                }
            }
            if (m1 < 0 || m2 < 0) rep.passed = false;
            ++rep.samples;
        }
    }
    return rep;
}

double EmbeddingConstants::of(int s) const {
    switch (s) {
        case 2: return c2;
        case 3: return c3;
        case 4: return c4;
        case 6: return c6;
        default: throw config_error("embedding constant only tracked for s in {2,3,4,6}");
    }
}

Field random_trial_field(const Grid& grid, Rng& rng) {
    const int kind = rng.uniform_int(0, 2);
    const Eigen::Index n = grid.size();
    Field u = Field::Zero(n);
    if (kind == 0) {
        for (Eigen::Index i = 0; i < n; ++i) u[i] = rng.normal();
    } else if (kind == 1) {
        for (int term = 0; term < 6; ++term) {
            std::array<int, 3> mode{1, 1, 1};
            double weight = 1.0;
            for (int a = 0; a < grid.dimension(); ++a) {
                mode[a] = rng.uniform_int(1, std::min(6, grid.nodes(a)));
                weight *= mode[a];
            }
            const double coeff = rng.normal() / weight;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto m = grid.multi_index(i);
                double val = coeff;
                for (int a = 0; a < grid.dimension(); ++a)
                    val *= std::sin(mode[a] * M_PI * (m[a] + 1.0) / (grid.nodes(a) + 1.0));
                u[i] += val;
            }
        }
    } else {
        const Eigen::Index center =
            static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(n));
        const auto xc = grid.coords(center);
        double hmax = 0;
        for (int a = 0; a < grid.dimension(); ++a) hmax = std::max(hmax, grid.spacing(a));
        const double w = rng.uniform(1.5, 8.0) * hmax;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto x = grid.coords(i);
            double r2 = 0;
            for (int a = 0; a < grid.dimension(); ++a)
                r2 += (x[a] - xc[a]) * (x[a] - xc[a]);
            u[i] = std::exp(-r2 / (w * w));
        }
    }
    return rng.uniform(0.2, 2.5) * u;
}

std::vector<std::pair<Field, Field>> make_trial_pairs(const Grid& grid, long count,
                                                      std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<Field, Field>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
        Field u = random_trial_field(grid, rng);
        Field h = random_trial_field(grid, rng);
        out.emplace_back(std::move(u), std::move(h));
    }
    return out;
}

EmbeddingConstants estimate_embedding_constants(const DiscreteOperator& op,
                                                int ensemble_size, std::uint64_t seed) {
    const Grid& grid = op.grid();
    Rng rng(seed);
    EmbeddingConstants ec;
    auto account = [&](const Field& u) {
        const double h1 = op.norm_h1(u);
        if (!(h1 > 0)) return;
        ec.c2 = std::max(ec.c2, norm_lp(u, 2, grid) / h1);
        ec.c3 = std::max(ec.c3, norm_lp(u, 3, grid) / h1);
        ec.c4 = std::max(ec.c4, norm_lp(u, 4, grid) / h1);
        ec.c6 = std::max(ec.c6, norm_lp(u, 6, grid) / h1);
    };
    for (int i = 0; i < ensemble_size; ++i) account(random_trial_field(grid, rng));
    // The ground eigenvector attains the exact c2 = lambda1^{-1/2} and is a
    // strong candidate for the other exponents.
    Field x = Field::Ones(grid.size());
    for (int it = 0; it < 60; ++it) {
        x = op.solve(x);
        x.normalize();
    }
    account(x);
    return ec;
}

namespace {

struct Inequality {
    const char* name;
    double lhs, rhs;
};

void record(std::vector<InequalityResult>& results, const Inequality& q, long pair_index) {
    for (auto& r : results) {
        if (r.name == q.name) {
            const double margin = q.rhs - q.lhs;
            const double rel = margin / std::max({std::abs(q.rhs), std::abs(q.lhs), 1e-300});
            if (margin < r.worst_margin) {
                r.worst_margin = margin;
                r.worst_relative = rel;
                r.witness = pair_index;
            }
            if (q.lhs > q.rhs) ++r.violations;
            return;
        }
    }
    InequalityResult r;
    r.name = q.name;
    r.worst_margin = q.rhs - q.lhs;
    r.worst_relative = r.worst_margin / std::max({std::abs(q.rhs), std::abs(q.lhs), 1e-300});
    r.witness = pair_index;
    r.violations = (q.lhs > q.rhs) ? 1 : 0;
    results.push_back(std::move(r));
}

} // namespace

GrowthAuditReport growth_audit(const Nonlinearity& nl, const DiscreteOperator& op,
                               const GrowthAuditConfig& cfg,
                               std::span<const std::pair<Field, Field>> trials) {
    const Grid& grid = op.grid();
    const double C = nl.growth_c();
    const double c2 = cfg.constants.c2 * cfg.inflation;
    const double c6 = cfg.constants.c6 * cfg.inflation;
    const double f0 = norm_l2(nl.f_zero(), grid);

    GrowthAuditReport rep;
    long idx = 0;
    for (const auto& [u, h] : trials) {
        const Field fu = nl.f(u);
        const Field uh = u + h;
        const Field fuh = nl.f(uh);
        const Field Fu = nl.F(u);
        const Field Fuh = nl.F(uh);

        const double u2 = norm_lp(u, 2, grid), u4 = norm_lp(u, 4, grid),
                     u6 = norm_lp(u, 6, grid);
        const double h2 = norm_lp(h, 2, grid), h6 = norm_lp(h, 6, grid);

        Inequality q1{"f_L2_growth", norm_l2(fu, grid),
                      f0 + C * (u2 + u6 * u6 * u6)};
        record(rep.inequalities, q1, idx);

        Inequality q2{"f_L2_lipschitz", norm_l2(fuh - fu, grid),
                      C * h2 + C * (u6 * u6 + h6 * h6) * h6};
        record(rep.inequalities, q2, idx);

        Inequality q3{"F_L1_growth", norm_lp(Fu, 1, grid),
                      C * (u2 * u2 / 2.0 + u4 * u4 * u4 * u4 / 4.0) + u2 * f0};
        record(rep.inequalities, q3, idx);

        Inequality q4{"F_L1_lipschitz", norm_lp(Fuh - Fu, 1, grid),
                      (f0 + C * (u2 + h2) +
                       4.0 * C * (u6 * u6 * u6 + h6 * h6 * h6)) *
                          h2};
        record(rep.inequalities, q4, idx);

        Inequality q5{"F_taylor_remainder",
                      norm_lp(Fuh - Fu - fu.cwiseProduct(h), 1, grid),
                      (C * h2 + C * (u6 * u6 + h6 * h6) * h6) * h2};
        record(rep.inequalities, q5, idx);

        Inequality q6{"f_Hminus1_lipschitz", op.norm_hminus1(fuh - fu),
                      C * c2 * h2 + C * c6 * (u6 * u6 + h6 * h6) * h2};
        record(rep.inequalities, q6, idx);

        ++idx;
    }
    rep.pairs = idx;
    for (const auto& r : rep.inequalities)
        if (r.violations > 0) rep.passed = false;
    return rep;
}

ForcingBoundCheck check_linearized_forcing_bound(const Nonlinearity& nl,
                                                 const DiscreteOperator& op,
                                                 const GrowthAuditConfig& cfg,
                                                 const Field& u, const Field& v) {
    const Grid& grid = op.grid();
    const double C = nl.growth_c();
    const double c2 = cfg.constants.c2 * cfg.inflation;
    const double c3 = cfg.constants.c3 * cfg.inflation;
    const double c6 = cfg.constants.c6 * cfg.inflation;
    ForcingBoundCheck chk;
    chk.lhs = op.norm_hminus1(nl.linearized_forcing(u, v));
    const double uh1 = op.norm_h1(u);
    const double v2 = norm_l2(v, grid);
    const double u6 = norm_lp(u, 6, grid);
    chk.rhs = C * (c2 + c6 * c3 * c3 * uh1 * uh1) * v2;
    chk.rhs_direct = C * (c2 + c6 * u6 * u6) * v2;
    chk.ok = chk.lhs <= chk.rhs;
    return chk;
}

} // namespace epslab
