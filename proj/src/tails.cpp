#include "epslab/tails.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "epslab/errors.hpp"

namespace epslab {

void check_tail_radius(const Grid& grid, int k) {
    if (k < 1) throw config_error("tail_energy: k must be >= 1");
    double lmin = grid.extent(0);
    for (int a = 1; a < grid.dimension(); ++a) lmin = std::min(lmin, grid.extent(a));
    if (std::sqrt(2.0) * k > lmin) {
        std::ostringstream os;
        os << "tail_energy: k = " << k << " too large for the box (need sqrt(2) k <= "
           << lmin << ")";
        throw config_error(os.str());
    }
}

double tail_energy(const DiscreteOperator& op, const HyperbolicState& s,
                   const CutoffField& cutoff) {
    const Field cu = cutoff.theta.cwiseProduct(s.u);
    const Field cv = cutoff.theta.cwiseProduct(s.v);
    return op.inner_h1(cu, cu) + s.eps * inner_l2(cv, cv, op.grid());
}

double tail_energy(const DiscreteOperator& op, const HyperbolicState& s, int k) {
    check_tail_radius(op.grid(), k);
    return tail_energy(op, s, cutoff_field(op.grid(), k));
}

TailEnergyParts tail_energy_parts(const DiscreteOperator& op, const HyperbolicState& s,
                                  const CutoffField& cutoff) {
    const Field cu = cutoff.theta.cwiseProduct(s.u);
    const Field cv = cutoff.theta.cwiseProduct(s.v);
    TailEnergyParts parts;
    parts.beta = op.inner_beta(cu, cu);
    parts.grad = op.inner_h1(cu, cu) - parts.beta;
    parts.kinetic = s.eps * inner_l2(cv, cv, op.grid());
    return parts;
}

TailProfile tail_profile(const DiscreteOperator& op, const Trajectory& traj,
                         const std::vector<int>& ks) {
    if (traj.kind != FlowKind::hyperbolic)
        throw config_error("tail_profile: needs a hyperbolic trajectory");
    if (ks.empty()) throw config_error("tail_profile: empty radius list");
    for (int k : ks) check_tail_radius(op.grid(), k);

    TailProfile prof;
    prof.ks = ks;
    std::vector<CutoffField> cutoffs;
    cutoffs.reserve(ks.size());
    for (int k : ks) cutoffs.push_back(cutoff_field(op.grid(), k));

    prof.values.resize(static_cast<Eigen::Index>(traj.snapshots.size()),
                       static_cast<Eigen::Index>(ks.size()));
    HyperbolicState s;
    s.eps = traj.eps;
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        s.u = traj.snapshots[i].u;
        s.v = traj.snapshots[i].v;
        prof.times.push_back(traj.snapshots[i].t);
        for (std::size_t j = 0; j < ks.size(); ++j)
            prof.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                tail_energy(op, s, cutoffs[j]);
    }
    return prof;
}

namespace {

struct InnerFit {
    std::vector<double> c;
    double m = 0;
    double sse = 0;
};

// Least squares over (c_k, M) for fixed rho, projected onto c_k >= 0, M >= 0.
InnerFit fit_for_rho(const Eigen::MatrixXd& p, const std::vector<double>& t,
                     const std::vector<char>& degenerate, double rho) {
    const Eigen::Index T = p.rows();
    const Eigen::Index K = p.cols();
    Eigen::VectorXd e(T);
    for (Eigen::Index i = 0; i < T; ++i) e[i] = std::exp(-rho * t[static_cast<std::size_t>(i)]);
    const double se = e.sum();
    const double see = e.squaredNorm();
    const double ebar = se / T;

    InnerFit fit;
    fit.c.assign(static_cast<std::size_t>(K), 0.0);
    std::vector<char> clamped(static_cast<std::size_t>(K), 0);

    for (int round = 0; round < 4; ++round) {
        // M given the clamping pattern.
        double num = 0, den = 0;
        long active = 0;
        for (Eigen::Index k = 0; k < K; ++k) {
            if (degenerate[static_cast<std::size_t>(k)]) continue;
            const double pk = p.col(k).sum() / T;
            if (clamped[static_cast<std::size_t>(k)]) {
                num += e.dot(p.col(k));
                den += see;
            } else {
                num += e.dot(p.col(k)) - T * ebar * pk;
                den += see - T * ebar * ebar;
            }
            ++active;
        }
        double m = (den > 1e-300 && active > 0) ? num / den : 0.0;
        if (m < 0) m = 0;
        bool changed = false;
        for (Eigen::Index k = 0; k < K; ++k) {
            if (degenerate[static_cast<std::size_t>(k)]) continue;
            const double pk = p.col(k).sum() / T;
            double ck = clamped[static_cast<std::size_t>(k)] ? 0.0 : pk - m * ebar;
            if (ck < 0) {
                ck = 0;
                if (!clamped[static_cast<std::size_t>(k)]) {
                    clamped[static_cast<std::size_t>(k)] = 1;
                    changed = true;
                }
            }
            fit.c[static_cast<std::size_t>(k)] = ck;
        }
        fit.m = m;
        if (!changed) break;
    }

    fit.sse = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
        if (degenerate[static_cast<std::size_t>(k)]) continue;
        for (Eigen::Index i = 0; i < T; ++i) {
            const double r = p(i, k) - fit.c[static_cast<std::size_t>(k)] - fit.m * e[i];
            fit.sse += r * r;
        }
    }
    return fit;
}

} // namespace

TailFit tail_fit(const TailProfile& profile) {
    const std::size_t rows = profile.times.size();
    const std::size_t K = profile.ks.size();
    if (rows < 5) throw config_error("tail_fit: need at least 5 time samples per column");

    // Discard the first 10% of the time span, then log-spaced subsample.
    const double t0 = profile.times.front(), t1 = profile.times.back();
    const double tcut = t0 + 0.1 * (t1 - t0);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < rows; ++i)
        if (profile.times[i] >= tcut) keep.push_back(i);
    if (keep.size() < 5) throw config_error("tail_fit: fewer than 5 samples past the transient cut");
    std::vector<std::size_t> sel;
    {
        const int target = 48;
        const double hi = static_cast<double>(keep.size());
        std::size_t prev = static_cast<std::size_t>(-1);
        for (int j = 0; j < target; ++j) {
            const double pos = std::pow(hi, (target == 1) ? 0.0 : double(j) / (target - 1));
            const std::size_t off = std::min(keep.size() - 1, static_cast<std::size_t>(pos) - 1);
            const std::size_t idx = keep[off];
            if (idx != prev) sel.push_back(idx);
            prev = idx;
        }
        if (sel.size() < 5) sel = keep;
    }

    std::vector<double> t;
    Eigen::MatrixXd p(static_cast<Eigen::Index>(sel.size()), static_cast<Eigen::Index>(K));
    for (std::size_t i = 0; i < sel.size(); ++i) {
        t.push_back(profile.times[sel[i]]);
        for (std::size_t k = 0; k < K; ++k)
            p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                profile.values(static_cast<Eigen::Index>(sel[i]), static_cast<Eigen::Index>(k));
    }

    TailFit out;
    out.samples_used = static_cast<int>(sel.size());
    out.degenerate.assign(K, 0);
    bool any_active = false;
    for (std::size_t k = 0; k < K; ++k) {
        const double colmax = profile.values.col(static_cast<Eigen::Index>(k)).cwiseAbs().maxCoeff();
        out.degenerate[k] = (colmax == 0.0) ? 1 : 0;
        if (!out.degenerate[k]) any_active = true;
    }
    out.c_k.assign(K, 0.0);
    out.column_residuals.assign(K, 0.0);
    if (!any_active) return out; // all-zero profile

    const double span = std::max(t.back() - t.front(), 1e-12);
    double best_rho = 0, best_sse = std::numeric_limits<double>::infinity();
    InnerFit best;
    const int grid_points = 80;
    const double rho_lo = 0.01 / span, rho_hi = 200.0 / span;
    for (int j = 0; j < grid_points; ++j) {
        const double rho = rho_lo * std::pow(rho_hi / rho_lo, double(j) / (grid_points - 1));
        InnerFit fit = fit_for_rho(p, t, out.degenerate, rho);
        if (fit.sse < best_sse) {
            best_sse = fit.sse;
            best_rho = rho;
            best = fit;
        }
    }
    // Golden-section refinement around the best grid point.
    {
        const double ratio = std::pow(rho_hi / rho_lo, 1.0 / (grid_points - 1));
        double a = best_rho / ratio, b = best_rho * ratio;
        const double gr = 0.6180339887498949;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        InnerFit f1 = fit_for_rho(p, t, out.degenerate, x1);
        InnerFit f2 = fit_for_rho(p, t, out.degenerate, x2);
        for (int it = 0; it < 80; ++it) {
            if (f1.sse < f2.sse) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = fit_for_rho(p, t, out.degenerate, x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = fit_for_rho(p, t, out.degenerate, x2);
            }
        }
        const InnerFit& fb = (f1.sse < f2.sse) ? f1 : f2;
        const double rho = (f1.sse < f2.sse) ? x1 : x2;
        if (fb.sse <= best_sse) {
            best = fb;
            best_rho = rho;
        }
    }

    out.rho = best_rho;
    out.m = best.m;
    out.c_k = best.c;
    for (std::size_t k = 0; k < K; ++k) {
        if (out.degenerate[k]) continue;
        double sse = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double r = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                             out.c_k[k] - out.m * std::exp(-out.rho * t[i]);
            sse += r * r;
        }
        out.column_residuals[k] = std::sqrt(sse / t.size());
    }
    return out;
}

} // namespace epslab
