#include "epslab/attractor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include "epslab/errors.hpp"
#include "epslab/rng.hpp"

namespace epslab {

namespace {

// Random combination of every tensor sine mode up to the cap, coefficients
// ~ N(0,1)/|m|^2. Every mode carries a nonzero coefficient almost surely;
// members with exactly vanishing slow-mode content would otherwise sit on
// separatrices for arbitrarily long times.
Field low_mode_field(const Grid& grid, int modes, Rng& rng) {
    const Eigen::Index n = grid.size();
    const int d = grid.dimension();
    std::array<int, 3> cap{1, 1, 1};
    for (int a = 0; a < d; ++a) cap[a] = std::max(1, std::min(modes, grid.nodes(a)));
    Field u = Field::Zero(n);
    std::array<int, 3> mode{1, 1, 1};
    auto add_term = [&]() {
        double m2 = 0;
        for (int a = 0; a < d; ++a) m2 += double(mode[a]) * mode[a];
        const double coeff = rng.normal() / m2;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto mi = grid.multi_index(i);
            double val = coeff;
            for (int a = 0; a < d; ++a)
                val *= std::sin(mode[a] * M_PI * (mi[a] + 1.0) / (grid.nodes(a) + 1.0));
            u[i] += val;
        }
    };
    for (mode[2] = 1; mode[2] <= cap[2]; ++mode[2])
        for (mode[1] = 1; mode[1] <= cap[1]; ++mode[1])
            for (mode[0] = 1; mode[0] <= cap[0]; ++mode[0]) add_term();
    return u;
}

void run_members(int members, int threads, const std::function<void(int)>& work) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, members));
    if (threads == 1) {
        for (int m = 0; m < members; ++m) work(m);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::string> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int m = next.fetch_add(1); m < members; m = next.fetch_add(1)) work(m);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(t)] = e.what();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (!e.empty()) throw divergence_error(e, 0, 0);
}

} // namespace

std::vector<HyperbolicState> sample_ensemble(const DiscreteOperator& op,
                                             const EnsembleSpec& spec,
                                             std::uint64_t seed) {
    if (spec.members <= 0) throw config_error("sample_ensemble: member count must be positive");
    if (spec.amplitude < 0) throw config_error("sample_ensemble: amplitude R must be nonnegative");
    const Grid& grid = op.grid();
    Rng master(seed);
    std::vector<HyperbolicState> out;
    out.reserve(static_cast<std::size_t>(spec.members));
    for (int m = 0; m < spec.members; ++m) {
        Rng rng = master.fork(static_cast<std::uint64_t>(m));
        HyperbolicState s;
        s.eps = spec.eps;
        s.t = 0;
        s.u = low_mode_field(grid, spec.modes, rng);
        Field vpat = low_mode_field(grid, spec.modes, rng);
        // Split the Z budget R^2 between |u|_H1^2 and eps |v|_L2^2 so the
        // u component is independent of eps; ensembles over an eps ladder
        // with one seed then share their u parts exactly (the parabolic
        // ensemble too, which consumes the same draws and drops v).
        const double su = rng.uniform(0.3, 0.95);
        const double share = std::clamp(spec.velocity_share, 0.0, 1.0);
        const double sv = share * rng.uniform(0.0, std::sqrt(1.0 - su * su));
        const double unorm = op.norm_h1(s.u);
        s.u *= (unorm > 0) ? su * spec.amplitude / unorm : 0.0;
        if (spec.kind == FlowKind::hyperbolic) {
            const double vnorm = norm_l2(vpat, grid);
            const double target = sv * spec.amplitude / std::sqrt(spec.eps);
            vpat *= (vnorm > 0) ? target / vnorm : 0.0;
            s.v = std::move(vpat);
        } else {
            s.v = Field::Zero(grid.size());
        }
        out.push_back(std::move(s));
    }
    return out;
}

AttractorApproximation approximate_attractor(const DiscreteOperator& op,
                                             const Nonlinearity& nl,
                                             const EnsembleSpec& spec,
                                             std::uint64_t seed, double T0,
                                             double T_sample, double dt, int stride,
                                             int threads) {
    if (!(T0 > 0) || !(T_sample > 0))
        throw config_error("approximate_attractor: T0 and T_sample must be positive");
    const auto ensemble = sample_ensemble(op, spec, seed);
    std::vector<std::vector<Snapshot>> slots(ensemble.size());

    run_members(static_cast<int>(ensemble.size()), threads, [&](int m) {
        const auto& z0 = ensemble[static_cast<std::size_t>(m)];
        if (spec.kind == FlowKind::hyperbolic) {
            Trajectory transient = integrate_hyperbolic(op, nl, z0, T0, dt,
                                                        1 << 30);
            if (transient.diverged)
                throw divergence_error("member " + std::to_string(m) + ": " +
                                           transient.divergence_message,
                                       transient.back().t, dt);
            HyperbolicState s;
            s.u = transient.back().u;
            s.v = transient.back().v;
            s.t = transient.back().t;
            s.eps = spec.eps;
            Trajectory window = integrate_hyperbolic(op, nl, s, T_sample, dt, stride);
            if (window.diverged)
                throw divergence_error("member " + std::to_string(m) + ": " +
                                           window.divergence_message,
                                       window.back().t, dt);
            slots[static_cast<std::size_t>(m)] = std::move(window.snapshots);
        } else {
            ParabolicState p{z0.u, 0.0};
            Trajectory transient = integrate_parabolic(op, nl, p, T0, dt, 1 << 30);
            if (transient.diverged)
                throw divergence_error("member " + std::to_string(m) + ": " +
                                           transient.divergence_message,
                                       transient.back().t, dt);
            ParabolicState s{transient.back().u, transient.back().t};
            Trajectory window = integrate_parabolic(op, nl, s, T_sample, dt, stride);
            if (window.diverged)
                throw divergence_error("member " + std::to_string(m) + ": " +
                                           window.divergence_message,
                                       window.back().t, dt);
            auto& slot = slots[static_cast<std::size_t>(m)];
            slot.reserve(window.snapshots.size());
            for (const auto& sn : window.snapshots) {
                Snapshot lifted = gamma_lift(op, nl, sn.u);
                lifted.t = sn.t;
                slot.push_back(std::move(lifted));
            }
        }
    });

    AttractorApproximation out;
    out.eps = (spec.kind == FlowKind::hyperbolic) ? spec.eps : 0.0;
    out.seed = seed;
    out.transient = T0;
    out.window = T_sample;
    out.dt = dt;
    out.stride = stride;
    out.grid_hash = op.grid().hash();
    out.spec = spec;
    for (auto& slot : slots)
        for (auto& sn : slot) out.points.push_back(std::move(sn));
    if (out.points.empty())
        throw numerics_error("approximate_attractor: empty snapshot pool");
    return out;
}

double semidistance(const DiscreteOperator& op, const AttractorApproximation& X,
                    const AttractorApproximation& Y, double alpha) {
    if (X.grid_hash != Y.grid_hash)
        throw config_error("semidistance: snapshot sets live on different grids");
    if (X.points.empty() || Y.points.empty())
        throw config_error("semidistance: empty snapshot set");
    if (alpha < 0 || alpha > 1)
        throw config_error("semidistance: alpha must lie in [0,1]");

    const Eigen::Index n = op.size();
    const double vol = op.grid().cell_volume();
    const Eigen::Index nx = static_cast<Eigen::Index>(X.points.size());
    const Eigen::Index ny = static_cast<Eigen::Index>(Y.points.size());

    // Features stored column-wise; every inner product below goes through
    // the same contiguous-dot kernel, so d(x,x) cancels to exactly zero for
    // identical points.
    Eigen::MatrixXd fu_x(n, nx), gu_x(n, nx), fv_x(n, nx), gv_x(n, nx);
    Eigen::MatrixXd fu_y(n, ny), gu_y(n, ny), fv_y(n, ny), gv_y(n, ny);

    const bool fractional = (alpha > 0 && alpha < 1);
    Eigen::VectorXd lam_pos, lam_neg;
    const Eigen::MatrixXd* basis = nullptr;
    if (fractional) {
        const auto& es = op.eigensystem(); // throws above the dense cap
        basis = &es.vectors;
        lam_pos = es.values.array().sqrt();
        lam_neg = es.values.array().pow(-alpha / 2.0);
    }

    auto fill = [&](const AttractorApproximation& set, Eigen::MatrixXd& fu,
                    Eigen::MatrixXd& gu, Eigen::MatrixXd& fv, Eigen::MatrixXd& gv) {
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(set.points.size()); ++i) {
            const Field& u = set.points[static_cast<std::size_t>(i)].u;
            const Field& v = set.points[static_cast<std::size_t>(i)].v;
            if (u.size() != n || v.size() != n)
                throw config_error("semidistance: snapshot field size mismatch");
            if (fractional) {
                const Eigen::VectorXd cu = basis->transpose() * u;
                const Eigen::VectorXd cv = basis->transpose() * v;
                fu.col(i) = lam_pos.cwiseProduct(cu);
                gu.col(i) = fu.col(i);
                fv.col(i) = lam_neg.cwiseProduct(cv);
                gv.col(i) = fv.col(i);
            } else {
                fu.col(i) = u;
                gu.col(i) = op.apply(u);
                fv.col(i) = v;
                if (alpha == 1.0)
                    gv.col(i) = op.solve(v);
                else
                    gv.col(i) = v;
            }
        }
    };
    fill(X, fu_x, gu_x, fv_x, gv_x);
    fill(Y, fu_y, gu_y, fv_y, gv_y);

    Eigen::VectorXd qq_x(nx), ss_x(nx), qq_y(ny), ss_y(ny);
    for (Eigen::Index i = 0; i < nx; ++i) {
        qq_x[i] = fu_x.col(i).dot(gu_x.col(i));
        ss_x[i] = fv_x.col(i).dot(gv_x.col(i));
    }
    for (Eigen::Index j = 0; j < ny; ++j) {
        qq_y[j] = fu_y.col(j).dot(gu_y.col(j));
        ss_y[j] = fv_y.col(j).dot(gv_y.col(j));
    }

    const int threads = std::max(
        1, std::min<int>(static_cast<int>(std::thread::hardware_concurrency()),
                         static_cast<int>(nx)));
    std::vector<double> sups(static_cast<std::size_t>(threads), 0.0);
    auto work = [&](int tid) {
        double sup = 0;
        for (Eigen::Index i = tid; i < nx; i += threads) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < ny; ++j) {
                const double du = qq_x[i] + qq_y[j] - 2.0 * fu_x.col(i).dot(gu_y.col(j));
                const double dv = ss_x[i] + ss_y[j] - 2.0 * fv_x.col(i).dot(gv_y.col(j));
                const double d2 = vol * (std::max(0.0, du) + std::max(0.0, dv));
                if (d2 < best) best = d2;
            }
            if (best > sup) sup = best;
        }
        sups[static_cast<std::size_t>(tid)] = sup;
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    return std::sqrt(*std::max_element(sups.begin(), sups.end()));
}

SweepReport eps_sweep(const DiscreteOperator& op, const Nonlinearity& nl,
                      const SweepConfig& cfg, std::uint64_t seed, int threads) {
    if (cfg.eps_ladder.empty()) throw config_error("eps_sweep: empty eps ladder");
    SweepReport rep;

    EnsembleSpec pspec;
    pspec.members = cfg.members;
    pspec.modes = cfg.modes;
    pspec.amplitude = cfg.amplitude;
    pspec.kind = FlowKind::parabolic;
    pspec.eps = 0.0;
    pspec.velocity_share = cfg.velocity_share;
    const int ref_stride = (cfg.ref_stride > 0) ? cfg.ref_stride : cfg.stride;
    rep.reference = approximate_attractor(op, nl, pspec, seed, cfg.transient,
                                          cfg.window, cfg.dt, ref_stride, threads);
    for (const auto& p : rep.reference.points)
        rep.reference_sup_z = std::max(rep.reference_sup_z, op.inner_h1(p.u, p.u));

    for (double eps : cfg.eps_ladder) {
        EnsembleSpec hspec = pspec;
        hspec.kind = FlowKind::hyperbolic;
        hspec.eps = eps;
        AttractorApproximation set = approximate_attractor(
            op, nl, hspec, seed, cfg.transient, cfg.window, cfg.dt, cfg.stride, threads);
        SweepRow row;
        row.eps = eps;
        row.dist = semidistance(op, set, rep.reference, cfg.alpha);
        for (const auto& p : set.points)
            row.sup_z = std::max(row.sup_z,
                                 op.inner_h1(p.u, p.u) + eps * inner_l2(p.v, p.v, op.grid()));
        rep.rows.push_back(row);
        rep.eps_sets.push_back(std::move(set));
    }
    return rep;
}

} // namespace epslab
