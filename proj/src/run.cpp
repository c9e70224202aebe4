#include "epslab/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "epslab/attractor.hpp"
#include "epslab/config.hpp"
#include "epslab/energy.hpp"
#include "epslab/errors.hpp"
#include "epslab/io.hpp"
#include "epslab/oracle.hpp"
#include "epslab/tails.hpp"

namespace epslab {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

struct CliOptions {
    std::string subcommand;
    std::string config_path;
    std::string out_dir = "out";
    bool out_dir_set = false;
    std::uint64_t seed = 12345;
    int threads = 0;
};

const char* kUsage =
    "usage: epslab <subcommand> --config PATH [--out DIR] [--seed U64] [--threads N]\n"
    "subcommands:\n"
    "  simulate      integrate one flow and export the trajectory\n"
    "  energy-audit  verify the energy functional identities along a run\n"
    "  growth-audit  verify the growth and dissipativity inequalities\n"
    "  tails         exterior-energy profile and its decay fit\n"
    "  attractor     post-transient ensemble snapshot set\n"
    "  sweep         semidistance of eps-attractors to the lifted limit set\n"
    "  oracle-check  integrator against the exact linear solution\n";

CliOptions parse_cli(const std::vector<std::string>& args) {
    CliOptions opt;
    if (args.empty()) throw config_error(std::string("no subcommand given\n") + kUsage);
    opt.subcommand = args[0];
    const std::vector<std::string> known = {"simulate", "energy-audit", "growth-audit",
                                            "tails",    "attractor",    "sweep",
                                            "oracle-check"};
    bool ok = false;
    for (const auto& k : known) ok = ok || k == opt.subcommand;
    if (!ok)
        throw config_error("unknown subcommand '" + opt.subcommand + "'\n" + kUsage);
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        auto value = [&]() -> const std::string& {
            if (i + 1 >= args.size())
                throw config_error("flag " + a + " expects a value\n" + kUsage);
            return args[++i];
        };
        if (a == "--config") {
            opt.config_path = value();
        } else if (a == "--out") {
            opt.out_dir = value();
            opt.out_dir_set = true;
        } else if (a == "--seed") {
            opt.seed = std::stoull(value());
        } else if (a == "--threads") {
            opt.threads = std::stoi(value());
        } else {
            throw config_error("unknown flag '" + a + "'\n" + kUsage);
        }
    }
    if (opt.config_path.empty())
        throw config_error(std::string("missing --config PATH\n") + kUsage);
    return opt;
}

// ---- schema blocks -------------------------------------------------------

using KeySpec = Config::KeySpec;

void add_grid(std::vector<KeySpec>& s) {
    s.push_back({"grid", "dimension", true});
    s.push_back({"grid", "extent", true});
    s.push_back({"grid", "nodes", true});
}
void add_coefficients(std::vector<KeySpec>& s) {
    s.push_back({"coefficients", "a", false});
    s.push_back({"coefficients", "beta", false});
    s.push_back({"coefficients", "a0", false});
    s.push_back({"coefficients", "a1", false});
}
void add_nonlinearity(std::vector<KeySpec>& s) {
    s.push_back({"nonlinearity", "family", true});
    s.push_back({"nonlinearity", "lambda", false});
    s.push_back({"nonlinearity", "gamma", false});
    s.push_back({"nonlinearity", "g", false});
    s.push_back({"nonlinearity", "mu_bar", false});
    s.push_back({"nonlinearity", "c", false});
    s.push_back({"nonlinearity", "u_min", false});
    s.push_back({"nonlinearity", "u_max", false});
    s.push_back({"nonlinearity", "values", false});
    s.push_back({"nonlinearity", "c_const", false});
}
void add_flow(std::vector<KeySpec>& s, bool require_kind) {
    s.push_back({"flow", "kind", require_kind});
    s.push_back({"flow", "epsilon", false});
    s.push_back({"flow", "dt", true});
    s.push_back({"flow", "T", false});
    s.push_back({"flow", "stride", false});
    s.push_back({"flow", "u0", false});
    s.push_back({"flow", "v0", false});
}
void add_output(std::vector<KeySpec>& s) {
    s.push_back({"output", "dir", false});
    s.push_back({"output", "csv", false});
}

// ---- scenario construction ----------------------------------------------

Grid build_grid(const Config& cfg) {
    GridSpec spec;
    spec.dimension = static_cast<int>(cfg.get_long("grid", "dimension"));
    const auto extent = cfg.get_double_list("grid", "extent");
    const auto nodes = cfg.get_int_list("grid", "nodes");
    if (spec.dimension < 1 || spec.dimension > 3)
        throw config_error("grid: dimension must be 1, 2 or 3");
    for (int a = 0; a < spec.dimension; ++a) {
        spec.extent[a] = extent.size() == 1 ? extent[0]
                                            : (a < static_cast<int>(extent.size())
                                                   ? extent[static_cast<std::size_t>(a)]
                                                   : 0.0);
        spec.nodes[a] = nodes.size() == 1 ? nodes[0]
                                          : (a < static_cast<int>(nodes.size())
                                                 ? nodes[static_cast<std::size_t>(a)]
                                                 : 0);
    }
    if (extent.size() != 1 && extent.size() != static_cast<std::size_t>(spec.dimension))
        throw config_error("grid: extent list length must be 1 or match the dimension");
    if (nodes.size() != 1 && nodes.size() != static_cast<std::size_t>(spec.dimension))
        throw config_error("grid: nodes list length must be 1 or match the dimension");
    return Grid::build(spec);
}

Field sample_profile(const Grid& grid, const ScalarProfile& p) {
    std::array<double, 3> ext{1, 1, 1};
    for (int a = 0; a < grid.dimension(); ++a) ext[a] = grid.extent(a);
    return grid.sample([&](const std::array<double, 3>& x) {
        return p.eval(x, grid.dimension(), ext);
    });
}

CoefficientField build_coefficients(const Config& cfg, const Grid& grid) {
    const ScalarProfile a = parse_profile(cfg.get_string("coefficients", "a", "const:1"));
    const ScalarProfile beta =
        parse_profile(cfg.get_string("coefficients", "beta", "const:0"));
    std::array<double, 3> ext{1, 1, 1};
    for (int ax = 0; ax < grid.dimension(); ++ax) ext[ax] = grid.extent(ax);
    auto a_fn = [&](const std::array<double, 3>& x) {
        return a.eval(x, grid.dimension(), ext);
    };
    auto beta_fn = [&](const std::array<double, 3>& x) {
        return beta.eval(x, grid.dimension(), ext);
    };
    double a0, a1;
    if (cfg.has("coefficients", "a0") || cfg.has("coefficients", "a1")) {
        a0 = cfg.get_double("coefficients", "a0");
        a1 = cfg.get_double("coefficients", "a1");
    } else {
        // scan the profile over the closed box for declared bounds
        a0 = std::numeric_limits<double>::infinity();
        a1 = -a0;
        std::array<int, 3> c{0, 0, 0};
        const int d = grid.dimension();
        std::array<int, 3> count{1, 1, 1};
        for (int ax = 0; ax < d; ++ax) count[ax] = grid.nodes(ax) + 2;
        for (c[2] = 0; c[2] < count[2]; ++c[2])
            for (c[1] = 0; c[1] < count[1]; ++c[1])
                for (c[0] = 0; c[0] < count[0]; ++c[0]) {
                    std::array<double, 3> x{0, 0, 0};
                    for (int ax = 0; ax < d; ++ax)
                        x[ax] = -grid.extent(ax) + c[ax] * grid.spacing(ax);
                    const double v = a_fn(x);
                    a0 = std::min(a0, v);
                    a1 = std::max(a1, v);
                }
        if (!(a0 > 0))
            throw config_error("coefficients: sampled diffusion profile is not uniformly "
                               "positive; provide a valid profile or explicit bounds");
    }
    return CoefficientField::isotropic(grid, a_fn, beta_fn, a0, a1);
}

Nonlinearity build_nonlinearity(const Config& cfg, const Grid& grid) {
    const std::string family = cfg.get_string("nonlinearity", "family");
    if (family == "zero")
        return Nonlinearity::tabulated(grid, -1.0, 1.0, {0, 0, 0, 0}, 1.0, 0.0);
    if (family == "cubic") {
        const Field lambda = sample_profile(
            grid, parse_profile(cfg.get_string("nonlinearity", "lambda", "const:0")));
        const Field gamma = sample_profile(
            grid, parse_profile(cfg.get_string("nonlinearity", "gamma", "const:1")));
        const Field g = sample_profile(
            grid, parse_profile(cfg.get_string("nonlinearity", "g", "const:0")));
        const double mu_bar = cfg.get_double("nonlinearity", "mu_bar", 2.0);
        std::optional<Field> c;
        if (cfg.has("nonlinearity", "c"))
            c = sample_profile(grid, parse_profile(cfg.get_string("nonlinearity", "c")));
        return Nonlinearity::cubic(grid, lambda, gamma, g, mu_bar, std::move(c));
    }
    if (family == "tabulated") {
        return Nonlinearity::tabulated(
            grid, cfg.get_double("nonlinearity", "u_min"),
            cfg.get_double("nonlinearity", "u_max"),
            cfg.get_double_list("nonlinearity", "values"),
            cfg.get_double("nonlinearity", "mu_bar", 2.0),
            cfg.get_double("nonlinearity", "c_const", 0.0));
    }
    throw config_error("nonlinearity: unknown family '" + family +
                       "' (expected cubic, tabulated or zero)");
}

struct Scenario {
    Grid grid;
    CoefficientField coeffs;
    DiscreteOperator op;
    Nonlinearity nl;
};

Scenario build_scenario(const Config& cfg) {
    Grid grid = build_grid(cfg);
    CoefficientField coeffs = build_coefficients(cfg, grid);
    DiscreteOperator op = DiscreteOperator::build(grid, coeffs);
    Nonlinearity nl = build_nonlinearity(cfg, grid);
    return Scenario{std::move(grid), std::move(coeffs), std::move(op), std::move(nl)};
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_manifest(const fs::path& dir, const CliOptions& opt, const Config& cfg,
                    std::uint64_t grid_hash, ordered_json extra = {}) {
    ordered_json m;
    m["tool"] = "epslab";
    m["version"] = kVersion;
    m["subcommand"] = opt.subcommand;
    m["config"] = opt.config_path;
    m["config_hash"] = hex64(cfg.content_hash());
    m["grid_hash"] = hex64(grid_hash);
    m["seed"] = opt.seed;
    m["threads"] = opt.threads;
    const auto now = std::chrono::system_clock::now();
    m["timestamp_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch())
            .count();
    if (!extra.empty()) m["run"] = std::move(extra);
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << "\n";
}

struct FlowSetup {
    FlowKind kind = FlowKind::hyperbolic;
    double eps = 0;
    double dt = 0;
    double T = 0;
    int stride = 1;
    Field u0, v0;
};

FlowSetup build_flow(const Config& cfg, const Grid& grid, bool need_T = true) {
    FlowSetup fl;
    const std::string kind = cfg.get_string("flow", "kind", "hyperbolic");
    if (kind == "hyperbolic")
        fl.kind = FlowKind::hyperbolic;
    else if (kind == "parabolic")
        fl.kind = FlowKind::parabolic;
    else
        throw config_error("flow: kind must be hyperbolic or parabolic");
    fl.dt = cfg.get_double("flow", "dt");
    if (!(fl.dt > 0)) throw config_error("flow: dt must be positive");
    if (fl.kind == FlowKind::hyperbolic) {
        if (!cfg.has("flow", "epsilon"))
            throw config_error("flow: hyperbolic runs need [flow] epsilon");
        fl.eps = cfg.get_double("flow", "epsilon");
        if (!(fl.eps > 0)) throw config_error("flow: epsilon must be positive");
    }
    if (need_T) {
        fl.T = cfg.get_double("flow", "T");
        if (fl.T < 0) throw config_error("flow: T must be nonnegative");
    }
    fl.stride = static_cast<int>(cfg.get_long("flow", "stride", 1));
    fl.u0 = sample_profile(grid, parse_profile(cfg.get_string("flow", "u0", "const:0")));
    fl.v0 = sample_profile(grid, parse_profile(cfg.get_string("flow", "v0", "const:0")));
    return fl;
}

Trajectory run_flow(const Scenario& sc, const FlowSetup& fl) {
    if (fl.kind == FlowKind::hyperbolic) {
        HyperbolicState s0{fl.u0, fl.v0, 0.0, fl.eps};
        return integrate_hyperbolic(sc.op, sc.nl, s0, fl.T, fl.dt, fl.stride);
    }
    ParabolicState s0{fl.u0, 0.0};
    return integrate_parabolic(sc.op, sc.nl, s0, fl.T, fl.dt, fl.stride);
}

// ---- subcommands ---------------------------------------------------------

int cmd_simulate(const CliOptions& opt, const Config& cfg, const fs::path& out) {
    std::vector<KeySpec> schema;
    add_grid(schema);
    add_coefficients(schema);
    add_nonlinearity(schema);
    add_flow(schema, false);
    add_output(schema);
    cfg.validate(schema);
    Scenario sc = build_scenario(cfg);
    FlowSetup fl = build_flow(cfg, sc.grid);
    Trajectory traj = run_flow(sc, fl);

    const std::string mode = cfg.get_string("output", "csv", "norms");
    if (mode == "norms") {
        CsvWriter csv((out / "trajectory.csv").string(),
                      {"t", "norm_u_h1", "norm_u_l2", "norm_v_l2"});
        for (const auto& sn : traj.snapshots) {
            const double vn =
                sn.v.size() ? norm_l2(sn.v, sc.grid) : 0.0;
            csv.row({sn.t, sc.op.norm_h1(sn.u), norm_l2(sn.u, sc.grid), vn});
        }
    } else if (mode == "fields") {
        std::vector<std::string> header{"t"};
        for (Eigen::Index i = 0; i < sc.grid.size(); ++i)
            header.push_back("u" + std::to_string(i));
        if (fl.kind == FlowKind::hyperbolic)
            for (Eigen::Index i = 0; i < sc.grid.size(); ++i)
                header.push_back("v" + std::to_string(i));
        CsvWriter csv((out / "trajectory.csv").string(), header);
        for (const auto& sn : traj.snapshots) {
            std::vector<double> row{sn.t};
            for (Eigen::Index i = 0; i < sn.u.size(); ++i) row.push_back(sn.u[i]);
            if (fl.kind == FlowKind::hyperbolic)
                for (Eigen::Index i = 0; i < sn.v.size(); ++i) row.push_back(sn.v[i]);
            csv.row(row);
        }
    } else {
        throw config_error("output: csv mode must be norms or fields");
    }

    { // final state with coordinates: node index, coordinates, values
        std::vector<std::string> header{"index"};
        const char* ax[3] = {"x", "y", "z"};
        for (int a = 0; a < sc.grid.dimension(); ++a) header.push_back(ax[a]);
        header.push_back("u");
        if (fl.kind == FlowKind::hyperbolic) header.push_back("v");
        CsvWriter csv((out / "final_field.csv").string(), header);
        const auto& sn = traj.snapshots.back();
        for (Eigen::Index i = 0; i < sc.grid.size(); ++i) {
            std::vector<double> row{static_cast<double>(i)};
            const auto x = sc.grid.coords(i);
            for (int a = 0; a < sc.grid.dimension(); ++a) row.push_back(x[a]);
            row.push_back(sn.u[i]);
            if (fl.kind == FlowKind::hyperbolic) row.push_back(sn.v[i]);
            csv.row(row);
        }
    }
    write_snapshots((out / "snapshots.bin").string(),
                    to_snapshot_file(traj, sc.grid.hash()));
    ordered_json extra;
    extra["snapshots"] = traj.snapshots.size();
    extra["diverged"] = traj.diverged;
    if (traj.diverged) extra["divergence"] = traj.divergence_message;
    write_manifest(out, opt, cfg, sc.grid.hash(), extra);
    if (traj.diverged) {
        std::cerr << "simulate: " << traj.divergence_message
                  << " (last good snapshot retained at t=" << traj.back().t << ")\n";
        return 1;
    }
    return 0;
}

int cmd_oracle_check(const CliOptions& opt, const Config& cfg, const fs::path& out) {
    std::vector<KeySpec> schema;
    add_grid(schema);
    add_coefficients(schema);
    add_nonlinearity(schema);
    add_flow(schema, false);
    schema.push_back({"flow", "oracle_tol", false});
    add_output(schema);
    cfg.validate(schema);
    Scenario sc = build_scenario(cfg);
    if (cfg.get_string("nonlinearity", "family") != "zero")
        throw config_error("oracle-check: requires [nonlinearity] family = zero");
    FlowSetup fl = build_flow(cfg, sc.grid);
    if (fl.kind != FlowKind::hyperbolic)
        throw config_error("oracle-check: requires a hyperbolic flow");
    const double tol = cfg.get_double("flow", "oracle_tol", 1e-3);

    Trajectory traj = run_flow(sc, fl);
    traj.require_ok();
    HyperbolicState z0{fl.u0, fl.v0, 0.0, fl.eps};
    const HyperbolicState exact = dense_linear_solution(sc.op, fl.eps, z0, traj.back().t);
    const double ref_u = std::max(norm_l2(exact.u, sc.grid), 1e-300);
    const double err_u = norm_l2(traj.back().u - exact.u, sc.grid) / ref_u;
    const double ref_z = std::sqrt(norm_l2(exact.u, sc.grid) * norm_l2(exact.u, sc.grid) +
                                   norm_l2(exact.v, sc.grid) * norm_l2(exact.v, sc.grid));
    const double err_z =
        std::sqrt(std::pow(norm_l2(traj.back().u - exact.u, sc.grid), 2) +
                  std::pow(norm_l2(traj.back().v - exact.v, sc.grid), 2)) /
        std::max(ref_z, 1e-300);

    CsvWriter csv((out / "oracle_check.csv").string(),
                  {"eps", "dt", "T", "err_u_rel", "err_z_rel", "tol"});
    csv.row({fl.eps, fl.dt, traj.back().t, err_u, err_z, tol});
    ordered_json extra;
    extra["err_u_rel"] = err_u;
    extra["err_z_rel"] = err_z;
    extra["tol"] = tol;
    write_manifest(out, opt, cfg, sc.grid.hash(), extra);
    std::cout << "oracle-check: relative L2 error " << err_u << " (tolerance " << tol
              << ")\n";
    return err_u <= tol ? 0 : 1;
}

int cmd_energy_audit(const CliOptions& opt, const Config& cfg, const fs::path& out) {
    std::vector<KeySpec> schema;
    add_grid(schema);
    add_coefficients(schema);
    add_nonlinearity(schema);
    add_flow(schema, false);
    schema.push_back({"energy", "delta", false});
    schema.push_back({"energy", "dt_ladder", false});
    add_output(schema);
    cfg.validate(schema);
    Scenario sc = build_scenario(cfg);
    FlowSetup fl = build_flow(cfg, sc.grid);
    if (fl.kind != FlowKind::hyperbolic)
        throw config_error("energy-audit: configure a hyperbolic flow; the limit-flow "
                           "identity runs on the same initial data automatically");
    const double delta = cfg.has("energy", "delta")
                             ? cfg.get_double("energy", "delta")
                             : default_delta(sc.op.lambda1(), fl.eps);
    check_delta(delta, sc.op.lambda1(), fl.eps);

    std::vector<double> ladder =
        cfg.has("energy", "dt_ladder") ? cfg.get_double_list("energy", "dt_ladder")
                                       : std::vector<double>{fl.dt};

    struct Named {
        const char* name;
        std::vector<double> worsts;
        EnergyReport finest;
    };
    std::vector<Named> reports{{"tilde_v", {}, {}},
                               {"v", {}, {}},
                               {"f_eps", {}, {}},
                               {"f_zero", {}, {}}};

    for (double dt : ladder) {
        HyperbolicState z0{fl.u0, fl.v0, 0.0, fl.eps};
        Trajectory h = integrate_hyperbolic(sc.op, sc.nl, z0, fl.T, dt, 1);
        h.require_ok();
        ParabolicState p0{fl.u0, 0.0};
        Trajectory p = integrate_parabolic(sc.op, sc.nl, p0, fl.T, dt, 1);
        p.require_ok();
        EnergyReport r0 = tilde_v_identity(sc.op, sc.nl, h);
        EnergyReport r1 = v_identity(sc.op, sc.nl, h);
        EnergyReport r2 = f_eps_identity(sc.op, sc.nl, h, delta);
        EnergyReport r3 = f_zero_identity(sc.op, sc.nl, p, delta);
        EnergyReport* rs[4] = {&r0, &r1, &r2, &r3};
        for (int i = 0; i < 4; ++i) {
            reports[static_cast<std::size_t>(i)].worsts.push_back(rs[i]->worst);
            reports[static_cast<std::size_t>(i)].finest = std::move(*rs[i]);
        }
    }

    ordered_json ja;
    ja["delta"] = delta;
    ja["dt_ladder"] = ladder;
    for (auto& rep : reports) {
        attach_ladder(rep.finest, ladder, rep.worsts);
        CsvWriter csv((out / ("energy_" + std::string(rep.name) + ".csv")).string(),
                      {"t", "value", "residual"});
        for (std::size_t i = 0; i < rep.finest.times.size(); ++i) {
            const double res = (i >= 1 && i + 1 < rep.finest.times.size())
                                   ? rep.finest.residuals[i - 1]
                                   : std::numeric_limits<double>::quiet_NaN();
            csv.row({rep.finest.times[i], rep.finest.values[i], res});
        }
        ordered_json jr;
        jr["worst_residuals"] = rep.worsts;
        jr["order"] = rep.finest.order;
        jr["r2"] = rep.finest.r2;
        ja["identities"][rep.name] = jr;
    }
    std::ofstream(out / "energy_audit.json") << ja.dump(2) << "\n";
    write_manifest(out, opt, cfg, sc.grid.hash());
    return 0;
}

int cmd_growth_audit(const CliOptions& opt, const Config& cfg, const fs::path& out) {
    std::vector<KeySpec> schema;
    add_grid(schema);
    add_coefficients(schema);
    add_nonlinearity(schema);
    schema.push_back({"nonlinearity", "trial_pairs", false});
    schema.push_back({"nonlinearity", "embed_ensemble", false});
    schema.push_back({"nonlinearity", "inflation", false});
    schema.push_back({"nonlinearity", "audit_umax", false});
    schema.push_back({"nonlinearity", "audit_samples", false});
    add_output(schema);
    cfg.validate(schema);
    Scenario sc = build_scenario(cfg);

    GrowthAuditConfig gac;
    gac.ensemble_size = static_cast<int>(cfg.get_long("nonlinearity", "embed_ensemble", 512));
    gac.inflation = cfg.get_double("nonlinearity", "inflation", 1.05);
    gac.seed = opt.seed;
    gac.constants = estimate_embedding_constants(sc.op, gac.ensemble_size, opt.seed);

    const long pairs = cfg.get_long("nonlinearity", "trial_pairs", 1000);
    const auto trials = make_trial_pairs(sc.grid, pairs, splitmix64(opt.seed ^ 0x7A115EEDULL));
    const GrowthAuditReport rep = growth_audit(sc.nl, sc.op, gac, trials);

    const double umax = cfg.get_double("nonlinearity", "audit_umax", 10.0);
    const int usamples = static_cast<int>(cfg.get_long("nonlinearity", "audit_samples", 2001));
    const DissipativityReport dis = dissipativity_audit(sc.nl, umax, usamples);

    ordered_json j;
    j["embedding_constants"] = {{"c2", gac.constants.c2},
                                {"c3", gac.constants.c3},
                                {"c4", gac.constants.c4},
                                {"c6", gac.constants.c6},
                                {"inflation", gac.inflation}};
    j["pairs"] = rep.pairs;
    for (const auto& iq : rep.inequalities) {
        j["inequalities"][iq.name] = {{"worst_margin", iq.worst_margin},
                                      {"worst_relative", iq.worst_relative},
                                      {"violations", iq.violations},
                                      {"witness_pair", iq.witness}};
    }
    j["growth_passed"] = rep.passed;
    j["dissipativity"] = {{"passed", dis.passed},
                          {"worst_margin_fu_muF", dis.worst_margin_fu},
                          {"worst_margin_F", dis.worst_margin_F},
                          {"samples", dis.samples}};
    if (!dis.passed) {
        j["dissipativity"]["witness_node"] = dis.witness_node;
        j["dissipativity"]["witness_u"] = dis.witness_u;
        j["dissipativity"]["witness_kind"] = dis.witness_kind;
    }
    std::ofstream(out / "growth_audit.json") << j.dump(2) << "\n";

    CsvWriter csv((out / "growth_margins.csv").string(),
                  {"inequality", "worst_margin", "worst_relative", "violations"});
    for (std::size_t i = 0; i < rep.inequalities.size(); ++i) {
        const auto& iq = rep.inequalities[i];
        csv.raw_row({iq.name, format_double(iq.worst_margin),
                     format_double(iq.worst_relative), std::to_string(iq.violations)});
    }
    write_manifest(out, opt, cfg, sc.grid.hash());
    if (!rep.passed || !dis.passed) {
        std::cerr << "growth-audit: inequality violations found (see growth_audit.json)\n";
        return 1;
    }
    return 0;
}

int cmd_tails(const CliOptions& opt, const Config& cfg, const fs::path& out) {
    std::vector<KeySpec> schema;
    add_grid(schema);
    add_coefficients(schema);
    add_nonlinearity(schema);
    add_flow(schema, false);
    schema.push_back({"tails", "k_list", true});
    add_output(schema);
    cfg.validate(schema);
    Scenario sc = build_scenario(cfg);
    FlowSetup fl = build_flow(cfg, sc.grid);
    if (fl.kind != FlowKind::hyperbolic)
        throw config_error("tails: requires a hyperbolic flow");
    const auto ks = cfg.get_int_list("tails", "k_list");
    for (int k : ks) check_tail_radius(sc.grid, k);

    Trajectory traj = run_flow(sc, fl);
    traj.require_ok();
    const TailProfile prof = tail_profile(sc.op, traj, ks);
    const TailFit fit = tail_fit(prof);

    CsvWriter csv((out / "tail_profile.csv").string(), {"t", "k", "value"});
    for (std::size_t i = 0; i < prof.times.size(); ++i)
        for (std::size_t jk = 0; jk < prof.ks.size(); ++jk)
            csv.row({prof.times[i], static_cast<double>(prof.ks[jk]),
                     prof.values(static_cast<Eigen::Index>(i),
                                 static_cast<Eigen::Index>(jk))});

    ordered_json j;
    j["k_list"] = prof.ks;
    j["c_k"] = fit.c_k;
    j["m"] = fit.m;
    j["rho"] = fit.rho;
    j["column_rms_residuals"] = fit.column_residuals;
    j["samples_used"] = fit.samples_used;
    std::vector<bool> degen(fit.degenerate.begin(), fit.degenerate.end());
    j["degenerate_columns"] = degen;
    std::ofstream(out / "tail_fit.json") << j.dump(2) << "\n";
    write_manifest(out, opt, cfg, sc.grid.hash());
    return 0;
}

EnsembleSpec ensemble_from_config(const Config& cfg, FlowKind kind, double eps) {
    EnsembleSpec spec;
    spec.members = static_cast<int>(cfg.get_long("attractor", "members", 16));
    spec.modes = static_cast<int>(cfg.get_long("attractor", "modes", 4));
    spec.amplitude = cfg.get_double("attractor", "amplitude", 1.0);
    spec.kind = kind;
    spec.eps = eps;
    spec.velocity_share = cfg.get_double("attractor", "velocity_share", 1.0);
    return spec;
}

void add_attractor_keys(std::vector<KeySpec>& s) {
    s.push_back({"attractor", "members", false});
    s.push_back({"attractor", "modes", false});
    s.push_back({"attractor", "amplitude", false});
    s.push_back({"attractor", "transient", false});
    s.push_back({"attractor", "window", false});
    s.push_back({"attractor", "stride", false});
    s.push_back({"attractor", "ref_stride", false});
    s.push_back({"attractor", "velocity_share", false});
}

int cmd_attractor(const CliOptions& opt, const Config& cfg, const fs::path& out) {
    std::vector<KeySpec> schema;
    add_grid(schema);
    add_coefficients(schema);
    add_nonlinearity(schema);
    add_flow(schema, false);
    add_attractor_keys(schema);
    add_output(schema);
    cfg.validate(schema);
    Scenario sc = build_scenario(cfg);
    FlowSetup fl = build_flow(cfg, sc.grid, false);

    EnsembleSpec spec = ensemble_from_config(cfg, fl.kind, fl.eps);
    const double T0 = cfg.get_double("attractor", "transient", 20.0 / sc.op.lambda1());
    const double window = cfg.get_double("attractor", "window", 5.0);
    const int stride = static_cast<int>(cfg.get_long("attractor", "stride", 10));

    const AttractorApproximation set = approximate_attractor(
        sc.op, sc.nl, spec, opt.seed, T0, window, fl.dt, stride, opt.threads);

    write_snapshots((out / "attractor.bin").string(), to_snapshot_file(set));
    CsvWriter csv((out / "attractor_norms.csv").string(),
                  {"index", "t", "norm_u_h1", "norm_v_l2"});
    for (std::size_t i = 0; i < set.points.size(); ++i)
        csv.row({static_cast<double>(i), set.points[i].t, sc.op.norm_h1(set.points[i].u),
                 norm_l2(set.points[i].v, sc.grid)});
    ordered_json extra;
    extra["points"] = set.points.size();
    extra["transient"] = T0;
    extra["window"] = window;
    write_manifest(out, opt, cfg, sc.grid.hash(), extra);
    return 0;
}

int cmd_sweep(const CliOptions& opt, const Config& cfg, const fs::path& out) {
    std::vector<KeySpec> schema;
    add_grid(schema);
    add_coefficients(schema);
    add_nonlinearity(schema);
    schema.push_back({"flow", "dt", true});
    add_attractor_keys(schema);
    schema.push_back({"sweep", "eps_ladder", true});
    schema.push_back({"sweep", "alpha", false});
    add_output(schema);
    cfg.validate(schema);
    Scenario sc = build_scenario(cfg);

    SweepConfig sw;
    sw.eps_ladder = cfg.get_double_list("sweep", "eps_ladder");
    sw.alpha = cfg.get_double("sweep", "alpha", 1.0);
    sw.members = static_cast<int>(cfg.get_long("attractor", "members", 32));
    sw.modes = static_cast<int>(cfg.get_long("attractor", "modes", 4));
    sw.amplitude = cfg.get_double("attractor", "amplitude", 2.0);
    sw.transient = cfg.get_double("attractor", "transient", 2.0);
    sw.window = cfg.get_double("attractor", "window", 6.0);
    sw.stride = static_cast<int>(cfg.get_long("attractor", "stride", 50));
    sw.ref_stride = static_cast<int>(cfg.get_long("attractor", "ref_stride", 0));
    sw.velocity_share = cfg.get_double("attractor", "velocity_share", 0.0);
    sw.dt = cfg.get_double("flow", "dt");

    const SweepReport rep = eps_sweep(sc.op, sc.nl, sw, opt.seed, opt.threads);

    CsvWriter csv((out / "sweep.csv").string(), {"eps", "semidistance", "sup_z"});
    for (const auto& row : rep.rows) csv.row({row.eps, row.dist, row.sup_z});

    ordered_json j;
    j["alpha"] = sw.alpha;
    j["reference_sup_z"] = rep.reference_sup_z;
    for (const auto& row : rep.rows)
        j["rows"].push_back(
            {{"eps", row.eps}, {"semidistance", row.dist}, {"sup_z", row.sup_z}});
    std::ofstream(out / "sweep.json") << j.dump(2) << "\n";

    write_snapshots((out / "reference.bin").string(), to_snapshot_file(rep.reference));
    for (std::size_t i = 0; i < rep.eps_sets.size(); ++i)
        write_snapshots((out / ("attractor_eps_" + std::to_string(i) + ".bin")).string(),
                        to_snapshot_file(rep.eps_sets[i]));
    write_manifest(out, opt, cfg, sc.grid.hash());
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    try {
        const CliOptions opt = parse_cli(args);
        const Config cfg = Config::parse_file(opt.config_path);
        fs::path out = opt.out_dir;
        if (!opt.out_dir_set) {
            // [output] dir applies unless --out was given
            out = cfg.get_string("output", "dir", opt.out_dir);
        }
        fs::create_directories(out);
        if (opt.subcommand == "simulate") return cmd_simulate(opt, cfg, out);
        if (opt.subcommand == "oracle-check") return cmd_oracle_check(opt, cfg, out);
        if (opt.subcommand == "energy-audit") return cmd_energy_audit(opt, cfg, out);
        if (opt.subcommand == "growth-audit") return cmd_growth_audit(opt, cfg, out);
        if (opt.subcommand == "tails") return cmd_tails(opt, cfg, out);
        if (opt.subcommand == "attractor") return cmd_attractor(opt, cfg, out);
        if (opt.subcommand == "sweep") return cmd_sweep(opt, cfg, out);
        throw config_error("unhandled subcommand");
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const audit_error& e) {
        std::cerr << "audit failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace epslab
