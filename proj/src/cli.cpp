#include "rbk/cli.hpp"

#include "rbk/config.hpp"
#include "rbk/convergence.hpp"
#include "rbk/errors.hpp"
#include "rbk/invariants.hpp"
#include "rbk/mc_oracle.hpp"
#include "rbk/report_io.hpp"
#include "rbk/solver.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace rbk::cli {

namespace {

namespace fs = std::filesystem;

struct Options
{
    std::string config;
    std::string out;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    std::string trajectory;
    bool resolution = false;
};

fs::path out_dir(const Options& o)
{
    std::string dir = o.out;
    if (dir.empty())
        if (const char* env = std::getenv("RBK_OUT"))
            dir = env;
    if (dir.empty())
        dir = ".";
    fs::create_directories(dir);
    return dir;
}

RunConfig load(const Options& o, ConfigPurpose purpose)
{
    RunConfig cfg = parse_config(o.config, purpose);
    if (o.threads)
        cfg.threads = std::max(1u, *o.threads);
    if (o.seed)
        cfg.mc.seed = *o.seed;
    return cfg;
}

template <class Writer>
void write_file(const fs::path& path, Writer&& w)
{
    std::ofstream os(path);
    if (!os)
        throw Error("cannot write " + path.string());
    w(os);
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

nlohmann::json header(const RunConfig& cfg, const std::string& hash)
{
    return {{"config", to_json(cfg)}, {"config_hash", hash}};
}

int cmd_run(const Options& o)
{
    const auto cfg = load(o, ConfigPurpose::simulate);
    const auto hash = config_hash(cfg);
    const auto traj = run(cfg.kernel_spec(), cfg.n, cfg.grid(), cfg.initial_data(), cfg.solver());
    const auto dir = out_dir(o);
    write_file(dir / "trajectory.csv", [&](std::ostream& os) { io::write_trajectory_csv(os, traj, hash); });
    write_file(dir / "moments.csv", [&](std::ostream& os) { io::write_moments_csv(os, traj, cfg.checks.R, hash); });
    auto report = header(cfg, hash);
    report["trajectory"] = io::trajectory_json(traj);
    write_json(dir / "report.json", report);
    const auto& last = traj.snapshots.back().moments;
    std::cout << "run: " << traj.snapshots.size() << " snapshots, " << traj.stats.accepted_steps
              << " steps; M0(T) = " << io::fmt(last.M0) << ", M1(T) = " << io::fmt(last.M1) << "; wrote "
              << dir.string() << '\n';
    return ok;
}

std::vector<BoundReport> all_checks(const RunConfig& cfg, const Trajectory& traj)
{
    const auto tk = truncate(cfg.kernel_spec(), cfg.n);
    std::vector<BoundReport> reports;
    reports.push_back(check_mass_monotone(traj));
    if (traj.has_collision_integral)
        reports.push_back(check_number_identity(traj));
    for (auto& r : check_moment_bounds(traj, tk, cfg.checks.M))
        reports.push_back(std::move(r));
    reports.push_back(check_tail_bound(traj, cfg.checks.R));
    for (const auto& [a, delta] : cfg.checks.ui)
        reports.push_back(check_ui_bound(traj, tk, a, delta));
    if (cfg.checks.equicontinuity_a > 1.0)
        reports.push_back(check_equicontinuity(traj, tk, cfg.checks.equicontinuity_a));
    for (const auto& phi : cfg.checks.phi)
        reports.push_back(check_weak_residual(traj, tk, TestFunction::parse(phi), cfg.checks.weak_rel_tol));
    reports.push_back(check_mild_residual(traj, tk));
    return reports;
}

int cmd_check(const Options& o)
{
    const auto cfg = load(o, ConfigPurpose::simulate);
    const auto hash = config_hash(cfg);
    const auto traj = o.trajectory.empty()
                          ? run(cfg.kernel_spec(), cfg.n, cfg.grid(), cfg.initial_data(), cfg.solver())
                          : io::read_trajectory_csv(o.trajectory, cfg.grid(), cfg.solver());
    const auto reports = all_checks(cfg, traj);

    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) {
        arr.push_back(io::to_json(r));
        const char* tag = r.qualitative ? "INFO" : (r.pass ? "PASS" : "FAIL");
        std::cout << tag << "  " << r.name << "  lhs=" << io::fmt(r.lhs) << "  rhs=" << io::fmt(r.rhs)
                  << "  margin=" << io::fmt(r.margin);
        if (!r.witness.empty())
            std::cout << "  [" << r.witness << " @ tau=" << io::fmt(r.witness_tau) << "]";
        std::cout << '\n';
    }
    auto report = header(cfg, hash);
    if (!o.trajectory.empty())
        report["trajectory_source"] = o.trajectory;
    const bool pass = all_hard_checks_pass(reports);
    report["checks"] = arr;
    report["all_pass"] = pass;
    write_json(out_dir(o) / "check_report.json", report);
    std::cout << (pass ? "check: all hard checks passed\n" : "check: hard check failure\n");
    return pass ? ok : check_failure;
}

int cmd_sweep(const Options& o)
{
    const auto cfg = load(o, ConfigPurpose::simulate);
    const auto hash = config_hash(cfg);
    std::vector<TestFunction> psi;
    for (const auto& p : cfg.sweep.psi)
        psi.push_back(TestFunction::parse(p));
    auto rep = truncation_sweep({cfg.kernel_spec(), cfg.initial_data(), cfg.dx, cfg.solver(), cfg.sweep.levels, psi});
    if (o.resolution) {
        ResolutionSweepSetup rs{cfg.kernel_spec(), cfg.initial_data(), cfg.n, cfg.dx, cfg.solver(),
                                cfg.sweep.dx_levels, cfg.sweep.dt_levels, cfg.sweep.probe_lo, cfg.sweep.probe_hi, {}};
        if (cfg.kernel.family == KernelFamily::constant) {
            const double c = cfg.kernel.params.c;
            rs.exact_M0 = [c](double m0, double t) { return m0 / (1.0 + 0.5 * c * m0 * t); };
        }
        rep.orders = resolution_sweep(rs).orders;
    }
    const auto dir = out_dir(o);
    write_file(dir / "sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, rep, hash); });
    if (o.resolution)
        write_file(dir / "orders.csv", [&](std::ostream& os) { io::write_orders_csv(os, rep, hash); });
    auto report = header(cfg, hash);
    report["sweep"] = io::to_json(rep);
    write_json(dir / "sweep_report.json", report);
    for (const auto& d : rep.distances)
        std::cout << "D(" << io::fmt(d.n1) << ", " << io::fmt(d.n2) << ", " << d.psi << ") = " << io::fmt(d.D) << '\n';
    for (const auto& [name, mono] : rep.monotone)
        if (!mono)
            std::cout << "note: D is not monotone in n for psi = " << name << '\n';
    for (const auto& q : rep.orders)
        std::cout << "order " << q.quantity << ": "
                  << (q.status == OrderStatus::ok ? io::fmt(q.p_hat) : to_string(q.status)) << '\n';
    return ok;
}

int cmd_mc_compare(const Options& o)
{
    const auto cfg = load(o, ConfigPurpose::simulate);
    const auto hash = config_hash(cfg);
    const auto grid = cfg.grid();
    const auto traj = run(cfg.kernel_spec(), cfg.n, grid, cfg.initial_data(), cfg.solver());

    MCSetup setup;
    setup.kernel = cfg.kernel_spec();
    setup.initial = cfg.initial_data();
    if (cfg.mc.grid_matched)
        setup.grid = grid;
    setup.particles = static_cast<std::size_t>(cfg.mc.particles);
    setup.replicas = cfg.mc.replicas;
    setup.seed = cfg.mc.seed;
    const double m0 = traj.initial().moments.M0;
    if (!(m0 > 0.0))
        throw DomainError("mc-compare: the initial density has no particles");
    setup.volume = static_cast<double>(setup.particles) / m0 * cfg.mc.volume_scale;
    setup.checkpoints = cfg.mc.checkpoints;
    setup.threads = cfg.threads;
    const auto mc = run_replicas(setup);
    const auto rows = compare(traj, mc);

    const auto dir = out_dir(o);
    write_file(dir / "mc.csv", [&](std::ostream& os) { io::write_mc_csv(os, mc, hash); });
    write_file(dir / "mc_summary.csv", [&](std::ostream& os) { io::write_mc_summary_csv(os, mc, hash); });
    write_file(dir / "ztable.csv", [&](std::ostream& os) { io::write_ztable_csv(os, rows, hash); });

    bool pass = true;
    nlohmann::json z = nlohmann::json::array();
    for (const auto& r : rows) {
        const bool within = std::abs(r.z) <= cfg.mc.z_max;
        pass = pass && within;
        z.push_back({{"t", r.t}, {"moment", r.moment}, {"pde", r.pde}, {"mc_mean", r.mc_mean}, {"stderr", r.stderr_},
                     {"z", std::isfinite(r.z) ? nlohmann::json(r.z) : nlohmann::json(r.z > 0 ? "inf" : "-inf")},
                     {"pass", within}});
        std::cout << (within ? "PASS" : "FAIL") << "  t=" << io::fmt(r.t) << "  " << r.moment
                  << "  pde=" << io::fmt(r.pde) << "  mc=" << io::fmt(r.mc_mean) << " +- " << io::fmt(r.stderr_)
                  << "  z=" << io::fmt(r.z) << '\n';
    }
    auto report = header(cfg, hash);
    report["volume"] = mc.volume;
    report["ended_early"] = mc.ended_early;
    report["z_table"] = z;
    write_json(dir / "mc_report.json", report);
    return pass ? ok : check_failure;
}

int cmd_validate_kernel(const Options& o)
{
    const auto cfg = load(o, ConfigPurpose::validate_kernel);
    const auto hash = config_hash(cfg);
    const auto rep =
        validate_admissibility(cfg.kernel_spec(), {cfg.validate.box_lo, cfg.validate.box_hi}, cfg.validate.tol);
    auto report = header(cfg, hash);
    report["admissibility"] = io::to_json(rep);
    write_json(out_dir(o) / "admissibility.json", report);
    for (const auto& c : rep.checks)
        std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  worst=" << io::fmt(c.worst) << "  at ("
                  << io::fmt(c.witness.first) << ", " << io::fmt(c.witness.second) << ")  " << c.detail << '\n';
    return rep.all_pass() ? ok : check_failure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"rbk: truncated RBK coagulation solver, invariant checks and Monte Carlo cross-checks"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (default: $RBK_OUT, then .)");
        sub->add_option("--threads", o.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    };
    auto* run_cmd = app.add_subcommand("run", "integrate and write trajectory.csv, moments.csv, report.json");
    common(run_cmd);
    auto* check_cmd = app.add_subcommand("check", "run (or load) a trajectory and verify every bound");
    common(check_cmd);
    check_cmd->add_option("--trajectory", o.trajectory, "check this trajectory CSV instead of running")
        ->check(CLI::ExistingFile);
    auto* sweep_cmd = app.add_subcommand("sweep", "truncation sweep (and optional resolution orders)");
    common(sweep_cmd);
    sweep_cmd->add_flag("--resolution", o.resolution, "also estimate observed orders under dt and dx halving");
    auto* mc_cmd = app.add_subcommand("mc-compare", "Monte Carlo cross-validation of M0 and M1");
    common(mc_cmd);
    mc_cmd->add_option("--seed", o.seed, "base seed for the replicas (overrides the config)");
    auto* vk_cmd = app.add_subcommand("validate-kernel", "sample the kernel hypotheses on a box");
    common(vk_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (run_cmd->parsed())
            return cmd_run(o);
        if (check_cmd->parsed())
            return cmd_check(o);
        if (sweep_cmd->parsed())
            return cmd_sweep(o);
        if (mc_cmd->parsed())
            return cmd_mc_compare(o);
        if (vk_cmd->parsed())
            return cmd_validate_kernel(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error:\n" << e.what() << '\n';
        return config_error;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return numeric_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    }
    return usage;
}

int main(const std::vector<std::string>& args)
{
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.emplace_back("rbk");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage)
        argv.push_back(s.data());
    argv.push_back(nullptr);
    return main(static_cast<int>(storage.size()), argv.data());
}

} // namespace rbk::cli
