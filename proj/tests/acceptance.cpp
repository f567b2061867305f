// Acceptance criteria, one PASS/FAIL line each.
//
//   rbk_acceptance                  all criteria
//   rbk_acceptance --criterion N    criterion N only
//
// Exit status is 0 iff every selected criterion passes.

#include "rbk/cli.hpp"
#include "rbk/config.hpp"
#include "rbk/convergence.hpp"
#include "rbk/invariants.hpp"
#include "rbk/mc_oracle.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace rbk;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fixture(const std::string& name)
{
    return std::string(RBK_FIXTURES) + "/" + name;
}

std::string sci(double v)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunConfig baseline()
{
    return parse_config(fixture("baseline.toml"));
}

struct Scenario
{
    std::string name;
    KernelSpec kernel;
    InitialData initial;
};

std::vector<Scenario> matrix()
{
    const std::vector<std::pair<std::string, KernelSpec>> kernels{
        {"constant(1)", KernelSpec::constant(1.0)},
        {"power_product(0.5,1)", KernelSpec::power_product(0.5, 1.0)},
        {"exp_remainder(0.5)", KernelSpec::exp_remainder(0.5)}};
    const std::vector<std::pair<std::string, InitialData>> data{
        {"exponential(1,1)", InitialData::exponential(1.0, 1.0)},
        {"gamma(2,1,1)", InitialData::gamma(2.0, 1.0, 1.0)},
        {"bump(5,2,1)", InitialData::bump(5.0, 2.0, 1.0)}};
    std::vector<Scenario> out;
    for (const auto& [kn, k] : kernels)
        for (const auto& [dn, d] : data)
            out.push_back({kn + " x " + dn, k, d});
    return out;
}

constexpr double matrix_n = 20.0;

Trajectory run_matrix(const Scenario& s)
{
    SolverConfig c;
    c.scheme = Scheme::rk4;
    c.dt = 1e-3;
    c.t_end = 2.0;
    c.output_every = 10;
    return run(s.kernel, matrix_n, make_grid(matrix_n, 0.05), s.initial, c);
}

// 1. Number law of the constant kernel against c0 / (1 + c0 tau / 2).
Outcome criterion1()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = baseline();
    const auto traj = run(cfg.kernel_spec(), cfg.n, cfg.grid(), cfg.initial_data(), cfg.solver());
    const double c0 = traj.initial().moments.M0;
    double worst = 0.0;
    double at = 0.0;
    for (const auto& s : traj.snapshots) {
        const double exact = c0 / (1.0 + c0 * s.tau / 2.0);
        const double rel = std::abs(s.moments.M0 - exact) / exact;
        if (rel > worst) {
            worst = rel;
            at = s.tau;
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 5e-3 && secs <= 60.0, "max relative error " + sci(worst) + " at tau = " + sci(at) +
                                               " (tolerance 5.000e-03), " + sci(secs) + " s (limit 60 s)"};
}

// 2. Stepwise mass monotonicity on the 3 x 3 matrix.
Outcome criterion2()
{
    bool pass = true;
    double worst = -INFINITY;
    std::string where;
    for (const auto& s : matrix()) {
        const auto r = check_mass_monotone(run_matrix(s));
        if (!r.pass)
            pass = false;
        if (r.lhs / r.extras.at("M1_initial") > worst) {
            worst = r.lhs / r.extras.at("M1_initial");
            where = s.name;
        }
    }
    return {pass, "largest M1 increase / M1(0) " + sci(worst) + " (" + where + "), slack 1.000e-12"};
}

// 3. Three-node system against a hand-written ODE reference.
std::vector<double> micro_reference(double t_end)
{
    // f1' = f2 f1 + f3 f2 - f1 S, f2' = f3 f1 - f2 S, f3' = -f3 S, S = f1 + f2 + f3
    auto F = [](const std::vector<double>& f) {
        const double S = f[0] + f[1] + f[2];
        return std::vector<double>{f[1] * f[0] + f[2] * f[1] - f[0] * S, f[2] * f[0] - f[1] * S, -f[2] * S};
    };
    std::vector<double> f{1.0, 1.0, 1.0};
    const double h = 1e-5;
    const auto steps = static_cast<long>(std::llround(t_end / h));
    for (long k = 0; k < steps; ++k) {
        const auto k1 = F(f);
        std::vector<double> y(3);
        for (int i = 0; i < 3; ++i)
            y[i] = f[i] + 0.5 * h * k1[i];
        const auto k2 = F(y);
        for (int i = 0; i < 3; ++i)
            y[i] = f[i] + 0.5 * h * k2[i];
        const auto k3 = F(y);
        for (int i = 0; i < 3; ++i)
            y[i] = f[i] + h * k3[i];
        const auto k4 = F(y);
        for (int i = 0; i < 3; ++i)
            f[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return f;
}

Outcome criterion3()
{
    const auto cfg = parse_config(fixture("micro.toml"));
    const auto traj = run(cfg.kernel_spec(), cfg.n, cfg.grid(), cfg.initial_data(), cfg.solver());
    double worst = 0.0;
    int found = 0;
    for (double tau : {0.5, 1.0}) {
        const auto ref = micro_reference(tau);
        for (const auto& s : traj.snapshots) {
            if (std::abs(s.tau - tau) > 1e-9)
                continue;
            ++found;
            for (std::size_t i = 0; i < 3; ++i)
                worst = std::max(worst, std::abs(s.state.f[i] - ref[i]));
        }
    }
    return {found == 2 && worst <= 1e-6,
            "max |f - f_ref| " + sci(worst) + " at tau in {0.5, 1} (tolerance 1.000e-06)"};
}

// 4. Weak residual bound and its reduction under dt halving.
Outcome criterion4()
{
    const auto cfg = baseline();
    const auto tk = truncate(cfg.kernel_spec(), cfg.n);
    auto sc = cfg.solver();
    const auto coarse = run(cfg.kernel_spec(), cfg.n, cfg.grid(), cfg.initial_data(), sc);
    sc.dt /= 2.0;
    const auto fine = run(cfg.kernel_spec(), cfg.n, cfg.grid(), cfg.initial_data(), sc);
    bool pass = true;
    std::ostringstream os;
    for (const char* name : {"one", "min:5", "indicator:1:2"}) {
        const auto phi = TestFunction::parse(name);
        const auto r = check_weak_residual(coarse, tk, phi, 1e-4);
        auto max_abs = [&](const Trajectory& t) {
            double m = 0.0;
            for (const auto& p : weak_residual(t, tk, phi))
                m = std::max(m, std::abs(p.value));
            return m;
        };
        const double a = max_abs(coarse);
        const double b = max_abs(fine);
        const double factor = b > 0.0 ? a / b : INFINITY;
        pass = pass && r.pass && factor >= 3.5;
        os << name << ": |R|/bound " << sci(r.lhs / r.rhs)
           << ", reduction " << sci(factor) << "; ";
    }
    os << "(bound 1e-4 G0^2 tau, reduction >= 3.5)";
    return {pass, os.str()};
}

// 5. Moment bounds (i)-(iii) on the matrix with nonnegative margins.
Outcome criterion5()
{
    bool pass = true;
    double worst = INFINITY;
    std::string where;
    for (const auto& s : matrix()) {
        const auto traj = run_matrix(s);
        for (const auto& r : check_moment_bounds(traj, truncate(s.kernel, matrix_n), 5.0)) {
            if (!(r.pass && r.margin >= 0.0))
                pass = false;
            if (r.margin < worst) {
                worst = r.margin;
                where = s.name + " " + r.name;
            }
        }
    }
    return {pass, "smallest margin " + sci(worst) + " (" + where + ")"};
}

// 6. Tail and uniform-integrability bounds on the baseline run.
Outcome criterion6()
{
    const auto cfg = baseline();
    const auto traj = run(cfg.kernel_spec(), cfg.n, cfg.grid(), cfg.initial_data(), cfg.solver());
    const auto tk = truncate(cfg.kernel_spec(), cfg.n);
    const auto tail = check_tail_bound(traj, {5.0, 10.0, 20.0});
    bool pass = tail.pass;
    std::ostringstream os;
    os << "tail margin " << sci(tail.margin);
    for (const auto& [a, d] : std::vector<std::pair<double, double>>{{5.0, 0.5}, {10.0, 1.0}}) {
        const auto r = check_ui_bound(traj, tk, a, d);
        pass = pass && r.pass;
        os << "; ui(" << a << "," << d << ") lhs " << sci(r.lhs) << " rhs " << sci(r.rhs);
    }
    return {pass, os.str()};
}

// 7. Equicontinuity over all snapshot pairs, a = 5.
Outcome criterion7()
{
    const auto cfg = baseline();
    const auto traj = run(cfg.kernel_spec(), cfg.n, cfg.grid(), cfg.initial_data(), cfg.solver());
    const auto r = check_equicontinuity(traj, truncate(cfg.kernel_spec(), cfg.n), 5.0);
    return {r.pass, "lhs " + sci(r.lhs) + " rhs " + sci(r.rhs) + " at " + r.witness};
}

// 8. Truncation sweep fingerprints.
Outcome criterion8()
{
    const auto cfg = baseline();
    TruncationSweepSetup s{cfg.kernel_spec(), cfg.initial_data(), cfg.dx, cfg.solver(), {5.0, 10.0, 20.0, 40.0},
                           {TestFunction::one()}};
    const auto rep = truncation_sweep(s);
    bool strict = true;
    std::ostringstream os;
    for (std::size_t k = 0; k < rep.distances.size(); ++k) {
        if (k > 0 && !(rep.distances[k].D < rep.distances[k - 1].D))
            strict = false;
        os << "D(" << rep.distances[k].n1 << "," << rep.distances[k].n2 << ") " << sci(rep.distances[k].D) << "; ";
    }
    const double G0 = moments(init_density(cfg.initial_data(), make_grid(40.0, cfg.dx)), {}).norm01;
    const double limit = G0 / 20.0 + 1e-6;
    const double last = rep.distances.back().D;
    os << "limit for D(20,40) " << sci(limit);
    return {strict && last <= limit, os.str()};
}

// 9. Particle cross-validation with a mis-scaled negative control.
Outcome criterion9()
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = baseline();
    const auto grid = cfg.grid();
    const auto traj = run(cfg.kernel_spec(), cfg.n, grid, cfg.initial_data(), cfg.solver());
    const double M0 = traj.initial().moments.M0;

    MCSetup s;
    s.kernel = cfg.kernel_spec();
    s.initial = cfg.initial_data();
    s.grid = grid;
    s.particles = 200000;
    s.replicas = 16;
    s.seed = cfg.mc.seed;
    s.checkpoints = {0.5, 1.0, 2.0};
    s.threads = cfg.threads;
    s.volume = static_cast<double>(s.particles) / M0;
    double zmax = 0.0;
    for (const auto& row : compare(traj, run_replicas(s)))
        zmax = std::max(zmax, std::abs(row.z));

    s.volume *= 0.5;
    double zmin_bad = INFINITY;
    for (const auto& row : compare(traj, run_replicas(s)))
        zmin_bad = std::min(zmin_bad, std::abs(row.z));
    const double secs = seconds_since(t0);
    return {zmax <= 3.0 && zmin_bad > 3.0 && secs <= 180.0,
            "max |z| " + sci(zmax) + " (limit 3); control min |z| " + sci(zmin_bad) + " (must exceed 3); " +
                sci(secs) + " s (limit 180 s)"};
}

// 10. `check` on every fixture; corrupted trajectories exit 4, clean runs 0.
Outcome criterion10()
{
    const auto t0 = std::chrono::steady_clock::now();
    const char* base = std::getenv("RBK_TEST_TMP");
    const auto out = std::filesystem::path(base ? base : "acceptance_out") / "check";
    std::filesystem::create_directories(out);

    struct Case
    {
        std::vector<std::string> args;
        int expect;
    };
    const std::vector<Case> cases{
        {{"--config", fixture("baseline.toml")}, cli::ok},
        {{"--config", fixture("power_product_gamma.toml")}, cli::ok},
        {{"--config", fixture("exp_remainder_bump.toml")}, cli::ok},
        {{"--config", fixture("micro.toml")}, cli::ok},
        {{"--config", fixture("small.toml")}, cli::ok},
        {{"--config", fixture("small.toml"), "--trajectory", fixture("small_clean.csv")}, cli::ok},
        {{"--config", fixture("small.toml"), "--trajectory", fixture("small_mass_bump.csv")}, cli::check_failure},
        {{"--config", fixture("small.toml"), "--trajectory", fixture("small_tail_inflated.csv")}, cli::check_failure},
    };
    bool pass = true;
    std::ostringstream os;
    for (const auto& c : cases) {
        std::vector<std::string> args{"check"};
        args.insert(args.end(), c.args.begin(), c.args.end());
        args.insert(args.end(), {"--out", out.string()});
        std::streambuf* saved = std::cout.rdbuf();
        std::ostringstream sink;
        std::cout.rdbuf(sink.rdbuf());
        const int code = cli::main(args);
        std::cout.rdbuf(saved);
        if (code != c.expect) {
            pass = false;
            os << std::filesystem::path(c.args.back()).filename().string() << " exit " << code << " (expected "
               << c.expect << "); ";
        }
    }
    const double secs = seconds_since(t0);
    os << cases.size() << " invocations, " << sci(secs) << " s (limit 300 s)";
    return {pass && secs <= 300.0, os.str()};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria()
{
    static const std::vector<std::pair<std::string, std::function<Outcome()>>> list{
        {"constant-kernel number law", criterion1},
        {"mass monotone on the matrix", criterion2},
        {"three-node reference", criterion3},
        {"weak residual", criterion4},
        {"moment bounds on the matrix", criterion5},
        {"tail and uniform integrability", criterion6},
        {"equicontinuity", criterion7},
        {"truncation sweep", criterion8},
        {"particle cross-validation", criterion9},
        {"command-line checks", criterion10},
    };
    return list;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    bool all = true;
    const auto& list = criteria();
    for (std::size_t k = 0; k < list.size(); ++k) {
        if (only != 0 && static_cast<int>(k + 1) != only)
            continue;
        Outcome o;
        try {
            o = list[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << "criterion " << k + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  " << list[k].first << ": "
                  << o.detail << std::endl;
    }
    return all ? 0 : 1;
}
