#include "rbk/convergence.hpp"

#include "number_format.hpp"

#include "rbk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace rbk {

namespace {

std::string num(double v)
{
    return detail::shortest(v);
}

// Runs jobs concurrently when more than one thread is allowed; results come back in job order.
template <class Job>
auto run_all(const std::vector<Job>& jobs, unsigned threads)
{
    using Result = decltype(jobs.front()());
    std::vector<Result> out;
    out.reserve(jobs.size());
    if (threads <= 1) {
        for (const auto& job : jobs)
            out.push_back(job());
        return out;
    }
    std::vector<std::future<Result>> futures;
    for (const auto& job : jobs)
        futures.push_back(std::async(std::launch::async, job));
    for (auto& f : futures)
        out.push_back(f.get());
    return out;
}

const Snapshot* find_snapshot(const Trajectory& t, double tau)
{
    for (const auto& s : t.snapshots)
        if (std::abs(s.tau - tau) <= 1e-9 * std::max(1.0, std::abs(tau)))
            return &s;
    return nullptr;
}

double probe_gap(const Snapshot& coarse, const Snapshot& fine, double lo, double hi)
{
    const auto& gc = coarse.state.grid;
    const auto& gf = fine.state.grid;
    double worst = 0.0;
    for (std::size_t i = 0; i < gc.size(); ++i) {
        const double s = gc.node(i);
        if (s < lo * (1.0 - 1e-12) || s > hi * (1.0 + 1e-12))
            continue;
        const long j = gf.index_of(s);
        if (j < 0)
            continue;
        worst = std::max(worst, std::abs(coarse.state.f[i] - fine.state.f[static_cast<std::size_t>(j)]));
    }
    return worst;
}

} // namespace

std::string to_string(OrderStatus status)
{
    switch (status) {
    case OrderStatus::ok: return "ok";
    case OrderStatus::exact: return "exact";
    case OrderStatus::inconclusive: return "inconclusive";
    }
    return "unknown";
}

double weak_distance(const Trajectory& a, const Trajectory& b, const TestFunction& psi)
{
    if (std::abs(a.grid.dx() - b.grid.dx()) > 1e-12 * a.grid.dx())
        throw ConfigError("weak distance: trajectories use different dx (" + num(a.grid.dx()) + " and " +
                          num(b.grid.dx()) + ")");
    const Trajectory& big = a.grid.size() >= b.grid.size() ? a : b;
    const auto values = psi.on_grid(big.grid);
    const double dx = a.grid.dx();

    double D = 0.0;
    bool any = false;
    for (const auto& sa : a.snapshots) {
        const Snapshot* sb = find_snapshot(b, sa.tau);
        if (!sb)
            continue;
        any = true;
        double acc = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double fa = i < sa.state.f.size() ? sa.state.f[i] : 0.0;
            const double fb = i < sb->state.f.size() ? sb->state.f[i] : 0.0;
            acc += values[i] * (fa - fb);
        }
        D = std::max(D, std::abs(dx * acc));
    }
    if (!any)
        throw ConfigError("weak distance: trajectories share no snapshot times");
    return D;
}

SweepReport truncation_sweep(const TruncationSweepSetup& setup)
{
    const auto& lv = setup.levels;
    if (lv.size() < 2)
        throw ConfigError("truncation sweep: at least two levels are required");
    for (std::size_t k = 1; k < lv.size(); ++k)
        if (!(lv[k] > lv[k - 1]))
            throw ConfigError("truncation sweep: levels must be strictly increasing");
    std::vector<SizeGrid> grids;
    for (double n : lv)
        grids.push_back(make_grid(n, setup.dx));

    std::vector<std::function<Trajectory()>> jobs;
    for (std::size_t k = 0; k < lv.size(); ++k)
        jobs.emplace_back([&, k] { return run(setup.kernel, lv[k], grids[k], setup.initial, setup.solver); });
    const auto trajs = run_all(jobs, setup.solver.threads);

    SweepReport rep;
    rep.levels = lv;
    for (const auto& psi : setup.psi) {
        const auto values = psi.on_grid(grids.back());
        double sup = 0.0;
        for (double v : values)
            sup = std::max(sup, std::abs(v));
        bool monotone = true;
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k + 1 < lv.size(); ++k) {
            WeakDistance w;
            w.n1 = lv[k];
            w.n2 = lv[k + 1];
            w.psi = psi.name();
            w.D = weak_distance(trajs[k], trajs[k + 1], psi);
            double tail = 0.0;
            for (const auto& s : trajs[k + 1].snapshots)
                tail = std::max(tail, tail_mass(s.state, w.n1));
            w.tail_bound = sup * tail;
            if (w.D > prev)
                monotone = false;
            prev = w.D;
            rep.distances.push_back(w);
        }
        rep.monotone.emplace_back(psi.name(), monotone);
    }
    return rep;
}

ObservedOrder observed_order(std::string quantity, const std::vector<double>& errors, double scale)
{
    ObservedOrder o;
    o.quantity = std::move(quantity);
    o.errors = errors;
    const double zero = 1e-14 * std::max(std::abs(scale), std::numeric_limits<double>::min());
    if (std::all_of(errors.begin(), errors.end(), [&](double e) { return std::abs(e) <= zero; })) {
        o.status = OrderStatus::exact;
        return o;
    }
    if (errors.size() < 2) {
        o.status = OrderStatus::inconclusive;
        return o;
    }
    for (std::size_t k = 1; k < errors.size(); ++k) {
        if (!(std::abs(errors[k]) < std::abs(errors[k - 1])) || std::abs(errors[k]) <= zero) {
            o.status = OrderStatus::inconclusive;
            return o;
        }
    }
    const std::size_t m = errors.size();
    o.p_hat = std::log2(std::abs(errors[m - 2]) / std::abs(errors[m - 1]));
    o.status = OrderStatus::ok;
    return o;
}

SweepReport resolution_sweep(const ResolutionSweepSetup& setup)
{
    if (setup.dx_levels < 3 || setup.dt_levels < 3)
        throw ConfigError("resolution sweep: at least 3 levels each are required");

    SolverConfig final_only = setup.solver;
    final_only.output_every = std::numeric_limits<int>::max();

    // dt halving at fixed dx
    const SizeGrid grid = make_grid(setup.n, setup.dx);
    std::vector<std::function<Trajectory()>> dt_jobs;
    for (int k = 0; k < setup.dt_levels; ++k) {
        dt_jobs.emplace_back([&, k] {
            SolverConfig c = final_only;
            c.dt = setup.solver.dt / std::ldexp(1.0, k);
            return run(setup.kernel, setup.n, grid, setup.initial, c);
        });
    }
    // dx halving at fixed dt
    std::vector<std::function<Trajectory()>> dx_jobs;
    for (int k = 0; k < setup.dx_levels; ++k) {
        dx_jobs.emplace_back([&, k] {
            const double h = setup.dx / std::ldexp(1.0, k);
            return run(setup.kernel, setup.n, make_grid(setup.n, h), setup.initial, final_only);
        });
    }
    const auto dt_runs = run_all(dt_jobs, setup.solver.threads);
    const auto dx_runs = run_all(dx_jobs, setup.solver.threads);

    SweepReport rep;
    rep.levels = {setup.n};
    auto successive = [&](const std::vector<Trajectory>& runs, auto&& gap) {
        std::vector<double> e;
        for (std::size_t k = 0; k + 1 < runs.size(); ++k)
            e.push_back(gap(runs[k].snapshots.back(), runs[k + 1].snapshots.back()));
        return e;
    };
    auto m0_gap = [](const Snapshot& a, const Snapshot& b) { return std::abs(a.moments.M0 - b.moments.M0); };
    auto probe = [&](const Snapshot& a, const Snapshot& b) { return probe_gap(a, b, setup.probe_lo, setup.probe_hi); };

    const double m0_scale = dt_runs.front().initial().moments.M0;
    double f_scale = 0.0;
    for (double v : dt_runs.front().initial().state.f)
        f_scale = std::max(f_scale, v);

    rep.orders.push_back(observed_order("M0(T) dt", successive(dt_runs, m0_gap), m0_scale));
    rep.orders.push_back(observed_order("probe f dt", successive(dt_runs, probe), f_scale));
    rep.orders.push_back(observed_order("M0(T) dx", successive(dx_runs, m0_gap), m0_scale));
    rep.orders.push_back(observed_order("probe f dx", successive(dx_runs, probe), f_scale));
    if (setup.exact_M0) {
        std::vector<double> e;
        for (const auto& t : dx_runs)
            e.push_back(std::abs(t.snapshots.back().moments.M0 -
                                 setup.exact_M0(t.initial().moments.M0, t.snapshots.back().tau)));
        rep.orders.push_back(observed_order("M0(T) dx vs exact", e, m0_scale));
    }
    return rep;
}

} // namespace rbk
