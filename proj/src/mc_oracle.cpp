#include "rbk/mc_oracle.hpp"

#include "rbk/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace rbk {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void require_count(std::size_t count)
{
    if (count < 2)
        throw DomainError("particle sampling: count must be at least 2");
}

double sup_bound_or_throw(const KernelSpec& kernel, double smax)
{
    const auto b = kernel.sup_on_box(smax);
    if (!b || !std::isfinite(*b) || *b < 0.0)
        throw DomainError("simulate: kernel " + kernel.describe() + " has no finite rate bound on the initial sizes");
    return *b;
}

double unit_uniform(std::mt19937_64& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica)
{
    return splitmix64(seed ^ splitmix64(replica + 1));
}

double ParticleSystem::M1() const
{
    double s = 0.0;
    for (double x : sizes)
        s += x;
    return s * unit / volume;
}

ParticleSystem sample_initial(const InitialData& family, std::size_t count, double volume, std::uint64_t seed)
{
    require_count(count);
    family.validate();
    ParticleSystem ps;
    ps.seed = seed;
    ps.volume = volume > 0.0 ? volume : static_cast<double>(count);
    ps.sizes.reserve(count);
    std::mt19937_64 rng(seed);

    switch (family.family) {
    case InitialFamily::exponential: {
        if (!(family.c > 0.0))
            throw DomainError("particle sampling: exponential family with c = 0 cannot be normalized");
        for (std::size_t k = 0; k < count; ++k) {
            double x = 0.0;
            while (!(x > 0.0))
                x = -family.theta * std::log1p(-unit_uniform(rng));
            ps.sizes.push_back(x);
        }
        break;
    }
    case InitialFamily::gamma: {
        if (!(family.c > 0.0))
            throw DomainError("particle sampling: gamma family with c = 0 cannot be normalized");
        std::gamma_distribution<double> dist(family.k, family.theta);
        while (ps.sizes.size() < count) {
            const double x = dist(rng);
            if (x > 0.0)
                ps.sizes.push_back(x);
        }
        break;
    }
    case InitialFamily::bump: {
        const double lo = std::max(0.0, family.center - family.width);
        const double hi = family.center + family.width;
        if (!(family.height > 0.0) || !(hi > lo))
            throw DomainError("particle sampling: bump has no mass on (0, inf)");
        while (ps.sizes.size() < count) {
            const double x = lo + (hi - lo) * unit_uniform(rng);
            if (x > 0.0 && unit_uniform(rng) * family.height < family(x))
                ps.sizes.push_back(x);
        }
        break;
    }
    case InitialFamily::tabulated: {
        std::vector<double> w;
        for (const auto& row : family.table)
            w.push_back(row.second);
        if (w.empty() || std::all_of(w.begin(), w.end(), [](double v) { return v <= 0.0; }))
            throw DomainError("particle sampling: tabulated density has no mass");
        std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
        for (std::size_t k = 0; k < count; ++k)
            ps.sizes.push_back(family.table[dist(rng)].first);
        break;
    }
    }
    return ps;
}

ParticleSystem sample_initial_on_grid(const InitialData& family, const SizeGrid& grid, std::size_t count,
                                      double volume, std::uint64_t seed)
{
    require_count(count);
    const auto f0 = init_density(family, grid);
    if (std::all_of(f0.f.begin(), f0.f.end(), [](double v) { return v <= 0.0; }))
        throw DomainError("particle sampling: initial density vanishes on the grid");
    ParticleSystem ps;
    ps.seed = seed;
    ps.unit = grid.dx();
    ps.lattice = true;
    ps.volume = volume > 0.0 ? volume : static_cast<double>(count);
    ps.sizes.reserve(count);
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> dist(f0.f.begin(), f0.f.end());
    for (std::size_t k = 0; k < count; ++k)
        ps.sizes.push_back(static_cast<double>(dist(rng) + 1));
    return ps;
}

ReplicaResult simulate(const KernelSpec& kernel, ParticleSystem& ps, double t_end, const std::vector<double>& checkpoints,
                       const std::function<void(const CollisionEvent&)>& on_event)
{
    std::vector<double> marks = checkpoints;
    std::sort(marks.begin(), marks.end());
    for (double t : marks)
        if (t < ps.t || t > t_end)
            throw DomainError("simulate: checkpoints must lie in [t, t_end]");
    for (double x : ps.sizes)
        if (!(x > 0.0))
            throw DomainError("simulate: particle sizes must be positive");

    double smax = 0.0;
    for (double x : ps.sizes)
        smax = std::max(smax, x * ps.unit);
    const auto bound = sup_bound_or_throw(kernel, smax);

    ReplicaResult res;
    std::mt19937_64 rng(ps.seed ^ 0x5bd1e9955bd1e995ULL);
    std::size_t next_mark = 0;
    auto record_until = [&](double t) {
        while (next_mark < marks.size() && marks[next_mark] <= t) {
            res.checkpoints.push_back({marks[next_mark], ps.count(), ps.M0(), ps.M1()});
            ++next_mark;
        }
    };

    while (true) {
        const std::size_t m = ps.count();
        if (m < 2 || !(bound > 0.0)) {
            if (next_mark < marks.size() && m < 2)
                res.ended_early = true;
            record_until(t_end);
            ps.t = t_end;
            break;
        }
        const double total = bound * 0.5 * static_cast<double>(m) * static_cast<double>(m - 1) / ps.volume;
        const double t_next = ps.t + std::exponential_distribution<double>(total)(rng);
        if (t_next > t_end) {
            record_until(t_end);
            ps.t = t_end;
            break;
        }
        record_until(std::nextafter(t_next, -std::numeric_limits<double>::infinity()));
        ps.t = t_next;
        ++res.proposals;

        std::size_t i = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
        std::size_t j = std::uniform_int_distribution<std::size_t>(0, m - 2)(rng);
        if (j >= i)
            ++j;
        const double x = ps.sizes[i];
        const double y = ps.sizes[j];
        const double k = kernel(x * ps.unit, y * ps.unit);
        if (k < bound && unit_uniform(rng) * bound >= k)
            continue;

        ++res.events;
        CollisionEvent ev{ps.t, x * ps.unit, y * ps.unit, std::nullopt};
        if (i < j)
            std::swap(i, j);
        if (x == y) {
            ps.sizes[i] = ps.sizes.back();
            ps.sizes.pop_back();
            ps.sizes[j] = ps.sizes.back();
            ps.sizes.pop_back();
        } else {
            const double d = std::abs(x - y);
            ev.product = d * ps.unit;
            ps.sizes[j] = d;
            ps.sizes[i] = ps.sizes.back();
            ps.sizes.pop_back();
        }
        if (on_event)
            on_event(ev);
    }
    return res;
}

MCReport run_replicas(const MCSetup& setup)
{
    if (setup.replicas < 1)
        throw DomainError("run_replicas: at least one replica is required");
    if (setup.checkpoints.empty())
        throw DomainError("run_replicas: no checkpoints");
    const double t_end = *std::max_element(setup.checkpoints.begin(), setup.checkpoints.end());
    const auto R = static_cast<std::size_t>(setup.replicas);

    MCReport rep;
    rep.volume = setup.volume > 0.0 ? setup.volume : static_cast<double>(setup.particles);
    rep.replicas.resize(R);

    auto one = [&](std::size_t r) {
        const auto seed = replica_seed(setup.seed, r);
        ParticleSystem ps = setup.grid ? sample_initial_on_grid(setup.initial, *setup.grid, setup.particles, rep.volume, seed)
                                       : sample_initial(setup.initial, setup.particles, rep.volume, seed);
        rep.replicas[r] = simulate(setup.kernel, ps, t_end, setup.checkpoints);
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(setup.threads, R));
    if (workers == 1) {
        for (std::size_t r = 0; r < R; ++r)
            one(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < R; r = next++) {
                    try {
                        one(r);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    auto stats = [&](std::size_t c, auto&& get) {
        MomentStats s;
        double sum = 0.0;
        for (const auto& r : rep.replicas)
            sum += get(r.checkpoints[c]);
        s.mean = sum / static_cast<double>(R);
        if (R > 1) {
            double ss = 0.0;
            for (const auto& r : rep.replicas) {
                const double d = get(r.checkpoints[c]) - s.mean;
                ss += d * d;
            }
            s.stderr_ = std::sqrt(ss / static_cast<double>(R - 1) / static_cast<double>(R));
        }
        return s;
    };
    const std::size_t C = rep.replicas.front().checkpoints.size();
    for (std::size_t c = 0; c < C; ++c) {
        MCCheckpoint cp;
        cp.t = rep.replicas.front().checkpoints[c].t;
        cp.count = stats(c, [](const ReplicaCheckpoint& p) { return static_cast<double>(p.count); });
        cp.M0 = stats(c, [](const ReplicaCheckpoint& p) { return p.M0; });
        cp.M1 = stats(c, [](const ReplicaCheckpoint& p) { return p.M1; });
        rep.checkpoints.push_back(cp);
    }
    for (const auto& r : rep.replicas)
        rep.ended_early += r.ended_early ? 1 : 0;
    return rep;
}

std::vector<ZRow> compare(const Trajectory& traj, const MCReport& mc)
{
    std::vector<ZRow> rows;
    auto z_of = [](double pde, const MomentStats& s) {
        const double d = pde - s.mean;
        if (s.stderr_ > 0.0)
            return d / s.stderr_;
        if (d == 0.0)
            return 0.0;
        return std::copysign(std::numeric_limits<double>::infinity(), d);
    };
    for (const auto& cp : mc.checkpoints) {
        const Snapshot* snap = nullptr;
        for (const auto& s : traj.snapshots)
            if (std::abs(s.tau - cp.t) <= 1e-9 * std::max(1.0, cp.t))
                snap = &s;
        if (!snap) {
            std::ostringstream os;
            os.precision(17);
            os << "compare: trajectory has no snapshot at MC checkpoint t = " << cp.t;
            throw DomainError(os.str());
        }
        rows.push_back({cp.t, "M0", snap->moments.M0, cp.M0.mean, cp.M0.stderr_, z_of(snap->moments.M0, cp.M0)});
        rows.push_back({cp.t, "M1", snap->moments.M1, cp.M1.mean, cp.M1.stderr_, z_of(snap->moments.M1, cp.M1)});
    }
    return rows;
}

} // namespace rbk
