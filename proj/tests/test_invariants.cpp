#include "rbk/errors.hpp"
#include "rbk/invariants.hpp"

#include <doctest.h>

#include <cmath>

using namespace rbk;

namespace {

SolverConfig cfg_of(Scheme scheme, double dt, double t_end, int every)
{
    SolverConfig c;
    c.scheme = scheme;
    c.dt = dt;
    c.t_end = t_end;
    c.output_every = every;
    return c;
}

struct Case
{
    KernelSpec spec;
    TruncatedKernel tk;
    Trajectory traj;
};

Case make_case(const KernelSpec& spec, const InitialData& init, double n = 10.0, double dx = 0.1)
{
    const auto g = make_grid(n, dx);
    return {spec, truncate(spec, n), run(spec, n, g, init, cfg_of(Scheme::rk4, 1e-2, 1.0, 5))};
}

void refresh(Snapshot& s)
{
    s.moments = moments(s.state, std::vector<double>{});
}

} // namespace

TEST_CASE("zero trajectory passes every check")
{
    const auto g = make_grid(5.0, 0.5);
    const auto spec = KernelSpec::power_product(0.5, 1.0);
    const auto tk = truncate(spec, 5.0);
    const auto traj = run(spec, 5.0, g, DensityState(g), cfg_of(Scheme::rk4, 0.1, 1.0, 2));
    CHECK(check_mass_monotone(traj).pass);
    CHECK(check_number_identity(traj).pass);
    for (const auto& r : check_moment_bounds(traj, tk, 2.0))
        CHECK(r.pass);
    CHECK(check_tail_bound(traj, {1.0, 2.0}).pass);
    CHECK(check_ui_bound(traj, tk, 2.0, 0.5).pass);
    CHECK(check_equicontinuity(traj, tk, 2.0).pass);
    CHECK(check_weak_residual(traj, tk, TestFunction::one()).pass);
}

TEST_CASE("mass is non-increasing and a corrupted snapshot is caught")
{
    auto c = make_case(KernelSpec::constant(1.0), InitialData::exponential(1.0, 1.0));
    const auto ok = check_mass_monotone(c.traj);
    CHECK(ok.pass);
    CHECK(ok.extras.at("strictly_decreasing") == 1.0);
    CHECK(ok.lhs < 0.0);

    auto& snap = c.traj.snapshots[5];
    snap.state.f.back() += 1.0;
    refresh(snap);
    const auto bad = check_mass_monotone(c.traj);
    CHECK_FALSE(bad.pass);
    CHECK(bad.witness_tau == doctest::Approx(snap.tau));
    CHECK(bad.lhs == doctest::Approx(0.1 * 10.0).epsilon(0.05));
    CHECK(bad.extras.at("strictly_decreasing") == 0.0);
}

TEST_CASE("number identity")
{
    auto c = make_case(KernelSpec::power_product(0.5, 1.0), InitialData::gamma(2.0, 1.0, 1.0));
    const auto ok = check_number_identity(c.traj);
    CHECK(ok.pass);
    CHECK(ok.lhs <= 1e-8);

    // one Euler step of a monodisperse state loses exactly dt dx K f^2 particles
    const auto g = make_grid(1.0, 1.0);
    DensityState mono(g);
    mono.f[0] = 2.0;
    const auto e = run(KernelSpec::constant(1.0), 1.0, g, mono, cfg_of(Scheme::euler, 0.05, 0.05, 1));
    REQUIRE(e.snapshots.size() == 2);
    CHECK(e.snapshots[1].collision_integral == doctest::Approx(0.05 * 4.0));
    CHECK(e.snapshots[1].moments.M0 == doctest::Approx(2.0 - 0.2));
    CHECK(check_number_identity(e).pass);

    c.traj.snapshots[3].collision_integral += 1e-6;
    const auto bad = check_number_identity(c.traj);
    CHECK_FALSE(bad.pass);
    CHECK(bad.witness_tau == doctest::Approx(c.traj.snapshots[3].tau));

    c.traj.has_collision_integral = false;
    CHECK_THROWS_AS(check_number_identity(c.traj), DomainError);
}

TEST_CASE("moment bounds")
{
    auto c = make_case(KernelSpec::power_product(0.5, 1.0), InitialData::exponential(1.0, 1.0));
    const auto reports = check_moment_bounds(c.traj, c.tk, 5.0);
    REQUIRE(reports.size() == 3);
    for (const auto& r : reports) {
        CHECK_MESSAGE(r.pass, r.name);
        CHECK(r.lhs >= 0.0);
    }
    const double M0 = c.traj.initial().moments.M0;
    CHECK(reports[0].rhs == doctest::Approx(c.traj.initial().moments.M1 / 5.0));
    CHECK(reports[1].rhs == doctest::Approx(std::min(M0, c.traj.norm01_initial())));
    CHECK(reports[2].rhs == doctest::Approx(2.0 * M0));

    // (iii) by hand: trapezoid of (dx sum sqrt(s) f)^2
    double want = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < c.traj.snapshots.size(); ++k) {
        const auto& s = c.traj.snapshots[k];
        double m = 0.0;
        for (std::size_t i = 0; i < s.state.f.size(); ++i)
            m += c.traj.grid.dx() * std::sqrt(c.traj.grid.node(i)) * s.state.f[i];
        const double v = m * m;
        if (k > 0)
            want += 0.5 * (s.tau - c.traj.snapshots[k - 1].tau) * (prev + v);
        prev = v;
    }
    CHECK(reports[2].lhs == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(check_moment_bounds(c.traj, c.tk, 0.0), DomainError);
    CHECK_THROWS_AS(check_moment_bounds(c.traj, c.tk, 11.0), DomainError);

    for (std::size_t k = 1; k < c.traj.snapshots.size(); ++k) {
        for (auto& v : c.traj.snapshots[k].state.f)
            v *= 3.0;
        refresh(c.traj.snapshots[k]);
    }
    const auto bad = check_moment_bounds(c.traj, c.tk, 5.0);
    CHECK_FALSE(bad[1].pass);
    CHECK_FALSE(bad[2].pass);
}

TEST_CASE("tail bound")
{
    auto c = make_case(KernelSpec::constant(1.0), InitialData::exponential(1.0, 1.0));
    const auto ok = check_tail_bound(c.traj, {1.0, 5.0, 10.0});
    CHECK(ok.pass);

    // bump centred at n/2: the tail above n/4 holds everything
    const auto b = make_case(KernelSpec::constant(1.0), InitialData::bump(5.0, 1.0, 1.0));
    const auto rb = check_tail_bound(b.traj, {2.5});
    CHECK(rb.pass);
    CHECK(rb.lhs <= rb.rhs);

    CHECK_THROWS_AS(check_tail_bound(c.traj, {0.5}), DomainError);

    auto& snap = c.traj.snapshots.back();
    snap.state.f.back() += 100.0;
    refresh(snap);
    const auto bad = check_tail_bound(c.traj, {1.0, 5.0});
    CHECK_FALSE(bad.pass);
    CHECK(bad.witness_tau == doctest::Approx(snap.tau));
}

TEST_CASE("uniform integrability bound")
{
    auto c = make_case(KernelSpec::power_product(0.5, 1.0), InitialData::gamma(2.0, 1.0, 1.0));
    const auto ok = check_ui_bound(c.traj, c.tk, 5.0, 0.5);
    CHECK(ok.pass);
    CHECK(ok.extras.at("linear_form_rhs") > 0.0);
    CHECK(ok.extras.at("C1") == doctest::Approx(c.traj.initial().moments.M1));

    CHECK_THROWS_AS(check_ui_bound(c.traj, c.tk, 1.0, 0.5), DomainError);

    auto& snap = c.traj.snapshots[4];
    snap.state.f[10] += 1e4;
    refresh(snap);
    const auto bad = check_ui_bound(c.traj, c.tk, 5.0, 0.5);
    CHECK_FALSE(bad.pass);
    CHECK(bad.witness_tau == doctest::Approx(snap.tau));
}

TEST_CASE("time equicontinuity")
{
    auto c = make_case(KernelSpec::exp_remainder(0.5), InitialData::exponential(1.0, 1.0));
    const auto ok = check_equicontinuity(c.traj, c.tk, 5.0);
    CHECK(ok.pass);

    auto& snap = c.traj.snapshots[2];
    for (std::size_t i = 0; i < 50; ++i)
        snap.state.f[i] += 50.0;
    refresh(snap);
    const auto bad = check_equicontinuity(c.traj, c.tk, 5.0);
    CHECK_FALSE(bad.pass);
}

TEST_CASE("weak residual check")
{
    auto c = make_case(KernelSpec::constant(1.0), InitialData::exponential(1.0, 1.0));
    for (const auto& phi : {TestFunction::one(), TestFunction::min_cap(5.0), TestFunction::indicator(1.0, 2.0)})
        CHECK_MESSAGE(check_weak_residual(c.traj, c.tk, phi).pass, phi.name());

    auto& snap = c.traj.snapshots[3];
    snap.state.f[4] += 1.0;
    refresh(snap);
    const auto bad = check_weak_residual(c.traj, c.tk, TestFunction::one());
    CHECK_FALSE(bad.pass);
    CHECK(bad.witness_tau == doctest::Approx(snap.tau));
}

TEST_CASE("mild residual is reported as a ratio")
{
    const auto c = make_case(KernelSpec::constant(1.0), InitialData::exponential(1.0, 1.0));
    const auto r = check_mild_residual(c.traj, c.tk);
    CHECK(r.qualitative);
    CHECK(r.extras.count("ratio") == 1);
    CHECK(r.extras.at("ratio") < 1e-3);
}

TEST_CASE("all_hard_checks_pass ignores qualitative reports")
{
    BoundReport hard;
    BoundReport soft;
    soft.qualitative = true;
    soft.pass = false;
    CHECK(all_hard_checks_pass({hard, soft}));
    hard.pass = false;
    CHECK_FALSE(all_hard_checks_pass({hard, soft}));
}
