#include "oracles.hpp"

#include "rbk/errors.hpp"
#include "rbk/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rbk;

namespace {

oracle::Kernel as_oracle(const TruncatedKernel& tk)
{
    return [tk](double s, double p) { return tk(s, p); };
}

DensityState random_state(const SizeGrid& g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    DensityState st(g);
    for (auto& v : st.f)
        v = u(rng);
    return st;
}

SolverConfig cfg_of(Scheme scheme, double dt, double t_end, int every = 1)
{
    SolverConfig c;
    c.scheme = scheme;
    c.dt = dt;
    c.t_end = t_end;
    c.output_every = every;
    return c;
}

} // namespace

TEST_CASE("rhs on hand-computed states")
{
    const auto tk = truncate(KernelSpec::constant(1.0), 2.0);
    const auto g = make_grid(2.0, 1.0);

    const DensityState zero(g);
    for (double v : rhs(zero, tk))
        CHECK(v == 0.0);

    DensityState mono(g);
    mono.f[0] = 3.0;
    const auto r1 = rhs(mono, tk);
    CHECK(r1[0] == doctest::Approx(-9.0)); // -dx K phi0^2
    CHECK(r1[1] == 0.0);

    DensityState two(g);
    two.f = {1.0, 1.0};
    const auto r2 = rhs(two, tk);
    CHECK(r2[0] == doctest::Approx(-1.0));
    CHECK(r2[1] == doctest::Approx(-2.0));

    CHECK_THROWS_AS(rhs(two, truncate(KernelSpec::constant(1.0), 3.0)), DomainError);
}

TEST_CASE("rhs agrees with pair enumeration")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t N = 1 + rng() % 8;
        const double dx = 0.25 * static_cast<double>(1 + rng() % 4);
        const double n = dx * static_cast<double>(N);
        if (n < 1.0)
            continue;
        const auto g = make_grid(n, dx);
        const auto st = random_state(g, rng());
        for (const auto& spec : {KernelSpec::constant(1.7), KernelSpec::power_product(0.5, 2.0),
                                 KernelSpec::exp_remainder(0.3)}) {
            const auto tk = truncate(spec, n);
            const auto got = rhs(st, tk);
            const auto want = oracle::pair_rhs(st.f, dx, as_oracle(tk));
            for (std::size_t i = 0; i < N; ++i)
                CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("gain and loss sums")
{
    const auto g = make_grid(3.0, 0.25);
    const auto tk = truncate(KernelSpec::power_product(0.5, 1.0), 3.0);
    const CollisionOperator op(tk, g);
    const auto st = random_state(g, 9);
    const std::size_t N = g.size();
    std::vector<double> gain(N);
    std::vector<double> loss(N);
    op.gain_loss(st.f, gain, loss);

    // each off-diagonal pair creates exactly one particle
    double pairs = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < i; ++j)
            pairs += tk(g.node(i), g.node(j)) * st.f[i] * st.f[j];
    double total_gain = 0.0;
    for (double v : gain)
        total_gain += v;
    CHECK(g.dx() * total_gain == doctest::Approx(g.dx() * g.dx() * pairs).epsilon(1e-12));

    for (std::size_t i = 0; i < N; ++i) {
        double l = 0.0;
        for (std::size_t j = 0; j < N; ++j)
            l += tk(g.node(i), g.node(j)) * st.f[j];
        CHECK(loss[i] == doctest::Approx(st.f[i] * g.dx() * l).epsilon(1e-12));
    }
}

TEST_CASE("dissipation rates match the moment derivatives")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = make_grid(4.0, 0.2);
        const auto st = random_state(g, rng());
        const auto tk = truncate(KernelSpec::exp_remainder(0.5), 4.0);
        const CollisionOperator op(tk, g);
        std::vector<double> r(g.size());
        op.rate(st.f, r);
        double dM0 = 0.0;
        double dM1 = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            dM0 += g.dx() * r[i];
            dM1 += g.dx() * g.node(i) * r[i];
        }
        const double q = op.number_dissipation(st.f);
        CHECK(q == doctest::Approx(oracle::pair_number_loss(st.f, g.dx(), as_oracle(tk))).epsilon(1e-12));
        CHECK(dM0 == doctest::Approx(-q).epsilon(1e-11));
        CHECK(dM1 == doctest::Approx(-op.mass_dissipation(st.f)).epsilon(1e-11));
        CHECK(op.mass_dissipation(st.f) >= 0.0);

        std::vector<double> one(g.size(), 1.0);
        CHECK(op.weak_rate(st.f, one) == doctest::Approx(dM0).epsilon(1e-11));
        std::vector<double> s(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            s[i] = g.node(i);
        CHECK(op.weak_rate(st.f, s) == doctest::Approx(dM1).epsilon(1e-11));
    }
}

TEST_CASE("min(s, M) gives a non-positive collision weight")
{
    const auto g = make_grid(12.0, 0.5);
    const double M = 5.0;
    const auto phi = TestFunction::min_cap(M).on_grid(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double w = phi[i - j - 1] - phi[i] - phi[j];
            CHECK(w <= 0.0);
            if (g.node(j) >= M)
                CHECK(w <= -M + 1e-12);
        }
}

TEST_CASE("explicit steps")
{
    const auto g = make_grid(1.0, 1.0);
    const auto tk = truncate(KernelSpec::constant(1.0), 1.0);
    DensityState st(g);
    st.f[0] = 1.0;

    auto c = cfg_of(Scheme::euler, 0.1, 1.0);
    const auto r = step(st, tk, c);
    CHECK(r.state.f[0] == doctest::Approx(0.9));
    CHECK(r.dt_used == 0.1);
    CHECK(r.halvings == 0);
    CHECK(r.collision_increment == doctest::Approx(0.1));
    CHECK(r.mass_before - r.mass_after == doctest::Approx(0.1));

    c.dt = 2.0;
    const auto h = step(st, tk, c);
    CHECK(h.halvings >= 1);
    CHECK(h.dt_used <= 1.0);
    CHECK(h.state.f[0] >= 0.0);

    c.positivity = PositivityPolicy::clip_with_report;
    const auto clipped = step(st, tk, c);
    CHECK(clipped.halvings == 0);
    CHECK(clipped.state.f[0] == 0.0);
    CHECK(clipped.clamped_number == doctest::Approx(1.0));
    CHECK(clipped.clamped_mass == doctest::Approx(1.0));

    auto stiff = cfg_of(Scheme::euler, 1.0, 1.0);
    CHECK_THROWS_AS(step(st, truncate(KernelSpec::constant(1e15), 1.0), stiff), NumericError);
}

TEST_CASE("run against the reference integrator")
{
    const double n = 2.0;
    const double dx = 0.25;
    const auto g = make_grid(n, dx);
    const auto spec = KernelSpec::power_product(0.5, 1.0);
    const auto tk = truncate(spec, n);
    const auto f0 = init_density(InitialData::exponential(1.0, 1.0), g);

    const auto traj = run(spec, n, g, f0, cfg_of(Scheme::rk4, 1e-3, 1.0, 100));
    REQUIRE(traj.snapshots.size() == 11);
    CHECK(traj.snapshots.back().tau == doctest::Approx(1.0));

    const auto same = oracle::rk4_reference(f0.f, dx, as_oracle(tk), 1e-3, 1.0);
    const auto fine = oracle::rk4_reference(f0.f, dx, as_oracle(tk), 1e-5, 1.0);
    const auto& f = traj.snapshots.back().state.f;
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(std::abs(f[i] - same[i]) <= 1e-12);
        CHECK(std::abs(f[i] - fine[i]) <= 1e-6);
    }

    // number identity holds for the integrated collision term
    for (const auto& s : traj.snapshots)
        CHECK(std::abs(s.moments.M0 + s.collision_integral - traj.initial().moments.M0) <= 1e-12);
}

TEST_CASE("zero initial data stays zero")
{
    const auto g = make_grid(5.0, 0.5);
    const auto traj = run(KernelSpec::constant(1.0), 5.0, g, DensityState(g), cfg_of(Scheme::rk4, 0.1, 1.0, 2));
    for (const auto& s : traj.snapshots) {
        for (double v : s.state.f)
            CHECK(v == 0.0);
        CHECK(s.collision_integral == 0.0);
    }
    for (const auto& p : weak_residual(traj, truncate(KernelSpec::constant(1.0), 5.0), TestFunction::one()))
        CHECK(p.value == 0.0);
    for (const auto& p : mild_residual(traj, truncate(KernelSpec::constant(1.0), 5.0), 3))
        CHECK(p.value == 0.0);
}

TEST_CASE("weak and mild residuals")
{
    const auto g = make_grid(2.0, 0.25);
    const auto spec = KernelSpec::constant(1.0);
    const auto tk = truncate(spec, 2.0);
    const auto f0 = init_density(InitialData::exponential(1.0, 1.0), g);
    const auto traj = run(spec, 2.0, g, f0, cfg_of(Scheme::rk4, 1e-3, 1.0, 1));

    for (const auto& p : weak_residual(traj, tk, TestFunction::constant(0.0)))
        CHECK(p.value == 0.0);
    for (const auto& phi : {TestFunction::one(), TestFunction::min_cap(1.0), TestFunction::indicator(0.5, 1.0)})
        for (const auto& p : weak_residual(traj, tk, phi))
            CHECK(std::abs(p.value) <= 1e-6);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (const auto& p : mild_residual(traj, tk, i))
            CHECK(std::abs(p.value) <= 1e-6);

    // one Euler step of a monodisperse state: f goes 1 -> 0.9, the trapezoid of the
    // rates -1 and -0.81 over 0.1 is -0.0905
    const auto g1 = make_grid(1.0, 1.0);
    DensityState mono(g1);
    mono.f[0] = 1.0;
    const auto e = run(spec, 1.0, g1, mono, cfg_of(Scheme::euler, 0.1, 0.1, 1));
    const auto m = mild_residual(e, truncate(spec, 1.0), 0);
    REQUIRE(m.size() == 2);
    CHECK(m[0].value == 0.0);
    CHECK(m[1].value == doctest::Approx(-0.0095).epsilon(1e-12));

    CHECK_THROWS_AS(mild_residual(e, truncate(spec, 1.0), 1), DomainError);
}

TEST_CASE("results do not depend on the thread count")
{
    const auto g = make_grid(6.0, 0.1);
    const auto spec = KernelSpec::exp_remainder(0.5);
    const auto f0 = init_density(InitialData::gamma(2.0, 1.0, 1.0), g);
    auto c1 = cfg_of(Scheme::rk4, 1e-2, 0.5, 10);
    auto c4 = c1;
    c4.threads = 4;
    const auto a = run(spec, 6.0, g, f0, c1);
    const auto b = run(spec, 6.0, g, f0, c4);
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
        CHECK(a.snapshots[k].state.f == b.snapshots[k].state.f);
        CHECK(a.snapshots[k].collision_integral == b.snapshots[k].collision_integral);
    }
}

TEST_CASE("run bookkeeping")
{
    const auto g = make_grid(3.0, 0.5);
    const auto spec = KernelSpec::constant(1.0);
    const auto f0 = init_density(InitialData::exponential(1.0, 1.0), g);
    const auto traj = run(spec, 3.0, g, f0, cfg_of(Scheme::rk4, 0.03, 0.1, 2));
    // steps end at 0.03, 0.06, 0.09, 0.1
    CHECK(traj.stats.accepted_steps == 4);
    REQUIRE(traj.snapshots.size() == 3);
    CHECK(traj.snapshots[1].tau == doctest::Approx(0.06));
    CHECK(traj.snapshots[2].tau == doctest::Approx(0.1));
    CHECK(traj.stats.max_step_mass_increase <= 0.0);
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k)
        CHECK(traj.snapshots[k].moments.M1 < traj.snapshots[k - 1].moments.M1);
}
