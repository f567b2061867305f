#include "rbk/invariants.hpp"

#include "number_format.hpp"

#include "rbk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rbk {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string num(double v)
{
    return detail::shortest(v);
}

void require_nonempty(const Trajectory& traj)
{
    if (traj.snapshots.empty())
        throw DomainError("trajectory has no snapshots");
}

double G0(const Trajectory& traj)
{
    return traj.norm01_initial();
}

// Severity used to pick the witness: lhs / rhs, with a zero rhs counting as 0 or inf.
double severity(double lhs, double rhs)
{
    if (rhs > 0.0)
        return lhs / rhs;
    return lhs > 0.0 ? inf : (lhs < 0.0 ? -inf : 0.0);
}

void finish(BoundReport& r)
{
    r.margin = r.rhs - r.lhs;
    r.pass = r.margin >= -r.tolerance;
}

// Cumulative trapezoid of g(snapshot) over the snapshot times.
template <class Fn>
std::vector<double> cumulative_trapezoid(const Trajectory& traj, Fn&& g)
{
    std::vector<double> out(traj.snapshots.size(), 0.0);
    double prev = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const double v = g(traj.snapshots[k]);
        if (k > 0)
            out[k] = out[k - 1] + 0.5 * (traj.snapshots[k].tau - traj.snapshots[k - 1].tau) * (prev + v);
        prev = v;
    }
    return out;
}

} // namespace

BoundReport check_mass_monotone(const Trajectory& traj)
{
    require_nonempty(traj);
    BoundReport r;
    r.name = "mass_monotone";
    const double m0 = traj.initial().moments.M1;
    r.tolerance = 1e-12 * m0;
    r.lhs = -inf;
    bool strict = traj.snapshots.size() > 1;
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
        const auto& s = traj.snapshots[k];
        const double step_inc = s.moments.M1 - traj.snapshots[k - 1].moments.M1;
        const double total_inc = s.moments.M1 - m0;
        if (!(step_inc < 0.0))
            strict = false;
        const double inc = std::max(step_inc, total_inc);
        if (inc > r.lhs) {
            r.lhs = inc;
            r.witness_tau = s.tau;
            r.witness = "M1(" + num(s.tau) + ") = " + num(s.moments.M1) + ", previous snapshot " +
                        num(traj.snapshots[k - 1].moments.M1);
        }
    }
    if (traj.has_step_stats && traj.stats.accepted_steps > 0 && traj.stats.max_step_mass_increase > r.lhs) {
        r.lhs = traj.stats.max_step_mass_increase;
        r.witness = "largest M1 change over one accepted step";
    }
    if (r.lhs == -inf) {
        r.lhs = 0.0;
        r.witness = "single snapshot";
    }
    r.rhs = 0.0;
    r.extras["strictly_decreasing"] = strict ? 1.0 : 0.0;
    r.extras["M1_initial"] = m0;
    r.extras["M1_final"] = traj.snapshots.back().moments.M1;
    finish(r);
    return r;
}

BoundReport check_number_identity(const Trajectory& traj)
{
    require_nonempty(traj);
    if (!traj.has_collision_integral)
        throw DomainError("number identity: trajectory carries no collision integral");
    BoundReport r;
    r.name = "number_identity";
    const double m0 = traj.initial().moments.M0;
    r.tolerance = 1e-9 * std::max(1.0, m0);
    for (const auto& s : traj.snapshots) {
        const double err = std::abs(s.moments.M0 + s.collision_integral - m0);
        if (err >= r.lhs) {
            r.lhs = err;
            r.witness_tau = s.tau;
            r.witness = "M0 = " + num(s.moments.M0) + ", C = " + num(s.collision_integral);
        }
    }
    r.rhs = 0.0;
    if (traj.has_step_stats)
        r.extras["clamped_number"] = traj.stats.clamped_number;
    finish(r);
    return r;
}

std::vector<BoundReport> check_moment_bounds(const Trajectory& traj, const TruncatedKernel& tk, double M)
{
    require_nonempty(traj);
    if (!(M > 0.0) || M > tk.level() * (1.0 + 1e-12))
        throw DomainError("moment bounds: threshold M = " + num(M) + " must satisfy 0 < M <= n = " + num(tk.level()));
    const CollisionOperator op(tk, traj.grid, traj.config.threads);
    const double m0 = traj.initial().moments.M0;
    const double m1 = traj.initial().moments.M1;
    const double g0 = G0(traj);
    const double slack = 1e-12;

    const auto tail_int = cumulative_trapezoid(traj, [&](const Snapshot& s) {
        const double v = op.r_moment(s.state.f, M);
        return v * v;
    });
    const auto full_int = cumulative_trapezoid(traj, [&](const Snapshot& s) {
        const double v = op.r_moment(s.state.f, 0.0);
        return v * v;
    });

    BoundReport i;
    i.name = "tail_r_moment";
    i.rhs = m1 / M;
    i.tolerance = slack * std::max(1.0, i.rhs);
    const auto wi = std::max_element(tail_int.begin(), tail_int.end()) - tail_int.begin();
    i.lhs = tail_int[static_cast<std::size_t>(wi)];
    i.witness_tau = traj.snapshots[static_cast<std::size_t>(wi)].tau;
    i.witness = "M = " + num(M);
    i.extras["M"] = M;
    finish(i);

    BoundReport ii;
    ii.name = "number_bound";
    ii.rhs = std::min(m0, g0);
    ii.tolerance = slack * std::max(1.0, m0);
    ii.lhs = -inf;
    for (const auto& s : traj.snapshots) {
        if (s.moments.M0 > ii.lhs) {
            ii.lhs = s.moments.M0;
            ii.witness_tau = s.tau;
        }
    }
    ii.witness = "max M0 over snapshots";
    ii.extras["G0"] = g0;
    ii.extras["M0_initial"] = m0;
    finish(ii);

    BoundReport iii;
    iii.name = "full_r_moment";
    iii.rhs = 2.0 * m0;
    iii.tolerance = slack * std::max(1.0, iii.rhs);
    const auto wf = std::max_element(full_int.begin(), full_int.end()) - full_int.begin();
    iii.lhs = full_int[static_cast<std::size_t>(wf)];
    iii.witness_tau = traj.snapshots[static_cast<std::size_t>(wf)].tau;
    iii.witness = "integral up to tau";
    finish(iii);

    return {i, ii, iii};
}

BoundReport check_tail_bound(const Trajectory& traj, const std::vector<double>& R_list)
{
    require_nonempty(traj);
    for (double R : R_list)
        if (!(R >= 1.0))
            throw DomainError("tail bound: R = " + num(R) + " must be at least 1");
    BoundReport r;
    r.name = "tail_bound";
    const double g0 = G0(traj);
    r.tolerance = 1e-12 * std::max(1.0, g0);
    double worst = -inf;
    bool violated = false;
    for (double R : R_list) {
        const double bound = g0 / R;
        for (const auto& s : traj.snapshots) {
            const double t = tail_mass(s.state, R);
            violated = violated || t - bound > r.tolerance;
            if (severity(t, bound) > worst) {
                worst = severity(t, bound);
                r.lhs = t;
                r.rhs = bound;
                r.witness_tau = s.tau;
                r.witness = "R = " + num(R);
            }
        }
    }
    if (worst == -inf)
        r.witness = "no thresholds";
    finish(r);
    r.pass = r.pass && !violated;
    return r;
}

BoundReport check_ui_bound(const Trajectory& traj, const TruncatedKernel& tk, double a, double delta)
{
    require_nonempty(traj);
    if (!(a > 1.0))
        throw DomainError("ui bound: a = " + num(a) + " must exceed 1");
    const auto kb = kernel_bounds(tk, a, traj.grid);
    const double c1 = traj.initial().moments.M1;
    const double c3 = 2.0 * std::max(G0(traj), c1);
    const double rate = (kb.kbar + kb.theta) * c3;
    const double ui0 = ui_functional(traj.initial().state, a, delta).value;
    const double base = ui0 + c1 / a;

    BoundReport r;
    r.name = "uniform_integrability";
    r.tolerance = 1e-12 * std::max(1.0, base);
    double worst = -inf;
    bool violated = false;
    std::vector<std::size_t> cells;
    for (const auto& s : traj.snapshots) {
        const auto est = ui_functional(s.state, a, delta);
        const double bound = base * std::exp(rate * s.tau);
        violated = violated || est.value - bound > r.tolerance;
        if (severity(est.value, bound) > worst) {
            worst = severity(est.value, bound);
            r.lhs = est.value;
            r.rhs = bound;
            r.witness_tau = s.tau;
            cells = est.cells;
        }
    }
    std::ostringstream os;
    os.precision(17);
    os << "a = " << a << ", delta = " << delta << ", cells s =";
    for (std::size_t k = 0; k < cells.size() && k < 16; ++k)
        os << (k ? "," : " ") << traj.grid.node(cells[k]);
    if (cells.size() > 16)
        os << ",...";
    r.witness = os.str();
    const double T = traj.snapshots.back().tau;
    r.extras["kbar"] = kb.kbar;
    r.extras["theta"] = kb.theta;
    r.extras["C1"] = c1;
    r.extras["C3"] = c3;
    r.extras["ui_initial"] = ui0;
    r.extras["linear_form_rhs"] = base * rate * T;
    finish(r);
    r.pass = r.pass && !violated;
    return r;
}

BoundReport check_equicontinuity(const Trajectory& traj, const TruncatedKernel& tk, double a)
{
    require_nonempty(traj);
    const auto kb = kernel_bounds(tk, a, traj.grid);
    const double g0 = G0(traj);
    const double m1 = traj.initial().moments.M1;
    const double A = tk.base().domination_constant();
    const double slope = (kb.kbar + 5.0 * kb.theta) * g0 * g0;
    const double offset = (1.0 + A) * m1 / a;
    const std::size_t m = traj.grid.count_at_most(a);
    const double dx = traj.grid.dx();

    BoundReport r;
    r.name = "equicontinuity";
    r.tolerance = 1e-12 * std::max(1.0, offset);
    double worst = -inf;
    bool violated = false;
    const auto& snaps = traj.snapshots;
    for (std::size_t p = 0; p < snaps.size(); ++p) {
        for (std::size_t q = p; q < snaps.size(); ++q) {
            double diff = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                diff += std::abs(snaps[q].state.f[i] - snaps[p].state.f[i]);
            diff *= dx;
            const double bound = slope * (snaps[q].tau - snaps[p].tau) + offset;
            violated = violated || diff - bound > r.tolerance;
            if (severity(diff, bound) > worst) {
                worst = severity(diff, bound);
                r.lhs = diff;
                r.rhs = bound;
                r.witness_tau = snaps[q].tau;
                r.witness = "s = " + num(snaps[p].tau) + ", tau = " + num(snaps[q].tau);
            }
        }
    }
    r.extras["kbar"] = kb.kbar;
    r.extras["theta"] = kb.theta;
    r.extras["A"] = A;
    r.extras["a"] = a;
    finish(r);
    r.pass = r.pass && !violated;
    return r;
}

BoundReport check_weak_residual(const Trajectory& traj, const TruncatedKernel& tk, const TestFunction& phi,
                                double rel_tol)
{
    require_nonempty(traj);
    const auto res = weak_residual(traj, tk, phi);
    const double g0 = G0(traj);
    BoundReport r;
    r.name = "weak_residual[" + phi.name() + "]";
    r.tolerance = 1e-14 * std::max(1.0, g0 * g0);
    double worst = -inf;
    bool violated = false;
    double max_abs = 0.0;
    for (const auto& p : res) {
        const double bound = rel_tol * g0 * g0 * p.tau;
        max_abs = std::max(max_abs, std::abs(p.value));
        violated = violated || std::abs(p.value) - bound > r.tolerance;
        if (severity(std::abs(p.value), bound) > worst) {
            worst = severity(std::abs(p.value), bound);
            r.lhs = std::abs(p.value);
            r.rhs = bound;
            r.witness_tau = p.tau;
        }
    }
    r.witness = "phi = " + phi.name();
    r.extras["max_abs_residual"] = max_abs;
    r.extras["rel_tol"] = rel_tol;
    finish(r);
    r.pass = r.pass && !violated;
    return r;
}

BoundReport check_mild_residual(const Trajectory& traj, const TruncatedKernel& tk)
{
    require_nonempty(traj);
    BoundReport r;
    r.name = "mild_residual";
    r.qualitative = true;
    double fmax = 0.0;
    for (const auto& s : traj.snapshots)
        for (double v : s.state.f)
            fmax = std::max(fmax, v);
    const CollisionOperator op(tk, traj.grid, traj.config.threads);
    const std::size_t N = traj.grid.size();
    const auto& f0 = traj.initial().state.f;
    std::vector<double> integral(N, 0.0), prev(N, 0.0), rate(N);
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& s = traj.snapshots[k];
        op.rate(s.state.f, rate);
        const double h = k > 0 ? s.tau - traj.snapshots[k - 1].tau : 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (k > 0)
                integral[i] += 0.5 * h * (prev[i] + rate[i]);
            const double res = std::abs(s.state.f[i] - f0[i] - integral[i]);
            if (res > r.lhs) {
                r.lhs = res;
                r.witness_tau = s.tau;
                r.witness = "s = " + num(traj.grid.node(i));
            }
        }
        prev = rate;
    }
    r.rhs = fmax;
    r.margin = r.rhs - r.lhs;
    r.pass = true;
    r.extras["ratio"] = fmax > 0.0 ? r.lhs / fmax : 0.0;
    return r;
}

bool all_hard_checks_pass(const std::vector<BoundReport>& reports)
{
    return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.qualitative || r.pass; });
}

} // namespace rbk
