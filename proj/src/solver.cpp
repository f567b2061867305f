#include "rbk/solver.hpp"

#include "parallel.hpp"
#include "rbk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rbk {

namespace {

double mass_of(const SizeGrid& g, std::span<const double> f)
{
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        s += g.node(i) * f[i];
    return g.dx() * s;
}

// Sums per-row contributions in index order so the total is independent of the thread split.
template <class RowFn>
double ordered_row_sum(std::size_t n, unsigned threads, RowFn&& row)
{
    std::vector<double> rows(n);
    detail::parallel_for(n, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            rows[i] = row(i);
    });
    double s = 0.0;
    for (double v : rows)
        s += v;
    return s;
}

void check_levels(const SizeGrid& grid, double level)
{
    if (std::abs(grid.level() - level) > 1e-9 * level) {
        std::ostringstream os;
        os.precision(17);
        os << "grid level " << grid.level() << " does not match truncation level " << level;
        throw DomainError(os.str());
    }
}

} // namespace

std::string to_string(Scheme scheme)
{
    return scheme == Scheme::euler ? "euler" : "rk4";
}

std::string to_string(PositivityPolicy policy)
{
    return policy == PositivityPolicy::reject_and_halve ? "reject_and_halve" : "clip_with_report";
}

// ---------------------------------------------------------------------------
// CollisionOperator

CollisionOperator::CollisionOperator(const TruncatedKernel& tk, const SizeGrid& grid, unsigned threads)
    : grid_(grid), n_(grid.size()), threads_(std::max(1u, threads))
{
    check_levels(grid, tk.level());
    loss_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double k = tk(grid.node(i), grid.node(j));
            loss_[i * n_ + j] = k;
            loss_[j * n_ + i] = k;
        }
    }
    gain_offset_.resize(n_ + 1);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        gain_offset_[i] = total;
        total += n_ - i - 1;
    }
    gain_offset_[n_] = total;
    gain_.resize(total);
    for (std::size_t i = 0; i < n_; ++i) {
        double* row = gain_.data() + gain_offset_[i];
        for (std::size_t j = 0; j + i + 1 < n_; ++j)
            row[j] = loss_[(i + j + 1) * n_ + j];
    }
    r_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i)
        r_[i] = tk.r(grid.node(i));
}

void CollisionOperator::gain_loss(std::span<const double> f, std::span<double> gain, std::span<double> loss) const
{
    const double dx = grid_.dx();
    detail::parallel_for(n_, threads_, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double* g = gain_.data() + gain_offset_[i];
            const double* fs = f.data() + i + 1;
            const std::size_t len = n_ - i - 1;
            double acc = 0.0;
            for (std::size_t j = 0; j < len; ++j)
                acc += g[j] * fs[j] * f[j];
            gain[i] = dx * acc;

            const double* k = loss_.data() + i * n_;
            double l = 0.0;
            for (std::size_t j = 0; j < n_; ++j)
                l += k[j] * f[j];
            loss[i] = f[i] * dx * l;
        }
    });
}

void CollisionOperator::rate(std::span<const double> f, std::span<double> out) const
{
    const double dx = grid_.dx();
    detail::parallel_for(n_, threads_, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const double* g = gain_.data() + gain_offset_[i];
            const double* fs = f.data() + i + 1;
            const std::size_t len = n_ - i - 1;
            double acc = 0.0;
            for (std::size_t j = 0; j < len; ++j)
                acc += g[j] * fs[j] * f[j];

            const double* k = loss_.data() + i * n_;
            double l = 0.0;
            for (std::size_t j = 0; j < n_; ++j)
                l += k[j] * f[j];
            out[i] = dx * acc - f[i] * dx * l;
        }
    });
}

double CollisionOperator::number_dissipation(std::span<const double> f) const
{
    const double dx = grid_.dx();
    const double total = ordered_row_sum(n_, threads_, [&](std::size_t i) {
        const double* k = loss_.data() + i * n_;
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j)
            acc += k[j] * f[j];
        return f[i] * acc + k[i] * f[i] * f[i];
    });
    return dx * dx * total;
}

double CollisionOperator::mass_dissipation(std::span<const double> f) const
{
    const double dx = grid_.dx();
    const double total = ordered_row_sum(n_, threads_, [&](std::size_t i) {
        const double* k = loss_.data() + i * n_;
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j)
            acc += 2.0 * grid_.node(j) * k[j] * f[j];
        return f[i] * acc + grid_.node(i) * k[i] * f[i] * f[i];
    });
    return dx * dx * total;
}

double CollisionOperator::weak_rate(std::span<const double> f, std::span<const double> phi) const
{
    if (phi.size() != n_)
        throw DomainError("weak_rate: test function does not match the grid");
    const double dx = grid_.dx();
    const double total = ordered_row_sum(n_, threads_, [&](std::size_t i) {
        const double* k = loss_.data() + i * n_;
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j)
            acc += (phi[i - j - 1] - phi[i] - phi[j]) * k[j] * f[j];
        return f[i] * acc - phi[i] * k[i] * f[i] * f[i];
    });
    return dx * dx * total;
}

double CollisionOperator::r_moment(std::span<const double> f, double lower) const
{
    const double cut = lower * (1.0 - 1e-12);
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        if (grid_.node(i) >= cut)
            s += r_[i] * f[i];
    return grid_.dx() * s;
}

std::vector<double> rhs(const DensityState& state, const TruncatedKernel& tk)
{
    check_levels(state.grid, tk.level());
    CollisionOperator op(tk, state.grid);
    std::vector<double> out(state.grid.size());
    op.rate(state.f, out);
    return out;
}

// ---------------------------------------------------------------------------
// Time stepping

namespace {

struct Candidate
{
    std::vector<double> f;
    double dC = 0.0;
};

Candidate advance(std::span<const double> f, const CollisionOperator& op, Scheme scheme, double h)
{
    const std::size_t n = f.size();
    Candidate c;
    c.f.resize(n);
    std::vector<double> k1(n);
    op.rate(f, k1);
    const double q1 = op.number_dissipation(f);
    if (scheme == Scheme::euler) {
        for (std::size_t i = 0; i < n; ++i)
            c.f[i] = f[i] + h * k1[i];
        c.dC = h * q1;
        return c;
    }
    std::vector<double> k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = f[i] + 0.5 * h * k1[i];
    op.rate(tmp, k2);
    const double q2 = op.number_dissipation(tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = f[i] + 0.5 * h * k2[i];
    op.rate(tmp, k3);
    const double q3 = op.number_dissipation(tmp);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = f[i] + h * k3[i];
    op.rate(tmp, k4);
    const double q4 = op.number_dissipation(tmp);
    for (std::size_t i = 0; i < n; ++i)
        c.f[i] = f[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    c.dC = h / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
    return c;
}

} // namespace

StepResult step(const DensityState& state, const CollisionOperator& op, const SolverConfig& cfg)
{
    if (!(cfg.dt > 0.0))
        throw DomainError("step: dt must be positive");
    if (!(state.grid == op.grid()))
        throw DomainError("step: state grid does not match the collision operator");

    const auto& g = state.grid;
    double h = cfg.dt;
    for (int halvings = 0; halvings <= SolverConfig::max_halvings; ++halvings, h *= 0.5) {
        Candidate c = advance(state.f, op, cfg.scheme, h);
        const auto neg = std::find_if(c.f.begin(), c.f.end(), [](double v) { return v < 0.0; });
        double clamped_number = 0.0;
        double clamped_mass = 0.0;
        if (neg != c.f.end()) {
            if (cfg.positivity == PositivityPolicy::reject_and_halve) {
                if (halvings == SolverConfig::max_halvings) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "stiffness: node s = " << g.node(static_cast<std::size_t>(neg - c.f.begin()))
                       << " stays negative (" << *neg << ") after " << SolverConfig::max_halvings
                       << " halvings of dt = " << cfg.dt << " at tau = " << state.tau;
                    throw NumericError(os.str());
                }
                continue;
            }
            for (std::size_t i = 0; i < c.f.size(); ++i) {
                if (c.f[i] < 0.0) {
                    clamped_number -= g.dx() * c.f[i];
                    clamped_mass -= g.dx() * g.node(i) * c.f[i];
                    c.f[i] = 0.0;
                }
            }
        }
        StepResult r{DensityState(g, std::move(c.f), state.tau + h), h, halvings, clamped_number, clamped_mass, c.dC,
                     mass_of(g, state.f), 0.0};
        r.mass_after = mass_of(g, r.state.f);
        return r;
    }
    throw NumericError("stiffness: step could not be completed"); // unreachable
}

StepResult step(const DensityState& state, const TruncatedKernel& tk, const SolverConfig& cfg)
{
    CollisionOperator op(tk, state.grid, cfg.threads);
    return step(state, op, cfg);
}

Trajectory run(const KernelSpec& spec, double n, const SizeGrid& grid, const DensityState& f0, const SolverConfig& cfg)
{
    if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0))
        throw DomainError("run: dt and t_end must be positive");
    if (cfg.output_every < 1)
        throw DomainError("run: output_every must be at least 1");
    if (!(f0.grid == grid))
        throw DomainError("run: initial state is not on the run grid");
    const TruncatedKernel tk = truncate(spec, n);
    const CollisionOperator op(tk, grid, cfg.threads);

    Trajectory traj(grid);
    traj.config = cfg;
    traj.kernel = spec.describe();
    traj.stats.min_dt = cfg.dt;
    traj.stats.max_step_mass_increase = -std::numeric_limits<double>::infinity();

    DensityState state(grid, f0.f, 0.0);
    double C = 0.0;
    traj.snapshots.push_back({0.0, state, moments(state, cfg.tail_thresholds), 0.0});

    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.t_end / cfg.dt - 1e-9)));
    SolverConfig sub = cfg;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double target = (k == steps) ? cfg.t_end : static_cast<double>(k) * cfg.dt;
        while (true) {
            const double remaining = target - state.tau;
            if (remaining <= 1e-14 * std::max(1.0, target))
                break;
            sub.dt = remaining;
            StepResult r = step(state, op, sub);
            auto& st = traj.stats;
            ++st.accepted_steps;
            st.halvings += static_cast<std::size_t>(r.halvings);
            st.min_dt = std::min(st.min_dt, r.dt_used);
            st.clamped_number += r.clamped_number;
            st.clamped_mass += r.clamped_mass;
            st.max_step_mass_increase = std::max(st.max_step_mass_increase, r.mass_after - r.mass_before);
            C += r.collision_increment;
            const bool done = r.halvings == 0;
            state = std::move(r.state);
            if (done)
                state.tau = target;
        }
        state.tau = target;
        if (k % static_cast<std::size_t>(cfg.output_every) == 0 || k == steps)
            traj.snapshots.push_back({target, state, moments(state, cfg.tail_thresholds), C});
    }
    if (traj.stats.accepted_steps == 0)
        traj.stats.max_step_mass_increase = 0.0;
    return traj;
}

Trajectory run(const KernelSpec& spec, double n, const SizeGrid& grid, const InitialData& f0, const SolverConfig& cfg)
{
    return run(spec, n, grid, init_density(f0, grid), cfg);
}

// ---------------------------------------------------------------------------
// Residuals

std::vector<ResidualPoint> weak_residual(const Trajectory& traj, const TruncatedKernel& tk, const TestFunction& phi)
{
    const CollisionOperator op(tk, traj.grid, traj.config.threads);
    const auto values = phi.on_grid(traj.grid);
    const auto& f0 = traj.initial().state.f;
    const double dx = traj.grid.dx();

    std::vector<ResidualPoint> out;
    out.reserve(traj.snapshots.size());
    double Q = 0.0;
    double prev_rate = 0.0;
    double prev_tau = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& snap = traj.snapshots[k];
        const double w = op.weak_rate(snap.state.f, values);
        if (k > 0)
            Q += 0.5 * (snap.tau - prev_tau) * (prev_rate + w);
        prev_rate = w;
        prev_tau = snap.tau;
        double lhs = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            lhs += values[i] * (snap.state.f[i] - f0[i]);
        out.push_back({snap.tau, dx * lhs - Q});
    }
    return out;
}

std::vector<ResidualPoint> mild_residual(const Trajectory& traj, const TruncatedKernel& tk, std::size_t node)
{
    if (node >= traj.grid.size())
        throw DomainError("mild_residual: node index outside the grid");
    const CollisionOperator op(tk, traj.grid, traj.config.threads);
    std::vector<double> rate(traj.grid.size());
    const double f0 = traj.initial().state.f[node];

    std::vector<ResidualPoint> out;
    double integral = 0.0;
    double prev_rate = 0.0;
    double prev_tau = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& snap = traj.snapshots[k];
        op.rate(snap.state.f, rate);
        if (k > 0)
            integral += 0.5 * (snap.tau - prev_tau) * (prev_rate + rate[node]);
        prev_rate = rate[node];
        prev_tau = snap.tau;
        out.push_back({snap.tau, snap.state.f[node] - f0 - integral});
    }
    return out;
}

} // namespace rbk
