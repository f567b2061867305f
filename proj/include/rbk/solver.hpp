#ifndef RBK_SOLVER_HPP
#define RBK_SOLVER_HPP

// Time integration of the truncated RBK system on a node grid,
//
//   df_i/dt = dx sum_{j=1}^{N-i} K_n(s_{i+j}, s_j) f_{i+j} f_j  -  f_i dx sum_{j=1}^{N} K_n(s_i, s_j) f_j,
//
// together with the mild-form and weak-form residual diagnostics.
//
// Pair convention: an unordered pair (i, j), i != j, collides at rate
// dx^2 K f_i f_j and leaves one particle at |i - j|; a diagonal pair (i, i)
// collides at rate dx^2 K f_i^2 / 2 and leaves nothing.

#include "rbk/grid_state.hpp"
#include "rbk/kernels.hpp"
#include "rbk/test_function.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rbk {

enum class Scheme { euler, rk4 };
enum class PositivityPolicy { reject_and_halve, clip_with_report };

std::string to_string(Scheme scheme);
std::string to_string(PositivityPolicy policy);

struct SolverConfig
{
    Scheme scheme = Scheme::rk4;
    double dt = 1e-3;
    double t_end = 1.0;
    int output_every = 1;
    PositivityPolicy positivity = PositivityPolicy::reject_and_halve;
    unsigned threads = 1;
    std::vector<double> tail_thresholds; // R values recorded in every MomentReport

    static constexpr int max_halvings = 40;
};

/// Kernel values K_n(s_i, s_j) precomputed on a grid, and the pair sums built from them.
class CollisionOperator
{
public:
    CollisionOperator(const TruncatedKernel& tk, const SizeGrid& grid, unsigned threads = 1);

    const SizeGrid& grid() const noexcept { return grid_; }
    double kernel(std::size_t i, std::size_t j) const noexcept { return loss_[i * n_ + j]; }
    double r(std::size_t i) const noexcept { return r_[i]; }
    unsigned threads() const noexcept { return threads_; }

    void gain_loss(std::span<const double> f, std::span<double> gain, std::span<double> loss) const;
    /// gain - loss
    void rate(std::span<const double> f, std::span<double> out) const;

    /// Rate of number loss, dx^2 [sum_{i>j} K f_i f_j + sum_i K_ii f_i^2].
    double number_dissipation(std::span<const double> f) const;
    /// Rate of mass loss, dx^2 [2 sum_{i>j} s_j K f_i f_j + sum_i s_i K_ii f_i^2].
    double mass_dissipation(std::span<const double> f) const;
    /// d/dt of dx sum phi_i f_i, i.e. dx^2 [sum_{i>j} phi~(i, j) K f_i f_j - sum_i phi_i K_ii f_i^2]
    /// with phi~(i, j) = phi(s_i - s_j) - phi(s_i) - phi(s_j).
    double weak_rate(std::span<const double> f, std::span<const double> phi) const;
    /// dx sum_{s_i >= lower} r_n(s_i) f_i
    double r_moment(std::span<const double> f, double lower = 0.0) const;

private:
    SizeGrid grid_;
    std::size_t n_;
    unsigned threads_;
    std::vector<double> loss_;             // N x N, K_n(s_i, s_j)
    std::vector<double> gain_;             // row i holds K_n(s_{i+j+1}, s_j), j < N - i - 1
    std::vector<std::size_t> gain_offset_; // start of row i in gain_
    std::vector<double> r_;
};

/// gain - loss at `state`. Throws DomainError if the grid level differs from tk.level().
std::vector<double> rhs(const DensityState& state, const TruncatedKernel& tk);

struct StepResult
{
    DensityState state;
    double dt_used = 0.0;
    int halvings = 0;
    double clamped_number = 0.0; // dx sum of clipped negative parts
    double clamped_mass = 0.0;
    double collision_increment = 0.0; // integral of number_dissipation over the step
    double mass_before = 0.0;
    double mass_after = 0.0;
};

/// One step of size cfg.dt (or smaller after halvings). Throws NumericError when
/// positivity cannot be restored within SolverConfig::max_halvings.
StepResult step(const DensityState& state, const CollisionOperator& op, const SolverConfig& cfg);
StepResult step(const DensityState& state, const TruncatedKernel& tk, const SolverConfig& cfg);

struct Snapshot
{
    double tau = 0.0;
    DensityState state;
    MomentReport moments;
    double collision_integral = 0.0; // int_0^tau number_dissipation ds
};

struct RunStats
{
    std::size_t accepted_steps = 0;
    std::size_t halvings = 0;
    double min_dt = 0.0;
    double clamped_number = 0.0;
    double clamped_mass = 0.0;
    double max_step_mass_increase = 0.0; // max over accepted steps of M1(after) - M1(before)
};

struct Trajectory
{
    SizeGrid grid;
    SolverConfig config;
    std::string kernel;
    std::vector<Snapshot> snapshots;
    RunStats stats;
    bool has_collision_integral = true;
    bool has_step_stats = true;

    explicit Trajectory(SizeGrid g) : grid(g) {}

    const Snapshot& initial() const { return snapshots.front(); }
    double norm01_initial() const { return snapshots.front().moments.norm01; }
};

/// Integrates from f0 = init_density(initial, grid) up to cfg.t_end. Snapshots are
/// taken every cfg.output_every steps and at t_end. The collision integral is
/// integrated with the same scheme as the density, so M0 + C is conserved to rounding.
Trajectory run(const KernelSpec& spec, double n, const SizeGrid& grid, const DensityState& f0, const SolverConfig& cfg);
Trajectory run(const KernelSpec& spec, double n, const SizeGrid& grid, const InitialData& f0, const SolverConfig& cfg);

struct ResidualPoint
{
    double tau = 0.0;
    double value = 0.0;
};

/// R(tau) = dx sum phi_i (f_i(tau) - f_i(0)) - trapezoid_0^tau weak_rate(f(s), phi) ds over snapshots.
std::vector<ResidualPoint> weak_residual(const Trajectory& traj, const TruncatedKernel& tk, const TestFunction& phi);

/// f_i(tau) - f_i(0) - trapezoid_0^tau (gain_i - loss_i) ds over snapshots, for storage index i.
std::vector<ResidualPoint> mild_residual(const Trajectory& traj, const TruncatedKernel& tk, std::size_t node);

} // namespace rbk

#endif
