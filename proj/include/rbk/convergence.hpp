#ifndef RBK_CONVERGENCE_HPP
#define RBK_CONVERGENCE_HPP

#include "rbk/solver.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rbk {

struct WeakDistance
{
    double n1 = 0.0;
    double n2 = 0.0;
    std::string psi;
    double D = 0.0;         // max over common snapshots of |dx sum psi (f^n1 - f^n2)|
    double tail_bound = 0.0; // ||psi||_inf * max_tau tail(min(n1, n2)) of the larger level
};

enum class OrderStatus { ok, exact, inconclusive };

std::string to_string(OrderStatus status);

struct ObservedOrder
{
    std::string quantity;
    double p_hat = 0.0;
    OrderStatus status = OrderStatus::inconclusive;
    std::vector<double> errors; // successive differences used for the estimate
};

struct SweepReport
{
    std::vector<double> levels;
    std::vector<WeakDistance> distances;
    std::vector<ObservedOrder> orders;
    /// Per psi: whether D(n_k, n_{k+1}) is non-increasing in k. Deviations are logged, not failed.
    std::vector<std::pair<std::string, bool>> monotone;
};

struct TruncationSweepSetup
{
    KernelSpec kernel;
    InitialData initial;
    double dx = 0.1;
    SolverConfig solver;
    std::vector<double> levels;
    std::vector<TestFunction> psi;
};

/// Runs every truncation level on [0, T] and computes D for consecutive level pairs.
/// Throws ConfigError for non-increasing levels or a dx that does not divide every level.
SweepReport truncation_sweep(const TruncationSweepSetup& setup);

/// D(n, m, psi) between two trajectories with a common dx and output cadence.
double weak_distance(const Trajectory& a, const Trajectory& b, const TestFunction& psi);

struct ResolutionSweepSetup
{
    KernelSpec kernel;
    InitialData initial;
    double n = 10.0;
    double dx = 0.1;
    SolverConfig solver;
    int dx_levels = 3;
    int dt_levels = 3;
    double probe_lo = 0.0;
    double probe_hi = 1.0;
    /// Optional exact M0(T) as a function of (M0(0), T); used for an error-vs-exact order in dx.
    std::function<double(double, double)> exact_M0;
};

/// Observed orders from Richardson triples under dt halving (fixed dx) and dx halving (fixed dt).
SweepReport resolution_sweep(const ResolutionSweepSetup& setup);

/// p_hat = log2(e1 / e2) with status; e are successive differences (or errors) at halved resolution.
ObservedOrder observed_order(std::string quantity, const std::vector<double>& errors, double scale);

} // namespace rbk

#endif
