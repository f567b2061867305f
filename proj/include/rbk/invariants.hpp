#ifndef RBK_INVARIANTS_HPP
#define RBK_INVARIANTS_HPP

// A priori bounds of the truncated problem as pass/fail checks on a Trajectory.
// Constants are computed from the trajectory and kernel, never hard-coded:
//   G0 = ||f_0||_{0,1},  C1 = M1(0),  C3 = 2 max{G0, M1(0)},  K-bar and Theta(a)
//   from kernel_bounds, A from the kernel spec.

#include "rbk/solver.hpp"

#include <map>
#include <string>
#include <vector>

namespace rbk {

struct BoundReport
{
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;    // rhs - lhs at the witness
    double tolerance = 0.0; // pass iff margin >= -tolerance
    bool pass = true;
    bool qualitative = false; // not a hard check; reports an empirical ratio
    double witness_tau = 0.0;
    std::string witness;
    std::map<std::string, double> extras;
};

/// M1(tau_k) <= M1(0) (1 + 1e-12) and M1 non-increasing stepwise with slack 1e-12 M1(0).
BoundReport check_mass_monotone(const Trajectory& traj);

/// M0(tau) + C(tau) = M0(0), C the cumulative collision integral.
/// Throws DomainError if the trajectory carries no collision integral.
BoundReport check_number_identity(const Trajectory& traj);

/// (i)   int_0^tau (int_M^inf r_n f)^2 ds <= M1(0) / M
/// (ii)  M0(tau) <= M0(0) <= G0
/// (iii) int_0^tau (int_0^inf r_n f)^2 ds <= 2 M0(0)
/// Throws DomainError unless 0 < M <= n.
std::vector<BoundReport> check_moment_bounds(const Trajectory& traj, const TruncatedKernel& tk, double M);

/// tail(R)(tau) <= G0 / R for every snapshot and every R. Throws DomainError for R < 1.
BoundReport check_tail_bound(const Trajectory& traj, const std::vector<double>& R_list);

/// theta_{a,delta}(tau) <= [theta_{a,delta}(0) + C1/a] exp((K-bar + Theta(a)) C3 tau).
/// The linear form [..] (K-bar + Theta(a)) C3 T is reported in extras["linear_form_rhs"].
BoundReport check_ui_bound(const Trajectory& traj, const TruncatedKernel& tk, double a, double delta);

/// For all snapshot pairs s < tau:
///   dx sum_{s_i <= a} |f_i(tau) - f_i(s)| <= (K-bar + 5 Theta(a)) G0^2 (tau - s) + (1 + A) M1(0) / a
BoundReport check_equicontinuity(const Trajectory& traj, const TruncatedKernel& tk, double a);

/// |R(tau)| <= rel_tol G0^2 tau for the weak residual of phi.
BoundReport check_weak_residual(const Trajectory& traj, const TruncatedKernel& tk, const TestFunction& phi,
                                double rel_tol = 1e-4);

/// Largest |mild residual| over nodes and snapshots, relative to max f. Qualitative.
BoundReport check_mild_residual(const Trajectory& traj, const TruncatedKernel& tk);

bool all_hard_checks_pass(const std::vector<BoundReport>& reports);

} // namespace rbk

#endif
