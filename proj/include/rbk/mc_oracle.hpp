#ifndef RBK_MC_ORACLE_HPP
#define RBK_MC_ORACLE_HPP

// Marcus-Lushnikov particle system with the RBK collision rule: a pair of sizes
// (x, y) collides at rate K(x, y) / V and is replaced by a single particle of size
// |x - y|, or by nothing when x = y.

#include "rbk/grid_state.hpp"
#include "rbk/kernels.hpp"
#include "rbk/solver.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rbk {

/// Stream seed for (seed, replica): splitmix64(seed ^ splitmix64(replica + 1)).
std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica);

struct ParticleSystem
{
    /// Sizes in units of `unit`. On a lattice (unit = dx) they are integer-valued,
    /// so size differences and equality tests are exact.
    std::vector<double> sizes;
    double unit = 1.0;
    bool lattice = false;
    double volume = 1.0;
    double t = 0.0;
    std::uint64_t seed = 0;

    double physical_size(std::size_t i) const { return sizes[i] * unit; }
    std::size_t count() const noexcept { return sizes.size(); }
    double M0() const { return static_cast<double>(sizes.size()) / volume; }
    double M1() const;
};

/// i.i.d. sizes from the normalized density of `family` (inverse CDF for exponential,
/// rejection for gamma and bump, node weights for tabulated). volume <= 0 means
/// volume = count. Throws DomainError for count < 2 or unnormalizable parameters.
ParticleSystem sample_initial(const InitialData& family, std::size_t count, double volume, std::uint64_t seed);

/// Sizes drawn on grid nodes with probabilities proportional to f_0(s_k) dx
/// (annihilation active, matching the solver's diagonal convention).
ParticleSystem sample_initial_on_grid(const InitialData& family, const SizeGrid& grid, std::size_t count,
                                      double volume, std::uint64_t seed);

struct CollisionEvent
{
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    std::optional<double> product; // physical size, empty on annihilation
};

struct ReplicaCheckpoint
{
    double t = 0.0;
    std::size_t count = 0;
    double M0 = 0.0;
    double M1 = 0.0;
};

struct ReplicaResult
{
    std::vector<ReplicaCheckpoint> checkpoints;
    std::size_t events = 0;
    std::size_t proposals = 0;
    bool ended_early = false; // fewer than two particles left before the last checkpoint
};

/// Exact stochastic simulation up to t_end. The event clock runs on the majorant
/// rate Kmax C(m,2)/V and proposals are accepted with probability K / Kmax (thinning),
/// which samples the same process as the direct method; for constant kernels every
/// proposal is accepted. Kmax is fixed from the initial sizes since sizes never grow.
ReplicaResult simulate(const KernelSpec& kernel, ParticleSystem& ps, double t_end, const std::vector<double>& checkpoints,
                       const std::function<void(const CollisionEvent&)>& on_event = {});

struct MomentStats
{
    double mean = 0.0;
    double stderr_ = 0.0;
};

struct MCCheckpoint
{
    double t = 0.0;
    MomentStats count;
    MomentStats M0;
    MomentStats M1;
};

struct MCSetup
{
    KernelSpec kernel = KernelSpec::constant(1.0);
    InitialData initial;
    std::optional<SizeGrid> grid; // lattice mode when set
    std::size_t particles = 1000;
    int replicas = 4;
    std::uint64_t seed = 1;
    double volume = 0.0; // <= 0: particles
    std::vector<double> checkpoints;
    unsigned threads = 1;
};

struct MCReport
{
    double volume = 0.0;
    std::vector<MCCheckpoint> checkpoints;
    std::vector<ReplicaResult> replicas; // in replica order
    std::size_t ended_early = 0;
};

/// Runs independent replicas (in parallel when threads > 1) and folds them in replica order.
MCReport run_replicas(const MCSetup& setup);

struct ZRow
{
    double t = 0.0;
    std::string moment;
    double pde = 0.0;
    double mc_mean = 0.0;
    double stderr_ = 0.0;
    double z = 0.0;
};

/// z = (pde - mc_mean) / stderr for M0 and M1 at every MC checkpoint.
/// Throws DomainError if a checkpoint has no matching snapshot.
std::vector<ZRow> compare(const Trajectory& traj, const MCReport& mc);

} // namespace rbk

#endif
