#ifndef RBK_GRID_STATE_HPP
#define RBK_GRID_STATE_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rbk {

/// Node grid s_k = k dx, k = 1..N, covering (0, n] with n = N dx.
///
/// Sizes are addressed by integer node index everywhere in the solver, so the
/// RBK size arithmetic s_i + s_j = s_{i+j}, |s_i - s_j| = s_{|i-j|} is exact.
/// Storage index k (0-based) holds node k + 1.
class SizeGrid
{
public:
    SizeGrid(double dx, std::size_t nodes);

    double dx() const noexcept { return dx_; }
    std::size_t size() const noexcept { return nodes_; }
    double level() const noexcept { return dx_ * static_cast<double>(nodes_); }

    /// Size at storage index k, i.e. (k + 1) dx.
    double node(std::size_t k) const noexcept { return dx_ * static_cast<double>(k + 1); }

    /// Storage index whose node equals s (within 1e-9 dx), or -1.
    long index_of(double s) const noexcept;

    /// Number of leading nodes with s_k <= bound (bound compared with a relative slack of 1e-12).
    std::size_t count_at_most(double bound) const noexcept;

    bool operator==(const SizeGrid&) const = default;

private:
    double dx_;
    std::size_t nodes_;
};

/// Throws ConfigError unless n / dx is an integer >= 1 within 1e-9 relative and n >= 1.
SizeGrid make_grid(double n, double dx);

enum class InitialFamily { exponential, gamma, bump, tabulated };

std::string to_string(InitialFamily family);

/// Initial datum f_0.
///   exponential: c exp(-s / theta)
///   gamma:       c s^(k-1) exp(-s / theta) / (Gamma(k) theta^k)   (total number c)
///   bump:        height exp(1 - 1 / (1 - u^2)) for |u| < 1, u = (s - center) / width
///   tabulated:   node values read from a CSV with header `s,f`
struct InitialData
{
    InitialFamily family = InitialFamily::exponential;
    double theta = 1.0;
    double c = 1.0;
    double k = 2.0;
    double center = 1.0;
    double width = 1.0;
    double height = 1.0;
    std::string path;
    std::vector<std::pair<double, double>> table;

    static InitialData exponential(double theta, double c);
    static InitialData gamma(double k, double theta, double c);
    static InitialData bump(double center, double width, double height);
    /// Reads `s,f` rows; s strictly increasing, f >= 0. Throws ConfigError otherwise.
    static InitialData tabulated_csv(const std::string& path);

    /// f_0(s). For tabulated data, the value at the matching node (0 if absent).
    double operator()(double s) const;
    /// Throws DomainError on negative or non-finite parameters.
    void validate() const;
    std::string describe() const;
};

struct DensityState
{
    SizeGrid grid;
    std::vector<double> f; // number density per unit size at each node
    double tau = 0.0;

    explicit DensityState(SizeGrid g, double t = 0.0) : grid(g), f(g.size(), 0.0), tau(t) {}
    DensityState(SizeGrid g, std::vector<double> values, double t);
};

/// Samples f_0 at the nodes; everything above the grid level is cut off.
/// Tabulated data must sit on grid nodes exactly.
DensityState init_density(const InitialData& data, const SizeGrid& grid);

struct MomentReport
{
    double tau = 0.0;
    double M0 = 0.0;
    double M1 = 0.0;
    double norm01 = 0.0;
    std::vector<std::pair<double, double>> tail; // (R, mass of number density above R)
};

/// Rectangle-rule moments with weight dx; tail(R) sums nodes with s > R.
MomentReport moments(const DensityState& state, std::span<const double> tail_thresholds = {});

double tail_mass(const DensityState& state, double R);

struct UiEstimate
{
    double value = 0.0;
    std::vector<std::size_t> cells; // storage indices, heaviest first; the last may be fractional
    double fractional_weight = 1.0; // fraction of the last cell taken
};

/// Exact supremum over grid-resolvable subsets A of [0, a] with |A| <= delta
/// of the mass of f on A. Throws DomainError unless 1 < a <= n and delta > 0.
UiEstimate ui_functional(const DensityState& state, double a, double delta);

} // namespace rbk

#endif
