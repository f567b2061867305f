#ifndef RBK_KERNELS_HPP
#define RBK_KERNELS_HPP

// Coagulation kernels of product-plus-remainder type,
//
//     K(s, p) = r(s) r(p) + alpha(s, p),
//
// with alpha symmetric, nonnegative and dominated by A r(s) r(p) on [1, inf)^2,
// their truncations K_n = K 1[s <= n] 1[p <= n], and the sampled suprema
// (K-bar, Theta(a), omega_R) that control the a priori estimates.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rbk {

class SizeGrid;

enum class KernelFamily
{
    constant,         // K = c
    power_product,    // r(s) = sqrt(c) s^beta, alpha = 0
    exp_remainder,    // r(s) = s^beta, alpha = exp(-s - p), A = e^-2
    custom_tabulated, // K read from a node table, optional r(s) = sqrt(r_c) s^r_beta
    additive,         // K = c (s + p); not strictly subquadratic
    multiplicative,   // K = c s p; not strictly subquadratic
    custom            // arbitrary r / alpha callables
};

std::string to_string(KernelFamily family);
std::optional<KernelFamily> kernel_family_from_string(const std::string& name);

/// K tabulated on a tensor grid of node coordinates. Evaluation is bilinear
/// between nodes (exact on nodes) and constant beyond the outermost nodes.
class KernelTable
{
public:
    KernelTable(std::vector<double> s_axis, std::vector<double> rho_axis, std::vector<double> values);

    /// Reads a CSV with header `s,rho,K`. Coordinates must be strictly increasing
    /// along each axis and the table must cover the full tensor grid.
    static KernelTable from_csv(const std::string& path);

    double operator()(double s, double rho) const;
    double max_value() const noexcept { return max_value_; }
    const std::vector<double>& s_axis() const noexcept { return s_axis_; }
    const std::vector<double>& rho_axis() const noexcept { return rho_axis_; }

private:
    std::vector<double> s_axis_;
    std::vector<double> rho_axis_;
    std::vector<double> values_; // row-major, s outer
    double max_value_ = 0.0;
};

/// Parameters echoed into reports. Only the fields relevant to the family are meaningful.
struct KernelParams
{
    double c = 1.0;
    double beta = 0.0;
    double A = 1.0;
    double r_c = 0.0;
    double r_beta = 0.0;
    std::string path;

    bool operator==(const KernelParams&) const = default;
};

class KernelSpec
{
public:
    using RateFn = std::function<double(double)>;
    using PairFn = std::function<double(double, double)>;

    static KernelSpec constant(double c);
    static KernelSpec power_product(double beta, double c);
    static KernelSpec exp_remainder(double beta);
    static KernelSpec additive(double c);
    static KernelSpec multiplicative(double c);
    static KernelSpec tabulated(KernelTable table, double A, double r_c = 0.0, double r_beta = 0.0,
                                std::string path = {});
    /// `rate_bound(smax)` must return an upper bound of K on (0, smax]^2 if the
    /// kernel is to be used by the particle simulation.
    static KernelSpec custom(std::string name, RateFn r, PairFn alpha, double A,
                             std::function<double(double)> rate_bound = {});

    /// K(s, p), evaluated on the canonical pair (min, max) so that symmetry is exact.
    double operator()(double s, double rho) const;

    double r(double s) const;
    /// Raw alpha(s, p) as supplied; not canonicalized, so asymmetric inputs stay visible.
    double alpha(double s, double rho) const;

    KernelFamily family() const noexcept { return family_; }
    const KernelParams& params() const noexcept { return params_; }
    double domination_constant() const noexcept { return params_.A; }
    std::string describe() const;

    /// Upper bound of K on (0, smax]^2; empty when no bound is known.
    std::optional<double> sup_on_box(double smax) const;

private:
    KernelSpec() = default;

    KernelFamily family_ = KernelFamily::constant;
    KernelParams params_;
    std::string name_;
    RateFn r_;
    PairFn alpha_;
    std::shared_ptr<const KernelTable> table_;
    std::function<double(double)> rate_bound_;
};

/// K(s, p) with domain checking. Throws DomainError for nonpositive sizes.
double eval_kernel(const KernelSpec& spec, double s, double rho);

class TruncatedKernel
{
public:
    TruncatedKernel(KernelSpec base, double level);

    /// Sharp cut-off indicator of [0, n].
    double cutoff(double s) const noexcept { return s <= cut_ ? 1.0 : 0.0; }
    double operator()(double s, double rho) const;
    double r(double s) const { return base_.r(s) * cutoff(s); }
    double alpha(double s, double rho) const { return base_.alpha(s, rho) * cutoff(s) * cutoff(rho); }

    double level() const noexcept { return level_; }
    const KernelSpec& base() const noexcept { return base_; }

private:
    KernelSpec base_;
    double level_;
    double cut_; // level with a relative slack so the node at n is never lost to rounding
};

/// Throws DomainError for n < 1.
TruncatedKernel truncate(const KernelSpec& spec, double n);

struct KernelBounds
{
    double a = 0.0;
    double kbar = 0.0;  // max of K_n over nodes in (0, a]^2
    double theta = 0.0; // max over nodes s >= a, p <= a of K_n(p, s) / s
    std::pair<double, double> kbar_at{0.0, 0.0};
    std::pair<double, double> theta_at{0.0, 0.0};
    std::optional<double> analytic_kbar;  // closed form, monotone built-ins only
    std::optional<double> analytic_theta;
    std::vector<std::pair<double, double>> omega_table; // (p, omega_a(p)) over grid nodes p >= a
};

/// Discrete suprema over grid nodes. Since K is continuous, the open-box suprema of
/// the estimates are realized on the closed node set including s = a.
/// Throws DomainError unless 1 < a <= n.
KernelBounds kernel_bounds(const TruncatedKernel& tk, double a, const SizeGrid& grid);

/// omega_R(p) = max over a dense sample of (0, R] of K(s, p) / p for each p in `rho_samples`.
/// Throws DomainError for R < 1 or nonpositive samples.
std::vector<double> subquadratic_modulus(const KernelSpec& spec, double R, const std::vector<double>& rho_samples);

struct HypothesisCheck
{
    std::string name;
    bool pass = true;
    double worst = 0.0; // hypothesis-specific violation measure at the witness
    std::pair<double, double> witness{0.0, 0.0};
    std::string detail;
};

struct AdmissibilityReport
{
    std::string kernel;
    double box_lo = 0.0;
    double box_hi = 0.0;
    std::vector<HypothesisCheck> checks; // nonnegativity, symmetry, domination, subquadratic_decay

    bool all_pass() const;
};

/// Samples the kernel hypotheses on a log-spaced box. Never throws on a failing
/// hypothesis; the report carries failures with witnesses.
AdmissibilityReport validate_admissibility(const KernelSpec& spec, std::pair<double, double> sample_box, double tol);

} // namespace rbk

#endif
