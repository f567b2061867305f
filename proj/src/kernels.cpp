#include "rbk/kernels.hpp"

#include "rbk/errors.hpp"
#include "rbk/grid_state.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rbk {

namespace {

constexpr double kCutoffSlack = 1e-12;
constexpr int kModulusSamples = 4096;
constexpr int kBoxSamples = 100;
constexpr double kMinDecayExponent = 1e-3;

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(trim(cell));
    return out;
}

std::vector<double> log_space(double lo, double hi, int count)
{
    std::vector<double> xs(static_cast<std::size_t>(count));
    const double ratio = std::log(hi / lo);
    for (int k = 0; k < count; ++k)
        xs[static_cast<std::size_t>(k)] = lo * std::exp(ratio * k / (count - 1));
    xs.front() = lo;
    xs.back() = hi;
    return xs;
}

// Index of the interval [axis[i], axis[i+1]] holding x, and the weight of axis[i+1].
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x)
{
    if (axis.size() == 1 || x <= axis.front())
        return {0, 0.0};
    if (x >= axis.back())
        return {axis.size() - 2, 1.0};
    const auto it = std::upper_bound(axis.begin(), axis.end(), x);
    const auto i = static_cast<std::size_t>(it - axis.begin()) - 1;
    return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
}

} // namespace

std::string to_string(KernelFamily family)
{
    switch (family) {
    case KernelFamily::constant: return "constant";
    case KernelFamily::power_product: return "power_product";
    case KernelFamily::exp_remainder: return "exp_remainder";
    case KernelFamily::custom_tabulated: return "custom_tabulated";
    case KernelFamily::additive: return "additive";
    case KernelFamily::multiplicative: return "multiplicative";
    case KernelFamily::custom: return "custom";
    }
    return "unknown";
}

std::optional<KernelFamily> kernel_family_from_string(const std::string& name)
{
    for (auto f : {KernelFamily::constant, KernelFamily::power_product, KernelFamily::exp_remainder,
                   KernelFamily::custom_tabulated, KernelFamily::additive, KernelFamily::multiplicative,
                   KernelFamily::custom}) {
        if (to_string(f) == name)
            return f;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// KernelTable

KernelTable::KernelTable(std::vector<double> s_axis, std::vector<double> rho_axis, std::vector<double> values)
    : s_axis_(std::move(s_axis)), rho_axis_(std::move(rho_axis)), values_(std::move(values))
{
    if (s_axis_.empty() || rho_axis_.empty() || values_.size() != s_axis_.size() * rho_axis_.size())
        throw DomainError("kernel table: axis sizes do not match the number of values");
    auto increasing = [](const std::vector<double>& v) {
        return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
    };
    if (!increasing(s_axis_) || !increasing(rho_axis_))
        throw DomainError("kernel table: node coordinates must be strictly increasing");
    max_value_ = *std::max_element(values_.begin(), values_.end());
}

KernelTable KernelTable::from_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open kernel table");

    std::string line;
    int lineno = 0;
    std::vector<std::string> errors;
    std::vector<std::tuple<double, double, double, int>> rows;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        const auto cells = split_csv(line);
        if (!header) {
            if (cells != std::vector<std::string>{"s", "rho", "K"})
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected header `s,rho,K`");
            header = true;
            continue;
        }
        if (cells.size() != 3) {
            errors.push_back(path + ":" + std::to_string(lineno) + ": expected 3 columns");
            continue;
        }
        try {
            rows.emplace_back(std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2]), lineno);
        } catch (const std::exception&) {
            errors.push_back(path + ":" + std::to_string(lineno) + ": not a number");
        }
    }
    if (!header)
        errors.push_back(path + ": missing header `s,rho,K`");
    if (!errors.empty())
        throw ConfigError(errors);

    std::vector<double> s_axis;
    std::vector<double> rho_axis;
    for (const auto& [s, rho, K, ln] : rows) {
        if (s_axis.empty() || s != s_axis.back())
            s_axis.push_back(s);
        if (s_axis.size() == 1)
            rho_axis.push_back(rho);
    }
    if (rows.size() != s_axis.size() * rho_axis.size())
        throw ConfigError(path + ": table does not cover the full tensor grid of node coordinates");

    std::vector<double> values;
    values.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& [s, rho, K, ln] = rows[k];
        const auto i = k / rho_axis.size();
        const auto j = k % rho_axis.size();
        if (s != s_axis[i] || rho != rho_axis[j])
            errors.push_back(path + ":" + std::to_string(ln) + ": rows must list rho within s in increasing order");
        if (!(s > 0.0) || !(rho > 0.0))
            errors.push_back(path + ":" + std::to_string(ln) + ": node coordinates must be positive");
        if (!std::isfinite(K) || K < 0.0)
            errors.push_back(path + ":" + std::to_string(ln) + ": K must be finite and nonnegative");
        values.push_back(K);
    }
    if (!errors.empty())
        throw ConfigError(errors);
    try {
        return KernelTable(std::move(s_axis), std::move(rho_axis), std::move(values));
    } catch (const DomainError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

double KernelTable::operator()(double s, double rho) const
{
    const auto [i, wi] = locate(s_axis_, s);
    const auto [j, wj] = locate(rho_axis_, rho);
    const std::size_t m = rho_axis_.size();
    const auto at = [&](std::size_t a, std::size_t b) { return values_[a * m + b]; };
    if (s_axis_.size() == 1 && m == 1)
        return values_[0];
    if (s_axis_.size() == 1)
        return (1 - wj) * at(0, j) + wj * at(0, j + 1);
    if (m == 1)
        return (1 - wi) * at(i, 0) + wi * at(i + 1, 0);
    return (1 - wi) * ((1 - wj) * at(i, j) + wj * at(i, j + 1)) + wi * ((1 - wj) * at(i + 1, j) + wj * at(i + 1, j + 1));
}

// ---------------------------------------------------------------------------
// KernelSpec

KernelSpec KernelSpec::constant(double c)
{
    KernelSpec k;
    k.family_ = KernelFamily::constant;
    k.params_.c = c;
    k.params_.A = 1.0;
    const double rc = std::sqrt(c);
    k.r_ = [rc](double) { return rc; };
    k.alpha_ = [](double, double) { return 0.0; };
    return k;
}

KernelSpec KernelSpec::power_product(double beta, double c)
{
    KernelSpec k;
    k.family_ = KernelFamily::power_product;
    k.params_.c = c;
    k.params_.beta = beta;
    k.params_.A = 1.0;
    const double rc = std::sqrt(c);
    k.r_ = [rc, beta](double s) { return rc * std::pow(s, beta); };
    k.alpha_ = [](double, double) { return 0.0; };
    return k;
}

KernelSpec KernelSpec::exp_remainder(double beta)
{
    KernelSpec k;
    k.family_ = KernelFamily::exp_remainder;
    k.params_.beta = beta;
    k.params_.A = std::exp(-2.0);
    k.r_ = [beta](double s) { return std::pow(s, beta); };
    k.alpha_ = [](double s, double rho) { return std::exp(-s - rho); };
    return k;
}

KernelSpec KernelSpec::additive(double c)
{
    KernelSpec k;
    k.family_ = KernelFamily::additive;
    k.params_.c = c;
    k.params_.A = 1.0;
    k.r_ = [](double) { return 0.0; };
    k.alpha_ = [c](double s, double rho) { return c * (s + rho); };
    return k;
}

KernelSpec KernelSpec::multiplicative(double c)
{
    KernelSpec k;
    k.family_ = KernelFamily::multiplicative;
    k.params_.c = c;
    k.params_.A = 1.0;
    const double rc = std::sqrt(c);
    k.r_ = [rc](double s) { return rc * s; };
    k.alpha_ = [](double, double) { return 0.0; };
    return k;
}

KernelSpec KernelSpec::tabulated(KernelTable table, double A, double r_c, double r_beta, std::string path)
{
    KernelSpec k;
    k.family_ = KernelFamily::custom_tabulated;
    k.params_.A = A;
    k.params_.r_c = r_c;
    k.params_.r_beta = r_beta;
    k.params_.path = std::move(path);
    k.table_ = std::make_shared<const KernelTable>(std::move(table));
    const double rc = std::sqrt(r_c);
    k.r_ = [rc, r_beta](double s) { return rc * std::pow(s, r_beta); };
    auto tab = k.table_;
    auto r = k.r_;
    k.alpha_ = [tab, r](double s, double rho) { return (*tab)(s, rho) - r(s) * r(rho); };
    return k;
}

KernelSpec KernelSpec::custom(std::string name, RateFn r, PairFn alpha, double A, std::function<double(double)> rate_bound)
{
    KernelSpec k;
    k.family_ = KernelFamily::custom;
    k.name_ = std::move(name);
    k.params_.A = A;
    k.r_ = std::move(r);
    k.alpha_ = std::move(alpha);
    k.rate_bound_ = std::move(rate_bound);
    return k;
}

double KernelSpec::operator()(double s, double rho) const
{
    const double lo = std::min(s, rho);
    const double hi = std::max(s, rho);
    switch (family_) {
    case KernelFamily::constant: return params_.c;
    case KernelFamily::custom_tabulated: return (*table_)(lo, hi);
    default: return r_(lo) * r_(hi) + alpha_(lo, hi);
    }
}

double KernelSpec::r(double s) const { return r_(s); }

double KernelSpec::alpha(double s, double rho) const { return alpha_(s, rho); }

std::string KernelSpec::describe() const
{
    std::ostringstream os;
    os.precision(17);
    switch (family_) {
    case KernelFamily::constant: os << "constant(c=" << params_.c << ")"; break;
    case KernelFamily::power_product: os << "power_product(beta=" << params_.beta << ", c=" << params_.c << ")"; break;
    case KernelFamily::exp_remainder: os << "exp_remainder(beta=" << params_.beta << ")"; break;
    case KernelFamily::additive: os << "additive(c=" << params_.c << ")"; break;
    case KernelFamily::multiplicative: os << "multiplicative(c=" << params_.c << ")"; break;
    case KernelFamily::custom_tabulated:
        os << "custom_tabulated(path=" << params_.path << ", A=" << params_.A << ", r_c=" << params_.r_c
           << ", r_beta=" << params_.r_beta << ")";
        break;
    case KernelFamily::custom: os << "custom(" << name_ << ", A=" << params_.A << ")"; break;
    }
    return os.str();
}

std::optional<double> KernelSpec::sup_on_box(double smax) const
{
    switch (family_) {
    case KernelFamily::constant: return params_.c;
    case KernelFamily::power_product: return params_.c * std::pow(smax, 2 * params_.beta);
    case KernelFamily::exp_remainder: return std::pow(smax, 2 * params_.beta) + 1.0;
    case KernelFamily::additive: return 2 * params_.c * smax;
    case KernelFamily::multiplicative: return params_.c * smax * smax;
    case KernelFamily::custom_tabulated: return table_->max_value();
    case KernelFamily::custom:
        if (rate_bound_)
            return rate_bound_(smax);
        return std::nullopt;
    }
    return std::nullopt;
}

double eval_kernel(const KernelSpec& spec, double s, double rho)
{
    if (!(s > 0.0) || !(rho > 0.0))
        throw DomainError("eval_kernel: sizes must be positive");
    return spec(s, rho);
}

// ---------------------------------------------------------------------------
// Truncation and bounds

TruncatedKernel::TruncatedKernel(KernelSpec base, double level)
    : base_(std::move(base)), level_(level), cut_(level * (1.0 + kCutoffSlack))
{
}

double TruncatedKernel::operator()(double s, double rho) const
{
    if (s > cut_ || rho > cut_)
        return 0.0;
    return base_(s, rho);
}

TruncatedKernel truncate(const KernelSpec& spec, double n)
{
    if (!(n >= 1.0))
        throw DomainError("truncate: truncation level must satisfy n >= 1");
    return TruncatedKernel(spec, n);
}

KernelBounds kernel_bounds(const TruncatedKernel& tk, double a, const SizeGrid& grid)
{
    const double n = tk.level();
    if (!(a > 1.0) || a > n * (1.0 + kCutoffSlack))
        throw DomainError("kernel_bounds: threshold must satisfy 1 < a <= n");

    KernelBounds b;
    b.a = a;
    const std::size_t m = grid.count_at_most(a);
    const std::size_t N = grid.size();

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double k = tk(grid.node(i), grid.node(j));
            if (k > b.kbar) {
                b.kbar = k;
                b.kbar_at = {grid.node(i), grid.node(j)};
            }
        }
    }

    const double a_lo = a * (1.0 - kCutoffSlack);
    for (std::size_t j = 0; j < N; ++j) {
        const double s = grid.node(j);
        if (s < a_lo)
            continue;
        double omega = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double ratio = tk(grid.node(i), s) / s;
            omega = std::max(omega, ratio);
            if (ratio > b.theta) {
                b.theta = ratio;
                b.theta_at = {grid.node(i), s};
            }
        }
        b.omega_table.emplace_back(s, omega);
    }

    const auto& base = tk.base();
    const auto& p = base.params();
    if (base.family() == KernelFamily::constant) {
        b.analytic_kbar = p.c;
        b.analytic_theta = p.c / a;
    } else if (base.family() == KernelFamily::power_product && p.beta < 1.0) {
        b.analytic_kbar = p.c * std::pow(a, 2 * p.beta);
        b.analytic_theta = p.c * std::pow(a, 2 * p.beta - 1.0);
    }
    return b;
}

std::vector<double> subquadratic_modulus(const KernelSpec& spec, double R, const std::vector<double>& rho_samples)
{
    if (!(R >= 1.0))
        throw DomainError("subquadratic_modulus: R must satisfy R >= 1");
    std::vector<double> out;
    out.reserve(rho_samples.size());
    for (double rho : rho_samples) {
        if (!(rho > 0.0))
            throw DomainError("subquadratic_modulus: samples must be positive");
        double w = 0.0;
        for (int k = 1; k <= kModulusSamples; ++k) {
            const double s = (k == kModulusSamples) ? R : R * k / kModulusSamples;
            w = std::max(w, spec(s, rho) / rho);
        }
        out.push_back(w);
    }
    return out;
}

bool AdmissibilityReport::all_pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& c) { return c.pass; });
}

AdmissibilityReport validate_admissibility(const KernelSpec& spec, std::pair<double, double> sample_box, double tol)
{
    const auto [lo, hi] = sample_box;
    if (!(lo > 0.0) || !(hi > lo))
        throw DomainError("validate_admissibility: sample box must satisfy 0 < lo < hi");

    AdmissibilityReport report;
    report.kernel = spec.describe();
    report.box_lo = lo;
    report.box_hi = hi;
    const auto xs = log_space(lo, hi, kBoxSamples);

    HypothesisCheck nonneg{"nonnegativity", true, 0.0, {xs[0], xs[0]}, ""};
    HypothesisCheck symmetry{"symmetry", true, 0.0, {xs[0], xs[0]}, ""};
    double min_value = std::numeric_limits<double>::infinity();
    for (double s : xs) {
        for (double rho : xs) {
            const double v = std::min({spec(s, rho), spec.r(s), spec.alpha(s, rho)});
            if (v < min_value) {
                min_value = v;
                nonneg.witness = {s, rho};
            }
            const double a1 = spec.alpha(s, rho);
            const double a2 = spec.alpha(rho, s);
            const double asym = std::max(std::abs(a1 - a2), std::abs(spec(s, rho) - spec(rho, s)));
            if (asym > symmetry.worst) {
                symmetry.worst = asym;
                symmetry.witness = {s, rho};
            }
            if (asym > tol * std::max(1.0, std::abs(a1)))
                symmetry.pass = false;
        }
    }
    nonneg.worst = min_value;
    nonneg.pass = min_value >= -tol;
    nonneg.detail = "min over sampled pairs of min{K, r, alpha}";
    symmetry.detail = "max |alpha(s,p) - alpha(p,s)|";
    report.checks.push_back(nonneg);
    report.checks.push_back(symmetry);

    HypothesisCheck domination{"domination", true, 0.0, {1.0, 1.0}, ""};
    if (hi < 1.0) {
        domination.detail = "sample box does not meet [1, inf)^2";
    } else {
        const double A = spec.domination_constant();
        const auto ys = log_space(std::max(1.0, lo), hi, kBoxSamples);
        double worst_score = -std::numeric_limits<double>::infinity();
        for (double s : ys) {
            for (double rho : ys) {
                const double alpha = spec.alpha(s, rho);
                const double bound = A * spec.r(s) * spec.r(rho);
                const bool violated = alpha > bound + tol * std::max(1.0, bound);
                double score;
                if (bound > 0.0)
                    score = alpha / bound;
                else
                    score = violated ? std::numeric_limits<double>::infinity() : 0.0;
                if (violated)
                    domination.pass = false;
                if (score > worst_score) {
                    worst_score = score;
                    domination.witness = {s, rho};
                }
            }
        }
        domination.worst = worst_score;
        std::ostringstream os;
        os.precision(17);
        os << "max alpha / (A r r) on sampled [1, inf)^2 with A = " << A;
        domination.detail = os.str();
    }
    report.checks.push_back(domination);

    HypothesisCheck decay{"subquadratic_decay", true, 0.0, {1.0, hi}, ""};
    std::ostringstream detail;
    detail.precision(6);
    bool have_slope = false;
    for (double R : {1.0, 10.0}) {
        if (R > hi / 10.0)
            continue;
        const double from = std::max(hi / 10.0, 10.0 * R);
        if (from >= hi)
            continue;
        const auto rhos = log_space(from, hi, 20);
        const auto omega = subquadratic_modulus(spec, R, rhos);
        const double omax = *std::max_element(omega.begin(), omega.end());
        if (omax <= tol) {
            detail << "R=" << R << ": omega vanishes; ";
            continue;
        }
        bool monotone = true;
        for (std::size_t k = 1; k < omega.size(); ++k)
            monotone = monotone && omega[k] <= omega[k - 1] * (1.0 + 1e-9) + tol;
        // least-squares slope of log omega against log p
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double cnt = static_cast<double>(rhos.size());
        bool positive = true;
        for (std::size_t k = 0; k < rhos.size(); ++k) {
            if (!(omega[k] > 0.0)) {
                positive = false;
                break;
            }
            const double x = std::log(rhos[k]);
            const double y = std::log(omega[k]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double slope = positive ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
        const bool ok = monotone && positive && slope <= -kMinDecayExponent;
        detail << "R=" << R << ": log-log slope " << slope << (monotone ? "" : " (not monotone)") << "; ";
        // witness: the first failing R, else the slowest decay
        if (decay.pass && (!ok || !have_slope || slope > decay.worst)) {
            decay.worst = slope;
            decay.witness = {R, hi};
            have_slope = true;
        }
        if (!ok)
            decay.pass = false;
    }
    decay.detail = detail.str() + "requires omega_R(p) non-increasing with slope <= -1e-3 over the top decade";
    report.checks.push_back(decay);
    return report;
}

} // namespace rbk
