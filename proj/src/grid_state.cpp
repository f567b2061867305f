#include "rbk/grid_state.hpp"

#include "number_format.hpp"

#include "rbk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rbk {

namespace {

constexpr double kSlack = 1e-12;

std::string num(double v)
{
    return detail::shortest(v);
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    return s.substr(first, last - first + 1);
}

} // namespace

SizeGrid::SizeGrid(double dx, std::size_t nodes) : dx_(dx), nodes_(nodes)
{
    if (!(dx > 0.0) || nodes == 0)
        throw DomainError("SizeGrid: dx must be positive and the grid nonempty");
}

long SizeGrid::index_of(double s) const noexcept
{
    const long k = std::lround(s / dx_) - 1;
    if (k < 0 || static_cast<std::size_t>(k) >= nodes_)
        return -1;
    if (std::abs(node(static_cast<std::size_t>(k)) - s) > 1e-9 * dx_)
        return -1;
    return k;
}

std::size_t SizeGrid::count_at_most(double bound) const noexcept
{
    const double b = bound * (1.0 + kSlack);
    if (!(b >= dx_))
        return 0;
    auto m = static_cast<std::size_t>(std::min(std::floor(b / dx_), static_cast<double>(nodes_)));
    while (m < nodes_ && node(m) <= b)
        ++m;
    while (m > 0 && node(m - 1) > b)
        --m;
    return m;
}

SizeGrid make_grid(double n, double dx)
{
    if (!(dx > 0.0) || !std::isfinite(dx))
        throw ConfigError("grid: dx = " + num(dx) + " must be positive");
    if (!(n >= 1.0) || !std::isfinite(n))
        throw ConfigError("grid: truncation level n = " + num(n) + " must satisfy n >= 1");
    const double ratio = n / dx;
    const double N = std::round(ratio);
    if (N < 1.0 || std::abs(ratio - N) > 1e-9 * ratio)
        throw ConfigError("grid: dx = " + num(dx) + " does not divide n = " + num(n) + " (n/dx = " + num(ratio) +
                          " is not an integer)");
    return SizeGrid(dx, static_cast<std::size_t>(N));
}

std::string to_string(InitialFamily family)
{
    switch (family) {
    case InitialFamily::exponential: return "exponential";
    case InitialFamily::gamma: return "gamma";
    case InitialFamily::bump: return "bump";
    case InitialFamily::tabulated: return "tabulated";
    }
    return "unknown";
}

InitialData InitialData::exponential(double theta, double c)
{
    InitialData d;
    d.family = InitialFamily::exponential;
    d.theta = theta;
    d.c = c;
    return d;
}

InitialData InitialData::gamma(double k, double theta, double c)
{
    InitialData d;
    d.family = InitialFamily::gamma;
    d.k = k;
    d.theta = theta;
    d.c = c;
    return d;
}

InitialData InitialData::bump(double center, double width, double height)
{
    InitialData d;
    d.family = InitialFamily::bump;
    d.center = center;
    d.width = width;
    d.height = height;
    return d;
}

InitialData InitialData::tabulated_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open density table");
    InitialData d;
    d.family = InitialFamily::tabulated;
    d.path = path;

    std::vector<std::string> errors;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        const auto where = path + ":" + std::to_string(lineno) + ": ";
        if (!header) {
            std::string h;
            for (char ch : line)
                if (ch != ' ' && ch != '\t')
                    h += ch;
            if (h != "s,f")
                throw ConfigError(where + "expected header `s,f`");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            errors.push_back(where + "expected 2 columns");
            continue;
        }
        double s = 0.0;
        double f = 0.0;
        try {
            s = std::stod(line.substr(0, comma));
            f = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            errors.push_back(where + "not a number");
            continue;
        }
        if (!(s > 0.0))
            errors.push_back(where + "s must be positive");
        if (!d.table.empty() && !(s > d.table.back().first))
            errors.push_back(where + "s must be strictly increasing");
        if (!std::isfinite(f) || f < 0.0)
            errors.push_back(where + "negative density " + num(f));
        d.table.emplace_back(s, f);
    }
    if (!header)
        errors.push_back(path + ": missing header `s,f`");
    if (!errors.empty())
        throw ConfigError(errors);
    return d;
}

double InitialData::operator()(double s) const
{
    switch (family) {
    case InitialFamily::exponential: return c * std::exp(-s / theta);
    case InitialFamily::gamma:
        if (s <= 0.0)
            return 0.0;
        return c * std::exp((k - 1.0) * std::log(s) - s / theta - std::lgamma(k) - k * std::log(theta));
    case InitialFamily::bump: {
        const double u = (s - center) / width;
        if (std::abs(u) >= 1.0)
            return 0.0;
        return height * std::exp(1.0 - 1.0 / (1.0 - u * u));
    }
    case InitialFamily::tabulated: {
        const double tol = 1e-9 * std::max(1.0, s);
        const auto it = std::lower_bound(table.begin(), table.end(), s - tol,
                                         [](const auto& row, double v) { return row.first < v; });
        if (it != table.end() && std::abs(it->first - s) <= tol)
            return it->second;
        return 0.0;
    }
    }
    return 0.0;
}

void InitialData::validate() const
{
    auto bad = [](double v) { return !std::isfinite(v); };
    switch (family) {
    case InitialFamily::exponential:
        if (bad(theta) || theta <= 0.0 || bad(c) || c < 0.0)
            throw DomainError("exponential initial data requires theta > 0 and c >= 0");
        break;
    case InitialFamily::gamma:
        if (bad(k) || k <= 0.0 || bad(theta) || theta <= 0.0 || bad(c) || c < 0.0)
            throw DomainError("gamma initial data requires k > 0, theta > 0 and c >= 0");
        break;
    case InitialFamily::bump:
        if (bad(center) || bad(width) || width <= 0.0 || bad(height) || height < 0.0)
            throw DomainError("bump initial data requires width > 0 and height >= 0");
        break;
    case InitialFamily::tabulated:
        for (const auto& [s, f] : table)
            if (bad(f) || f < 0.0)
                throw DomainError("tabulated initial data contains a negative density");
        break;
    }
}

std::string InitialData::describe() const
{
    std::ostringstream os;
    os.precision(17);
    switch (family) {
    case InitialFamily::exponential: os << "exponential(theta=" << theta << ", c=" << c << ")"; break;
    case InitialFamily::gamma: os << "gamma(k=" << k << ", theta=" << theta << ", c=" << c << ")"; break;
    case InitialFamily::bump: os << "bump(center=" << center << ", width=" << width << ", height=" << height << ")"; break;
    case InitialFamily::tabulated: os << "tabulated(path=" << path << ")"; break;
    }
    return os.str();
}

DensityState::DensityState(SizeGrid g, std::vector<double> values, double t) : grid(g), f(std::move(values)), tau(t)
{
    if (f.size() != grid.size())
        throw DomainError("DensityState: value count does not match the grid");
    for (double v : f)
        if (!std::isfinite(v) || v < 0.0)
            throw DomainError("DensityState: densities must be finite and nonnegative");
}

DensityState init_density(const InitialData& data, const SizeGrid& grid)
{
    data.validate();
    DensityState state(grid);
    if (data.family == InitialFamily::tabulated) {
        std::vector<std::string> errors;
        for (const auto& [s, value] : data.table) {
            const double q = s / grid.dx();
            const double k = std::round(q);
            if (k < 1.0 || std::abs(q - k) > 1e-9 * std::max(1.0, q)) {
                errors.push_back(data.path + ": s = " + num(s) + " is not a grid node (dx = " + num(grid.dx()) + ")");
                continue;
            }
            const auto idx = static_cast<std::size_t>(k) - 1;
            if (idx < grid.size())
                state.f[idx] = value;
        }
        if (!errors.empty())
            throw ConfigError(errors);
        return state;
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        state.f[i] = data(grid.node(i));
    return state;
}

MomentReport moments(const DensityState& state, std::span<const double> tail_thresholds)
{
    const auto& g = state.grid;
    MomentReport m;
    m.tau = state.tau;
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        s0 += state.f[i];
        s1 += g.node(i) * state.f[i];
    }
    m.M0 = g.dx() * s0;
    m.M1 = g.dx() * s1;
    m.norm01 = m.M0 + m.M1;
    for (double R : tail_thresholds)
        m.tail.emplace_back(R, tail_mass(state, R));
    return m;
}

double tail_mass(const DensityState& state, double R)
{
    const auto first = state.grid.count_at_most(R);
    double s = 0.0;
    for (std::size_t i = first; i < state.f.size(); ++i)
        s += state.f[i];
    return state.grid.dx() * s;
}

UiEstimate ui_functional(const DensityState& state, double a, double delta)
{
    const auto& g = state.grid;
    if (!(a > 1.0) || a > g.level() * (1.0 + kSlack))
        throw DomainError("ui_functional: bound must satisfy 1 < a <= n");
    if (!(delta > 0.0))
        throw DomainError("ui_functional: measure budget delta must be positive");

    const std::size_t m = g.count_at_most(a);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return state.f[i] > state.f[j]; });

    const double q = delta / g.dx();
    double whole = std::floor(q * (1.0 + kSlack));
    double frac = std::max(0.0, q - whole);
    if (frac < 1e-9)
        frac = 0.0;

    UiEstimate est;
    double sum = 0.0;
    const auto take = static_cast<std::size_t>(std::min(whole, static_cast<double>(m)));
    for (std::size_t k = 0; k < take; ++k) {
        sum += state.f[order[k]];
        est.cells.push_back(order[k]);
    }
    if (take < m && frac > 0.0) {
        sum += frac * state.f[order[take]];
        est.cells.push_back(order[take]);
        est.fractional_weight = frac;
    }
    est.value = g.dx() * sum;
    return est;
}

} // namespace rbk
