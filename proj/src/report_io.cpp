#include "rbk/report_io.hpp"

#include "number_format.hpp"

#include "rbk/errors.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace rbk::io {

namespace {

void hash_line(std::ostream& os, const std::string& hash)
{
    os << "# config_hash=" << hash << '\n';
}

nlohmann::json number(double v)
{
    if (std::isfinite(v))
        return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

} // namespace

std::string fmt(double v)
{
    return detail::shortest(v);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::string& hash)
{
    hash_line(os, hash);
    os << "tau,node,f\n";
    for (const auto& s : traj.snapshots)
        for (std::size_t i = 0; i < s.state.f.size(); ++i)
            os << fmt(s.tau) << ',' << fmt(traj.grid.node(i)) << ',' << fmt(s.state.f[i]) << '\n';
}

void write_moments_csv(std::ostream& os, const Trajectory& traj, const std::vector<double>& R, const std::string& hash)
{
    hash_line(os, hash);
    os << "tau,M0,M1,norm01";
    for (double r : R)
        os << ",tail_" << fmt(r);
    os << '\n';
    for (const auto& s : traj.snapshots) {
        os << fmt(s.tau) << ',' << fmt(s.moments.M0) << ',' << fmt(s.moments.M1) << ',' << fmt(s.moments.norm01);
        for (double r : R)
            os << ',' << fmt(tail_mass(s.state, r));
        os << '\n';
    }
}

void write_sweep_csv(std::ostream& os, const SweepReport& report, const std::string& hash)
{
    hash_line(os, hash);
    os << "n1,n2,psi,D\n";
    for (const auto& d : report.distances)
        os << fmt(d.n1) << ',' << fmt(d.n2) << ',' << d.psi << ',' << fmt(d.D) << '\n';
}

void write_orders_csv(std::ostream& os, const SweepReport& report, const std::string& hash)
{
    hash_line(os, hash);
    os << "quantity,p_hat\n";
    for (const auto& o : report.orders) {
        os << o.quantity << ',';
        if (o.status == OrderStatus::ok)
            os << fmt(o.p_hat);
        else
            os << to_string(o.status);
        os << '\n';
    }
}

void write_mc_csv(std::ostream& os, const MCReport& report, const std::string& hash)
{
    hash_line(os, hash);
    os << "replica,checkpoint_t,count,M0,M1\n";
    for (std::size_t r = 0; r < report.replicas.size(); ++r)
        for (const auto& c : report.replicas[r].checkpoints)
            os << r << ',' << fmt(c.t) << ',' << c.count << ',' << fmt(c.M0) << ',' << fmt(c.M1) << '\n';
}

void write_mc_summary_csv(std::ostream& os, const MCReport& report, const std::string& hash)
{
    hash_line(os, hash);
    os << "checkpoint_t,count_mean,count_stderr,M0_mean,M0_stderr,M1_mean,M1_stderr\n";
    for (const auto& c : report.checkpoints)
        os << fmt(c.t) << ',' << fmt(c.count.mean) << ',' << fmt(c.count.stderr_) << ',' << fmt(c.M0.mean) << ','
           << fmt(c.M0.stderr_) << ',' << fmt(c.M1.mean) << ',' << fmt(c.M1.stderr_) << '\n';
}

void write_ztable_csv(std::ostream& os, const std::vector<ZRow>& rows, const std::string& hash)
{
    hash_line(os, hash);
    os << "t,moment,pde,mc_mean,stderr,z\n";
    for (const auto& r : rows)
        os << fmt(r.t) << ',' << r.moment << ',' << fmt(r.pde) << ',' << fmt(r.mc_mean) << ',' << fmt(r.stderr_)
           << ',' << fmt(r.z) << '\n';
}

nlohmann::json to_json(const MomentReport& m)
{
    nlohmann::json tail = nlohmann::json::array();
    for (const auto& [R, mass] : m.tail)
        tail.push_back({{"R", R}, {"mass", mass}});
    return {{"tau", m.tau}, {"M0", m.M0}, {"M1", m.M1}, {"norm01", m.norm01}, {"tail", tail}};
}

nlohmann::json to_json(const BoundReport& b)
{
    nlohmann::json extras = nlohmann::json::object();
    for (const auto& [k, v] : b.extras)
        extras[k] = number(v);
    return {{"check", b.name},
            {"pass", b.pass},
            {"lhs", number(b.lhs)},
            {"rhs", number(b.rhs)},
            {"margin", number(b.margin)},
            {"tolerance", number(b.tolerance)},
            {"qualitative", b.qualitative},
            {"witness", b.witness},
            {"witness_tau", number(b.witness_tau)},
            {"extras", extras}};
}

nlohmann::json to_json(const AdmissibilityReport& r)
{
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"worst", number(c.worst)},
                          {"witness", {c.witness.first, c.witness.second}},
                          {"detail", c.detail}});
    return {{"kernel", r.kernel}, {"box", {r.box_lo, r.box_hi}}, {"all_pass", r.all_pass()}, {"checks", checks}};
}

nlohmann::json to_json(const SweepReport& r)
{
    nlohmann::json d = nlohmann::json::array();
    for (const auto& w : r.distances)
        d.push_back({{"n1", w.n1}, {"n2", w.n2}, {"psi", w.psi}, {"D", w.D}, {"tail_bound", w.tail_bound}});
    nlohmann::json o = nlohmann::json::array();
    for (const auto& q : r.orders)
        o.push_back({{"quantity", q.quantity},
                     {"p_hat", q.status == OrderStatus::ok ? number(q.p_hat) : nlohmann::json(nullptr)},
                     {"status", to_string(q.status)},
                     {"errors", q.errors}});
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [psi, mono] : r.monotone)
        m[psi] = mono;
    return {{"levels", r.levels}, {"distances", d}, {"orders", o}, {"monotone", m}};
}

nlohmann::json trajectory_json(const Trajectory& traj)
{
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& s : traj.snapshots) {
        auto j = to_json(s.moments);
        if (traj.has_collision_integral)
            j["collision_integral"] = s.collision_integral;
        snaps.push_back(j);
    }
    nlohmann::json j = {{"kernel", traj.kernel},
                        {"grid", {{"dx", traj.grid.dx()}, {"nodes", traj.grid.size()}, {"n", traj.grid.level()}}},
                        {"scheme", to_string(traj.config.scheme)},
                        {"dt", traj.config.dt},
                        {"t_end", traj.config.t_end},
                        {"snapshots", snaps}};
    if (traj.has_step_stats) {
        const auto& st = traj.stats;
        j["stats"] = {{"accepted_steps", st.accepted_steps},
                      {"halvings", st.halvings},
                      {"min_dt", st.min_dt},
                      {"clamped_number", st.clamped_number},
                      {"clamped_mass", st.clamped_mass},
                      {"max_step_mass_increase", st.max_step_mass_increase}};
    }
    return j;
}

Trajectory read_trajectory_csv(const std::string& path, const SizeGrid& grid, const SolverConfig& cfg)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open trajectory");
    Trajectory traj(grid);
    traj.config = cfg;
    traj.has_collision_integral = false;
    traj.has_step_stats = false;
    traj.kernel = "loaded from " + path;

    std::vector<std::string> errors;
    std::string line;
    int lineno = 0;
    bool header = false;
    std::vector<double> current;
    std::vector<bool> seen;
    double tau = 0.0;
    bool open = false;
    auto flush = [&](int at) {
        if (!open)
            return;
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (!seen[i]) {
                errors.push_back(path + ":" + std::to_string(at) + ": snapshot tau = " + fmt(tau) +
                                 " has no value for node s = " + fmt(grid.node(i)));
                break;
            }
        }
        try {
            DensityState st(grid, current, tau);
            auto m = moments(st, cfg.tail_thresholds);
            traj.snapshots.push_back({tau, std::move(st), m, 0.0});
        } catch (const Error& e) {
            errors.push_back(path + ":" + std::to_string(at) + ": snapshot tau = " + fmt(tau) + ": " + e.what());
        }
        open = false;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const auto where = path + ":" + std::to_string(lineno) + ": ";
        if (!header) {
            if (line != "tau,node,f")
                throw ConfigError(where + "expected header `tau,node,f`");
            header = true;
            continue;
        }
        const auto cols = split(line, ',');
        double t = 0.0;
        double s = 0.0;
        double f = 0.0;
        try {
            if (cols.size() != 3)
                throw std::invalid_argument("columns");
            t = std::stod(cols[0]);
            s = std::stod(cols[1]);
            f = std::stod(cols[2]);
        } catch (const std::exception&) {
            errors.push_back(where + "expected three numeric columns");
            continue;
        }
        if (!open || t != tau) {
            if (open && t < tau)
                errors.push_back(where + "tau must be non-decreasing");
            flush(lineno);
            tau = t;
            current.assign(grid.size(), 0.0);
            seen.assign(grid.size(), false);
            open = true;
        }
        const long k = grid.index_of(s);
        if (k < 0) {
            errors.push_back(where + "s = " + fmt(s) + " is not a node of the grid");
            continue;
        }
        current[static_cast<std::size_t>(k)] = f;
        seen[static_cast<std::size_t>(k)] = true;
    }
    flush(lineno);
    if (!header)
        errors.push_back(path + ": missing header `tau,node,f`");
    else if (traj.snapshots.empty() && errors.empty())
        errors.push_back(path + ": no snapshots");
    if (!errors.empty())
        throw ConfigError(errors);
    return traj;
}

} // namespace rbk::io
