#ifndef RBK_REPORT_IO_HPP
#define RBK_REPORT_IO_HPP

#include "rbk/convergence.hpp"
#include "rbk/invariants.hpp"
#include "rbk/kernels.hpp"
#include "rbk/mc_oracle.hpp"
#include "rbk/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace rbk::io {

/// Shortest text that round-trips: 17 significant digits.
std::string fmt(double v);

/// Every CSV starts with `# config_hash=<hash>` followed by the fixed header.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::string& hash);
void write_moments_csv(std::ostream& os, const Trajectory& traj, const std::vector<double>& R, const std::string& hash);
void write_sweep_csv(std::ostream& os, const SweepReport& report, const std::string& hash);
void write_orders_csv(std::ostream& os, const SweepReport& report, const std::string& hash);
void write_mc_csv(std::ostream& os, const MCReport& report, const std::string& hash);
void write_mc_summary_csv(std::ostream& os, const MCReport& report, const std::string& hash);
void write_ztable_csv(std::ostream& os, const std::vector<ZRow>& rows, const std::string& hash);

nlohmann::json to_json(const MomentReport& m);
nlohmann::json to_json(const BoundReport& b);
nlohmann::json to_json(const AdmissibilityReport& r);
nlohmann::json to_json(const SweepReport& r);
nlohmann::json trajectory_json(const Trajectory& traj);

/// Reads a `tau,node,f` CSV back into a Trajectory on `grid`. The result carries
/// no collision integral and no per-step statistics. Throws ConfigError on
/// malformed input.
Trajectory read_trajectory_csv(const std::string& path, const SizeGrid& grid, const SolverConfig& cfg);

} // namespace rbk::io

#endif
