#ifndef RBK_CONFIG_HPP
#define RBK_CONFIG_HPP

// Run configuration. The file format is a small TOML subset:
//
//   # comment
//   threads = 4
//   kernel = { family = "power_product", beta = 0.5, c = 1.0 }
//   [grid]
//   n = 30
//   dx = 0.05
//   [checks]
//   ui = [[5, 0.5], [10, 1]]
//
// Values are numbers, "strings", true/false, single-line [arrays] and
// single-line { inline tables }. Sections and inline tables flatten into dotted
// keys ("grid.n"). Every violation is collected with its file and line.

#include "rbk/grid_state.hpp"
#include "rbk/kernels.hpp"
#include "rbk/solver.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace rbk {

struct ConfigValue
{
    std::variant<double, std::string, bool, std::vector<ConfigValue>> value;
    int line = 0;
};

using FlatTable = std::map<std::string, ConfigValue>;

/// Throws ConfigError (with all syntax errors) on malformed text.
FlatTable parse_toml_subset(const std::string& text, const std::string& source);
FlatTable flatten_json(const nlohmann::json& j);

struct KernelConfig
{
    KernelFamily family = KernelFamily::constant;
    KernelParams params;
    bool operator==(const KernelConfig&) const = default;
};

struct InitialConfig
{
    InitialFamily family = InitialFamily::exponential;
    double theta = 1.0;
    double c = 1.0;
    double k = 2.0;
    double center = 1.0;
    double width = 1.0;
    double height = 1.0;
    std::string path;
    bool operator==(const InitialConfig&) const = default;
};

struct ChecksConfig
{
    double M = 5.0;
    std::vector<double> R{5.0, 10.0, 20.0};
    std::vector<std::pair<double, double>> ui{{5.0, 0.5}, {10.0, 1.0}};
    double equicontinuity_a = 5.0;
    std::vector<std::string> phi{"one", "min:5", "indicator:1:2"};
    double weak_rel_tol = 1e-4;
    bool operator==(const ChecksConfig&) const = default;
};

struct SweepConfig
{
    std::vector<double> levels{5.0, 10.0, 20.0, 40.0};
    std::vector<std::string> psi{"one", "min:5", "indicator:0:1"};
    int dx_levels = 3;
    int dt_levels = 3;
    double probe_lo = 0.5;
    double probe_hi = 2.0;
    bool operator==(const SweepConfig&) const = default;
};

struct McConfig
{
    std::uint64_t particles = 10000;
    int replicas = 4;
    std::uint64_t seed = 20240601;
    std::vector<double> checkpoints{0.5, 1.0};
    /// Multiplies the volume derived from the density (count / M0(0)); 1 for a matched comparison.
    double volume_scale = 1.0;
    bool grid_matched = true;
    double z_max = 3.0;
    bool operator==(const McConfig&) const = default;
};

struct ValidateConfig
{
    double box_lo = 1e-3;
    double box_hi = 1e4;
    double tol = 1e-12;
    bool operator==(const ValidateConfig&) const = default;
};

struct RunConfig
{
    KernelConfig kernel;
    double n = 10.0;
    double dx = 0.1;
    InitialConfig initial;
    Scheme scheme = Scheme::rk4;
    double dt = 1e-3;
    double t_end = 1.0;
    int output_every = 1;
    PositivityPolicy positivity = PositivityPolicy::reject_and_halve;
    ChecksConfig checks;
    SweepConfig sweep;
    McConfig mc;
    ValidateConfig validate;
    unsigned threads = 1;
    std::string base_dir; // directory against which relative paths resolve; not echoed

    bool operator==(const RunConfig& o) const
    {
        return kernel == o.kernel && n == o.n && dx == o.dx && initial == o.initial && scheme == o.scheme &&
               dt == o.dt && t_end == o.t_end && output_every == o.output_every && positivity == o.positivity &&
               checks == o.checks && sweep == o.sweep && mc == o.mc && validate == o.validate &&
               threads == o.threads;
    }

    KernelSpec kernel_spec() const;
    InitialData initial_data() const;
    SizeGrid grid() const;
    SolverConfig solver() const;
};

enum class ConfigPurpose
{
    simulate,       // full scenario: kernel must be admissible, grid and solver required
    validate_kernel // only the kernel section is required; inadmissible kernels allowed
};

RunConfig parse_config(const std::string& path, ConfigPurpose purpose = ConfigPurpose::simulate);
RunConfig parse_config_text(const std::string& text, const std::string& source,
                            ConfigPurpose purpose = ConfigPurpose::simulate, const std::string& base_dir = ".");
RunConfig config_from_table(const FlatTable& table, const std::string& source, ConfigPurpose purpose,
                            const std::string& base_dir);

nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j, ConfigPurpose purpose = ConfigPurpose::simulate,
                           const std::string& base_dir = ".");

/// 16 hex digits of FNV-1a over the canonical JSON echo, excluding `threads`.
std::string config_hash(const RunConfig& cfg);

} // namespace rbk

#endif
