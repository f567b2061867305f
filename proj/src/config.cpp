#include "rbk/config.hpp"

#include "number_format.hpp"

#include "rbk/errors.hpp"
#include "rbk/test_function.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace rbk {

namespace {

std::string num(double v)
{
    return detail::shortest(v);
}

// ---------------------------------------------------------------------------
// TOML subset

class LineParser
{
public:
    LineParser(const std::string& text, std::size_t pos) : s_(text), i_(pos) {}

    void skip_ws()
    {
        while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t'))
            ++i_;
    }
    bool at_end()
    {
        skip_ws();
        return i_ >= s_.size() || s_[i_] == '#';
    }
    bool eat(char c)
    {
        skip_ws();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }
    char peek()
    {
        skip_ws();
        return i_ < s_.size() ? s_[i_] : '\0';
    }

    std::string key()
    {
        skip_ws();
        std::string k;
        while (i_ < s_.size()) {
            const char c = s_[i_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
                k += c;
                ++i_;
            } else {
                break;
            }
        }
        if (k.empty() || k.front() == '.' || k.back() == '.' || k.find("..") != std::string::npos)
            throw std::runtime_error("expected a key");
        return k;
    }

    // Parses one value; inline tables are flattened into `out` under `prefix`.
    std::optional<ConfigValue> value(int line, const std::string& prefix, std::vector<std::pair<std::string, ConfigValue>>& out)
    {
        const char c = peek();
        if (c == '"')
            return ConfigValue{string(), line};
        if (c == '[') {
            ++i_;
            std::vector<ConfigValue> items;
            if (eat(']'))
                return ConfigValue{items, line};
            while (true) {
                if (peek() == '{')
                    throw std::runtime_error("inline tables inside arrays are not supported");
                std::vector<std::pair<std::string, ConfigValue>> unused;
                items.push_back(*value(line, prefix, unused));
                if (eat(']'))
                    break;
                if (!eat(','))
                    throw std::runtime_error("expected `,` or `]` in array");
                if (eat(']'))
                    break;
            }
            return ConfigValue{items, line};
        }
        if (c == '{') {
            ++i_;
            if (eat('}'))
                return std::nullopt;
            while (true) {
                const std::string k = prefix + "." + key();
                if (!eat('='))
                    throw std::runtime_error("expected `=` after key in inline table");
                if (auto v = value(line, k, out))
                    out.emplace_back(k, *v);
                if (eat('}'))
                    break;
                if (!eat(','))
                    throw std::runtime_error("expected `,` or `}` in inline table");
            }
            return std::nullopt;
        }
        const std::size_t start = i_;
        while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != ']' && s_[i_] != '}' && s_[i_] != '#' && s_[i_] != ' ' &&
               s_[i_] != '\t')
            ++i_;
        const std::string tok = s_.substr(start, i_ - start);
        if (tok == "true")
            return ConfigValue{true, line};
        if (tok == "false")
            return ConfigValue{false, line};
        if (tok.empty())
            throw std::runtime_error("expected a value");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || !std::isfinite(v))
            throw std::runtime_error("invalid value `" + tok + "`");
        return ConfigValue{v, line};
    }

private:
    std::string string()
    {
        ++i_;
        std::string out;
        while (i_ < s_.size() && s_[i_] != '"') {
            char c = s_[i_++];
            if (c == '\\' && i_ < s_.size()) {
                const char e = s_[i_++];
                switch (e) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: throw std::runtime_error(std::string("unknown escape \\") + e);
                }
            }
            out += c;
        }
        if (i_ >= s_.size())
            throw std::runtime_error("unterminated string");
        ++i_;
        return out;
    }

    const std::string& s_;
    std::size_t i_;
};

// ---------------------------------------------------------------------------
// Typed access with violation collection

class Reader
{
public:
    Reader(const FlatTable& t, std::string source, std::vector<std::string>& errors)
        : t_(t), source_(std::move(source)), errors_(errors)
    {
    }

    bool has(const std::string& key) const { return t_.count(key) > 0; }

    std::string where(const std::string& key) const
    {
        const auto it = t_.find(key);
        if (it != t_.end() && it->second.line > 0)
            return source_ + ":" + std::to_string(it->second.line) + ": " + key;
        return source_ + ": " + key;
    }

    void error(const std::string& key, const std::string& msg) { errors_.push_back(where(key) + ": " + msg); }

    void missing(const std::string& key) { errors_.push_back(source_ + ": missing required key `" + key + "`"); }

    const ConfigValue* get(const std::string& key, bool required)
    {
        used_.insert(key);
        const auto it = t_.find(key);
        if (it == t_.end()) {
            if (required)
                missing(key);
            return nullptr;
        }
        return &it->second;
    }

    void number(const std::string& key, double& out, bool required = false)
    {
        if (const auto* v = get(key, required)) {
            if (const auto* d = std::get_if<double>(&v->value))
                out = *d;
            else
                error(key, "expected a number");
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out, double lo, double hi, bool required = false)
    {
        double d = static_cast<double>(out);
        const auto before = errors_.size();
        number(key, d, required);
        if (errors_.size() != before || !has(key))
            return;
        if (d != std::floor(d) || d < lo || d > hi) {
            error(key, "expected an integer in [" + num(lo) + ", " + num(hi) + "], got " + num(d));
            return;
        }
        out = static_cast<Int>(d);
    }

    void string(const std::string& key, std::string& out, bool required = false)
    {
        if (const auto* v = get(key, required)) {
            if (const auto* s = std::get_if<std::string>(&v->value))
                out = *s;
            else
                error(key, "expected a string");
        }
    }

    void boolean(const std::string& key, bool& out)
    {
        if (const auto* v = get(key, false)) {
            if (const auto* b = std::get_if<bool>(&v->value))
                out = *b;
            else
                error(key, "expected true or false");
        }
    }

    void numbers(const std::string& key, std::vector<double>& out)
    {
        if (const auto* v = get(key, false)) {
            const auto* arr = std::get_if<std::vector<ConfigValue>>(&v->value);
            std::vector<double> vals;
            bool ok = arr != nullptr;
            if (arr)
                for (const auto& item : *arr) {
                    if (const auto* d = std::get_if<double>(&item.value))
                        vals.push_back(*d);
                    else
                        ok = false;
                }
            if (ok)
                out = vals;
            else
                error(key, "expected an array of numbers");
        }
    }

    void strings(const std::string& key, std::vector<std::string>& out)
    {
        if (const auto* v = get(key, false)) {
            const auto* arr = std::get_if<std::vector<ConfigValue>>(&v->value);
            std::vector<std::string> vals;
            bool ok = arr != nullptr;
            if (arr)
                for (const auto& item : *arr) {
                    if (const auto* s = std::get_if<std::string>(&item.value))
                        vals.push_back(*s);
                    else
                        ok = false;
                }
            if (ok)
                out = vals;
            else
                error(key, "expected an array of strings");
        }
    }

    void pairs(const std::string& key, std::vector<std::pair<double, double>>& out)
    {
        if (const auto* v = get(key, false)) {
            const auto* arr = std::get_if<std::vector<ConfigValue>>(&v->value);
            std::vector<std::pair<double, double>> vals;
            bool ok = arr != nullptr;
            if (arr)
                for (const auto& item : *arr) {
                    const auto* p = std::get_if<std::vector<ConfigValue>>(&item.value);
                    if (!p || p->size() != 2 || !std::holds_alternative<double>((*p)[0].value) ||
                        !std::holds_alternative<double>((*p)[1].value)) {
                        ok = false;
                        continue;
                    }
                    vals.emplace_back(std::get<double>((*p)[0].value), std::get<double>((*p)[1].value));
                }
            if (ok)
                out = vals;
            else
                error(key, "expected an array of [number, number] pairs");
        }
    }

    /// Marks keys as allowed without reading them (they are rejected with a specific message elsewhere).
    void reject_unless(const std::string& key, bool allowed, const std::string& why)
    {
        if (has(key) && !allowed) {
            used_.insert(key);
            error(key, why);
        }
    }

    void unknown_keys()
    {
        for (const auto& [k, v] : t_)
            if (!used_.count(k))
                error(k, "unknown key");
    }

private:
    const FlatTable& t_;
    std::string source_;
    std::vector<std::string>& errors_;
    std::set<std::string> used_;
};

std::string resolve(const std::string& base, const std::string& path)
{
    if (path.empty())
        return path;
    const std::filesystem::path p(path);
    if (p.is_absolute() || base.empty())
        return path;
    return (std::filesystem::path(base) / p).string();
}

void flatten_into(const nlohmann::json& j, const std::string& prefix, FlatTable& out);

ConfigValue json_value(const nlohmann::json& j, const std::string& key)
{
    if (j.is_boolean())
        return ConfigValue{j.get<bool>(), 0};
    if (j.is_number())
        return ConfigValue{j.get<double>(), 0};
    if (j.is_string())
        return ConfigValue{j.get<std::string>(), 0};
    if (j.is_array()) {
        std::vector<ConfigValue> items;
        for (const auto& e : j)
            items.push_back(json_value(e, key));
        return ConfigValue{items, 0};
    }
    throw ConfigError("<json>: " + key + ": unsupported value");
}

void flatten_into(const nlohmann::json& j, const std::string& prefix, FlatTable& out)
{
    for (const auto& [k, v] : j.items()) {
        const std::string key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object())
            flatten_into(v, key, out);
        else
            out[key] = json_value(v, key);
    }
}

} // namespace

FlatTable parse_toml_subset(const std::string& text, const std::string& source)
{
    FlatTable table;
    std::vector<std::string> errors;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto put = [&](const std::string& key, ConfigValue v) {
        if (table.count(key))
            errors.push_back(source + ":" + std::to_string(v.line) + ": " + key + ": duplicate key (first set on line " +
                             std::to_string(table[key].line) + ")");
        else
            table.emplace(key, std::move(v));
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        LineParser p(line, 0);
        try {
            if (p.at_end())
                continue;
            if (p.eat('[')) {
                section = p.key();
                if (!p.eat(']'))
                    throw std::runtime_error("expected `]` after section name");
                if (!p.at_end())
                    throw std::runtime_error("trailing characters after section header");
                continue;
            }
            const std::string k = section.empty() ? p.key() : section + "." + p.key();
            if (!p.eat('='))
                throw std::runtime_error("expected `=`");
            std::vector<std::pair<std::string, ConfigValue>> inline_items;
            auto v = p.value(lineno, k, inline_items);
            if (!p.at_end())
                throw std::runtime_error("trailing characters after value");
            if (v)
                put(k, *v);
            for (auto& [ik, iv] : inline_items)
                put(ik, iv);
        } catch (const std::runtime_error& e) {
            errors.push_back(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!errors.empty())
        throw ConfigError(errors);
    return table;
}

FlatTable flatten_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("<json>: expected an object");
    FlatTable out;
    flatten_into(j, "", out);
    return out;
}

RunConfig config_from_table(const FlatTable& table, const std::string& source, ConfigPurpose purpose,
                            const std::string& base_dir)
{
    std::vector<std::string> errors;
    Reader rd(table, source, errors);
    RunConfig cfg;
    cfg.base_dir = base_dir;
    const bool sim = purpose == ConfigPurpose::simulate;

    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    rd.integer("threads", cfg.threads, 1, 4096);

    // kernel
    std::string family;
    rd.string("kernel.family", family, true);
    if (rd.has("kernel.family")) {
        const auto f = kernel_family_from_string(family);
        if (!f || *f == KernelFamily::custom) {
            rd.error("kernel.family", "unknown family `" + family +
                                          "` (constant, power_product, exp_remainder, custom_tabulated, additive, "
                                          "multiplicative)");
        } else {
            cfg.kernel.family = *f;
        }
    }
    {
        const auto fam = cfg.kernel.family;
        auto& kp = cfg.kernel.params;
        const std::string of = " is not a parameter of kernel family " + to_string(fam);
        const bool uses_c = fam == KernelFamily::constant || fam == KernelFamily::power_product ||
                            fam == KernelFamily::additive || fam == KernelFamily::multiplicative;
        const bool uses_beta = fam == KernelFamily::power_product || fam == KernelFamily::exp_remainder;
        const bool tab = fam == KernelFamily::custom_tabulated;
        rd.reject_unless("kernel.c", uses_c, "c" + of);
        rd.reject_unless("kernel.beta", uses_beta, "beta" + of);
        rd.reject_unless("kernel.A", tab, "A" + of);
        rd.reject_unless("kernel.r_c", tab, "r_c" + of);
        rd.reject_unless("kernel.r_beta", tab, "r_beta" + of);
        rd.reject_unless("kernel.path", tab, "path" + of);
        if (uses_c) {
            rd.number("kernel.c", kp.c);
            if (kp.c < 0.0)
                rd.error("kernel.c", "must be nonnegative, got " + num(kp.c));
        }
        if (uses_beta) {
            rd.number("kernel.beta", kp.beta, true);
            if (kp.beta < 0.0)
                rd.error("kernel.beta", "must be nonnegative, got " + num(kp.beta));
            else if (sim && kp.beta >= 1.0)
                rd.error("kernel.beta",
                         "beta = " + num(kp.beta) +
                             " is inadmissible: the subquadraticity hypothesis K(s, p) / p -> 0 as p -> inf "
                             "requires beta < 1");
        }
        if (sim && (fam == KernelFamily::additive || fam == KernelFamily::multiplicative))
            rd.error("kernel.family", "family " + to_string(fam) +
                                          " is inadmissible: it violates the subquadraticity hypothesis "
                                          "K(s, p) / p -> 0 as p -> inf (use validate-kernel to inspect it)");
        if (tab) {
            rd.string("kernel.path", kp.path, true);
            rd.number("kernel.A", kp.A, true);
            rd.number("kernel.r_c", kp.r_c);
            rd.number("kernel.r_beta", kp.r_beta);
            if (kp.A < 0.0)
                rd.error("kernel.A", "must be nonnegative");
            if (kp.r_c < 0.0)
                rd.error("kernel.r_c", "must be nonnegative");
            if (sim && kp.r_beta >= 1.0)
                rd.error("kernel.r_beta", "r_beta = " + num(kp.r_beta) +
                                              " is inadmissible: the subquadraticity hypothesis requires r_beta < 1");
            if (!kp.path.empty()) {
                try {
                    (void)KernelTable::from_csv(resolve(base_dir, kp.path));
                } catch (const ConfigError& e) {
                    for (const auto& v : e.violations())
                        rd.error("kernel.path", v);
                } catch (const Error& e) {
                    rd.error("kernel.path", e.what());
                }
            }
        }
    }

    // grid
    rd.number("grid.n", cfg.n, sim);
    rd.number("grid.dx", cfg.dx, sim);
    if (sim && rd.has("grid.n") && rd.has("grid.dx")) {
        try {
            (void)make_grid(cfg.n, cfg.dx);
        } catch (const ConfigError& e) {
            rd.error("grid.dx", e.what());
        }
    }

    // initial data
    std::string ifam;
    rd.string("initial.family", ifam, sim);
    if (rd.has("initial.family")) {
        if (ifam == "exponential")
            cfg.initial.family = InitialFamily::exponential;
        else if (ifam == "gamma")
            cfg.initial.family = InitialFamily::gamma;
        else if (ifam == "bump")
            cfg.initial.family = InitialFamily::bump;
        else if (ifam == "tabulated")
            cfg.initial.family = InitialFamily::tabulated;
        else
            rd.error("initial.family", "unknown family `" + ifam + "` (exponential, gamma, bump, tabulated)");
    }
    {
        auto& ic = cfg.initial;
        const auto fam = ic.family;
        const std::string of = " is not a parameter of initial family " + to_string(fam);
        const bool e = fam == InitialFamily::exponential;
        const bool g = fam == InitialFamily::gamma;
        const bool b = fam == InitialFamily::bump;
        const bool t = fam == InitialFamily::tabulated;
        rd.reject_unless("initial.theta", e || g, "theta" + of);
        rd.reject_unless("initial.c", e || g, "c" + of);
        rd.reject_unless("initial.k", g, "k" + of);
        rd.reject_unless("initial.center", b, "center" + of);
        rd.reject_unless("initial.width", b, "width" + of);
        rd.reject_unless("initial.height", b, "height" + of);
        rd.reject_unless("initial.path", t, "path" + of);
        if (e || g) {
            rd.number("initial.theta", ic.theta);
            rd.number("initial.c", ic.c);
            if (!(ic.theta > 0.0))
                rd.error("initial.theta", "must be positive");
            if (ic.c < 0.0)
                rd.error("initial.c", "must be nonnegative");
        }
        if (g) {
            rd.number("initial.k", ic.k);
            if (!(ic.k > 0.0))
                rd.error("initial.k", "must be positive");
        }
        if (b) {
            rd.number("initial.center", ic.center);
            rd.number("initial.width", ic.width);
            rd.number("initial.height", ic.height);
            if (!(ic.width > 0.0))
                rd.error("initial.width", "must be positive");
            if (ic.height < 0.0)
                rd.error("initial.height", "must be nonnegative");
        }
        if (t) {
            rd.string("initial.path", ic.path, true);
            if (!ic.path.empty()) {
                try {
                    const auto data = InitialData::tabulated_csv(resolve(base_dir, ic.path));
                    if (sim && rd.has("grid.n") && rd.has("grid.dx"))
                        (void)init_density(data, make_grid(cfg.n, cfg.dx));
                } catch (const ConfigError& err) {
                    for (const auto& v : err.violations())
                        rd.error("initial.path", v);
                } catch (const Error& err) {
                    rd.error("initial.path", err.what());
                }
            }
        }
    }

    // solver
    std::string scheme;
    rd.string("solver.scheme", scheme);
    if (rd.has("solver.scheme")) {
        if (scheme == "rk4")
            cfg.scheme = Scheme::rk4;
        else if (scheme == "euler")
            cfg.scheme = Scheme::euler;
        else
            rd.error("solver.scheme", "unknown scheme `" + scheme + "` (rk4, euler)");
    }
    rd.number("solver.dt", cfg.dt, sim);
    rd.number("solver.t_end", cfg.t_end, sim);
    rd.integer("solver.output_every", cfg.output_every, 1, 2147483647.0);
    std::string pos;
    rd.string("solver.positivity", pos);
    if (rd.has("solver.positivity")) {
        if (pos == "reject_and_halve")
            cfg.positivity = PositivityPolicy::reject_and_halve;
        else if (pos == "clip_with_report")
            cfg.positivity = PositivityPolicy::clip_with_report;
        else
            rd.error("solver.positivity", "unknown policy `" + pos + "` (reject_and_halve, clip_with_report)");
    }
    if (!(cfg.dt > 0.0))
        rd.error("solver.dt", "must be positive");
    if (!(cfg.t_end > 0.0))
        rd.error("solver.t_end", "must be positive");

    // checks
    auto& ck = cfg.checks;
    rd.number("checks.M", ck.M);
    rd.numbers("checks.R", ck.R);
    rd.pairs("checks.ui", ck.ui);
    rd.number("checks.equicontinuity_a", ck.equicontinuity_a);
    rd.strings("checks.phi", ck.phi);
    rd.number("checks.weak_rel_tol", ck.weak_rel_tol);
    // Defaults adapt to small truncation levels; explicit values are validated as given.
    if (!rd.has("checks.M"))
        ck.M = std::min(ck.M, cfg.n);
    if (!rd.has("checks.ui"))
        std::erase_if(ck.ui, [&](const auto& p) { return p.first > cfg.n; });
    if (!rd.has("checks.equicontinuity_a"))
        ck.equicontinuity_a = std::min(ck.equicontinuity_a, cfg.n);
    if (sim) {
        if (!(ck.M > 0.0) || ck.M > cfg.n)
            rd.error("checks.M", "must satisfy 0 < M <= n = " + num(cfg.n) + ", got " + num(ck.M));
        for (double R : ck.R)
            if (!(R >= 1.0))
                rd.error("checks.R", "every R must be at least 1, got " + num(R));
        for (const auto& [a, d] : ck.ui) {
            if (!(a > 1.0) || a > cfg.n)
                rd.error("checks.ui", "a must satisfy 1 < a <= n = " + num(cfg.n) + ", got " + num(a));
            if (!(d > 0.0))
                rd.error("checks.ui", "delta must be positive, got " + num(d));
        }
        if ((rd.has("checks.equicontinuity_a") || cfg.n > 1.0) &&
            (!(ck.equicontinuity_a > 1.0) || ck.equicontinuity_a > cfg.n))
            rd.error("checks.equicontinuity_a", "must satisfy 1 < a <= n = " + num(cfg.n));
        if (!(ck.weak_rel_tol > 0.0))
            rd.error("checks.weak_rel_tol", "must be positive");
    }
    for (const auto& p : ck.phi) {
        try {
            (void)TestFunction::parse(p);
        } catch (const Error& e) {
            rd.error("checks.phi", e.what());
        }
    }

    // sweep
    auto& sw = cfg.sweep;
    rd.numbers("sweep.levels", sw.levels);
    rd.strings("sweep.psi", sw.psi);
    rd.integer("sweep.dx_levels", sw.dx_levels, 3, 12);
    rd.integer("sweep.dt_levels", sw.dt_levels, 3, 12);
    rd.number("sweep.probe_lo", sw.probe_lo);
    rd.number("sweep.probe_hi", sw.probe_hi);
    if (sim && rd.has("sweep.levels")) {
        for (std::size_t k = 0; k < sw.levels.size(); ++k) {
            if (k > 0 && !(sw.levels[k] > sw.levels[k - 1]))
                rd.error("sweep.levels", "levels must be strictly increasing");
            try {
                (void)make_grid(sw.levels[k], cfg.dx);
            } catch (const ConfigError& e) {
                rd.error("sweep.levels", e.what());
            }
        }
    }
    if (sim) {
        if (!(sw.probe_lo < sw.probe_hi))
            rd.error("sweep.probe_lo", "probe window must satisfy probe_lo < probe_hi");
    }
    for (const auto& p : sw.psi) {
        try {
            (void)TestFunction::parse(p);
        } catch (const Error& e) {
            rd.error("sweep.psi", e.what());
        }
    }

    // mc
    auto& mc = cfg.mc;
    rd.integer("mc.particles", mc.particles, 2, 9007199254740992.0);
    rd.integer("mc.replicas", mc.replicas, 1, 100000);
    rd.integer("mc.seed", mc.seed, 0, 9007199254740992.0);
    rd.numbers("mc.checkpoints", mc.checkpoints);
    rd.number("mc.volume_scale", mc.volume_scale);
    rd.boolean("mc.grid_matched", mc.grid_matched);
    rd.number("mc.z_max", mc.z_max);
    if (!(mc.volume_scale > 0.0))
        rd.error("mc.volume_scale", "must be positive");
    if (!(mc.z_max > 0.0))
        rd.error("mc.z_max", "must be positive");
    if (!rd.has("mc.checkpoints")) {
        std::erase_if(mc.checkpoints, [&](double t) { return t > cfg.t_end; });
        if (mc.checkpoints.empty())
            mc.checkpoints.push_back(cfg.t_end);
    }
    if (sim)
        for (double t : mc.checkpoints)
            if (!(t > 0.0) || t > cfg.t_end)
                rd.error("mc.checkpoints", "checkpoint " + num(t) + " is outside (0, t_end = " + num(cfg.t_end) + "]");

    // validate-kernel sampling box
    auto& vc = cfg.validate;
    rd.number("validate.box_lo", vc.box_lo);
    rd.number("validate.box_hi", vc.box_hi);
    rd.number("validate.tol", vc.tol);
    if (!(vc.box_lo > 0.0) || !(vc.box_hi > vc.box_lo))
        rd.error("validate.box_lo", "sampling box must satisfy 0 < box_lo < box_hi");
    if (vc.tol < 0.0)
        rd.error("validate.tol", "must be nonnegative");

    rd.unknown_keys();
    if (!errors.empty())
        throw ConfigError(errors);
    return cfg;
}

RunConfig parse_config_text(const std::string& text, const std::string& source, ConfigPurpose purpose,
                            const std::string& base_dir)
{
    return config_from_table(parse_toml_subset(text, source), source, purpose, base_dir);
}

RunConfig parse_config(const std::string& path, ConfigPurpose purpose)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto base = std::filesystem::path(path).parent_path().string();
    return parse_config_text(ss.str(), path, purpose, base.empty() ? "." : base);
}

nlohmann::json to_json(const RunConfig& cfg)
{
    using nlohmann::json;
    json j;
    j["threads"] = cfg.threads;

    json k;
    const auto fam = cfg.kernel.family;
    const auto& kp = cfg.kernel.params;
    k["family"] = to_string(fam);
    if (fam == KernelFamily::constant || fam == KernelFamily::power_product || fam == KernelFamily::additive ||
        fam == KernelFamily::multiplicative)
        k["c"] = kp.c;
    if (fam == KernelFamily::power_product || fam == KernelFamily::exp_remainder)
        k["beta"] = kp.beta;
    if (fam == KernelFamily::custom_tabulated) {
        k["path"] = kp.path;
        k["A"] = kp.A;
        k["r_c"] = kp.r_c;
        k["r_beta"] = kp.r_beta;
    }
    j["kernel"] = k;

    j["grid"] = {{"n", cfg.n}, {"dx", cfg.dx}};

    json ic;
    const auto& in = cfg.initial;
    ic["family"] = to_string(in.family);
    switch (in.family) {
    case InitialFamily::exponential: ic["theta"] = in.theta; ic["c"] = in.c; break;
    case InitialFamily::gamma: ic["k"] = in.k; ic["theta"] = in.theta; ic["c"] = in.c; break;
    case InitialFamily::bump: ic["center"] = in.center; ic["width"] = in.width; ic["height"] = in.height; break;
    case InitialFamily::tabulated: ic["path"] = in.path; break;
    }
    j["initial"] = ic;

    j["solver"] = {{"scheme", to_string(cfg.scheme)},
                   {"dt", cfg.dt},
                   {"t_end", cfg.t_end},
                   {"output_every", cfg.output_every},
                   {"positivity", to_string(cfg.positivity)}};

    json ui = json::array();
    for (const auto& [a, d] : cfg.checks.ui)
        ui.push_back({a, d});
    j["checks"] = {{"M", cfg.checks.M},
                   {"R", cfg.checks.R},
                   {"ui", ui},
                   {"equicontinuity_a", cfg.checks.equicontinuity_a},
                   {"phi", cfg.checks.phi},
                   {"weak_rel_tol", cfg.checks.weak_rel_tol}};
    j["sweep"] = {{"levels", cfg.sweep.levels},       {"psi", cfg.sweep.psi},
                  {"dx_levels", cfg.sweep.dx_levels}, {"dt_levels", cfg.sweep.dt_levels},
                  {"probe_lo", cfg.sweep.probe_lo},   {"probe_hi", cfg.sweep.probe_hi}};
    j["mc"] = {{"particles", cfg.mc.particles},       {"replicas", cfg.mc.replicas},
               {"seed", cfg.mc.seed},                 {"checkpoints", cfg.mc.checkpoints},
               {"volume_scale", cfg.mc.volume_scale}, {"grid_matched", cfg.mc.grid_matched},
               {"z_max", cfg.mc.z_max}};
    j["validate"] = {{"box_lo", cfg.validate.box_lo}, {"box_hi", cfg.validate.box_hi}, {"tol", cfg.validate.tol}};
    return j;
}

RunConfig config_from_json(const nlohmann::json& j, ConfigPurpose purpose, const std::string& base_dir)
{
    return config_from_table(flatten_json(j), "<json>", purpose, base_dir);
}

std::string config_hash(const RunConfig& cfg)
{
    auto j = to_json(cfg);
    j.erase("threads");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

KernelSpec RunConfig::kernel_spec() const
{
    const auto& p = kernel.params;
    switch (kernel.family) {
    case KernelFamily::constant: return KernelSpec::constant(p.c);
    case KernelFamily::power_product: return KernelSpec::power_product(p.beta, p.c);
    case KernelFamily::exp_remainder: return KernelSpec::exp_remainder(p.beta);
    case KernelFamily::additive: return KernelSpec::additive(p.c);
    case KernelFamily::multiplicative: return KernelSpec::multiplicative(p.c);
    case KernelFamily::custom_tabulated:
        return KernelSpec::tabulated(KernelTable::from_csv(resolve(base_dir, p.path)), p.A, p.r_c, p.r_beta, p.path);
    case KernelFamily::custom: break;
    }
    throw ConfigError("kernel family `custom` cannot be built from a config file");
}

InitialData RunConfig::initial_data() const
{
    switch (initial.family) {
    case InitialFamily::exponential: return InitialData::exponential(initial.theta, initial.c);
    case InitialFamily::gamma: return InitialData::gamma(initial.k, initial.theta, initial.c);
    case InitialFamily::bump: return InitialData::bump(initial.center, initial.width, initial.height);
    case InitialFamily::tabulated: return InitialData::tabulated_csv(resolve(base_dir, initial.path));
    }
    throw ConfigError("unknown initial family");
}

SizeGrid RunConfig::grid() const
{
    return make_grid(n, dx);
}

SolverConfig RunConfig::solver() const
{
    SolverConfig s;
    s.scheme = scheme;
    s.dt = dt;
    s.t_end = t_end;
    s.output_every = output_every;
    s.positivity = positivity;
    s.threads = threads;
    s.tail_thresholds = checks.R;
    return s;
}

} // namespace rbk
