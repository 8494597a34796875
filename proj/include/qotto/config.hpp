// config.hpp: sectioned key = value run configuration
//
// Grammar:
//   # comment                  (also after a value)
//   [section]
//   key = value
//   range values: start:stop:count, count points including both endpoints
//
// Every key belongs to a fixed schema; unknown sections and keys are errors. Command-line
// overrides (section.key=value) are applied on top of the file.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qotto/errors.hpp"
#include "qotto/sweep.hpp"

namespace qotto {

inline constexpr const char* kVersion = "1.0.0";

class ConfigError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

struct ConfigKey {
    const char* section;
    const char* key;
    const char* fallback;  // nullptr: no default
    const char* help;
};

// clang-format off
inline const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> keys = {
        {"system", "omega_h", "2", "hot-stroke boson frequency"},
        {"system", "omega_c", "1", "cold-stroke boson frequency"},
        {"system", "detuning", "0", "delta in Delta = omega + delta"},
        {"system", "u", "0", "Stark coupling in units of omega"},
        {"system", "lambda1", "0", "rotating-wave coupling"},
        {"system", "lambda2", "0", "counter-rotating coupling"},
        {"system", "n_max", "40", "Fock cutoff"},
        {"system", "ratio", nullptr, "anisotropy lock r"},
        {"system", "ratio_target", "lambda2", "lambda2 (lambda2 = r lambda1) or lambda1 (lambda1 = r lambda2)"},
        {"system", "pairing", "energy_index", "energy_index or parity_resolved"},
        {"bath", "T_h", "0.5", "hot bath temperature"},
        {"bath", "T_c", "0.1", "cold bath temperature"},
        {"bath", "coupling", "0.001", "Ohmic coupling alpha"},
        {"bath", "cutoff", "10", "Ohmic cutoff omega_c"},
        {"bath", "channels", "boson,qubit", "coupling channels"},
        {"cycle", "tau_adiabatic", "10", "duration of each unitary stroke"},
        {"cycle", "tau_thermal", "1000", "duration of each isochore"},
        {"cycle", "dt_unitary", "0", "unitary step (0: 1000 steps per stroke)"},
        {"cycle", "dt_dissipative", "0.01", "RK4 step on isochores"},
        {"cycle", "tolerance", "1e-6", "limit-cycle tolerance on 1 - F"},
        {"cycle", "max_cycles", "100", "cycle cap"},
        {"sweep", "mode", "ideal_cycle", "spectrum, ideal_cycle or finite_cycle"},
        {"sweep", "axis1", nullptr, "first (slow) axis"},
        {"sweep", "range1", nullptr, "start:stop:count"},
        {"sweep", "axis2", nullptr, "second (fast) axis"},
        {"sweep", "range2", nullptr, "start:stop:count"},
        {"spectrum", "axis", nullptr, "lambda1, lambda2 or u"},
        {"spectrum", "range", nullptr, "start:stop:count"},
        {"spectrum", "omega", "1", "boson frequency of the scanned medium"},
        {"spectrum", "n_levels", "6", "levels per grid point"},
        {"solve", "check_truncation", "true", "re-diagonalize at n_max + extra_fock"},
        {"solve", "extra_fock", "10", "Fock states added for the check"},
        {"solve", "levels_checked", "12", "levels compared by the check"},
        {"solve", "tolerance", "1e-8", "allowed shift, units of omega"},
        {"output", "name", nullptr, "file stem (default: subcommand)"},
        {"output", "trajectory_stride", "0", "dump every n-th step of the final cycle (0: off)"},
        {"tur", "sigma", "0.01:10:1000", "entropy-production grid"},
    };
    return keys;
}
// clang-format on

struct ConfigValue {
    std::string text;
    int line{0};  // 0: default or command line
    std::string origin{"default"};
};

struct RangeSpec {
    double start{};
    double stop{};
    int count{};
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline const ConfigKey* find_key(const std::string& section, const std::string& key) {
    for (const auto& k : config_schema())
        if (section == k.section && key == k.key) return &k;
    return nullptr;
}

inline bool known_section(const std::string& section) {
    for (const auto& k : config_schema())
        if (section == k.section) return true;
    return false;
}

}  // namespace detail

class Config {
public:
    Config() {
        for (const auto& k : config_schema())
            if (k.fallback) values_[id(k.section, k.key)] = {k.fallback, 0, "default"};
    }

    static Config parse(const std::string& text, const std::string& source = "config") {
        Config cfg;
        std::istringstream in(text);
        std::string raw, section;
        int line = 0;
        std::map<std::string, int> seen;
        while (std::getline(in, raw)) {
            ++line;
            const auto hash = raw.find('#');
            const std::string s = detail::trim(std::string_view(raw).substr(0, hash));
            if (s.empty()) continue;
            const auto where = source + ":" + std::to_string(line) + ": ";
            if (s.front() == '[') {
                if (s.back() != ']') throw ConfigError(where + "unterminated section header '" + s + "'");
                section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
                if (!detail::known_section(section)) throw ConfigError(where + "unknown section [" + section + "]");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + s + "'");
            const std::string key = detail::trim(std::string_view(s).substr(0, eq));
            const std::string value = detail::trim(std::string_view(s).substr(eq + 1));
            if (key.empty()) throw ConfigError(where + "missing key before '='");
            if (section.empty()) throw ConfigError(where + "key '" + key + "' appears before any [section]");
            if (!detail::find_key(section, key)) {
                throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
            }
            if (value.empty()) throw ConfigError(where + "empty value for " + section + "." + key);
            const auto full = id(section, key);
            if (auto it = seen.find(full); it != seen.end()) {
                throw ConfigError(where + section + "." + key + " already set on line " + std::to_string(it->second));
            }
            seen[full] = line;
            cfg.values_[full] = {value, line, source + ":" + std::to_string(line)};
        }
        cfg.nonempty_ = !seen.empty();
        return cfg;
    }

    // "section.key=value"
    void apply_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw ConfigError("--set " + assignment + ": expected section.key=value");
        }
        const std::string section = detail::trim(std::string_view(assignment).substr(0, dot));
        const std::string key = detail::trim(std::string_view(assignment).substr(dot + 1, eq - dot - 1));
        const std::string value = detail::trim(std::string_view(assignment).substr(eq + 1));
        if (!detail::find_key(section, key)) throw ConfigError("--set: unknown key " + section + "." + key);
        if (value.empty()) throw ConfigError("--set: empty value for " + section + "." + key);
        values_[id(section, key)] = {value, 0, "--set"};
        nonempty_ = true;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(id(section, key)) > 0;
    }

    // Given explicitly in the file or on the command line (not a schema default).
    bool given(const std::string& section, const std::string& key) const {
        auto it = values_.find(id(section, key));
        return it != values_.end() && it->second.origin != "default";
    }

    bool empty() const { return !nonempty_; }

    void require(const std::vector<std::pair<std::string, std::string>>& keys) const {
        std::vector<std::string> missing;
        for (const auto& [s, k] : keys)
            if (!given(s, k)) missing.push_back(s + "." + k);
        if (missing.empty()) return;
        std::string msg = empty() ? "configuration is empty; required keys:" : "missing required keys:";
        for (const auto& m : missing) msg += " " + m;
        throw ConfigError(msg);
    }

    std::string text(const std::string& section, const std::string& key) const {
        auto it = values_.find(id(section, key));
        if (it == values_.end()) throw ConfigError(section + "." + key + " is not set");
        return it->second.text;
    }

    double number(const std::string& section, const std::string& key) const {
        const auto v = text(section, key);
        double x{};
        if (!parse_double(v, x)) fail(section, key, "expected a number, got '" + v + "'");
        return x;
    }

    int integer(const std::string& section, const std::string& key) const {
        const auto v = text(section, key);
        int x{};
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc() || p != v.data() + v.size()) fail(section, key, "expected an integer, got '" + v + "'");
        return x;
    }

    bool boolean(const std::string& section, const std::string& key) const {
        const auto v = text(section, key);
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        fail(section, key, "expected true or false, got '" + v + "'");
        return false;
    }

    RangeSpec range(const std::string& section, const std::string& key) const {
        const auto v = text(section, key);
        const auto a = v.find(':');
        const auto b = a == std::string::npos ? a : v.find(':', a + 1);
        if (b == std::string::npos) fail(section, key, "expected start:stop:count, got '" + v + "'");
        RangeSpec r;
        const std::string cs = detail::trim(std::string_view(v).substr(b + 1));
        auto [p, ec] = std::from_chars(cs.data(), cs.data() + cs.size(), r.count);
        if (!parse_double(detail::trim(std::string_view(v).substr(0, a)), r.start) ||
            !parse_double(detail::trim(std::string_view(v).substr(a + 1, b - a - 1)), r.stop) ||
            ec != std::errc() || p != cs.data() + cs.size()) {
            fail(section, key, "expected start:stop:count, got '" + v + "'");
        }
        if (r.count < 1) fail(section, key, "range count must be >= 1");
        if (r.count > 1 && !(r.stop > r.start)) fail(section, key, "range stop must exceed start");
        return r;
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
        auto it = values_.find(id(section, key));
        std::string where = it != values_.end() && it->second.origin != "default" ? it->second.origin + ": " : "";
        throw ConfigError(where + section + "." + key + ": " + what);
    }

    // Effective configuration (defaults included) in the input grammar.
    std::string render() const {
        std::ostringstream os;
        std::string section;
        for (const auto& k : config_schema()) {
            auto it = values_.find(id(k.section, k.key));
            if (it == values_.end()) continue;
            if (section != k.section) {
                section = k.section;
                os << "\n[" << section << "]\n";
            }
            os << k.key << " = " << it->second.text;
            if (it->second.origin == "default") os << "  # default";
            os << "\n";
        }
        return os.str();
    }

private:
    static std::string id(const std::string& section, const std::string& key) { return section + "." + key; }

    static bool parse_double(const std::string& s, double& out) {
        if (s.empty()) return false;
        char* end = nullptr;
        out = std::strtod(s.c_str(), &end);
        return end == s.c_str() + s.size() && std::isfinite(out);
    }

    std::map<std::string, ConfigValue> values_;
    bool nonempty_{false};
};

// ----------------------------- typed builders --------------------------------

inline AxisRange axis_range(const Config& cfg, const std::string& section, const std::string& axis_key,
                            const std::string& range_key) {
    const auto name = cfg.text(section, axis_key);
    const auto axis = parse_sweep_axis(name);
    if (!axis) cfg.fail(section, axis_key, "unknown axis '" + name + "'");
    const auto r = cfg.range(section, range_key);
    return {*axis, r.start, r.stop, r.count};
}

inline BathSpec bath_from(const Config& cfg) {
    BathSpec b;
    b.coupling = cfg.number("bath", "coupling");
    b.cutoff = cfg.number("bath", "cutoff");
    b.boson = b.qubit = false;
    std::stringstream ss(cfg.text("bath", "channels"));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item == "boson") b.boson = true;
        else if (item == "qubit") b.qubit = true;
        else cfg.fail("bath", "channels", "unknown channel '" + item + "' (boson, qubit)");
    }
    if (!b.boson && !b.qubit) cfg.fail("bath", "channels", "at least one channel required");
    if (!(b.coupling > 0.0)) cfg.fail("bath", "coupling", "must be > 0");
    if (!(b.cutoff > 0.0)) cfg.fail("bath", "cutoff", "must be > 0");
    return b;
}

inline SolveOptions solve_from(const Config& cfg) {
    SolveOptions s;
    s.check_truncation = cfg.boolean("solve", "check_truncation");
    s.extra_fock = cfg.integer("solve", "extra_fock");
    s.levels_checked = cfg.integer("solve", "levels_checked");
    s.tolerance = cfg.number("solve", "tolerance");
    if (s.extra_fock < 1) cfg.fail("solve", "extra_fock", "must be >= 1");
    if (s.levels_checked < 1) cfg.fail("solve", "levels_checked", "must be >= 1");
    if (!(s.tolerance > 0.0)) cfg.fail("solve", "tolerance", "must be > 0");
    return s;
}

// Sweep over [sweep] axes (none for single-point runs) with all fixed parameters.
inline SweepSpec sweep_spec_from(const Config& cfg, bool with_axes) {
    SweepSpec s;
    const auto mode = cfg.text("sweep", "mode");
    if (mode == "spectrum") s.mode = SweepMode::spectrum;
    else if (mode == "ideal_cycle") s.mode = SweepMode::ideal_cycle;
    else if (mode == "finite_cycle") s.mode = SweepMode::finite_cycle;
    else cfg.fail("sweep", "mode", "expected spectrum, ideal_cycle or finite_cycle, got '" + mode + "'");

    s.omega_h = cfg.number("system", "omega_h");
    s.omega_c = cfg.number("system", "omega_c");
    s.detuning = cfg.number("system", "detuning");
    s.u = cfg.number("system", "u");
    s.lambda1 = cfg.number("system", "lambda1");
    s.lambda2 = cfg.number("system", "lambda2");
    s.n_max = cfg.integer("system", "n_max");
    if (s.n_max < 1) cfg.fail("system", "n_max", "must be >= 1");
    if (!(s.omega_h > s.omega_c)) cfg.fail("system", "omega_h", "must exceed omega_c");
    if (!(s.omega_c > 0.0)) cfg.fail("system", "omega_c", "must be > 0");
    if (std::abs(s.u) > kMaxStark) cfg.fail("system", "u", "|u| must not exceed 0.99 (spectral collapse)");
    if (cfg.has("system", "ratio")) {
        s.ratio = cfg.number("system", "ratio");
        if (!(*s.ratio >= 0.0)) cfg.fail("system", "ratio", "must be >= 0");
    }
    const auto target = cfg.text("system", "ratio_target");
    if (target == "lambda2") s.ratio_target = RatioTarget::lambda2;
    else if (target == "lambda1") s.ratio_target = RatioTarget::lambda1;
    else cfg.fail("system", "ratio_target", "expected lambda1 or lambda2");
    const auto pairing = cfg.text("system", "pairing");
    if (pairing == "energy_index") s.pairing = LevelPairing::energy_index;
    else if (pairing == "parity_resolved") s.pairing = LevelPairing::parity_resolved;
    else cfg.fail("system", "pairing", "expected energy_index or parity_resolved");

    s.t_hot = cfg.number("bath", "T_h");
    s.t_cold = cfg.number("bath", "T_c");
    if (!(s.t_hot > 0.0)) cfg.fail("bath", "T_h", "must be > 0");
    if (!(s.t_cold > 0.0)) cfg.fail("bath", "T_c", "must be > 0");
    s.bath = bath_from(cfg);

    s.tau_adiabatic = cfg.number("cycle", "tau_adiabatic");
    s.tau_thermal = cfg.number("cycle", "tau_thermal");
    s.dt_unitary = cfg.number("cycle", "dt_unitary");
    s.dt_dissipative = cfg.number("cycle", "dt_dissipative");
    s.limit_cycle_tolerance = cfg.number("cycle", "tolerance");
    s.max_cycles = cfg.integer("cycle", "max_cycles");
    if (!(s.tau_adiabatic >= 0.0)) cfg.fail("cycle", "tau_adiabatic", "must be >= 0");
    if (!(s.tau_thermal >= 0.0)) cfg.fail("cycle", "tau_thermal", "must be >= 0");
    if (!(s.dt_unitary >= 0.0)) cfg.fail("cycle", "dt_unitary", "must be >= 0");
    if (!(s.dt_dissipative > 0.0)) cfg.fail("cycle", "dt_dissipative", "must be > 0");
    if (!(s.limit_cycle_tolerance > 0.0)) cfg.fail("cycle", "tolerance", "must be > 0");
    if (s.max_cycles < 1) cfg.fail("cycle", "max_cycles", "must be >= 1");

    s.n_levels = cfg.integer("spectrum", "n_levels");
    s.solve = solve_from(cfg);

    if (with_axes) {
        if (cfg.has("sweep", "axis1") || cfg.has("sweep", "range1")) {
            s.axes.push_back(axis_range(cfg, "sweep", "axis1", "range1"));
        }
        if (cfg.has("sweep", "axis2") || cfg.has("sweep", "range2")) {
            if (s.axes.empty()) cfg.fail("sweep", "axis2", "axis2 given without axis1");
            s.axes.push_back(axis_range(cfg, "sweep", "axis2", "range2"));
        }
    }
    try {
        s.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

}  // namespace qotto
