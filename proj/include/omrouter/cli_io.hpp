#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "omrouter/errors.hpp"
#include "omrouter/operating_point.hpp"
#include "omrouter/response.hpp"
#include "omrouter/router_eval.hpp"
#include "omrouter/stability.hpp"

// Configuration, command drivers and serialization behind the `omrouter` tool.
// Commands render into memory and report an exit code; the caller decides
// whether anything is written, so failed runs never leave partial files.

namespace omrouter::cli {

enum ExitCode : int { kOk = 0, kInvalidInput = 2, kUnstable = 3, kNumericalFailure = 4 };

enum class OutputFormat { csv, json };
enum class FrequencyUnits { omega_m, rad_s };
enum class SweepParam { power, temperature, detuning, bandwidth };

struct GridSpec {
    double lo = 0.5; // units of omega_m
    double hi = 1.5;
    std::size_t n = 4001;
};

struct SweepSpec {
    SweepParam param = SweepParam::power;
    std::vector<double> values; // W, K, or frequencies in the config's units
};

struct RunConfig {
    SystemParams params = default_params();
    /// When true the probe line is centred on the effective detuning, also while sweeping it.
    bool input_center_tracks_detuning = true;
    FrequencyUnits units = FrequencyUnits::omega_m;
    GridSpec grid;
    std::optional<SweepSpec> sweep;
    OutputFormat format = OutputFormat::csv;
    std::string out_path; // empty: standard output
};

struct CommandResult {
    int exit_code = kOk;
    std::string output;      // the table or report
    std::string diagnostics; // warnings and error text for stderr
};

// ---------------------------------------------------------------- names

inline std::string_view to_string(SweepParam p) {
    switch (p) {
    case SweepParam::power: return "power";
    case SweepParam::temperature: return "temperature";
    case SweepParam::detuning: return "detuning";
    case SweepParam::bandwidth: return "bandwidth";
    }
    return "?";
}

inline SweepParam parse_sweep_param(std::string_view s) {
    for (auto p : {SweepParam::power, SweepParam::temperature, SweepParam::detuning, SweepParam::bandwidth})
        if (s == to_string(p)) return p;
    throw InvalidParameter("sweep_parameter", "expected power|temperature|detuning|bandwidth, got '" + std::string(s) + "'");
}

inline OutputFormat parse_format(std::string_view s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw InvalidParameter("format", "expected csv|json, got '" + std::string(s) + "'");
}

inline FrequencyUnits parse_units(std::string_view s) {
    if (s == "omega_m") return FrequencyUnits::omega_m;
    if (s == "rad/s") return FrequencyUnits::rad_s;
    throw InvalidParameter("frequency_units", "expected omega_m|rad/s, got '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- numbers

/// Locale-independent scientific notation with 13 significant digits.
inline std::string format_number(double v) {
    std::array<char, 40> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::scientific, 12);
    if (ec != std::errc{}) throw NumericalFailure("number formatting failed");
    return std::string(buf.data(), end);
}

inline double parse_number(std::string_view s, const char* field) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw InvalidParameter(field, "not a finite number: '" + std::string(s) + "'");
    return v;
}

/// Parses "lo:hi:n" with lo, hi in units of omega_m.
inline GridSpec parse_grid(std::string_view s) {
    const auto a = s.find(':');
    const auto b = a == std::string_view::npos ? a : s.find(':', a + 1);
    if (b == std::string_view::npos || s.find(':', b + 1) != std::string_view::npos)
        throw InvalidParameter("grid", "expected lo:hi:n, got '" + std::string(s) + "'");
    GridSpec g;
    g.lo = parse_number(s.substr(0, a), "grid");
    g.hi = parse_number(s.substr(a + 1, b - a - 1), "grid");
    const double n = parse_number(s.substr(b + 1), "grid");
    if (n != std::floor(n) || n < 2 || n > 1e8) throw InvalidParameter("grid", "n must be an integer >= 2");
    g.n = static_cast<std::size_t>(n);
    return g;
}

inline std::vector<double> parse_value_list(std::string_view s, const char* field) {
    std::vector<double> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        out.push_back(parse_number(s.substr(0, comma), field));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

// ---------------------------------------------------------------- config

namespace detail {

inline double freq_scale(const RunConfig& c) {
    return c.units == FrequencyUnits::omega_m ? c.params.mech_freq : 1.0;
}

/// Effective parameters after applying the detuning-tracking rule.
inline SystemParams resolved_params(const RunConfig& c) {
    SystemParams p = c.params;
    if (c.input_center_tracks_detuning) p.input_center = p.detuning;
    return p;
}

inline void validate_grid(const GridSpec& g) {
    if (g.n < 2) throw InvalidParameter("grid", "n must be >= 2");
    if (!(g.lo < g.hi) || !std::isfinite(g.lo) || !std::isfinite(g.hi)) throw InvalidParameter("grid", "requires lo < hi");
    if (!(g.lo > 0.0)) throw InvalidParameter("grid", "reported frequencies must be positive (lo > 0)");
}

inline SystemParams with_sweep_value(const RunConfig& c, SweepParam param, double v) {
    RunConfig local = c;
    auto& p = local.params;
    switch (param) {
    case SweepParam::power: p.drive_power = v; break;
    case SweepParam::temperature: p.bath_temp = v; break;
    case SweepParam::detuning: p.detuning = v * freq_scale(c); break;
    case SweepParam::bandwidth: p.input_bandwidth = v * freq_scale(c); break;
    }
    return resolved_params(local);
}

inline bool is_frequency(SweepParam param) { return param == SweepParam::detuning || param == SweepParam::bandwidth; }

// Sweep labels: frequencies always in omega_m, so output does not depend on the config's units.
inline double sweep_tag(const RunConfig& c, SweepParam param, double v) {
    return is_frequency(param) ? v * freq_scale(c) / c.params.mech_freq : v;
}

inline std::string sweep_column(SweepParam param) {
    return std::string(to_string(param)) + (is_frequency(param) ? "_over_omega_m" : "");
}

} // namespace detail

inline void validate(const RunConfig& c) {
    omrouter::validate(detail::resolved_params(c));
    detail::validate_grid(c.grid);
    if (c.sweep) {
        if (c.sweep->values.empty()) throw InvalidParameter("sweep_values", "must not be empty");
        for (double v : c.sweep->values) {
            if (!std::isfinite(v)) throw InvalidParameter("sweep_values", "must be finite");
            omrouter::validate(detail::with_sweep_value(c, c.sweep->param, v));
        }
    }
}

/**
 * Reads a flat JSON object. Every key is optional; unknown keys are rejected.
 *
 *   wavelength [m], cavity_length [m], mass [kg], mech_freq [rad/s], quality,
 *   drive_power [W], bath_temp [K],
 *   cavity_decay, detuning, input_center, input_bandwidth   (frequency_units),
 *   frequency_units: "omega_m" (default) | "rad/s",
 *   grid_lo, grid_hi [omega_m], grid_n,
 *   sweep_parameter: power|temperature|detuning|bandwidth, sweep_values: [..],
 *   format: csv|json, out: path
 */
inline RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidParameter("config", "top level must be a JSON object");
    RunConfig c;
    auto num = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key)) return std::nullopt;
        const auto& v = j.at(key);
        if (!v.is_number()) throw InvalidParameter(key, "must be a number");
        return v.get<double>();
    };
    auto str = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key)) return std::nullopt;
        if (!j.at(key).is_string()) throw InvalidParameter(key, "must be a string");
        return j.at(key).get<std::string>();
    };

    static constexpr std::array<std::string_view, 19> known{
        "wavelength", "cavity_length", "mass", "mech_freq", "quality", "cavity_decay", "drive_power", "bath_temp",
        "detuning", "input_center", "input_bandwidth", "frequency_units", "grid_lo", "grid_hi", "grid_n",
        "sweep_parameter", "sweep_values", "format", "out"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) throw InvalidParameter(key, "unknown config key");

    if (auto s = str("frequency_units")) c.units = parse_units(*s);
    auto& p = c.params;
    if (auto v = num("wavelength")) p.wavelength = *v;
    if (auto v = num("cavity_length")) p.cavity_length = *v;
    if (auto v = num("mass")) p.mass = *v;
    if (auto v = num("mech_freq")) p.mech_freq = *v;
    if (auto v = num("quality")) p.quality = *v;
    if (auto v = num("drive_power")) p.drive_power = *v;
    if (auto v = num("bath_temp")) p.bath_temp = *v;

    // relative frequencies follow mech_freq unless given explicitly
    const double wm = p.mech_freq;
    const double scale = c.units == FrequencyUnits::omega_m ? wm : 1.0;
    p.cavity_decay = num("cavity_decay") ? *num("cavity_decay") * scale : wm / 10.0;
    p.detuning = num("detuning") ? *num("detuning") * scale : wm;
    p.input_bandwidth = num("input_bandwidth") ? *num("input_bandwidth") * scale : 0.01 * wm;
    if (auto v = num("input_center")) {
        p.input_center = *v * scale;
        c.input_center_tracks_detuning = false;
    }
    if (c.input_center_tracks_detuning) p.input_center = p.detuning;

    if (auto v = num("grid_lo")) c.grid.lo = *v;
    if (auto v = num("grid_hi")) c.grid.hi = *v;
    if (auto v = num("grid_n")) {
        if (*v != std::floor(*v) || *v < 2 || *v > 1e8) throw InvalidParameter("grid_n", "must be an integer >= 2");
        c.grid.n = static_cast<std::size_t>(*v);
    }

    const bool has_param = j.contains("sweep_parameter"), has_values = j.contains("sweep_values");
    if (has_param || has_values) {
        SweepSpec s;
        if (auto v = str("sweep_parameter")) s.param = parse_sweep_param(*v);
        else throw InvalidParameter("sweep_parameter", "required when sweep_values is given");
        if (!has_values || !j.at("sweep_values").is_array())
            throw InvalidParameter("sweep_values", "must be an array of numbers");
        for (const auto& v : j.at("sweep_values")) {
            if (!v.is_number()) throw InvalidParameter("sweep_values", "must be an array of numbers");
            s.values.push_back(v.get<double>());
        }
        c.sweep = std::move(s);
    }
    if (auto s = str("format")) c.format = parse_format(*s);
    if (auto s = str("out")) c.out_path = *s;
    return c;
}

/// Serializes with absolute frequencies so reloading reproduces every double exactly.
inline nlohmann::json config_to_json(const RunConfig& c) {
    const auto& p = c.params;
    nlohmann::json j{
        {"wavelength", p.wavelength}, {"cavity_length", p.cavity_length}, {"mass", p.mass},
        {"mech_freq", p.mech_freq}, {"quality", p.quality}, {"drive_power", p.drive_power},
        {"bath_temp", p.bath_temp}, {"frequency_units", "rad/s"}, {"cavity_decay", p.cavity_decay},
        {"detuning", p.detuning}, {"input_bandwidth", p.input_bandwidth},
        {"grid_lo", c.grid.lo}, {"grid_hi", c.grid.hi}, {"grid_n", c.grid.n},
        {"format", c.format == OutputFormat::csv ? "csv" : "json"}};
    if (!c.input_center_tracks_detuning) j["input_center"] = p.input_center;
    if (c.sweep) {
        // sweep values of frequency type are stored relative to the original units
        std::vector<double> vals = c.sweep->values;
        const bool freq = c.sweep->param == SweepParam::detuning || c.sweep->param == SweepParam::bandwidth;
        if (freq && c.units == FrequencyUnits::omega_m)
            for (auto& v : vals) v *= p.mech_freq;
        j["sweep_parameter"] = std::string(to_string(c.sweep->param));
        j["sweep_values"] = vals;
    }
    if (!c.out_path.empty()) j["out"] = c.out_path;
    return j;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("config", "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidParameter("config", std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<double> power;
    std::optional<double> temp;
    std::optional<std::string> grid;
    std::optional<std::string> format;
    std::optional<std::string> out;
    std::optional<std::string> sweep_param;
    std::optional<std::string> sweep_values;
};

inline void apply_overrides(RunConfig& c, const Overrides& o) {
    if (o.power) c.params.drive_power = *o.power;
    if (o.temp) c.params.bath_temp = *o.temp;
    if (o.grid) c.grid = parse_grid(*o.grid);
    if (o.format) c.format = parse_format(*o.format);
    if (o.out) c.out_path = *o.out;
    if (o.sweep_param || o.sweep_values) {
        SweepSpec s = c.sweep.value_or(SweepSpec{});
        if (o.sweep_param) s.param = parse_sweep_param(*o.sweep_param);
        if (o.sweep_values) s.values = parse_value_list(*o.sweep_values, "sweep_values");
        c.sweep = std::move(s);
    }
}

// ---------------------------------------------------------------- commands

inline constexpr std::array<std::string_view, 7> kSpectrumColumns{
    "omega_over_omega_m", "R", "T", "Sv", "St", "Scout", "Sdout"};

namespace detail {

inline void write_csv_row(std::ostringstream& os, const ChannelSpectra& s, std::size_t i, double wm) {
    const double vals[] = {s.grid[i] / wm, s.R[i], s.Tx[i], s.Sv[i], s.St[i], s.Scout[i], s.Sdout[i]};
    for (std::size_t k = 0; k < std::size(vals); ++k) os << (k ? "," : "") << format_number(vals[k]);
}

inline nlohmann::json spectrum_json(const ChannelSpectra& s, double wm) {
    std::vector<double> w(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) w[i] = s.grid[i] / wm;
    return {{"omega_over_omega_m", w}, {"R", s.R}, {"T", s.Tx}, {"Sv", s.Sv},
            {"St", s.St}, {"Scout", s.Scout}, {"Sdout", s.Sdout}};
}

inline nlohmann::json stability_json(const StabilityReport& r) {
    nlohmann::json roots = nlohmann::json::array();
    for (const auto& z : r.roots) roots.push_back({{"re", z.real()}, {"im", z.imag()}});
    return {{"stable", r.stable}, {"margin_rad_s", r.margin}, {"max_residual", r.max_residual}, {"roots_rad_s", roots}};
}

inline std::string warnings_for(const SystemParams& p) {
    std::string out;
    for (const auto& w : regime_warnings(p)) out += "warning: " + w + "\n";
    return out;
}

struct Block {
    enum class Status { ok, unstable, numerical_failure } status = Status::ok;
    ChannelSpectra spectra;
    StabilityReport stability;
    std::string message;
};

inline std::string_view status_name(Block::Status s) {
    switch (s) {
    case Block::Status::ok: return "ok";
    case Block::Status::unstable: return "unstable";
    case Block::Status::numerical_failure: return "numerical_failure";
    }
    return "?";
}

inline Block compute_block(const SystemParams& p, const GridSpec& g) {
    Block b;
    try {
        const auto op = derive_operating_point(p);
        b.stability = assess_stability(op);
        if (!b.stability.stable) {
            b.status = Block::Status::unstable;
            b.message = "operating point is unstable (margin " + format_number(b.stability.margin) + " rad/s)";
            return b;
        }
        const auto grid = uniform_grid(g.lo, g.hi, g.n, p.mech_freq);
        b.spectra = output_spectra(grid, op, probe_line(p));
    } catch (const NumericalFailure& e) {
        b.status = Block::Status::numerical_failure;
        b.message = e.what();
    }
    return b;
}

template <class Fn>
CommandResult guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidParameter& e) {
        return {kInvalidInput, "", std::string("error: invalid input: ") + e.what() + "\n"};
    } catch (const ContractViolation& e) {
        return {kInvalidInput, "", std::string("error: ") + e.what() + "\n"};
    } catch (const UnstableOperatingPoint& e) {
        return {kUnstable, "", std::string("error: ") + e.what() + "\n"};
    } catch (const NumericalFailure& e) {
        return {kNumericalFailure, "", std::string("error: numerical failure: ") + e.what() + "\n"};
    }
}

} // namespace detail

/// One row per grid point; the operating point is checked for stability first.
inline CommandResult cli_spectrum(const RunConfig& config) {
    return detail::guarded([&]() -> CommandResult {
        validate(config);
        const SystemParams p = detail::resolved_params(config);
        CommandResult res;
        res.diagnostics = detail::warnings_for(p);
        const auto block = detail::compute_block(p, config.grid);
        if (block.status == detail::Block::Status::unstable) return {kUnstable, "", res.diagnostics + "error: " + block.message + "\n"};
        if (block.status == detail::Block::Status::numerical_failure) throw NumericalFailure(block.message);

        const double wm = p.mech_freq;
        if (config.format == OutputFormat::csv) {
            std::ostringstream os;
            for (std::size_t k = 0; k < kSpectrumColumns.size(); ++k) os << (k ? "," : "") << kSpectrumColumns[k];
            os << "\n";
            for (std::size_t i = 0; i < block.spectra.size(); ++i) {
                detail::write_csv_row(os, block.spectra, i, wm);
                os << "\n";
            }
            res.output = os.str();
        } else {
            nlohmann::json j{{"config", config_to_json(config)},
                             {"stability", detail::stability_json(block.stability)},
                             {"spectrum", detail::spectrum_json(block.spectra, wm)}};
            res.output = j.dump(1) + "\n";
        }
        return res;
    });
}

/// One spectrum block per sweep value, in the order given. Points are computed
/// concurrently; instability or numerical failure is reported per block.
inline CommandResult cli_sweep(const RunConfig& config) {
    return detail::guarded([&]() -> CommandResult {
        if (!config.sweep || config.sweep->values.empty())
            throw InvalidParameter("sweep_values", "a non-empty sweep is required");
        validate(config);
        const auto& sweep = *config.sweep;

        std::vector<std::future<detail::Block>> jobs;
        jobs.reserve(sweep.values.size());
        for (double v : sweep.values) {
            const SystemParams p = detail::with_sweep_value(config, sweep.param, v);
            jobs.push_back(std::async(std::launch::async, [p, g = config.grid] { return detail::compute_block(p, g); }));
        }
        std::vector<detail::Block> blocks;
        for (auto& f : jobs) blocks.push_back(f.get());

        CommandResult res;
        res.diagnostics = detail::warnings_for(detail::resolved_params(config));
        const double wm = config.params.mech_freq;
        const std::string name = detail::sweep_column(sweep.param);
        std::vector<double> tags;
        for (double v : sweep.values) tags.push_back(detail::sweep_tag(config, sweep.param, v));
        for (std::size_t b = 0; b < blocks.size(); ++b)
            if (blocks[b].status != detail::Block::Status::ok)
                res.diagnostics += "warning: " + name + "=" + format_number(tags[b]) + ": " + blocks[b].message + "\n";

        if (config.format == OutputFormat::csv) {
            std::ostringstream os;
            os << name << ",status";
            for (auto c : kSpectrumColumns) os << "," << c;
            os << "\n";
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                const auto tag = format_number(tags[b]);
                const auto& blk = blocks[b];
                if (blk.status != detail::Block::Status::ok) {
                    os << tag << "," << detail::status_name(blk.status) << ",,,,,,,\n";
                    continue;
                }
                for (std::size_t i = 0; i < blk.spectra.size(); ++i) {
                    os << tag << ",ok,";
                    detail::write_csv_row(os, blk.spectra, i, wm);
                    os << "\n";
                }
            }
            res.output = os.str();
        } else {
            nlohmann::json arr = nlohmann::json::array();
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                nlohmann::json e{{"value", tags[b]}, {"status", detail::status_name(blocks[b].status)}};
                if (blocks[b].status == detail::Block::Status::ok) {
                    e["stability"] = detail::stability_json(blocks[b].stability);
                    e["spectrum"] = detail::spectrum_json(blocks[b].spectra, wm);
                } else {
                    e["message"] = blocks[b].message;
                }
                arr.push_back(std::move(e));
            }
            nlohmann::json j{{"config", config_to_json(config)}, {"parameter", name}, {"blocks", arr}};
            res.output = j.dump(1) + "\n";
        }
        return res;
    });
}

/// Exit 0 when stable, 3 when not; the report is emitted either way.
inline CommandResult cli_stability(const RunConfig& config) {
    return detail::guarded([&]() -> CommandResult {
        validate(config);
        const SystemParams p = detail::resolved_params(config);
        const auto r = assess_stability(derive_operating_point(p));
        CommandResult res;
        res.exit_code = r.stable ? kOk : kUnstable;
        res.diagnostics = detail::warnings_for(p);
        if (config.format == OutputFormat::csv) {
            std::ostringstream os;
            os << "quantity,value\n";
            os << "stable," << (r.stable ? 1 : 0) << "\n";
            os << "margin_rad_s," << format_number(r.margin) << "\n";
            os << "max_residual," << format_number(r.max_residual) << "\n";
            for (std::size_t i = 0; i < r.roots.size(); ++i) {
                os << "root" << i << "_re_rad_s," << format_number(r.roots[i].real()) << "\n";
                os << "root" << i << "_im_rad_s," << format_number(r.roots[i].imag()) << "\n";
            }
            res.output = os.str();
        } else {
            res.output = detail::stability_json(r).dump(1) + "\n";
        }
        return res;
    });
}

/// Routing report at the configured power, plus the on/off contrast against zero drive.
inline CommandResult cli_route(const RunConfig& config) {
    return detail::guarded([&]() -> CommandResult {
        validate(config);
        const SystemParams p = detail::resolved_params(config);
        const auto op = derive_operating_point(p);
        const auto st = assess_stability(op);
        if (!st.stable)
            throw UnstableOperatingPoint("operating point is unstable (margin " + format_number(st.margin) + " rad/s)");
        const auto sw = switching_report(p, p.drive_power);
        const auto& r = sw.on;
        const double wm = p.mech_freq;

        const std::vector<std::pair<std::string_view, double>> rows{
            {"p_reflect", r.p_reflect}, {"p_transmit", r.p_transmit}, {"vacuum_leak", r.vacuum_leak},
            {"thermal_leak", r.thermal_leak}, {"input_mass", r.input_mass}, {"contrast", sw.contrast},
            {"noise_penalized_contrast", sw.noise_penalized}, {"band_lo_over_omega_m", r.band.lo / wm},
            {"band_hi_over_omega_m", r.band.hi / wm}};
        CommandResult res;
        res.diagnostics = detail::warnings_for(p);
        if (config.format == OutputFormat::csv) {
            std::ostringstream os;
            os << "quantity,value\n";
            for (const auto& [k, v] : rows) os << k << "," << format_number(v) << "\n";
            res.output = os.str();
        } else {
            nlohmann::json j = nlohmann::json::object();
            for (const auto& [k, v] : rows) j[std::string(k)] = v;
            res.output = j.dump(1) + "\n";
        }
        return res;
    });
}

} // namespace omrouter::cli
