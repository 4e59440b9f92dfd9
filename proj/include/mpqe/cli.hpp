#ifndef MPQE_CLI_HPP
#define MPQE_CLI_HPP

#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpqe/continuous.hpp"
#include "mpqe/discrete.hpp"
#include "mpqe/errors.hpp"
#include "mpqe/params.hpp"
#include "mpqe/sweeps.hpp"

namespace mpqe {

/// 12 significant digits, locale-independent. Shared by every emitter so
/// identical configs produce identical bytes.
inline std::string fmt12(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] =
        std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 12);
    if (ec != std::errc())
        throw model_violation("number formatting failed");
    return std::string(buf.data(), end);
}

using KvMap = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment, blank lines ignored.
inline KvMap parse_config_text(const std::string& text) {
    KvMap kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected 'key = value'");
        if (kv.count(key))
            throw config_error("config line " + std::to_string(lineno) + ": duplicate key '" +
                               key + "'");
        kv[key] = value;
    }
    return kv;
}

struct RunConfig {
    std::string command;
    PhysicalParams params;
    double zeta = -1.0; // < 0: derive from params (scattering + 2 r0)
    int n_passes = 3;
    std::string model = "auto"; // auto | continuous | discrete
    int segments = 0;           // 0: convergence pre-check picks the slice count
    double alpha = std::numbers::pi / 3.0;
    double beta = 2.0 * std::numbers::pi / 3.0;
    double omega = -1.0; // < 0: twisting rule
    std::string output_path;
    std::string format = "csv";
    int workers = 1;

    double resolved_zeta() const {
        return zeta >= 0.0 ? zeta : derive_crossing_loss(params, n_passes);
    }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const char* b = value.data();
    const char* e = value.data() + value.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw config_error(key + ": not a number (got '" + value + "')");
    return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
    int v = 0;
    const char* b = value.data();
    const char* e = value.data() + value.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw config_error(key + ": not an integer (got '" + value + "')");
    return v;
}

} // namespace detail

/// Builds and validates a run configuration from file values plus overriding
/// flag values. Unknown keys are rejected; every bound is checked here so
/// errors name the offending key.
inline RunConfig build_run_config(const KvMap& file_values, const KvMap& overrides) {
    static const std::set<std::string> commands = {"single", "dp",    "oat",   "tat",
                                                   "npass",  "fig3a", "fig3b", "fig4b",
                                                   "fig4c",  "calibrate"};
    static const std::set<std::string> keys = {
        "command", "model",     "format", "output",   "workers", "segments", "n_passes",
        "alpha0",  "eta",       "zeta",   "r0",       "phi",     "n_atoms",  "n_photons",
        "t_pulse", "g_factor",  "alpha",  "beta",     "omega"};

    KvMap merged = file_values;
    for (const auto& [k, v] : overrides) merged[k] = v;

    RunConfig c;
    bool zeta_given = false, r0_given = false;
    for (const auto& [key, value] : merged) {
        if (!keys.count(key)) throw config_error("unknown key '" + key + "'");
        if (key == "command") {
            if (!commands.count(value))
                throw config_error("command: unknown command '" + value + "'");
            c.command = value;
        } else if (key == "model") {
            if (value != "auto" && value != "continuous" && value != "discrete")
                throw config_error("model: must be auto, continuous or discrete");
            c.model = value;
        } else if (key == "format") {
            if (value != "csv" && value != "json")
                throw config_error("format: must be csv or json");
            c.format = value;
        } else if (key == "output") {
            c.output_path = value;
        } else if (key == "workers") {
            c.workers = detail::parse_int(key, value);
            if (c.workers < 1) throw config_error("workers: must be >= 1");
        } else if (key == "segments") {
            c.segments = detail::parse_int(key, value);
            if (c.segments < 0) throw config_error("segments: must be >= 0");
        } else if (key == "n_passes") {
            c.n_passes = detail::parse_int(key, value);
            if (c.n_passes < 2) throw config_error("n_passes: must be >= 2");
        } else if (key == "alpha0") {
            c.params.optical_depth = detail::parse_double(key, value);
        } else if (key == "eta") {
            c.params.eta_tilde = detail::parse_double(key, value);
        } else if (key == "zeta") {
            const double z = detail::parse_double(key, value);
            if (!(z >= 0.0 && z < 1.0))
                throw config_error("zeta: must satisfy 0 <= zeta < 1 (got " + value + ")");
            c.zeta = z;
            zeta_given = true;
        } else if (key == "r0") {
            c.params.wall_reflectivity = detail::parse_double(key, value);
            r0_given = true;
        } else if (key == "phi") {
            c.params.beam_angle = detail::parse_double(key, value);
        } else if (key == "n_atoms") {
            c.params.n_atoms = detail::parse_double(key, value);
        } else if (key == "n_photons") {
            c.params.n_photons = detail::parse_double(key, value);
        } else if (key == "t_pulse") {
            c.params.pulse_duration = detail::parse_double(key, value);
        } else if (key == "g_factor") {
            c.params.g_factor = detail::parse_double(key, value);
        } else if (key == "alpha") {
            c.alpha = detail::parse_double(key, value);
        } else if (key == "beta") {
            c.beta = detail::parse_double(key, value);
        } else if (key == "omega") {
            c.omega = detail::parse_double(key, value);
            if (c.omega < 0.0) throw config_error("omega: must be >= 0");
        }
    }
    if (c.command.empty())
        throw config_error("command: required (single, dp, oat, tat, npass, fig3a, fig3b, "
                           "fig4b, fig4c or calibrate)");
    if (zeta_given && r0_given)
        throw config_error("zeta and r0 are mutually exclusive; zeta already includes 2*r0");
    c.params.validate();
    if (c.command == "npass" && c.n_passes < 3)
        throw config_error("n_passes: npass requires n_passes >= 3");
    return c;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string serialize_csv(const SweepTable& t) {
    std::string out = "x";
    for (const auto& s : t.series) out += "," + s.label + "_xi2," + s.label + "_db";
    out += "\n";
    const std::size_t n_rows = t.series.empty() ? 0 : t.series.front().rows.size();
    for (const auto& s : t.series)
        if (s.rows.size() != n_rows)
            throw model_violation("serialize: series have mismatched row counts");
    for (std::size_t i = 0; i < n_rows; ++i) {
        out += fmt12(t.series.front().rows[i].x);
        for (const auto& s : t.series)
            out += "," + fmt12(s.rows[i].xi2) + "," + fmt12(s.rows[i].xi2_db);
        out += "\n";
    }
    return out;
}

inline nlohmann::json table_to_json(const SweepTable& t) {
    nlohmann::json j;
    j["independent"] = t.independent;
    j["series"] = nlohmann::json::array();
    for (const auto& s : t.series) {
        nlohmann::json js;
        js["label"] = s.label;
        js["fixed"] = nlohmann::json::object();
        for (const auto& [k, v] : s.fixed) js["fixed"][k] = v;
        js["rows"] = nlohmann::json::array();
        for (const auto& r : s.rows) {
            nlohmann::json jr;
            jr["x"] = r.x;
            jr["eta"] = r.eta;
            jr["alpha"] = r.alpha;
            jr["beta"] = r.beta;
            jr["omega"] = r.omega;
            jr["xi2"] = r.xi2;
            jr["xi2_db"] = r.xi2_db;
            js["rows"].push_back(jr);
        }
        j["series"].push_back(js);
    }
    return j;
}

inline std::string serialize_json(const SweepTable& t) { return table_to_json(t).dump(2) + "\n"; }

inline std::string serialize_table(const SweepTable& t, const std::string& format) {
    return format == "json" ? serialize_json(t) : serialize_csv(t);
}

// ---------------------------------------------------------------------------
// Command execution

struct RunOutput {
    int code = 0;
    std::string text; // bytes to write
    std::string path; // empty = stdout
};

namespace detail {

struct PointResult {
    std::string model;
    int n_passes = 0;
    int segments = 0;
    double kappa2 = 0.0, zeta = 0.0, leak = 0.0;
    bool has_leak = false;
    SqueezingResult sq;
};

inline PointResult run_single_point(const RunConfig& c) {
    PointResult r;
    r.n_passes = c.n_passes;
    r.zeta = c.resolved_zeta();

    int n = c.n_passes;
    SchemeKind kind = SchemeKind::two_axis;
    if (c.command == "dp") {
        n = 2;
        kind = SchemeKind::double_pass;
    } else if (c.command == "oat") {
        n = 3;
        kind = SchemeKind::one_axis;
    } else if (c.command == "tat") {
        n = 3;
    } else if (c.command == "npass") {
        kind = SchemeKind::two_axis;
    } else { // single: geometry from n_passes and omega
        if (n == 2)
            kind = SchemeKind::double_pass;
        else
            kind = (c.omega == 0.0) ? SchemeKind::one_axis : SchemeKind::two_axis;
    }
    r.n_passes = n;

    const Coupling cp = derive_coupling(c.params, n);
    r.kappa2 = cp.kappa2;
    const double omega = c.omega >= 0.0 ? c.omega
                         : (kind == SchemeKind::two_axis ? tat_larmor_rate(n, cp.kappa2) : 0.0);

    const bool continuous = (c.model == "continuous") ||
                            (c.model == "auto" && n == 3 && kind != SchemeKind::double_pass &&
                             c.command != "npass");
    if (continuous) {
        if (n != 3 || kind == SchemeKind::double_pass)
            throw config_error("model: the continuous model covers the triple pass only");
        TatControls ctl;
        ctl.alpha = c.alpha;
        ctl.beta = c.beta;
        ctl.omega = omega;
        const auto m = assemble(cp.kappa2, c.params.eta_tilde, c.params.beam_angle, r.zeta, ctl);
        r.sq = squeezing_of(propagate_covariance(m, cp.mean_jx_in));
        r.model = "continuous";
        return r;
    }

    SchemeConfig cfg;
    if (kind == SchemeKind::double_pass) {
        cfg = SchemeConfig::double_pass(r.zeta);
    } else if (n == 3) {
        cfg = SchemeConfig::triple_pass_oat(c.params.beam_angle, r.zeta);
        if (kind == SchemeKind::two_axis) {
            cfg.larmor = omega;
            cfg.kind = SchemeKind::two_axis;
        }
    } else {
        cfg = SchemeConfig::ring(n, cp.kappa2, kind == SchemeKind::two_axis, r.zeta);
        if (c.omega >= 0.0 && kind == SchemeKind::two_axis) cfg.larmor = omega;
    }

    int m = c.segments;
    if (m <= 0) {
        DiscreteScheme d{kind, n, r.zeta, c.params.beam_angle};
        m = converged_segments(d, c.params.optical_depth, std::max(c.params.eta_tilde, 1e-6));
    }
    const SimOutput out = simulate(cp.kappa2, c.params.eta_tilde, cfg, m, cp.mean_jx_in);
    r.sq = squeezing_of(out);
    r.leak = out.light_spin_leak;
    r.has_leak = true;
    r.segments = m;
    r.model = "discrete";
    return r;
}

inline std::string point_to_text(const RunConfig& c, const PointResult& r) {
    if (c.format == "json") {
        nlohmann::json j;
        j["command"] = c.command;
        j["model"] = r.model;
        j["n_passes"] = r.n_passes;
        if (r.model == "discrete") {
            j["segments"] = r.segments;
            j["light_spin_leak"] = r.leak;
        }
        j["alpha0"] = c.params.optical_depth;
        j["eta"] = c.params.eta_tilde;
        j["zeta"] = r.zeta;
        j["phi"] = c.params.beam_angle;
        j["kappa2"] = r.kappa2;
        j["kappa"] = std::sqrt(r.kappa2);
        j["xi2"] = r.sq.xi2;
        j["xi2_db"] = r.sq.xi2_db;
        j["theta_opt"] = r.sq.theta_opt;
        return j.dump(2) + "\n";
    }
    std::string head = "command,model,n_passes,alpha0,eta,zeta,phi,kappa2,xi2,xi2_db,theta_opt";
    std::string row = c.command + "," + r.model + "," + std::to_string(r.n_passes) + "," +
                      fmt12(c.params.optical_depth) + "," + fmt12(c.params.eta_tilde) + "," +
                      fmt12(r.zeta) + "," + fmt12(c.params.beam_angle) + "," + fmt12(r.kappa2) +
                      "," + fmt12(r.sq.xi2) + "," + fmt12(r.sq.xi2_db) + "," +
                      fmt12(r.sq.theta_opt);
    if (r.model == "discrete") {
        head += ",segments,light_spin_leak";
        row += "," + std::to_string(r.segments) + "," + fmt12(r.leak);
    }
    return head + "\n" + row + "\n";
}

inline std::string run_calibrate(const RunConfig& c) {
    const Coupling cp = derive_coupling(c.params, c.n_passes);
    const double eps = c.params.n_photons > 0.0
                           ? scattering_loss(c.params, c.n_passes, c.params.n_photons)
                           : 0.0;
    const double zeta = c.resolved_zeta();
    const double omega_tat = tat_larmor_rate(c.n_passes, cp.kappa2);
    const FieldReport b =
        tat_magnetic_field(cp.kappa2, c.params.pulse_duration, c.params.g_factor);
    std::string out;
    out += "kappa2 = " + fmt12(cp.kappa2) + "\n";
    out += "kappa = " + fmt12(cp.kappa()) + "\n";
    out += "chi2 = " + fmt12(cp.chi2) + "\n";
    out += "chi = " + fmt12(cp.chi()) + "\n";
    out += "eta_per_pass = " + fmt12(c.params.eta_tilde / c.n_passes) + "\n";
    out += "epsilon = " + fmt12(eps) + "\n";
    out += "zeta = " + fmt12(zeta) + "\n";
    out += "omega_tat = " + fmt12(omega_tat) + "\n";
    out += "b_field_tesla = " + fmt12(b.field_tesla) + "\n";
    out += "larmor_hz = " + fmt12(b.larmor_hz) + "\n";
    return out;
}

} // namespace detail

/// Executes one parsed configuration. Throws config_error / model_violation;
/// a non-converged optimization is reported through the exit code with the
/// best-so-far table still written.
inline RunOutput run_config(const RunConfig& c) {
    RunOutput out;
    out.path = c.output_path;

    OptimizerSpec spec;
    if (c.segments > 0) {
        spec.segments_init = c.segments;
        spec.segments_max = c.segments;
    }

    if (c.command == "calibrate") {
        out.text = detail::run_calibrate(c);
    } else if (c.command == "fig3a") {
        const SweepTable t = figure3a(spec, c.workers);
        out.text = serialize_table(t, c.format);
        if (!t.all_converged) out.code = 4;
    } else if (c.command == "fig3b") {
        const SweepTable t = figure3b(spec, c.workers);
        out.text = serialize_table(t, c.format);
        if (!t.all_converged) out.code = 4;
    } else if (c.command == "fig4b") {
        const SweepTable t = figure4b(spec, c.workers);
        out.text = serialize_table(t, c.format);
        if (!t.all_converged) out.code = 4;
    } else if (c.command == "fig4c") {
        const SweepTable t = figure4c(spec, c.workers);
        out.text = serialize_table(t, c.format);
        if (!t.all_converged) out.code = 4;
    } else {
        const auto r = detail::run_single_point(c);
        out.text = detail::point_to_text(c, r);
    }
    return out;
}

} // namespace mpqe

#endif // MPQE_CLI_HPP
