// Command-line front end: evaluates single squeezing points, reproduces the
// figure tables and prints the coupling calibration for a parameter set.
//
// Configuration comes from an optional `key = value` file plus flags; flags
// override file values. Exit codes: 0 ok, 2 configuration error, 3 model
// violation, 4 optimizer non-convergence.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "mpqe/cli.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mpqe::config_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-pass quantum-erasure spin squeezing simulator"};
    app.get_formatter()->column_width(26);

    std::string command, config_path;
    std::map<std::string, std::string> flag;

    app.add_option("command", command,
                   "single | dp | oat | tat | npass | fig3a | fig3b | fig4b | fig4c | calibrate");
    app.add_option("--config", config_path, "key = value configuration file ('#' comments)");

    const std::vector<std::pair<std::string, std::string>> opts = {
        {"alpha0", "resonant optical depth alpha_0"},
        {"eta", "spin-decay probability per pulse (eta-tilde)"},
        {"zeta", "photon loss per cell re-entry (zeta = epsilon + 2 r0)"},
        {"r0", "wall reflectivity per window (r_0)"},
        {"phi", "angle between beam passes in rad (phi)"},
        {"n_atoms", "atom number N_at"},
        {"n_photons", "photon number per pulse N_ph (scattering-loss report)"},
        {"t_pulse", "physical pulse duration T in seconds (B-field report)"},
        {"g_factor", "hyperfine Lande g-factor g_F (B-field report)"},
        {"n_passes", "number of passes N"},
        {"alpha", "first waveplate rotation in rad (alpha)"},
        {"beta", "cumulative rotation before pass 3 in rad (beta)"},
        {"omega", "Larmor rate Omega, rad per normalized pulse"},
        {"model", "auto | continuous | discrete"},
        {"segments", "pulse slices M for the discrete model (0 = auto)"},
        {"output", "output file (default: stdout)"},
        {"format", "csv | json"},
        {"workers", "parallel workers for sweep points"},
    };
    for (const auto& [key, help] : opts)
        app.add_option_function<std::string>(
            "--" + key, [&flag, k = key](const std::string& v) { flag[k] = v; }, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        mpqe::KvMap file_values;
        if (!config_path.empty()) file_values = mpqe::parse_config_text(read_file(config_path));
        mpqe::KvMap overrides(flag.begin(), flag.end());
        if (!command.empty()) overrides["command"] = command;

        const mpqe::RunConfig cfg = mpqe::build_run_config(file_values, overrides);
        const mpqe::RunOutput out = mpqe::run_config(cfg);

        if (out.path.empty()) {
            std::cout << out.text;
        } else {
            std::ofstream f(out.path, std::ios::binary | std::ios::trunc);
            if (!f) throw mpqe::config_error("output: cannot write '" + out.path + "'");
            f << out.text;
        }
        if (out.code == 4)
            std::cerr << "warning: optimizer did not reach the requested tolerance; "
                         "best-so-far results were written\n";
        return out.code;
    } catch (const mpqe::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mpqe::model_violation& e) {
        std::cerr << "model violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
