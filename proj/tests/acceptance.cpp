// Acceptance suite: runs every shipped correctness criterion end to end and
// prints one pass/fail line per criterion. The first argument must be the
// path to the CLI binary (used by the byte-determinism criterion).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mpqe/cli.hpp"
#include "mpqe/continuous.hpp"
#include "mpqe/discrete.hpp"
#include "mpqe/sweeps.hpp"

using namespace mpqe;

namespace {

constexpr double pi = std::numbers::pi;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

bool check(bool ok, std::string& detail, const std::string& msg) {
    if (!ok) detail += (detail.empty() ? "" : "; ") + msg;
    return ok;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// --- criterion bodies -------------------------------------------------------

bool ideal_twisting_closed_form(std::string& d) {
    bool ok = true;
    for (double kappa : {0.5, 1.0, 2.082}) {
        const double kappa2 = kappa * kappa;
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = propagate_covariance(assemble(kappa2, 0.0, 0.0, 0.0,
                                                     TatControls::ideal(kappa2)));
        const double xi2 = squeezing_of(r).xi2;
        const double elapsed = seconds_since(t0);
        const double expected = std::exp(-std::sqrt(3.0) * kappa2 / 2.0);
        ok &= check(std::abs(xi2 / expected - 1.0) <= 1e-6, d,
                    "kappa=" + num(kappa) + ": xi2=" + num(xi2) + " vs " + num(expected));
        ok &= check(elapsed < 0.1, d, "kappa=" + num(kappa) + " took " + num(elapsed) + " s");
    }
    return ok;
}

bool erasure_invariant(std::string& d) {
    bool ok = true;
    for (int n : {3, 4, 5, 7, 12})
        for (double kappa : {0.5, 2.0})
            for (int m : {1, 100}) {
                const auto out =
                    simulate(kappa * kappa, 0.0, SchemeConfig::ring(n, 0.0, false), m);
                ok &= check(out.light_spin_leak <= 1e-10, d,
                            "N=" + std::to_string(n) + " kappa=" + num(kappa) +
                                " M=" + std::to_string(m) + " leak=" + num(out.light_spin_leak));
            }
    return ok;
}

bool purity(std::string& d) {
    bool ok = true;
    for (int n : {3, 4, 5, 7, 12})
        for (double kappa : {0.5, 2.0})
            for (int m : {1, 100}) {
                const auto out =
                    simulate(kappa * kappa, 0.0, SchemeConfig::ring(n, 0.0, false), m);
                const double nu = std::sqrt(out.spin_cov().determinant());
                ok &= check(std::abs(nu - 0.5) <= 1e-9, d,
                            "N=" + std::to_string(n) + " kappa=" + num(kappa) +
                                " M=" + std::to_string(m) + " nu=" + num(nu));
            }
    const auto dp = simulate(1.0, 0.0, SchemeConfig::double_pass(), 1);
    const double nu_dp = std::sqrt(dp.spin_cov().determinant());
    ok &= check(nu_dp > 0.5 + 0.01, d, "DP nu=" + num(nu_dp) + " not mixed");
    return ok;
}

bool dp_oracle_equivalence(std::string& d) {
    bool ok = true;
    for (double kappa : {0.3, 1.0, 3.0, 10.0}) {
        const auto out = simulate(kappa * kappa, 0.0, SchemeConfig::double_pass(), 1);
        const double xi2 = squeezing_of(out).xi2;
        const double ref = dp_reference(kappa);
        ok &= check(std::abs(xi2 / ref - 1.0) < 1e-9, d,
                    "kappa=" + num(kappa) + ": " + num(xi2) + " vs " + num(ref));
    }
    const double asym = dp_reference(10.0) * 100.0 / 2.0;
    ok &= check(std::abs(asym - 1.0) < 0.05, d, "asymptote " + num(asym));
    return ok;
}

bool lambda_identity(std::string& d) {
    bool ok = true;
    for (int n = 3; n <= 50; ++n) {
        const double sum = lambda_coefficient(n);
        const double closed = 0.5 * n / std::tan(pi / n);
        ok &= check(std::abs(sum / closed - 1.0) <= 1e-12, d,
                    "N=" + std::to_string(n) + ": " + num(sum) + " vs " + num(closed));
    }
    ok &= check(std::abs(lambda_coefficient(3) - std::sqrt(3.0) / 2.0) < 1e-14, d,
                "N=3 value " + num(lambda_coefficient(3)));
    return ok;
}

bool continuous_discrete_convergence(std::string& d) {
    const auto p = optimize_tat_point(50.0, 0.02, 0.05);
    const double kappa2 = p.eta_tilde * 50.0 / 3.0;
    const auto cont =
        propagate_covariance(assemble(kappa2, p.eta_tilde, 0.05, 0.02, p.controls));
    auto cfg = SchemeConfig::triple_pass_oat(0.05, 0.02);
    cfg.rotation_angles = {p.controls.alpha, p.controls.beta - p.controls.alpha};
    cfg.larmor = p.controls.omega;
    cfg.kind = SchemeKind::two_axis;

    bool ok = true;
    double prev = -1.0;
    double rel2000 = 1.0;
    for (int m : {250, 500, 1000, 2000}) {
        const Eigen::Matrix2d disc = simulate(kappa2, p.eta_tilde, cfg, m).spin_cov();
        const double rel = (disc - cont.sigma).cwiseAbs().maxCoeff() /
                           cont.sigma.cwiseAbs().maxCoeff();
        if (prev > 0.0)
            ok &= check(rel < 0.72 * prev, d,
                        "M=" + std::to_string(m) + " error did not shrink O(1/M): " + num(rel) +
                            " after " + num(prev));
        prev = rel;
        if (m == 2000) rel2000 = rel;
    }
    ok &= check(rel2000 < 1e-3, d, "relative difference at M=2000 is " + num(rel2000));
    return ok;
}

bool paper_numbers(std::string& d) {
    bool ok = true;

    struct Anchor {
        double alpha0, zeta, target;
    };
    for (const Anchor& a : {Anchor{50.0, 0.02, 7.4}, Anchor{50.0, 0.06, 6.2},
                            Anchor{100.0, 0.02, 10.9}}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto p = optimize_tat_point(a.alpha0, a.zeta, 0.05);
        const double elapsed = seconds_since(t0);
        ok &= check(std::abs(p.result.xi2_db - a.target) <= 0.5, d,
                    "alpha0=" + num(a.alpha0) + " zeta=" + num(a.zeta) + ": " +
                        num(p.result.xi2_db) + " dB vs " + num(a.target));
        ok &= check(elapsed < 5.0, d, "point took " + num(elapsed) + " s");
        if (a.alpha0 == 50.0 && a.zeta == 0.02)
            ok &= check(std::abs(p.eta_tilde - 0.26) <= 0.08, d,
                        "peak at eta=" + num(p.eta_tilde) + ", expected near 0.26");
    }

    const auto tat = optimize_continuous_eta(500.0, true);
    const auto dp = optimize_dp_reference_eta(500.0);
    const double gap = tat.result.xi2_db - dp.result.xi2_db;
    ok &= check(std::abs(gap - 10.0) <= 0.5, d, "TAT-DP gap at 500 is " + num(gap) + " dB");

    const auto t3b = std::chrono::steady_clock::now();
    const SweepTable t = figure3b({}, 1);
    const double fig3b_s = seconds_since(t3b);
    ok &= check(fig3b_s < 300.0, d, "fig3b sweep took " + num(fig3b_s) + " s");
    ok &= check(t.all_converged, d, "fig3b optimizer did not converge everywhere");
    return ok;
}

bool multipass_scaling(std::string& d) {
    const SweepTable t = figure4c({}, 1);
    const auto& grid = figure4c_pass_grid();
    auto xi_at = [&](std::size_t series, int n) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid[i] == n) return t.series[series].rows[i].xi2;
        return -1.0;
    };
    bool ok = true;
    for (int n : {16, 20}) {
        const double ratio = xi_at(0, 2 * n) / xi_at(0, n);
        ok &= check(ratio >= 0.42 && ratio <= 0.58, d,
                    "xi2(" + std::to_string(2 * n) + ")/xi2(" + std::to_string(n) + ") = " +
                        num(ratio));
    }
    std::vector<std::size_t> best(3, 0);
    for (std::size_t s = 1; s <= 2; ++s) {
        const auto& rows = t.series[s].rows;
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].xi2 < rows[best[s]].xi2) best[s] = i;
        ok &= check(best[s] > 0 && best[s] + 1 < rows.size(), d,
                    t.series[s].label + ": optimum at a grid end");
    }
    ok &= check(grid[best[1]] > grid[best[2]], d,
                "optimal N: " + std::to_string(grid[best[1]]) + " (0.5%) vs " +
                    std::to_string(grid[best[2]]) + " (1%)");
    return ok;
}

bool byte_determinism(const std::string& cli, std::string& d) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mpqe_accept";
    fs::create_directories(dir);

    auto read_file = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool ok = true;
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"calibrate", "command = calibrate\nalpha0 = 50\neta = 0.26\nzeta = 0.02\n"},
        {"tat", "command = tat\nalpha0 = 50\neta = 0.26\nzeta = 0.02\nphi = 0.05\n"
                "format = json\n"},
        {"npass", "command = npass\nn_passes = 4\nalpha0 = 50\neta = 0.1\nsegments = 256\n"},
    };
    for (const auto& [label, cfg_text] : cases) {
        const fs::path cfg = dir / (label + ".cfg");
        std::ofstream(cfg) << cfg_text;
        const fs::path out1 = dir / (label + ".1"), out2 = dir / (label + ".2");
        for (const fs::path& out : {out1, out2}) {
            const std::string cmd = "\"" + cli + "\" --config \"" + cfg.string() +
                                    "\" --output \"" + out.string() + "\"";
            const int rc = std::system(cmd.c_str());
            ok &= check(rc == 0, d, label + ": exit code " + std::to_string(rc));
        }
        const std::string b1 = read_file(out1), b2 = read_file(out2);
        ok &= check(!b1.empty() && b1 == b2, d, label + ": outputs differ between runs");
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-mpqe-cli>\n");
        return 64;
    }
    const std::string cli = argv[1];

    const std::vector<Criterion> criteria = {
        {"ideal twisting closed form (rel 1e-6, < 0.1 s/point)", ideal_twisting_closed_form},
        {"erasure invariant (leak <= 1e-10)", erasure_invariant},
        {"purity 1/2 +- 1e-9; double pass mixed", purity},
        {"double-pass oracle equivalence (rel 1e-9) and asymptote", dp_oracle_equivalence},
        {"pass-sum identity equals (N/2)cot(pi/N) to 1e-12, N=3..50", lambda_identity},
        {"continuous vs discrete converges O(1/M), < 1e-3 at M=2000",
         continuous_discrete_convergence},
        {"published squeezing: 7.4 / 6.2 / 10.9 dB and 10 dB gap (+-0.5 dB)", paper_numbers},
        {"multi-pass scaling: halving ratio and interior optimal N", multipass_scaling},
        {"byte-identical outputs across repeated CLI runs",
         [&cli](std::string& d) { return byte_determinism(cli, d); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%zu/9] %-68s %s\n", i + 1, criteria[i].name.c_str(),
                    ok ? "PASS" : "FAIL");
        if (!ok) {
            std::printf("      %s\n", detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures == 0)
        std::printf("all 9 acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
