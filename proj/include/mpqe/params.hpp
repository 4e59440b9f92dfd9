#ifndef MPQE_PARAMS_HPP
#define MPQE_PARAMS_HPP

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "mpqe/errors.hpp"

namespace mpqe {

inline constexpr double hbar_si = 1.054571817e-34;        // J s
inline constexpr double bohr_magneton_si = 9.2740100783e-24; // J/T

/// Physical inputs for one experimental configuration. All couplings used by
/// the simulators are derived from these under the convention ledger below.
///
/// The pulse duration is normalized to 1 in every dynamical equation; the
/// physical value only enters the magnetic-field report.
struct PhysicalParams {
    double n_atoms = 2.0e12;        // N_at
    double optical_depth = 50.0;    // alpha_0, on resonance
    double eta_tilde = 0.0;         // total spin-decay probability per pulse
    double wall_reflectivity = 0.0; // r_0 per window, loss 2*r_0 per re-entry
    double beam_angle = 0.0;        // phi, angle between beam passes (rad)
    double pulse_duration = 5.0e-3; // T in seconds (reporting only)
    double n_photons = 0.0;         // N_ph per pulse; 0 = not specified
    double g_factor = 0.5;          // hyperfine Lande g-factor (reporting only)

    void validate() const {
        if (!(n_atoms > 0.0))
            throw config_error("n_atoms: must be > 0 (got " + std::to_string(n_atoms) + ")");
        if (!(optical_depth > 0.0))
            throw config_error("alpha0: must be > 0 (got " + std::to_string(optical_depth) + ")");
        if (!(eta_tilde >= 0.0 && eta_tilde < 1.0))
            throw config_error("eta: must satisfy 0 <= eta < 1 (got " + std::to_string(eta_tilde) + ")");
        if (!(wall_reflectivity >= 0.0 && wall_reflectivity < 0.5))
            throw config_error("r0: must satisfy 0 <= r0 < 0.5 (got " +
                               std::to_string(wall_reflectivity) + ")");
        if (!(beam_angle >= 0.0 && beam_angle < std::numbers::pi / 2.0))
            throw config_error("phi: must satisfy 0 <= phi < pi/2 (got " +
                               std::to_string(beam_angle) + ")");
        if (!(pulse_duration > 0.0))
            throw config_error("t_pulse: must be > 0");
        if (n_photons < 0.0)
            throw config_error("n_photons: must be >= 0");
    }

    double mean_jx_in() const { return n_atoms / 2.0; }
};

/// Dimensionless couplings derived from PhysicalParams.
///
/// Convention ledger (`calibrated`, the default): the pulse-level coupling is
///   kappa^2 = eta * alpha0   with   eta = eta_tilde / n_passes,
/// which reproduces kappa = 2.08 at (eta_tilde = 0.26, alpha0 = 50, N = 3).
/// The `single_pass_quarter` alternative uses kappa^2 = eta * alpha0 / 4
/// (i.e. chi^2 = eta alpha0 / (2 N_at) with kappa^2 = chi^2 <J_x>); it is kept
/// only for sensitivity checks against the calibrated convention.
enum class CouplingConvention { calibrated, single_pass_quarter };

struct Coupling {
    double chi2 = 0.0;       // per-pass coupling chi^2
    double kappa2 = 0.0;     // kappa^2 = chi^2 * <J_x>
    double mean_jx_in = 0.0; // <J_x> = N_at / 2

    double kappa() const { return std::sqrt(kappa2); }
    double chi() const { return std::sqrt(chi2); }
};

inline Coupling derive_coupling(const PhysicalParams& p, int n_passes,
                                CouplingConvention conv = CouplingConvention::calibrated) {
    p.validate();
    if (n_passes < 2)
        throw config_error("n_passes: must be >= 2 (got " + std::to_string(n_passes) + ")");
    const double eta = p.eta_tilde / static_cast<double>(n_passes);
    Coupling c;
    c.mean_jx_in = p.mean_jx_in();
    c.kappa2 = (conv == CouplingConvention::calibrated) ? eta * p.optical_depth
                                                        : eta * p.optical_depth / 4.0;
    c.chi2 = c.kappa2 / c.mean_jx_in;
    return c;
}

/// Probe-photon loss from atomic scattering, epsilon = N_at * eta / N_ph.
inline double scattering_loss(const PhysicalParams& p, int n_passes, double n_photons) {
    if (!(n_photons > 0.0))
        throw config_error("n_photons: must be > 0 to evaluate the scattering loss");
    const double eta = p.eta_tilde / static_cast<double>(n_passes);
    return p.n_atoms * eta / n_photons;
}

/// Overall loss per cell re-entry, zeta = epsilon + 2 r_0.
inline double total_crossing_loss(double epsilon, double r0) {
    if (epsilon < 0.0 || r0 < 0.0)
        throw config_error("loss contributions must be non-negative");
    const double zeta = epsilon + 2.0 * r0;
    if (zeta >= 1.0) {
        std::ostringstream os;
        os << "zeta = epsilon + 2*r0 = " << zeta << ": must be < 1";
        throw config_error(os.str());
    }
    return zeta;
}

/// Loss per re-entry for a parameter set: atomic scattering (when the photon
/// number is known) plus two wall reflections.
inline double derive_crossing_loss(const PhysicalParams& p, int n_passes) {
    const double eps =
        p.n_photons > 0.0 ? scattering_loss(p, n_passes, p.n_photons) : 0.0;
    return total_crossing_loss(eps, p.wall_reflectivity);
}

struct FieldReport {
    double field_tesla = 0.0;
    double larmor_rad_per_s = 0.0;
    double larmor_hz = 0.0;
};

/// Magnetic field implementing the triple-pass twisting condition,
/// B = sqrt(3) hbar kappa^2 / (4 g_F mu_B T), and the matching Larmor
/// frequency Omega = sqrt(3) kappa^2 / (4 T). Reporting only; the simulators
/// take the normalized Omega directly.
inline FieldReport tat_magnetic_field(double kappa2, double pulse_duration, double g_factor) {
    if (!(pulse_duration > 0.0))
        throw config_error("t_pulse: must be > 0");
    if (g_factor == 0.0)
        throw config_error("g_factor: must be nonzero");
    FieldReport r;
    r.larmor_rad_per_s = std::sqrt(3.0) * kappa2 / (4.0 * pulse_duration);
    r.field_tesla = hbar_si * r.larmor_rad_per_s / (g_factor * bohr_magneton_si);
    r.larmor_hz = r.larmor_rad_per_s / (2.0 * std::numbers::pi);
    return r;
}

} // namespace mpqe

#endif // MPQE_PARAMS_HPP
