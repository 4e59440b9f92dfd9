#ifndef MPQE_DISCRETE_HPP
#define MPQE_DISCRETE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mpqe/errors.hpp"
#include "mpqe/gaussian.hpp"
#include "mpqe/metrics.hpp"
#include "mpqe/params.hpp"

namespace mpqe {

enum class SchemeKind { double_pass, one_axis, two_axis, n_pass };

inline const char* to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::double_pass: return "dp";
        case SchemeKind::one_axis: return "oat";
        case SchemeKind::two_axis: return "tat";
        case SchemeKind::n_pass: return "npass";
    }
    return "?";
}

/// Larmor rate that converts the accumulated N-pass shear into two-axis
/// twisting: Omega = lambda_coefficient(N) kappa^2 / 2, i.e.
/// sqrt(3) kappa^2 / 4 for the triple pass (normalized pulse time).
inline double tat_larmor_rate(int n_passes, double kappa2) {
    return 0.5 * lambda_coefficient(n_passes) * kappa2;
}

/// Pass geometry and per-pulse controls of one multi-pass scheme.
///
/// pass_axes holds the spin axis coupled in each pass (the beam-direction
/// signs and the beam angle phi are folded into it); rotation_angles holds
/// the N-1 waveplate rotations applied between passes. Loop delays are
/// treated as zero: the passes of one pulse slice happen back to back, and
/// Larmor precession acts between slices only.
struct SchemeConfig {
    int n_passes = 3;
    std::vector<double> rotation_angles; // N-1 entries
    std::vector<double> pass_axes;       // N entries, in [0, 2 pi)
    double larmor = 0.0;                 // Omega, rad per normalized pulse
    double loss_per_crossing = 0.0;      // zeta per re-entry
    SchemeKind kind = SchemeKind::two_axis;

    void validate() const {
        if (n_passes < 2)
            throw config_error("n_passes: must be >= 2");
        if (rotation_angles.size() != static_cast<std::size_t>(n_passes - 1))
            throw config_error("rotation_angles: expected " + std::to_string(n_passes - 1) +
                               " entries, got " + std::to_string(rotation_angles.size()));
        if (pass_axes.size() != static_cast<std::size_t>(n_passes))
            throw config_error("pass_axes: expected " + std::to_string(n_passes) +
                               " entries, got " + std::to_string(pass_axes.size()));
        for (double ax : pass_axes)
            if (!(ax >= 0.0 && ax < 2.0 * std::numbers::pi))
                throw config_error("pass_axes: entries must lie in [0, 2 pi)");
        if (!(loss_per_crossing >= 0.0 && loss_per_crossing <= 1.0))
            throw config_error("zeta: must satisfy 0 <= zeta <= 1");
        if ((kind == SchemeKind::double_pass || kind == SchemeKind::one_axis) && larmor != 0.0)
            throw config_error("larmor: must be 0 for DP/OAT schemes");
        if (kind == SchemeKind::two_axis && !(larmor > 0.0))
            throw config_error("larmor: must be > 0 for TAT schemes");
    }

    /// Two passes with a 90 degree waveplate in between; the reference
    /// scheme whose residual atom-light entanglement limits squeezing.
    static SchemeConfig double_pass(double zeta = 0.0) {
        SchemeConfig c;
        c.n_passes = 2;
        c.rotation_angles = {std::numbers::pi / 2.0};
        c.pass_axes = {0.0, std::numbers::pi};
        c.larmor = 0.0;
        c.loss_per_crossing = zeta;
        c.kind = SchemeKind::double_pass;
        return c;
    }

    /// Triple pass with lambda/6 waveplates (pi/3 rotations); the exiting
    /// light decouples from the spin and a pure shear remains.
    static SchemeConfig triple_pass_oat(double phi = 0.0, double zeta = 0.0) {
        SchemeConfig c;
        c.n_passes = 3;
        c.rotation_angles = {std::numbers::pi / 3.0, std::numbers::pi / 3.0};
        c.pass_axes = {0.0, std::numbers::pi + phi,
                       std::fmod(2.0 * std::numbers::pi - phi, 2.0 * std::numbers::pi)};
        c.larmor = 0.0;
        c.loss_per_crossing = zeta;
        c.kind = SchemeKind::one_axis;
        return c;
    }

    /// Triple pass plus the magnetic field tuned to cancel the light-induced
    /// rotation, turning the shear into two-axis twisting.
    static SchemeConfig triple_pass_tat(double kappa2, double phi = 0.0, double zeta = 0.0) {
        SchemeConfig c = triple_pass_oat(phi, zeta);
        c.larmor = tat_larmor_rate(3, kappa2);
        c.kind = SchemeKind::two_axis;
        return c;
    }

    /// Ring geometry: all N passes along the same direction with a 2 pi / N
    /// Stokes rotation after each. With rotation sense -2 pi / N the
    /// accumulated shear is positive, pairing with a positive Larmor rate.
    static SchemeConfig ring(int n, double kappa2, bool two_axis_twisting, double zeta = 0.0) {
        if (n < 3)
            throw config_error("ring: requires n_passes >= 3");
        SchemeConfig c;
        c.n_passes = n;
        const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
        c.rotation_angles.assign(n - 1, two_axis_twisting ? -step : step);
        c.pass_axes.assign(n, 0.0);
        c.loss_per_crossing = zeta;
        if (two_axis_twisting) {
            c.larmor = tat_larmor_rate(n, kappa2);
            c.kind = SchemeKind::two_axis;
        } else {
            c.larmor = 0.0;
            c.kind = SchemeKind::n_pass;
        }
        return c;
    }
};

struct SimOutput {
    GaussianState spin_state;     // single spin mode
    double mean_jx_in = 1.0;      // <J_x> before the pulse
    double mean_jx_out = 0.0;     // <J_x> (1 - eta_tilde)
    double light_spin_leak = 0.0; // max |Cov(light quad, spin quad)| at exit

    Eigen::Matrix2d spin_cov() const { return spin_state.cov.topLeftCorner<2, 2>(); }
};

/// Slice-based simulation of the full N-pass scheme. The pulse is split into
/// m_segments slices of coupling kappa/sqrt(M); each slice runs all N passes
/// back to back with waveplate rotations and loss in between, is traced out,
/// and Larmor precession plus spin decay act on the slice time step.
///
/// Loss model: the cumulative transmission before pass n is 1 - (n-1) zeta,
/// applied as a beam-splitter step on the light plus the matching classical
/// depletion of the pass coupling, kappa_n = kappa sqrt(1 - (n-1) zeta).
/// The Larmor rotation is split symmetrically around the slice's passes,
/// which removes the leading splitting error against the continuous model.
inline SimOutput simulate(double kappa2, double eta_tilde, const SchemeConfig& c,
                          int m_segments, double mean_jx_in = 1.0) {
    c.validate();
    if (m_segments < 1)
        throw config_error("m_segments: must be >= 1");
    if (kappa2 < 0.0)
        throw config_error("kappa2: must be >= 0");
    if (!(eta_tilde >= 0.0 && eta_tilde < 1.0))
        throw config_error("eta: must satisfy 0 <= eta < 1");

    const int n = c.n_passes;
    const double zeta = c.loss_per_crossing;
    const double dt = 1.0 / static_cast<double>(m_segments);
    const double kappa_seg = std::sqrt(kappa2 * dt);

    // per-pass coupling and per-re-entry loss step from the cumulative
    // transmission 1 - (n-1) zeta (clamped once the light is fully lost)
    std::vector<double> pass_kappa(n), loss_step(n, 0.0);
    double cum_prev = 1.0;
    for (int k = 0; k < n; ++k) {
        const double cum = std::max(0.0, 1.0 - static_cast<double>(k) * zeta);
        if (k > 0) loss_step[k] = cum_prev > 0.0 ? 1.0 - cum / cum_prev : 0.0;
        pass_kappa[k] = kappa_seg * std::sqrt(cum);
        cum_prev = cum;
    }

    GaussianState s = GaussianState::vacuum({"spin", "light"});
    const int spin = 0, light = 1;
    const double half_larmor = -0.5 * c.larmor * dt; // H = +Omega J_x
    double leak = 0.0;

    for (int seg = 0; seg < m_segments; ++seg) {
        inplace::quadrature_rotation(s, spin, half_larmor);
        for (int k = 0; k < n; ++k) {
            if (k > 0) {
                inplace::quadrature_rotation(s, light, c.rotation_angles[k - 1]);
                if (loss_step[k] > 0.0) inplace::loss_channel(s, light, loss_step[k]);
            }
            inplace::faraday_pass(s, spin, light, pass_kappa[k], c.pass_axes[k]);
        }
        const double seg_leak = s.cov.block<2, 2>(0, 2).cwiseAbs().maxCoeff();
        if (seg_leak > leak) leak = seg_leak;

        inplace::reset_to_vacuum(s, light);
        inplace::quadrature_rotation(s, spin, half_larmor);
        inplace::spin_decay_step(s, spin, eta_tilde, dt);

        if (!s.cov.allFinite())
            throw model_violation("covariance overflow in segment " + std::to_string(seg) +
                                  " of " + std::to_string(m_segments));
    }

    SimOutput out;
    out.spin_state.labels = {"spin"};
    out.spin_state.mean = s.mean.head(2);
    out.spin_state.cov = s.cov.topLeftCorner(2, 2);
    require_physical(out.spin_state, 1e-9, "simulate output");
    out.mean_jx_in = mean_jx_in;
    out.mean_jx_out = mean_jx_in * (1.0 - eta_tilde);
    out.light_spin_leak = leak;
    return out;
}

/// Same, deriving the coupling and decay from the physical parameters.
inline SimOutput simulate(const PhysicalParams& p, const SchemeConfig& c, int m_segments) {
    const Coupling cp = derive_coupling(p, c.n_passes);
    return simulate(cp.kappa2, p.eta_tilde, c, m_segments, cp.mean_jx_in);
}

/// Wineland figures of a simulation output.
inline SqueezingResult squeezing_of(const SimOutput& out) {
    return xi_squared(out.spin_cov(), out.mean_jx_out, out.mean_jx_in);
}

} // namespace mpqe

#endif // MPQE_DISCRETE_HPP
