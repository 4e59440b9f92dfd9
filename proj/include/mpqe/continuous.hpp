#ifndef MPQE_CONTINUOUS_HPP
#define MPQE_CONTINUOUS_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "mpqe/errors.hpp"
#include "mpqe/metrics.hpp"
#include "mpqe/params.hpp"

namespace mpqe {

/// Waveplate phases and Larmor rate of the triple-pass scheme. beta is the
/// cumulative rotation before the third pass (alpha + the second waveplate).
struct TatControls {
    double alpha = std::numbers::pi / 3.0;
    double beta = 2.0 * std::numbers::pi / 3.0;
    double omega = 0.0; // normalized, rad per pulse

    static TatControls ideal(double kappa2) {
        TatControls c;
        c.omega = std::sqrt(3.0) * kappa2 / 4.0;
        return c;
    }
};

/// Continuous-time coefficient matrices of the imperfect triple pass, in
/// normalized spin quadratures (CSS variance 1/2) and normalized time T = 1.
///
/// d(J)/dt = c1 J + c2 (x_in, p_in) + c3 (F_alpha, F_beta) + spin Langevin,
/// where (x_in, p_in) is the incoming vacuum and F_alpha, F_beta collect the
/// loss-port vacua admixed before the second and third pass. `diffusion` is
/// the assembled white-noise covariance feeding the Lyapunov equation.
struct DriftNoiseMatrices {
    Eigen::Matrix2d c1 = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d c2 = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d c3 = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d diffusion = Eigen::Matrix2d::Zero();
    double kappa2 = 0.0, phi = 0.0, zeta = 0.0, eta_tilde = 0.0;
    TatControls controls;
};

/// Assembles c1, c2, c3 and the diffusion matrix for given couplings,
/// imperfections and controls.
///
/// The loss ports before the second and third pass share vacuum modes, so
/// their quadratures seen by the atoms are cross-correlated; the symmetrized
/// cross density used here is the one the explicit beam-splitter cascade
/// produces, cos(alpha-beta)/(2 sqrt(2)) * sqrt((1-2 zeta)/(1-zeta)).
inline DriftNoiseMatrices assemble(double kappa2, double eta_tilde, double phi, double zeta,
                                   const TatControls& controls) {
    if (kappa2 < 0.0)
        throw config_error("kappa2: must be >= 0");
    if (!(eta_tilde >= 0.0 && eta_tilde < 1.0))
        throw config_error("eta: must satisfy 0 <= eta < 1");
    if (!(zeta >= 0.0 && zeta <= 0.5))
        throw config_error("zeta: the continuous model requires 0 <= zeta <= 0.5");

    const double alpha = controls.alpha, beta = controls.beta, omega = controls.omega;
    const double l1 = 1.0 - zeta;
    const double l2 = 1.0 - 2.0 * zeta;
    const double sa = std::sin(alpha), sb = std::sin(beta);
    const double ca = std::cos(alpha), cb = std::cos(beta);
    const double sab = std::sin(alpha - beta), cab = std::cos(alpha - beta);
    const double sm = l1 * sa - l2 * sb, sp = l1 * sa + l2 * sb;
    const double cm = l1 * ca - l2 * cb, cp = l1 * ca + l2 * cb;
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    const double kappa = std::sqrt(kappa2);

    DriftNoiseMatrices m;
    m.kappa2 = kappa2;
    m.phi = phi;
    m.zeta = zeta;
    m.eta_tilde = eta_tilde;
    m.controls = controls;

    m.c1(0, 0) = -0.5 * eta_tilde + kappa2 * l2 * sphi * cphi * sab;
    m.c1(0, 1) = -omega + kappa2 * cphi * (sm - l2 * cphi * sab);
    m.c1(1, 0) = omega - kappa2 * l2 * sphi * sphi * sab;
    m.c1(1, 1) = -0.5 * eta_tilde + kappa2 * sphi * (sp + l2 * cphi * sab);

    m.c2(0, 0) = kappa * cphi * sm;
    m.c2(0, 1) = kappa * (1.0 - cphi * cm);
    m.c2(1, 0) = kappa * sphi * sp;
    m.c2(1, 1) = -kappa * sphi * cp;

    const double g1 = std::sqrt(l1 * zeta);
    const double g2 = std::sqrt(l2 * 2.0 * zeta);
    m.c3(0, 0) = -kappa * cphi * g1;
    m.c3(0, 1) = kappa * cphi * g2;
    m.c3(1, 0) = -kappa * sphi * g1;
    m.c3(1, 1) = -kappa * sphi * g2;

    Eigen::Matrix2d ncross = 0.5 * Eigen::Matrix2d::Identity();
    if (zeta > 0.0) {
        const double off = cab / (2.0 * std::numbers::sqrt2) * std::sqrt(l2 / l1);
        ncross(0, 1) = ncross(1, 0) = off;
    }

    m.diffusion = 0.5 * m.c2 * m.c2.transpose() + m.c3 * ncross * m.c3.transpose() +
                  0.5 * eta_tilde * Eigen::Matrix2d::Identity();
    m.diffusion = 0.5 * (m.diffusion + m.diffusion.transpose()).eval();
    return m;
}

/// Assembles from physical parameters: kappa^2 from the coupling convention
/// at N = 3, zeta from scattering plus wall reflections.
inline DriftNoiseMatrices assemble(const PhysicalParams& p, const TatControls& controls) {
    const Coupling c = derive_coupling(p, 3);
    return assemble(c.kappa2, p.eta_tilde, p.beam_angle, derive_crossing_loss(p, 3), controls);
}

struct PropagationResult {
    Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero(); // spin covariance at t = 1
    double mean_jx_in = 1.0;
    double mean_jx_out = 1.0;
    double route_disagreement = 0.0; // max |closed form - RK4| over entries
};

namespace detail {

inline Eigen::Matrix2d lyapunov_rhs(const Eigen::Matrix2d& c1, const Eigen::Matrix2d& d,
                                    const Eigen::Matrix2d& sigma) {
    return c1 * sigma + sigma * c1.transpose() + d;
}

/// Fixed-step classical RK4 on the Lyapunov equation.
inline Eigen::Matrix2d integrate_lyapunov_rk4(const Eigen::Matrix2d& c1,
                                              const Eigen::Matrix2d& d, int steps) {
    Eigen::Matrix2d sigma = 0.5 * Eigen::Matrix2d::Identity();
    const double h = 1.0 / static_cast<double>(steps);
    for (int i = 0; i < steps; ++i) {
        const Eigen::Matrix2d k1 = lyapunov_rhs(c1, d, sigma);
        const Eigen::Matrix2d k2 = lyapunov_rhs(c1, d, sigma + 0.5 * h * k1);
        const Eigen::Matrix2d k3 = lyapunov_rhs(c1, d, sigma + 0.5 * h * k2);
        const Eigen::Matrix2d k4 = lyapunov_rhs(c1, d, sigma + h * k3);
        sigma += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        sigma = 0.5 * (sigma + sigma.transpose()).eval();
    }
    return sigma;
}

/// Closed form via the block-matrix exponential: with
/// E = exp([[C1, D], [0, -C1^T]]), Sigma(1) = F Sigma0 F^T + G F^T where
/// F = E_11 and G = E_12 (van Loan quadrature of the noise integral).
inline Eigen::Matrix2d integrate_lyapunov_expm(const Eigen::Matrix2d& c1,
                                               const Eigen::Matrix2d& d) {
    Eigen::Matrix4d block = Eigen::Matrix4d::Zero();
    block.topLeftCorner<2, 2>() = c1;
    block.topRightCorner<2, 2>() = d;
    block.bottomRightCorner<2, 2>() = -c1.transpose();
    const Eigen::Matrix4d e = block.exp();
    const Eigen::Matrix2d f = e.topLeftCorner<2, 2>();
    const Eigen::Matrix2d g = e.topRightCorner<2, 2>();
    Eigen::Matrix2d sigma = f * (0.5 * Eigen::Matrix2d::Identity()) * f.transpose() +
                            g * f.transpose();
    return 0.5 * (sigma + sigma.transpose());
}

} // namespace detail

/// Propagates the spin covariance from the CSS through the pulse,
/// Sigma-dot = c1 Sigma + Sigma c1^T + diffusion on t in [0, 1].
///
/// Runs both the matrix-exponential closed form and a fixed-step RK4
/// integration; the two must agree to 1e-9 or the call fails.
inline PropagationResult propagate_covariance(const DriftNoiseMatrices& m,
                                              double mean_jx_in = 1.0, int rk4_steps = 2048) {
    // stiff drifts need smaller steps to hold the 1e-9 route agreement
    const int steps = std::max(rk4_steps,
                               512 * static_cast<int>(std::ceil(m.c1.cwiseAbs().maxCoeff())));
    const Eigen::Matrix2d exact = detail::integrate_lyapunov_expm(m.c1, m.diffusion);
    const Eigen::Matrix2d stepped = detail::integrate_lyapunov_rk4(m.c1, m.diffusion, steps);
    const double diff = (exact - stepped).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
    if (!(diff <= 1e-9 * scale))
        throw model_violation("covariance propagation routes disagree by " +
                              std::to_string(diff / scale) + " (relative)");

    PropagationResult r;
    r.sigma = exact;
    r.mean_jx_in = mean_jx_in;
    r.mean_jx_out = mean_jx_in * (1.0 - m.eta_tilde);
    r.route_disagreement = diff;
    if (!r.sigma.allFinite())
        throw model_violation("covariance propagation diverged");
    return r;
}

/// Wineland figures of a propagated covariance.
inline SqueezingResult squeezing_of(const PropagationResult& r) {
    return xi_squared(r.sigma, r.mean_jx_out, r.mean_jx_in);
}

} // namespace mpqe

#endif // MPQE_CONTINUOUS_HPP
