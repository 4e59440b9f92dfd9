#ifndef MPQE_METRICS_HPP
#define MPQE_METRICS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "mpqe/errors.hpp"

namespace mpqe {

/// Wineland squeezing figures for one output spin state.
struct SqueezingResult {
    double xi2 = 1.0;         // Wineland parameter, < 1 means squeezed
    double xi2_db = 0.0;      // -10 log10(xi2), positive dB of squeezing
    double theta_opt = 0.0;   // direction of minimal variance in the (J_y, J_z)
                              // plane, measured from +J_y, in [0, pi)
    double mean_jx_out = 0.0; // spin length after decay
};

/// Sum over pass pairs of the accumulated twisting coefficient for an N-pass
/// loop with 2 pi / N rotations; equals (N/2) cot(pi/N).
inline double lambda_coefficient(int n_passes) {
    if (n_passes < 3)
        throw config_error("lambda_coefficient: requires n_passes >= 3");
    const double theta = 2.0 * std::numbers::pi / static_cast<double>(n_passes);
    double sum = 0.0;
    for (int n = 1; n < n_passes; ++n)
        sum += static_cast<double>(n_passes - n) * std::sin(n * theta);
    return sum;
}

/// Wineland parameter of a normalized 2x2 spin covariance (CSS variance 1/2
/// per quadrature):
///   xi^2 = 2 lambda_min (jx_in / jx_out)^2
/// so an untouched CSS gives exactly 1.
inline SqueezingResult xi_squared(const Eigen::Matrix2d& spin_cov, double mean_jx_out,
                                  double mean_jx_in) {
    if (!(mean_jx_in > 0.0) || !(mean_jx_out > 0.0))
        throw config_error("xi_squared: spin lengths must be positive");
    const double a = spin_cov(0, 0);
    const double b = spin_cov(1, 1);
    const double c = 0.5 * (spin_cov(0, 1) + spin_cov(1, 0));
    if (!(a > 0.0) || !(b > 0.0))
        throw model_violation("xi_squared: covariance has non-positive variance");

    const double half_tr = 0.5 * (a + b);
    const double radius = std::hypot(0.5 * (a - b), c);
    double lam_min = half_tr - radius;
    const double lam_max = half_tr + radius;
    // guard against cancellation when the spectrum spans many decades
    const double det = a * b - c * c;
    if (lam_min < 1e-10 * lam_max) lam_min = det / lam_max;
    if (!(lam_min > 0.0))
        throw model_violation("xi_squared: covariance is not positive definite");

    SqueezingResult r;
    const double ratio = mean_jx_in / mean_jx_out;
    r.xi2 = 2.0 * lam_min * ratio * ratio;
    r.xi2_db = -10.0 * std::log10(r.xi2);
    r.mean_jx_out = mean_jx_out;

    // eigenvector of lam_min; ties resolve to theta = 0
    const double eps = 1e-14 * std::max(1.0, lam_max);
    if (radius <= eps) {
        r.theta_opt = 0.0;
    } else {
        double vx, vp;
        if (std::abs(c) > eps) {
            vx = c;
            vp = lam_min - a;
        } else {
            vx = (a <= b) ? 1.0 : 0.0;
            vp = (a <= b) ? 0.0 : 1.0;
        }
        double th = std::atan2(vp, vx);
        if (th < 0.0) th += std::numbers::pi;
        if (th >= std::numbers::pi) th -= std::numbers::pi;
        r.theta_opt = th;
    }
    return r;
}

/// Squeezing parameter of the double-pass reference scheme,
///   xi_DP^2 = 1 + (kappa^4/2 + kappa^2) [1 - sqrt(1 + 4/(2 + kappa^2)^2)],
/// which tends to 2 / kappa^2 for large coupling.
inline double dp_reference(double kappa) {
    if (kappa < 0.0)
        throw config_error("dp_reference: kappa must be >= 0");
    const double k2 = kappa * kappa;
    return 1.0 + (k2 * k2 / 2.0 + k2) * (1.0 - std::sqrt(1.0 + 4.0 / ((2.0 + k2) * (2.0 + k2))));
}

/// Lossless N-pass one-axis twisting: smallest eigenvalue (doubled) of the
/// pure shear covariance with mu = lambda_coefficient(N) kappa^2.
inline double ideal_oat_reference(double kappa, int n_passes) {
    const double mu = lambda_coefficient(n_passes) * kappa * kappa;
    return 1.0 + mu * mu / 2.0 - mu * std::sqrt(1.0 + mu * mu / 4.0);
}

/// Lossless N-pass two-axis twisting: xi^2 = exp(-lambda_coefficient(N) kappa^2),
/// reducing to exp(-sqrt(3) kappa^2 / 2) for the triple pass.
inline double ideal_tat_reference(double kappa, int n_passes) {
    return std::exp(-lambda_coefficient(n_passes) * kappa * kappa);
}

} // namespace mpqe

#endif // MPQE_METRICS_HPP
