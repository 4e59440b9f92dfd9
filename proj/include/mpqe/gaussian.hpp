#ifndef MPQE_GAUSSIAN_HPP
#define MPQE_GAUSSIAN_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mpqe/errors.hpp"

namespace mpqe {

/// Gaussian state over pairs of conjugate quadratures, one (x, p) pair per
/// labeled mode. Normalization: vacuum (and the coherent spin state, after
/// dividing J_y, J_z by sqrt(<J_x>)) has variance 1/2 per quadrature.
///
/// By convention the first mode is the system of interest (the collective
/// spin); partial_trace refuses to remove it.
struct GaussianState {
    std::vector<std::string> labels;
    Eigen::VectorXd mean; // (x_0, p_0, x_1, p_1, ...)
    Eigen::MatrixXd cov;  // symmetrized second central moments

    static GaussianState vacuum(std::vector<std::string> mode_labels) {
        GaussianState s;
        const auto n = static_cast<Eigen::Index>(2 * mode_labels.size());
        s.labels = std::move(mode_labels);
        s.mean = Eigen::VectorXd::Zero(n);
        s.cov = 0.5 * Eigen::MatrixXd::Identity(n, n);
        return s;
    }

    int n_modes() const { return static_cast<int>(labels.size()); }

    int mode_index(const std::string& label) const {
        for (int i = 0; i < n_modes(); ++i)
            if (labels[i] == label) return i;
        throw config_error("unknown mode label '" + label + "'");
    }

    double var_x(int mode) const { return cov(2 * mode, 2 * mode); }
    double var_p(int mode) const { return cov(2 * mode + 1, 2 * mode + 1); }
};

/// Symplectic form for n modes, block diag([[0,1],[-1,0]]).
inline Eigen::MatrixXd symplectic_form(int n_modes) {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
    for (int m = 0; m < n_modes; ++m) {
        omega(2 * m, 2 * m + 1) = 1.0;
        omega(2 * m + 1, 2 * m) = -1.0;
    }
    return omega;
}

namespace inplace {

// Mutating kernels shared by the pure wrappers below and the slice
// simulator's hot loop. Each applies one linear (or Gaussian-channel) map to
// mean and covariance congruently.

/// Faraday interaction of one spin mode with one light mode at pass axis
/// theta. Generated by H ~ kappa (P cos(theta) - X sin(theta)) p_L:
///   x_L += kappa (P cos(theta) - X sin(theta))
///   X   += kappa p_L cos(theta)
///   P   += kappa p_L sin(theta)
inline void faraday_pass(GaussianState& s, int spin_mode, int light_mode, double kappa_step,
                         double theta_pass) {
    const double a = kappa_step * std::cos(theta_pass);
    const double b = kappa_step * std::sin(theta_pass);
    const int iX = 2 * spin_mode, iP = 2 * spin_mode + 1;
    const int ix = 2 * light_mode, ip = 2 * light_mode + 1;

    s.mean(ix) += a * s.mean(iP) - b * s.mean(iX);
    s.mean(iX) += a * s.mean(ip);
    s.mean(iP) += b * s.mean(ip);

    // x_L row first: it combines the still-unmodified spin rows. The light p
    // row is never touched, so the spin rows can then be updated from it.
    s.cov.row(ix) += a * s.cov.row(iP) - b * s.cov.row(iX);
    s.cov.row(iX) += a * s.cov.row(ip);
    s.cov.row(iP) += b * s.cov.row(ip);
    s.cov.col(ix) += a * s.cov.col(iP) - b * s.cov.col(iX);
    s.cov.col(iX) += a * s.cov.col(ip);
    s.cov.col(iP) += b * s.cov.col(ip);
}

/// Rotation of one mode's quadratures: x -> x cos(a) + p sin(a),
/// p -> p cos(a) - x sin(a). Waveplates act on light; a magnetic field along
/// x with Larmor rate Omega acts on the spin mode as angle = -Omega * t.
inline void quadrature_rotation(GaussianState& s, int mode, double angle) {
    const double c = std::cos(angle), sn = std::sin(angle);
    const int ix = 2 * mode, ip = 2 * mode + 1;

    const double mx = s.mean(ix), mp = s.mean(ip);
    s.mean(ix) = c * mx + sn * mp;
    s.mean(ip) = -sn * mx + c * mp;

    const Eigen::RowVectorXd rx = s.cov.row(ix);
    s.cov.row(ix) = c * rx + sn * s.cov.row(ip);
    s.cov.row(ip) = -sn * rx + c * s.cov.row(ip);
    const Eigen::VectorXd cx = s.cov.col(ix);
    s.cov.col(ix) = c * cx + sn * s.cov.col(ip);
    s.cov.col(ip) = -sn * cx + c * s.cov.col(ip);
}

/// Beam-splitter admixture of vacuum: mean *= sqrt(1-zeta), mode block ->
/// (1-zeta) block + zeta/2 I, cross covariances *= sqrt(1-zeta).
inline void loss_channel(GaussianState& s, int mode, double zeta_step) {
    if (!(zeta_step >= 0.0 && zeta_step <= 1.0))
        throw config_error("loss channel: zeta_step must lie in [0, 1]");
    const double rt = std::sqrt(1.0 - zeta_step);
    const int ix = 2 * mode, ip = 2 * mode + 1;
    s.mean(ix) *= rt;
    s.mean(ip) *= rt;
    s.cov.row(ix) *= rt;
    s.cov.row(ip) *= rt;
    s.cov.col(ix) *= rt;
    s.cov.col(ip) *= rt;
    s.cov(ix, ix) += 0.5 * zeta_step;
    s.cov(ip, ip) += 0.5 * zeta_step;
}

/// One step of transverse-spin decay with its Langevin diffusion; in
/// normalized units the diffusion floor equals the vacuum level, so the CSS
/// block (1/2) I is a fixed point:
///   mean *= (1 - eta dt / 2),  block -> (1 - eta dt) block + (eta dt / 2) I.
inline void spin_decay_step(GaussianState& s, int spin_mode, double eta_tilde, double dt) {
    const double ed = eta_tilde * dt;
    if (ed < 0.0)
        throw config_error("spin decay: eta*dt must be non-negative");
    if (ed > 0.5)
        throw config_error("spin decay: step too coarse, eta*dt = " + std::to_string(ed) +
                           " > 0.5");
    const double rf = std::sqrt(1.0 - ed);
    const int iX = 2 * spin_mode, iP = 2 * spin_mode + 1;
    s.mean(iX) *= 1.0 - ed / 2.0;
    s.mean(iP) *= 1.0 - ed / 2.0;
    s.cov.row(iX) *= rf;
    s.cov.row(iP) *= rf;
    s.cov.col(iX) *= rf;
    s.cov.col(iP) *= rf;
    s.cov(iX, iX) += 0.5 * ed;
    s.cov(iP, iP) += 0.5 * ed;
}

/// Reset one mode to vacuum, dropping all of its correlations. Equivalent to
/// partial_trace followed by attaching a fresh vacuum mode with the same
/// label, without resizing.
inline void reset_to_vacuum(GaussianState& s, int mode) {
    const int ix = 2 * mode, ip = 2 * mode + 1;
    s.mean(ix) = 0.0;
    s.mean(ip) = 0.0;
    s.cov.row(ix).setZero();
    s.cov.row(ip).setZero();
    s.cov.col(ix).setZero();
    s.cov.col(ip).setZero();
    s.cov(ix, ix) = 0.5;
    s.cov(ip, ip) = 0.5;
}

} // namespace inplace

inline GaussianState faraday_pass(const GaussianState& s, const std::string& spin_mode,
                                  const std::string& light_mode, double kappa_step,
                                  double theta_pass) {
    if (kappa_step < 0.0)
        throw config_error("faraday_pass: kappa_step must be >= 0");
    const int sm = s.mode_index(spin_mode);
    const int lm = s.mode_index(light_mode);
    if (sm == lm)
        throw config_error("faraday_pass: spin and light modes must differ");
    GaussianState out = s;
    inplace::faraday_pass(out, sm, lm, kappa_step, theta_pass);
    return out;
}

inline GaussianState quadrature_rotation(const GaussianState& s, const std::string& mode,
                                         double angle) {
    GaussianState out = s;
    inplace::quadrature_rotation(out, s.mode_index(mode), angle);
    return out;
}

inline GaussianState loss_channel(const GaussianState& s, const std::string& mode,
                                  double zeta_step) {
    GaussianState out = s;
    inplace::loss_channel(out, s.mode_index(mode), zeta_step);
    return out;
}

inline GaussianState spin_decay_step(const GaussianState& s, const std::string& spin_mode,
                                     double eta_tilde, double dt) {
    GaussianState out = s;
    inplace::spin_decay_step(out, s.mode_index(spin_mode), eta_tilde, dt);
    return out;
}

/// Remove one mode's rows and columns. The first mode is pinned (it is the
/// collective spin in every scheme here) and cannot be traced out.
inline GaussianState partial_trace(const GaussianState& s, const std::string& mode) {
    const int m = s.mode_index(mode);
    if (m == 0)
        throw config_error("partial_trace: cannot trace out the spin mode '" + mode + "'");
    if (s.n_modes() < 2)
        throw config_error("partial_trace: state has a single mode");

    GaussianState out;
    out.labels = s.labels;
    out.labels.erase(out.labels.begin() + m);
    const int n_old = 2 * s.n_modes();
    std::vector<int> keep;
    keep.reserve(n_old - 2);
    for (int i = 0; i < n_old; ++i)
        if (i != 2 * m && i != 2 * m + 1) keep.push_back(i);

    out.mean = Eigen::VectorXd(keep.size());
    out.cov = Eigen::MatrixXd(keep.size(), keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.mean(static_cast<Eigen::Index>(i)) = s.mean(keep[i]);
        for (std::size_t j = 0; j < keep.size(); ++j)
            out.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                s.cov(keep[i], keep[j]);
    }
    return out;
}

/// Append a fresh vacuum mode.
inline GaussianState attach_vacuum(const GaussianState& s, std::string label) {
    for (const auto& l : s.labels)
        if (l == label) throw config_error("attach_vacuum: duplicate mode label '" + label + "'");
    GaussianState out;
    out.labels = s.labels;
    out.labels.push_back(std::move(label));
    const auto n_old = s.mean.size();
    out.mean = Eigen::VectorXd::Zero(n_old + 2);
    out.mean.head(n_old) = s.mean;
    out.cov = Eigen::MatrixXd::Zero(n_old + 2, n_old + 2);
    out.cov.topLeftCorner(n_old, n_old) = s.cov;
    out.cov(n_old, n_old) = 0.5;
    out.cov(n_old + 1, n_old + 1) = 0.5;
    return out;
}

/// Symplectic spectrum of the covariance matrix, sorted ascending. Every
/// value equals 1/2 iff the state is pure; physical states respect
/// nu_min >= 1/2.
inline std::vector<double> symplectic_eigenvalues(const GaussianState& s) {
    const Eigen::MatrixXd sym = 0.5 * (s.cov + s.cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> chk(sym);
    if (chk.eigenvalues().minCoeff() <= 0.0)
        throw model_violation("covariance matrix is not positive definite");

    const Eigen::MatrixXd m = symplectic_form(s.n_modes()) * sym;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
    std::vector<double> nus;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double im = es.eigenvalues()(i).imag();
        if (im > 0.0) nus.push_back(im);
    }
    std::sort(nus.begin(), nus.end());
    return nus;
}

/// Throws model_violation unless all symplectic eigenvalues are >= 1/2 - tol
/// and the covariance is symmetric.
inline void require_physical(const GaussianState& s, double tol = 1e-9,
                             const std::string& context = "") {
    const double asym = (s.cov - s.cov.transpose()).cwiseAbs().maxCoeff();
    if (!(asym < 1e-9 * std::max(1.0, s.cov.cwiseAbs().maxCoeff())))
        throw model_violation("covariance lost symmetry" +
                              (context.empty() ? "" : " (" + context + ")"));
    const auto nus = symplectic_eigenvalues(s);
    if (nus.front() < 0.5 - tol)
        throw model_violation("covariance violates the uncertainty bound, nu_min = " +
                              std::to_string(nus.front()) +
                              (context.empty() ? "" : " (" + context + ")"));
}

} // namespace mpqe

#endif // MPQE_GAUSSIAN_HPP
