#pragma once

// Classical steady state of the driven system and the linearized fluctuation
// model built on top of it. The self-consistent equations are
//   alpha_k = -i Q_k / (i delta_k + kappa_k/2)
//   beta_j  = i sum_k gS_kj |alpha_k|^2 / (i omega_j + gamma_j/2)
//   delta_k = delta'_k + sum_j gS_kj * 2 Re(beta_j)
// solved by damped Picard iteration. The linearized couplings are
// g_kj = gS_kj * alpha_k.
//
// Configs that already carry linearized couplings skip the solve entirely
// (make_direct_linearized): their optical detunings are taken as the
// corrected detunings.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "omcool/errors.hpp"
#include "omcool/model.hpp"

namespace omcool {

struct LinearizedSystem {
    Eigen::VectorXcd alpha; // classical optical amplitudes (M)
    Eigen::VectorXcd beta;  // classical mechanical amplitudes (N)
    Eigen::VectorXd delta;  // corrected detunings (M)
    Eigen::VectorXd kappa;  // optical linewidths (M)
    Eigen::VectorXd omega;  // mechanical frequencies (N)
    Eigen::VectorXd gamma;  // mechanical linewidths (N)
    Eigen::MatrixXcd g;     // linearized couplings (M x N)
    double residual = 0.0;  // final fixed-point residual (relative)

    int drives() const { return static_cast<int>(delta.size()); }
    int modes() const { return static_cast<int>(omega.size()); }
};

struct HamiltonianMatrices {
    Eigen::MatrixXd delta; // diagonal, M x M
    Eigen::MatrixXd omega; // diagonal, N x N
    Eigen::MatrixXcd g;    // M x N
    Eigen::MatrixXd kappa; // diagonal, M x M
};

namespace detail {

inline void copy_mode_parameters(const SystemConfig& cfg, LinearizedSystem& ls) {
    const int m = cfg.num_optical(), n = cfg.num_mechanical();
    ls.kappa.resize(m);
    ls.omega.resize(n);
    ls.gamma.resize(n);
    for (int k = 0; k < m; ++k) ls.kappa[k] = cfg.optical[k].kappa;
    for (int j = 0; j < n; ++j) {
        ls.omega[j] = cfg.mechanical[j].omega;
        ls.gamma[j] = cfg.mechanical[j].gamma;
    }
}

} // namespace detail

/// Wrap a config whose coupling matrix is already linearized. The bare
/// detunings are used directly as the corrected detunings; classical
/// amplitudes are not part of this entry path and stay zero.
inline LinearizedSystem make_direct_linearized(const SystemConfig& cfg) {
    if (cfg.coupling.kind != CouplingMatrix::Kind::Linearized)
        throw std::invalid_argument("make_direct_linearized: coupling kind must be linearized");
    LinearizedSystem ls;
    detail::copy_mode_parameters(cfg, ls);
    const int m = cfg.num_optical(), n = cfg.num_mechanical();
    ls.alpha = Eigen::VectorXcd::Zero(m);
    ls.beta = Eigen::VectorXcd::Zero(n);
    ls.delta.resize(m);
    for (int k = 0; k < m; ++k) ls.delta[k] = cfg.optical[k].bare_detuning();
    ls.g = cfg.coupling.g;
    return ls;
}

/// Solve the classical fixed point for a single-photon-coupled config.
/// Damped Picard iteration (damping 0.5, relative tolerance 1e-12, at most
/// 10^4 iterations). Non-convergence signals bistability or an unusually
/// large single-photon coupling and is reported with the last residual.
inline LinearizedSystem classical_steady_state(const SystemConfig& cfg,
                                               double tol = 1e-12,
                                               int max_iterations = 10000) {
    if (max_iterations < 1) max_iterations = 1;
    if (cfg.coupling.kind != CouplingMatrix::Kind::SinglePhoton)
        throw std::invalid_argument("classical_steady_state: single-photon couplings required");
    const int m = cfg.num_optical(), n = cfg.num_mechanical();
    const Eigen::MatrixXcd& gs = cfg.coupling.g;
    const Complex iunit(0.0, 1.0);

    Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(m);
    Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXd delta(m);

    double residual = 0.0;
    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        // Detuning shift is the real part of sum_j gS_kj (beta_j + beta_j*).
        for (int k = 0; k < m; ++k) {
            Complex cshift(0.0, 0.0);
            for (int j = 0; j < n; ++j) cshift += gs(k, j) * (beta[j] + std::conj(beta[j]));
            delta[k] = cfg.optical[k].bare_detuning() + cshift.real();
        }
        Eigen::VectorXcd alpha_new(m);
        for (int k = 0; k < m; ++k) {
            alpha_new[k] = -iunit * cfg.optical[k].drive_amplitude /
                           (iunit * delta[k] + cfg.optical[k].kappa / 2.0);
        }
        Eigen::VectorXcd beta_new(n);
        for (int j = 0; j < n; ++j) {
            Complex s(0.0, 0.0);
            for (int k = 0; k < m; ++k) s += gs(k, j) * std::norm(alpha_new[k]);
            beta_new[j] = iunit * s / (iunit * cfg.mechanical[j].omega + cfg.mechanical[j].gamma / 2.0);
        }
        double scale = std::max({1e-300, alpha.norm(), alpha_new.norm(), beta.norm(), beta_new.norm()});
        residual = std::max((alpha_new - alpha).norm(), (beta_new - beta).norm()) / scale;
        if (residual < tol) {
            alpha = alpha_new;
            beta = beta_new;
            converged = true;
            break;
        }
        alpha = 0.5 * alpha + 0.5 * alpha_new;
        beta = 0.5 * beta + 0.5 * beta_new;
    }
    if (!converged)
        throw ConvergenceError("classical_steady_state: fixed point did not converge "
                               "(possible bistability); last residual " +
                                   std::to_string(residual),
                               residual);

    LinearizedSystem ls;
    detail::copy_mode_parameters(cfg, ls);
    ls.alpha = alpha;
    ls.beta = beta;
    // Final self-consistent detunings for the converged amplitudes.
    ls.delta.resize(m);
    for (int k = 0; k < m; ++k) {
        Complex cshift(0.0, 0.0);
        for (int j = 0; j < n; ++j) cshift += gs(k, j) * (beta[j] + std::conj(beta[j]));
        ls.delta[k] = cfg.optical[k].bare_detuning() + cshift.real();
    }
    ls.g.resize(m, n);
    for (int k = 0; k < m; ++k)
        for (int j = 0; j < n; ++j) ls.g(k, j) = gs(k, j) * alpha[k];
    ls.residual = residual;
    return ls;
}

/// Drive amplitude Q_k that makes drive k reach a target strength
/// Gamma_k = |alpha_k|^2 ||gS_k||^2 / kappa_k, holding the other drives'
/// amplitudes fixed. The returned amplitude gives alpha_k real positive
/// (a gauge choice; any phase works).
inline Complex amplitude_for_target_strength(const SystemConfig& cfg, int k, double gamma_target,
                                             double tol = 1e-12, int max_iter = 10000) {
    if (cfg.coupling.kind != CouplingMatrix::Kind::SinglePhoton)
        throw std::invalid_argument("amplitude_for_target_strength: single-photon couplings required");
    if (k < 0 || k >= cfg.num_optical())
        throw std::invalid_argument("amplitude_for_target_strength: drive index out of range");
    if (gamma_target < 0.0)
        throw std::invalid_argument("amplitude_for_target_strength: target must be nonnegative");
    const double row_norm2 = cfg.coupling.g.row(k).squaredNorm();
    if (gamma_target > 0.0 && row_norm2 == 0.0)
        throw std::invalid_argument("amplitude_for_target_strength: drive " + std::to_string(k + 1) +
                                    " has zero single-photon coupling row");
    if (gamma_target == 0.0) return Complex(0.0, 0.0);

    const int m = cfg.num_optical(), n = cfg.num_mechanical();
    const Eigen::MatrixXcd& gs = cfg.coupling.g;
    const Complex iunit(0.0, 1.0);
    const double alpha_k_abs = std::sqrt(gamma_target * cfg.optical[k].kappa / row_norm2);

    // Fixed point over the other drives' amplitudes with |alpha_k| pinned.
    Eigen::VectorXcd alpha = Eigen::VectorXcd::Zero(m);
    alpha[k] = alpha_k_abs;
    Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXd delta(m);
    double residual = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        for (int j = 0; j < n; ++j) {
            Complex s(0.0, 0.0);
            for (int kk = 0; kk < m; ++kk) s += gs(kk, j) * std::norm(alpha[kk]);
            beta[j] = iunit * s / (iunit * cfg.mechanical[j].omega + cfg.mechanical[j].gamma / 2.0);
        }
        for (int kk = 0; kk < m; ++kk) {
            Complex cshift(0.0, 0.0);
            for (int j = 0; j < n; ++j) cshift += gs(kk, j) * (beta[j] + std::conj(beta[j]));
            delta[kk] = cfg.optical[kk].bare_detuning() + cshift.real();
        }
        Eigen::VectorXcd alpha_new = alpha;
        for (int kk = 0; kk < m; ++kk) {
            if (kk == k) continue;
            alpha_new[kk] = -iunit * cfg.optical[kk].drive_amplitude /
                            (iunit * delta[kk] + cfg.optical[kk].kappa / 2.0);
        }
        double scale = std::max(1e-300, alpha.norm());
        residual = (alpha_new - alpha).norm() / scale;
        alpha = alpha_new;
        if (residual < tol) break;
    }
    if (residual >= tol)
        throw ConvergenceError("amplitude_for_target_strength: fixed point did not converge",
                               residual);
    // Q_k from alpha_k = -i Q_k / (i delta_k + kappa_k/2).
    return iunit * Complex(alpha_k_abs, 0.0) * (iunit * delta[k] + cfg.optical[k].kappa / 2.0);
}

/// Joint inversion: drive amplitudes Q such that every drive reaches its
/// target strength simultaneously. With all |alpha_k| pinned the classical
/// equations close without iteration: beta follows from the photon numbers,
/// the corrected detunings from beta, and each Q_k from its alpha_k (chosen
/// real positive).
inline Eigen::VectorXcd amplitudes_for_target_strengths(const SystemConfig& cfg,
                                                        const Eigen::VectorXd& targets) {
    if (cfg.coupling.kind != CouplingMatrix::Kind::SinglePhoton)
        throw std::invalid_argument("amplitudes_for_target_strengths: single-photon couplings required");
    const int m = cfg.num_optical(), n = cfg.num_mechanical();
    if (targets.size() != m)
        throw std::invalid_argument("amplitudes_for_target_strengths: one target per drive required");
    const Eigen::MatrixXcd& gs = cfg.coupling.g;
    const Complex iunit(0.0, 1.0);

    Eigen::VectorXd alpha_abs(m);
    for (int k = 0; k < m; ++k) {
        if (targets[k] < 0.0)
            throw std::invalid_argument("amplitudes_for_target_strengths: targets must be nonnegative");
        const double row_norm2 = gs.row(k).squaredNorm();
        if (targets[k] > 0.0 && row_norm2 == 0.0)
            throw std::invalid_argument("amplitudes_for_target_strengths: drive " +
                                        std::to_string(k + 1) + " has zero coupling row");
        alpha_abs[k] = targets[k] > 0.0
                           ? std::sqrt(targets[k] * cfg.optical[k].kappa / row_norm2)
                           : 0.0;
    }
    Eigen::VectorXcd q(m);
    Eigen::VectorXcd beta(n);
    for (int j = 0; j < n; ++j) {
        Complex s(0.0, 0.0);
        for (int k = 0; k < m; ++k) s += gs(k, j) * alpha_abs[k] * alpha_abs[k];
        beta[j] = iunit * s / (iunit * cfg.mechanical[j].omega + cfg.mechanical[j].gamma / 2.0);
    }
    for (int k = 0; k < m; ++k) {
        Complex cshift(0.0, 0.0);
        for (int j = 0; j < n; ++j) cshift += gs(k, j) * (beta[j] + std::conj(beta[j]));
        const double delta_k = cfg.optical[k].bare_detuning() + cshift.real();
        q[k] = iunit * Complex(alpha_abs[k], 0.0) * (iunit * delta_k + cfg.optical[k].kappa / 2.0);
    }
    return q;
}

/// Diagonal/coupling matrices of the linearized Hamiltonian.
inline HamiltonianMatrices linearized_hamiltonian_matrices(const LinearizedSystem& ls) {
    HamiltonianMatrices h;
    h.delta = ls.delta.asDiagonal();
    h.omega = ls.omega.asDiagonal();
    h.kappa = ls.kappa.asDiagonal();
    h.g = ls.g;
    return h;
}

} // namespace omcool
