#pragma once

// Closed-form cooling analytics in three regimes, exposed separately because
// each carries its own validity assumptions:
//   - weak-coupling adiabatic forms (two-mode closed form and the general-N
//     dissipation-matrix form),
//   - the strong-drive classical saturation limit (two symmetric modes),
//   - the quantum backaction limit from the force-noise asymmetry.
// All drive strengths are totals (Gamma = sum_k Gamma_k); the symmetric
// two-mode forms assume kappa_1 = kappa_2, gamma_1 = gamma_2 and an equal
// split Gamma_k = Gamma/2.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "omcool/errors.hpp"
#include "omcool/model.hpp"
#include "omcool/spectral.hpp"

namespace omcool {

/// Symmetric-parameter inputs for the closed-form limits, with the
/// strong-coupling auxiliaries s = (gamma + kappa) / Gamma and
/// L = gamma [(s+2)^2 - 4 cos^2(theta)] / kappa.
struct LimitInputs {
    double gamma = 0.0;       // uniform mechanical linewidth
    double kappa = 0.0;       // uniform optical linewidth
    double n_th = 0.0;
    double gamma_drive = 0.0; // total drive strength
    double theta = 0.0;       // coupling angle (two-mode forms)
    double domega = 0.0;      // mechanical splitting
    double omega_bar = 0.0;   // mean mechanical frequency

    double s() const { return (gamma + kappa) / gamma_drive; }
    double big_l() const {
        const double sv = s();
        return gamma * ((sv + 2.0) * (sv + 2.0) - 4.0 * std::cos(theta) * std::cos(theta)) / kappa;
    }
};

/// Steady total occupancy of two symmetric near-degenerate modes under two
/// drives at total strength Gamma, full weak-coupling closed form including
/// the finite-splitting correction. The domega << Gamma reduction is
///   2 gamma n (gamma + 2 Gamma) / (gamma^2 + 4 gamma Gamma +
///   4 Gamma^2 sin^2 theta).
inline double weak_coupling_two_mode(double gamma, double gamma_drive, double theta,
                                     double domega, double n_th) {
    const double c2 = std::cos(theta) * std::cos(theta);
    const double a = gamma + 2.0 * gamma_drive;
    const double num = 2.0 * gamma * n_th * a;
    const double den = a * a - 4.0 * gamma_drive * gamma_drive * c2 * (a * a) /
                                   (a * a + domega * domega);
    return num / den;
}

/// General-N weak-coupling limit for square invertible G. Evaluates both
/// published routes — (1/4) gamma kappa n ||G^-1||_2 (uniform kappa, with
/// ||.||_2 the entrywise square sum) and (gamma n / 2) Tr P^-1 — and checks
/// they agree to 1e-10 before returning the Tr-form value, which also covers
/// nonuniform kappa.
inline double weak_coupling_general(const Eigen::MatrixXcd& coupling,
                                    const Eigen::VectorXd& kappa, double gamma, double n_th) {
    const int n = static_cast<int>(coupling.rows());
    if (n == 0 || coupling.cols() != n)
        throw std::invalid_argument("weak_coupling_general: square coupling matrix required");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(coupling);
    if (svd.singularValues().minCoeff() <= 1e-12 * svd.singularValues().maxCoeff())
        throw StabilityError("weak_coupling_general: coupling rows are dependent, a dark mode "
                             "survives and the limit is thermal-scale");

    LinearizedSystem ls;
    ls.g = coupling;
    ls.kappa = kappa;
    ls.delta = Eigen::VectorXd::Zero(n);
    ls.omega = Eigen::VectorXd::Zero(n);
    ls.gamma = Eigen::VectorXd::Zero(n);
    const Eigen::MatrixXcd p = dissipation_matrix(ls).total;
    const double via_trace = 0.5 * gamma * n_th * p.inverse().trace().real();

    const bool uniform_kappa = (kappa.maxCoeff() - kappa.minCoeff()) <= 1e-12 * kappa.maxCoeff();
    if (uniform_kappa) {
        const double frob2 = coupling.inverse().squaredNorm();
        const double via_norm = 0.25 * gamma * kappa[0] * n_th * frob2;
        if (std::abs(via_norm - via_trace) > 1e-10 * std::abs(via_trace))
            throw NumericalError("weak_coupling_general: the two published routes disagree");
    }
    return via_trace;
}

/// Cooling limit from per-drive strengths and hyperplane angles:
/// (gamma n / 4) sum_k 1 / (Gamma_k sin^2 theta_k).
inline double limit_by_angles(const Eigen::VectorXd& gamma_k, const Eigen::VectorXd& theta_k,
                              double gamma, double n_th) {
    if (gamma_k.size() != theta_k.size())
        throw std::invalid_argument("limit_by_angles: mismatched lengths");
    double sum = 0.0;
    for (int k = 0; k < gamma_k.size(); ++k) {
        const double s = std::sin(theta_k[k]);
        if (s == 0.0)
            throw std::domain_error("limit_by_angles: theta_k = 0 makes the limit diverge "
                                    "(collinear coupling rows)");
        sum += 1.0 / (gamma_k[k] * s * s);
    }
    return 0.25 * gamma * n_th * sum;
}

/// Strong-drive classical limit of the symmetric two-mode system
/// (domega = 0, Gamma split evenly). Saturates at 2 gamma n / (gamma + kappa)
/// for theta != 0 and at (gamma/(gamma+kappa) + 1) n for theta = 0.
inline double classical_limit_two_mode(double gamma, double kappa, double gamma_drive,
                                       double theta, double n_th) {
    if (gamma_drive == 0.0) return 2.0 * n_th;
    LimitInputs in;
    in.gamma = gamma;
    in.kappa = kappa;
    in.gamma_drive = gamma_drive;
    in.theta = theta;
    in.n_th = n_th;
    const double s = in.s();
    const double big_l = in.big_l();
    const double c2 = std::cos(theta) * std::cos(theta);
    const double s2 = 1.0 - c2;
    const double block = big_l + 2.0 * s + 4.0 * s2;
    const double den = block - 4.0 * s * s * c2 / block;
    return 2.0 * big_l * n_th / den;
}

struct QuantumLimit {
    std::function<double(double)> force_noise; // S^FF(omega), units (x_zpf)^-2 = 1
    double n_quantum = 0.0;
};

/// Backaction limit of one mechanical mode from the force-noise spectrum
/// S(omega) = sum_k |g_kj|^2 / ((omega - delta_k)^2 + kappa_k^2/4):
/// n_Q = S(-omega_bar) / (S(omega_bar) - S(-omega_bar)). At uniform kappa and
/// delta_k = omega_bar this is kappa^2 / (16 omega_bar^2) independently of G.
inline QuantumLimit quantum_limit(const Eigen::VectorXcd& coupling_column,
                                  const Eigen::VectorXd& delta, const Eigen::VectorXd& kappa,
                                  double omega_bar) {
    if (coupling_column.size() != delta.size() || delta.size() != kappa.size())
        throw std::invalid_argument("quantum_limit: mismatched lengths");
    Eigen::VectorXd weights(coupling_column.size());
    for (int k = 0; k < coupling_column.size(); ++k) weights[k] = std::norm(coupling_column[k]);
    QuantumLimit out;
    out.force_noise = [weights, delta, kappa](double omega) {
        double s = 0.0;
        for (int k = 0; k < weights.size(); ++k) {
            const double d = omega - delta[k];
            s += weights[k] / (d * d + kappa[k] * kappa[k] / 4.0);
        }
        return s;
    };
    const double red = out.force_noise(omega_bar);
    const double blue = out.force_noise(-omega_bar);
    if (!(red > blue))
        throw std::domain_error("quantum_limit: blue-sideband dominated spectrum, the drive "
                                "heats instead of cooling");
    out.n_quantum = blue / (red - blue);
    return out;
}

} // namespace omcool
