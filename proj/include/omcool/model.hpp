#pragma once

// Domain types for a multimode optomechanical system: M driven optical modes
// coupled to N mechanical modes. All frequencies, linewidths and drive
// amplitudes are angular frequencies. Two unit systems are supported:
//   Kappa1    — dimensionless, everything expressed in units of kappa_1
//               (the first optical linewidth); kappa1_si optionally anchors
//               the scale so temperatures remain usable.
//   SiAngular — rad/s throughout.
//
// Near-degeneracy of the mechanical modes is an assumption of the analytic
// limits, not a validated constraint: general asymmetric systems stay
// expressible. "Well separated" optical modes are likewise the caller's
// responsibility.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omcool/constants.hpp"
#include "omcool/errors.hpp"

namespace omcool {

using Complex = std::complex<double>;

struct OpticalModeSpec {
    int index = 0;                    // 1-based position k
    double nu = 0.0;                  // bare frequency
    double kappa = 0.0;               // linewidth
    Complex drive_amplitude{0.0, 0.0}; // Q_k
    double drive_frequency = 0.0;     // omega^d_k

    /// Bare drive detuning delta'_k = nu_k - omega^d_k.
    double bare_detuning() const { return nu - drive_frequency; }
};

struct MechanicalModeSpec {
    int index = 0;      // 1-based position j
    double omega = 0.0; // frequency
    double gamma = 0.0; // linewidth
};

struct CouplingMatrix {
    enum class Kind { SinglePhoton, Linearized };

    Eigen::MatrixXcd g; // M x N, row k = coupling vector of drive k
    Kind kind = Kind::Linearized;

    int drives() const { return static_cast<int>(g.rows()); }
    int modes() const { return static_cast<int>(g.cols()); }
    Eigen::VectorXcd row(int k) const { return g.row(k).transpose(); }
};

/// Thermal environment of the mechanical modes. Either a direct occupancy or
/// a temperature plus the reference frequency the occupancy is evaluated at
/// (the mean mechanical frequency for near-degenerate modes).
struct ThermalBath {
    double n_th = std::numeric_limits<double>::quiet_NaN();
    double temperature = std::numeric_limits<double>::quiet_NaN(); // kelvin
    double reference_omega = 0.0;

    bool has_direct_occupancy() const { return std::isfinite(n_th); }
    bool has_temperature() const { return std::isfinite(temperature); }
};

enum class UnitSystem { Kappa1, SiAngular };

struct SystemConfig {
    std::vector<OpticalModeSpec> optical;
    std::vector<MechanicalModeSpec> mechanical;
    CouplingMatrix coupling;
    ThermalBath bath;
    UnitSystem units = UnitSystem::SiAngular;
    /// SI value (rad/s) of kappa_1 when units == Kappa1; NaN if not anchored.
    double kappa1_si = std::numeric_limits<double>::quiet_NaN();

    int num_optical() const { return static_cast<int>(optical.size()); }
    int num_mechanical() const { return static_cast<int>(mechanical.size()); }

    double mean_mechanical_frequency() const {
        double s = 0.0;
        for (const auto& m : mechanical) s += m.omega;
        return mechanical.empty() ? 0.0 : s / static_cast<double>(mechanical.size());
    }

    /// |omega_1 - omega_2| for the two-mode discussions; 0 otherwise.
    double mechanical_splitting() const {
        if (mechanical.size() < 2) return 0.0;
        return std::abs(mechanical[0].omega - mechanical[1].omega);
    }
};

/// Bose occupancy 1/(exp(hbar*omega/kT) - 1). omega in rad/s (SI).
inline double thermal_occupancy(double omega, double temperature_kelvin) {
    if (!(omega > 0.0)) throw std::domain_error("thermal_occupancy: omega must be positive");
    if (!(temperature_kelvin > 0.0))
        throw std::domain_error("thermal_occupancy: temperature must be positive");
    const double x = constants::hbar * omega / (constants::k_boltzmann * temperature_kelvin);
    return 1.0 / std::expm1(x);
}

/// Resolve the bath occupancy of a config. Temperature input requires SI
/// frequencies (directly, or via the kappa1_si anchor in Kappa1 units).
inline double bath_occupancy(const SystemConfig& cfg) {
    const ThermalBath& b = cfg.bath;
    if (b.has_direct_occupancy()) return b.n_th;
    if (!b.has_temperature())
        throw ConfigError("bath: neither n_th nor temperature given");
    double omega = b.reference_omega > 0.0 ? b.reference_omega : cfg.mean_mechanical_frequency();
    if (cfg.units == UnitSystem::Kappa1) {
        if (!std::isfinite(cfg.kappa1_si))
            throw ConfigError("bath: temperature in kappa1 units requires kappa1_si anchor");
        omega *= cfg.kappa1_si;
    }
    return thermal_occupancy(omega, b.temperature);
}

/// Config validation. Returns one diagnostic string per violated invariant;
/// empty means valid. Diagnostics name the offending field.
inline std::vector<std::string> validate_config(const SystemConfig& cfg) {
    std::vector<std::string> diag;
    auto tag = [](const char* sec, int idx) {
        return std::string(sec) + "." + std::to_string(idx);
    };
    for (size_t k = 0; k < cfg.optical.size(); ++k) {
        const auto& o = cfg.optical[k];
        if (!(o.kappa > 0.0))
            diag.push_back(tag("optical", static_cast<int>(k + 1)) +
                           ".kappa: optical linewidth must be positive");
        // nu > 0 is required when it is a true optical frequency. Configs in
        // the rotating frame (drive_frequency == 0) store the bare detuning
        // in nu, which may take any sign.
        if (o.drive_frequency != 0.0 && !(o.nu > 0.0))
            diag.push_back(tag("optical", static_cast<int>(k + 1)) +
                           ".nu: bare frequency must be positive");
        if (!std::isfinite(o.drive_amplitude.real()) || !std::isfinite(o.drive_amplitude.imag()))
            diag.push_back(tag("optical", static_cast<int>(k + 1)) +
                           ".drive_amplitude: must be finite");
    }
    for (size_t j = 0; j < cfg.mechanical.size(); ++j) {
        const auto& m = cfg.mechanical[j];
        if (!(m.omega > 0.0))
            diag.push_back(tag("mechanical", static_cast<int>(j + 1)) +
                           ".omega: mechanical frequency must be positive");
        if (!(m.gamma > 0.0))
            diag.push_back(tag("mechanical", static_cast<int>(j + 1)) +
                           ".gamma: mechanical linewidth must be positive");
    }
    const auto& g = cfg.coupling.g;
    if (g.rows() != cfg.num_optical() || g.cols() != cfg.num_mechanical()) {
        diag.push_back("coupling: shape " + std::to_string(g.rows()) + "x" +
                       std::to_string(g.cols()) + " does not match M=" +
                       std::to_string(cfg.num_optical()) + ", N=" +
                       std::to_string(cfg.num_mechanical()));
    }
    if (!g.allFinite()) diag.push_back("coupling: entries must be finite");
    if (cfg.bath.has_direct_occupancy() && cfg.bath.n_th < 0.0)
        diag.push_back("bath.n_th: occupancy must be nonnegative");
    if (!cfg.bath.has_direct_occupancy() && cfg.bath.has_temperature() &&
        !(cfg.bath.temperature > 0.0))
        diag.push_back("bath.temperature: must be positive");
    if (cfg.units == UnitSystem::Kappa1 && !cfg.optical.empty() &&
        std::isfinite(cfg.kappa1_si) && !(cfg.kappa1_si > 0.0))
        diag.push_back("units.kappa1_si: anchor must be positive");
    return diag;
}

struct DriveStrengths {
    Eigen::VectorXd per_drive; // Gamma_k = sum_j |g_kj|^2 / kappa_k
    double total = 0.0;        // Gamma = sum_k Gamma_k
};

/// Optically induced damping budget per drive and in total. Requires the
/// linearized coupling matrix.
inline DriveStrengths drive_strengths(const SystemConfig& cfg) {
    if (cfg.coupling.kind != CouplingMatrix::Kind::Linearized)
        throw std::invalid_argument("drive_strengths: linearized couplings required");
    const int m = cfg.num_optical();
    DriveStrengths out;
    out.per_drive = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < m; ++k) {
        out.per_drive[k] = cfg.coupling.g.row(k).squaredNorm() / cfg.optical[k].kappa;
        out.total += out.per_drive[k];
    }
    return out;
}

/// Convert every angular-frequency quantity between the two unit systems.
/// Kappa1 -> SiAngular multiplies by the kappa1_si anchor; the reverse divides.
inline SystemConfig convert_units(const SystemConfig& cfg, UnitSystem target) {
    if (cfg.units == target) return cfg;
    if (!std::isfinite(cfg.kappa1_si) || !(cfg.kappa1_si > 0.0))
        throw ConfigError("convert_units: kappa1_si anchor required");
    const double s = (target == UnitSystem::SiAngular) ? cfg.kappa1_si : 1.0 / cfg.kappa1_si;
    SystemConfig out = cfg;
    for (auto& o : out.optical) {
        o.nu *= s;
        o.kappa *= s;
        o.drive_amplitude *= s;
        o.drive_frequency *= s;
    }
    for (auto& m : out.mechanical) {
        m.omega *= s;
        m.gamma *= s;
    }
    out.coupling.g *= s;
    out.bath.reference_omega *= s;
    out.units = target;
    return out;
}

} // namespace omcool
