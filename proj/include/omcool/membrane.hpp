#pragma once

// Square stressed-membrane-in-cavity model: clamped drum modes, zero-point
// amplitudes, Gaussian-spot overlap integrals and the resulting single-photon
// coupling matrix. SI units throughout (the rest of the library usually runs
// kappa-normalized; couplings produced here are angular frequencies).
//
// Mode shapes follow W_mn(x, y) = sin(m pi x / l) sin(n pi y / l) with peak
// amplitude one; the first index counts antinodes along x.
//
// The mechanical linewidth formula gamma_mn = s eps [1 + pi^2(m^2+n^2)/4] w_mn
// needs an explicit loss parameter s; configurations normally bypass it with
// a direct linewidth override.

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "omcool/config_io.hpp"
#include "omcool/constants.hpp"
#include "omcool/errors.hpp"
#include "omcool/model.hpp"

namespace omcool {

struct MembraneSpec {
    double edge_length = 0.0;      // l, m
    double thickness = 0.0;        // h, m
    double density = 0.0;          // rho, kg/m^3
    Complex youngs_modulus{0.0, 0.0}; // E, Pa; Im(E) is loss-related only
    double poisson_ratio = 0.0;    // nu
    double stress = 0.0;           // sigma, Pa
    double loss_parameter = std::numeric_limits<double>::quiet_NaN(); // s, dimensionless
    double gamma_override = std::numeric_limits<double>::quiet_NaN(); // rad/s

    /// eps = (h/l) sqrt(Re E / (3 sigma (1 - nu^2))).
    double bending_parameter() const {
        return thickness / edge_length *
               std::sqrt(youngs_modulus.real() /
                         (3.0 * stress * (1.0 - poisson_ratio * poisson_ratio)));
    }
};

inline std::vector<std::string> validate_membrane(const MembraneSpec& m) {
    std::vector<std::string> diag;
    if (!(m.edge_length > 0.0)) diag.push_back("membrane.edge_length must be positive");
    if (!(m.thickness > 0.0)) diag.push_back("membrane.thickness must be positive");
    if (!(m.density > 0.0)) diag.push_back("membrane.density must be positive");
    if (!(m.stress > 0.0)) diag.push_back("membrane.stress must be positive");
    if (!(m.poisson_ratio > 0.0 && m.poisson_ratio < 0.5))
        diag.push_back("membrane.poisson_ratio must lie in (0, 0.5)");
    return diag;
}

struct CavityOptics {
    double length = 0.0;     // L, m
    double finesse = 0.0;    // F
    double wavelength = 0.0; // lambda, m

    /// kappa as an angular frequency: kappa / 2pi = c / (2 F L).
    double kappa() const {
        return constants::two_pi * constants::speed_of_light / (2.0 * finesse * length);
    }
    double kappa_over_2pi() const { return kappa() / constants::two_pi; }
    /// d omega_c / d L = 2 pi c / (lambda L), rad/s per metre.
    double frequency_pull() const {
        return constants::two_pi * constants::speed_of_light / (wavelength * length);
    }
};

struct GaussianSpot {
    double x0 = 0.0;    // m
    double y0 = 0.0;    // m
    double waist = 0.0; // d, m

    /// Normalized intensity exp(-((x-x0)^2 + (y-y0)^2)/d^2) / (pi d^2).
    double intensity(double x, double y) const {
        const double dx = x - x0, dy = y - y0;
        return std::exp(-(dx * dx + dy * dy) / (waist * waist)) /
               (constants::pi * waist * waist);
    }
};

struct DrumMode {
    int m = 0, n = 0;
    double omega = 0.0;          // rad/s
    double gamma = 0.0;          // rad/s (NaN if neither override nor s given)
    double x_zpf = 0.0;          // m
    double edge_length = 0.0;    // carried for the shape evaluation

    /// W_mn(x, y), peak amplitude 1.
    double shape(double x, double y) const {
        return std::sin(m * constants::pi * x / edge_length) *
               std::sin(n * constants::pi * y / edge_length);
    }
};

/// Frequency, zero-point amplitude and (where determined) linewidth of the
/// (m, n) drum mode.
inline DrumMode drum_mode(const MembraneSpec& spec, int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("drum_mode: indices start at 1");
    DrumMode out;
    out.m = m;
    out.n = n;
    out.edge_length = spec.edge_length;
    out.omega = constants::pi / spec.edge_length *
                std::sqrt(spec.stress * (m * m + n * n) / spec.density);
    out.x_zpf = std::sqrt(2.0 * constants::hbar /
                          (spec.density * spec.thickness * spec.edge_length * spec.edge_length *
                           out.omega));
    if (std::isfinite(spec.gamma_override)) {
        out.gamma = spec.gamma_override;
    } else if (std::isfinite(spec.loss_parameter)) {
        out.gamma = spec.loss_parameter * spec.bending_parameter() *
                    (1.0 + constants::pi * constants::pi * (m * m + n * n) / 4.0) * out.omega;
    } else {
        out.gamma = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

namespace detail {

/// Composite-Simpson tensor quadrature of I(x,y) W(x,y) over [0, l]^2 at a
/// fixed resolution (intervals per axis; rounded up to even).
inline double overlap_at_resolution(const DrumMode& mode, const GaussianSpot& spot,
                                    int intervals) {
    if (intervals % 2) ++intervals;
    const double l = mode.edge_length;
    const double h = l / intervals;
    auto weight = [&](int i) {
        if (i == 0 || i == intervals) return 1.0;
        return (i % 2) ? 4.0 : 2.0;
    };
    // separable Simpson weights; the integrand itself is not separable only
    // through the Gaussian, so evaluate on the tensor grid
    double acc = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double x = i * h;
        double row = 0.0;
        for (int j = 0; j <= intervals; ++j) {
            const double y = j * h;
            row += weight(j) * spot.intensity(x, y) * mode.shape(x, y);
        }
        acc += weight(i) * row;
    }
    return acc * h * h / 9.0;
}

} // namespace detail

/// Transverse overlap eta = integral of I * W over the membrane. Starts at
/// the requested resolution and doubles until two successive evaluations
/// agree to 1e-4 absolute.
inline double gaussian_overlap(const DrumMode& mode, const GaussianSpot& spot,
                               int resolution = 600, double convergence = 1e-4) {
    if (resolution < 16) resolution = 16;
    double coarse = detail::overlap_at_resolution(mode, spot, resolution);
    for (int pass = 0; pass < 5; ++pass) {
        resolution *= 2;
        const double fine = detail::overlap_at_resolution(mode, spot, resolution);
        if (std::abs(fine - coarse) < convergence) return fine;
        coarse = fine;
    }
    throw NumericalError("gaussian_overlap: quadrature did not converge; raise the resolution");
}

/// Single-photon coupling g^S = x_zpf (d omega_c / d L) eta, rad/s. The sign
/// carries the overlap sign.
inline double single_photon_coupling(const DrumMode& mode, const GaussianSpot& spot,
                                     const CavityOptics& optics, int resolution = 600) {
    return mode.x_zpf * optics.frequency_pull() * gaussian_overlap(mode, spot, resolution);
}

/// Single-photon coupling matrix: rows = spots (drives), columns = modes.
inline CouplingMatrix coupling_table(const std::vector<DrumMode>& modes,
                                     const std::vector<GaussianSpot>& spots,
                                     const CavityOptics& optics, int resolution = 600) {
    CouplingMatrix out;
    out.kind = CouplingMatrix::Kind::SinglePhoton;
    out.g.resize(static_cast<Eigen::Index>(spots.size()), static_cast<Eigen::Index>(modes.size()));
    for (size_t k = 0; k < spots.size(); ++k)
        for (size_t j = 0; j < modes.size(); ++j)
            out.g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                single_photon_coupling(modes[j], spots[k], optics, resolution);
    return out;
}

/// Full membrane setup as read from the [membrane]/[cavity]/[mode.i]/[spot.i]
/// sections of a config file.
struct MembraneSetup {
    MembraneSpec membrane;
    CavityOptics cavity;
    std::vector<std::pair<int, int>> mode_indices;
    std::vector<GaussianSpot> spots;

    std::vector<DrumMode> modes() const {
        std::vector<DrumMode> out;
        out.reserve(mode_indices.size());
        for (auto [m, n] : mode_indices) out.push_back(drum_mode(membrane, m, n));
        return out;
    }
};

inline MembraneSetup load_membrane_setup(const ConfigTree& tree) {
    MembraneSetup setup;
    std::vector<std::string> problems;
    std::map<int, std::pair<int, int>> modes;
    std::map<int, GaussianSpot> spots;
    bool saw_membrane = false, saw_cavity = false;

    for (const auto& [name, entries] : tree.sections) {
        auto [base, idx] = detail::split_section(name);
        if (name == "membrane") {
            saw_membrane = true;
            for (const auto& [key, value] : entries) {
                if (key == "edge_length") setup.membrane.edge_length = detail::to_double_strict(name, key, value);
                else if (key == "thickness") setup.membrane.thickness = detail::to_double_strict(name, key, value);
                else if (key == "density") setup.membrane.density = detail::to_double_strict(name, key, value);
                else if (key == "youngs_modulus") {
                    try { setup.membrane.youngs_modulus = parse_complex(value); }
                    catch (const ConfigError& e) { problems.push_back(std::string("[membrane] youngs_modulus: ") + e.what()); }
                }
                else if (key == "poisson_ratio") setup.membrane.poisson_ratio = detail::to_double_strict(name, key, value);
                else if (key == "stress") setup.membrane.stress = detail::to_double_strict(name, key, value);
                else if (key == "loss_parameter") setup.membrane.loss_parameter = detail::to_double_strict(name, key, value);
                else if (key == "gamma_override") setup.membrane.gamma_override = detail::to_double_strict(name, key, value);
                else problems.push_back("[membrane] unknown key '" + key + "'");
            }
        } else if (name == "cavity") {
            saw_cavity = true;
            for (const auto& [key, value] : entries) {
                if (key == "length") setup.cavity.length = detail::to_double_strict(name, key, value);
                else if (key == "finesse") setup.cavity.finesse = detail::to_double_strict(name, key, value);
                else if (key == "wavelength") setup.cavity.wavelength = detail::to_double_strict(name, key, value);
                else problems.push_back("[cavity] unknown key '" + key + "'");
            }
        } else if (base == "mode" && idx > 0) {
            std::pair<int, int> mn{0, 0};
            for (const auto& [key, value] : entries) {
                if (key == "m") mn.first = detail::to_int_strict(name, key, value);
                else if (key == "n") mn.second = detail::to_int_strict(name, key, value);
                else problems.push_back("[" + name + "] unknown key '" + key + "'");
            }
            modes[idx] = mn;
        } else if (base == "spot" && idx > 0) {
            GaussianSpot s;
            for (const auto& [key, value] : entries) {
                if (key == "x") s.x0 = detail::to_double_strict(name, key, value);
                else if (key == "y") s.y0 = detail::to_double_strict(name, key, value);
                else if (key == "waist") s.waist = detail::to_double_strict(name, key, value);
                else problems.push_back("[" + name + "] unknown key '" + key + "'");
            }
            spots[idx] = s;
        } else {
            problems.push_back("unknown section [" + name + "]");
        }
    }
    if (!saw_membrane) problems.push_back("missing section [membrane]");
    if (!saw_cavity) problems.push_back("missing section [cavity]");
    if (modes.empty()) problems.push_back("missing section [mode.1]");
    if (spots.empty()) problems.push_back("missing section [spot.1]");
    for (const auto& [idx, mn] : modes) setup.mode_indices.push_back(mn);
    for (const auto& [idx, s] : spots) setup.spots.push_back(s);
    for (const auto& d : validate_membrane(setup.membrane)) problems.push_back(d);
    for (const auto& s : setup.spots) {
        if (!(s.waist > 0.0)) problems.push_back("spot waist must be positive");
        if (s.x0 < 0.0 || s.x0 > setup.membrane.edge_length || s.y0 < 0.0 ||
            s.y0 > setup.membrane.edge_length)
            problems.push_back("spot center must lie on the membrane");
    }
    if (!problems.empty()) {
        std::string msg = "membrane config errors:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return setup;
}

inline MembraneSetup load_membrane_setup(const std::string& path) {
    return load_membrane_setup(parse_config_file(path));
}

} // namespace omcool
