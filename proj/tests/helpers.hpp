#pragma once

// Shared builders for the two-mode benchmark systems used across the tests:
// near-degenerate mechanical pair at omega_bar = 20 kappa, splitting
// domega = 1e-3 kappa, gamma = 1e-4 kappa, drives on the red sideband
// (detuning = omega_bar), coupling rows placed symmetrically about the
// diagonal of the mechanical plane so that the angle between them is theta.

#include <cmath>

#include "omcool/model.hpp"

namespace testutil {

struct TwoModeParams {
    int drives = 2;
    double gamma_total = 0.05; // total drive strength, units of kappa
    double cos_theta = 0.8;    // angle between the two coupling rows
    double n_th = 100.0;
    double domega = 1e-3;
    double omega_bar = 20.0;
    double gamma_mech = 1e-4;
    double kappa2 = 1.0;
    double gamma2_scale = 1.0;
};

inline omcool::SystemConfig two_mode_config(const TwoModeParams& p) {
    using namespace omcool;
    SystemConfig cfg;
    cfg.units = UnitSystem::Kappa1;
    const double theta = std::acos(p.cos_theta);
    const int m = p.drives;
    for (int k = 0; k < m; ++k) {
        OpticalModeSpec o;
        o.index = k + 1;
        o.kappa = (k == 0) ? 1.0 : p.kappa2;
        o.nu = p.omega_bar; // detuning convention: drive_frequency = 0
        cfg.optical.push_back(o);
    }
    for (int j = 0; j < 2; ++j) {
        MechanicalModeSpec mm;
        mm.index = j + 1;
        mm.omega = p.omega_bar + (j == 0 ? 0.5 : -0.5) * p.domega;
        mm.gamma = p.gamma_mech * (j == 1 ? p.gamma2_scale : 1.0);
        cfg.mechanical.push_back(mm);
    }
    cfg.coupling.kind = CouplingMatrix::Kind::Linearized;
    cfg.coupling.g = Eigen::MatrixXcd::Zero(m, 2);
    for (int k = 0; k < m; ++k) {
        double phi = (m == 1) ? constants::pi / 4.0
                              : constants::pi / 4.0 + (k == 0 ? -0.5 : 0.5) * theta;
        double norm = std::sqrt((p.gamma_total / m) * cfg.optical[k].kappa);
        cfg.coupling.g(k, 0) = norm * std::cos(phi);
        cfg.coupling.g(k, 1) = norm * std::sin(phi);
    }
    cfg.bath.n_th = p.n_th;
    return cfg;
}

} // namespace testutil
