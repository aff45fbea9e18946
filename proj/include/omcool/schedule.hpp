#pragma once

// Quasi-static drive protocols and parameter sweeps. A protocol is a list of
// segments; each segment ramps the per-drive strengths Gamma_k linearly from
// the previous endpoint to its targets over a number of steps. Quasi-static
// means an independent steady-state solve at every step — the reported values
// depend only on the drive strengths at that step, never on the ramp history.
// Hybrid-mode occupancies are reported in the Schmidt basis of the *final*
// coupling matrix so that not-yet-brightened modes stay identified as dark
// throughout the run.
//
// Protocol file format (text, '#' comments):
//   segment steps=8 targets=0.1,0,0
//   segment steps=8 targets=0.1,0.1,0
//
// The coupling matrix of the input config provides the row directions;
// single-photon configs are re-solved per step through the classical fixed
// point, linearized configs are scaled directly to ||g_k||^2 = Gamma_k kappa_k.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omcool/config_io.hpp"
#include "omcool/errors.hpp"
#include "omcool/linearize.hpp"
#include "omcool/model.hpp"
#include "omcool/moments.hpp"
#include "omcool/parallel.hpp"
#include "omcool/spectral.hpp"

namespace omcool {

struct DriveProtocol {
    struct Segment {
        Eigen::VectorXd targets; // Gamma_k at the end of the segment
        int steps = 1;
    };
    std::vector<Segment> segments;

    Eigen::VectorXd final_targets() const {
        if (segments.empty()) return Eigen::VectorXd();
        return segments.back().targets;
    }
};

inline DriveProtocol parse_protocol_text(std::istream& in, int num_drives) {
    DriveProtocol proto;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        if (word != "segment")
            throw ConfigError("protocol line " + std::to_string(lineno) +
                              ": expected 'segment', got '" + word + "'");
        DriveProtocol::Segment seg;
        seg.targets = Eigen::VectorXd::Zero(num_drives);
        bool saw_targets = false;
        while (ls >> word) {
            auto eq = word.find('=');
            if (eq == std::string::npos)
                throw ConfigError("protocol line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + word + "'");
            std::string key = word.substr(0, eq), value = word.substr(eq + 1);
            if (key == "steps") {
                seg.steps = detail::to_int_strict("protocol", key, value);
                if (seg.steps < 1)
                    throw ConfigError("protocol line " + std::to_string(lineno) +
                                      ": steps must be >= 1");
            } else if (key == "targets") {
                std::stringstream ts(value);
                std::string item;
                std::vector<double> vals;
                while (std::getline(ts, item, ','))
                    vals.push_back(detail::to_double_strict("protocol", key, item));
                if (static_cast<int>(vals.size()) != num_drives)
                    throw ConfigError("protocol line " + std::to_string(lineno) + ": expected " +
                                      std::to_string(num_drives) + " targets, got " +
                                      std::to_string(vals.size()));
                for (int k = 0; k < num_drives; ++k) {
                    if (vals[k] < 0.0)
                        throw ConfigError("protocol line " + std::to_string(lineno) +
                                          ": targets must be nonnegative");
                    seg.targets[k] = vals[k];
                }
                saw_targets = true;
            } else {
                throw ConfigError("protocol line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
            }
        }
        if (!saw_targets)
            throw ConfigError("protocol line " + std::to_string(lineno) + ": missing targets");
        proto.segments.push_back(std::move(seg));
    }
    if (proto.segments.empty()) throw ConfigError("protocol: no segments");
    return proto;
}

inline DriveProtocol load_protocol(const std::string& path, int num_drives) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open protocol file '" + path + "'");
    return parse_protocol_text(in, num_drives);
}

namespace detail {

/// Linearized system at the given per-drive strengths: direct row rescale of
/// the base directions, or a classical re-solve for single-photon configs.
inline LinearizedSystem system_at_strengths(const SystemConfig& cfg,
                                            const Eigen::VectorXd& strengths) {
    const int m = cfg.num_optical();
    if (strengths.size() != m)
        throw std::invalid_argument("system_at_strengths: one strength per drive required");
    if (cfg.coupling.kind == CouplingMatrix::Kind::SinglePhoton) {
        SystemConfig driven = cfg;
        Eigen::VectorXcd q = amplitudes_for_target_strengths(cfg, strengths);
        for (int k = 0; k < m; ++k) driven.optical[k].drive_amplitude = q[k];
        return classical_steady_state(driven);
    }
    SystemConfig scaled = cfg;
    for (int k = 0; k < m; ++k) {
        const double base_norm = cfg.coupling.g.row(k).norm();
        if (strengths[k] == 0.0) {
            scaled.coupling.g.row(k).setZero();
            continue;
        }
        if (base_norm == 0.0)
            throw std::invalid_argument("system_at_strengths: drive " + std::to_string(k + 1) +
                                        " has no coupling direction in the config");
        const double target_norm = std::sqrt(strengths[k] * cfg.optical[k].kappa);
        scaled.coupling.g.row(k) *= target_norm / base_norm;
    }
    return make_direct_linearized(scaled);
}

/// Final coupling matrix implied by a protocol (directions from cfg, norms
/// from the last segment), used for the Schmidt reporting basis.
inline Eigen::MatrixXcd final_coupling(const SystemConfig& cfg, const DriveProtocol& proto) {
    return system_at_strengths(cfg, proto.final_targets()).g;
}

} // namespace detail

struct QuasiStaticStep {
    int segment = 0; // 1-based
    int step = 0;    // 1-based within the segment
    Eigen::VectorXd strengths;
    Eigen::VectorXd hybrid_occupancy; // in the final-G Schmidt basis
    double n_tot = 0.0;
};

struct QuasiStaticResult {
    std::vector<QuasiStaticStep> steps;
    Eigen::MatrixXcd schmidt_vectors; // N x N reporting basis (completed)
    double n_th = 0.0;

    const QuasiStaticStep& segment_end(int segment_1based) const {
        for (auto it = steps.rbegin(); it != steps.rend(); ++it)
            if (it->segment == segment_1based) return *it;
        throw std::out_of_range("segment_end: no such segment");
    }
};

/// Independent steady solves along the protocol. Steps are solved in
/// parallel; failures are reported with the offending segment and step.
inline QuasiStaticResult quasi_static_run(const SystemConfig& cfg, const DriveProtocol& proto,
                                          int threads = 1) {
    const int m = cfg.num_optical(), n = cfg.num_mechanical();
    for (const auto& seg : proto.segments)
        if (seg.targets.size() != m)
            throw std::invalid_argument("quasi_static_run: protocol drive count mismatch");

    QuasiStaticResult result;
    result.n_th = bath_occupancy(cfg);
    result.schmidt_vectors = complete_schmidt_basis(detail::final_coupling(cfg, proto));

    // flatten the ramp into per-step strength vectors
    std::vector<QuasiStaticStep> steps;
    Eigen::VectorXd from = Eigen::VectorXd::Zero(m);
    for (size_t s = 0; s < proto.segments.size(); ++s) {
        const auto& seg = proto.segments[s];
        for (int i = 1; i <= seg.steps; ++i) {
            QuasiStaticStep st;
            st.segment = static_cast<int>(s + 1);
            st.step = i;
            const double lambda = static_cast<double>(i) / seg.steps;
            st.strengths = from + lambda * (seg.targets - from);
            steps.push_back(std::move(st));
        }
        from = seg.targets;
    }

    parallel_for(static_cast<int>(steps.size()), threads, [&](int idx) {
        QuasiStaticStep& st = steps[idx];
        try {
            LinearizedSystem ls = detail::system_at_strengths(cfg, st.strengths);
            MomentState ss = steady_state_moments(build_generator(ls, result.n_th));
            st.hybrid_occupancy.resize(n);
            for (int j = 0; j < n; ++j)
                st.hybrid_occupancy[j] = hybrid_occupancy(ss, result.schmidt_vectors.col(j));
            st.n_tot = phonon_numbers(ss).total;
        } catch (const std::exception& e) {
            throw StabilityError("quasi_static_run: segment " + std::to_string(st.segment) +
                                 " step " + std::to_string(st.step) + ": " + e.what());
        }
    });

    result.steps = std::move(steps);
    return result;
}

struct PathComparison {
    double n_tot_a = 0.0;
    double n_tot_b = 0.0;
    double relative_difference = 0.0;
};

/// Two protocols ending at the same drive strengths must land on the same
/// steady state (the linear system has a unique one).
inline PathComparison path_independence_check(const SystemConfig& cfg, const DriveProtocol& a,
                                              const DriveProtocol& b, int threads = 1) {
    const Eigen::VectorXd ta = a.final_targets(), tb = b.final_targets();
    if (ta.size() != tb.size() || (ta - tb).norm() > 1e-12 * std::max(1.0, ta.norm()))
        throw std::invalid_argument(
            "path_independence_check: protocols end at different drive strengths");
    QuasiStaticResult ra = quasi_static_run(cfg, a, threads);
    QuasiStaticResult rb = quasi_static_run(cfg, b, threads);
    PathComparison cmp;
    cmp.n_tot_a = ra.steps.back().n_tot;
    cmp.n_tot_b = rb.steps.back().n_tot;
    cmp.relative_difference =
        std::abs(cmp.n_tot_a - cmp.n_tot_b) / std::max(1e-300, std::abs(cmp.n_tot_a));
    return cmp;
}

/// True time-domain ramp: piecewise-constant couplings, the moment state
/// carried across steps. For callers that want dynamics instead of the
/// quasi-static sequence of steady states.
struct DynamicRunRecord {
    double time = 0.0;
    Eigen::VectorXd strengths;
    double n_tot = 0.0;
};

inline std::vector<DynamicRunRecord> dynamic_run(const SystemConfig& cfg,
                                                 const DriveProtocol& proto,
                                                 double step_duration, double dt = 0.0) {
    const int m = cfg.num_optical();
    const double n_th = bath_occupancy(cfg);
    std::vector<DynamicRunRecord> records;
    Eigen::VectorXd from = Eigen::VectorXd::Zero(m);
    MomentState state;
    bool first = true;
    double t = 0.0;
    for (size_t s = 0; s < proto.segments.size(); ++s) {
        const auto& seg = proto.segments[s];
        for (int i = 1; i <= seg.steps; ++i) {
            const double lambda = static_cast<double>(i) / seg.steps;
            Eigen::VectorXd strengths = from + lambda * (seg.targets - from);
            LinearizedSystem ls = detail::system_at_strengths(cfg, strengths);
            MomentGenerator gen = build_generator(ls, n_th);
            if (first) {
                state = thermal_state(gen.layout, n_th);
                first = false;
            }
            const double step_dt = dt > 0.0 ? dt : default_time_step(ls);
            MomentTrajectory traj =
                evolve_moments(gen, state, step_dt, step_duration, {.record_stride = 1 << 30});
            state = traj.final_state();
            t += step_duration;
            records.push_back({t, strengths, phonon_numbers(state).total});
        }
        from = seg.targets;
    }
    return records;
}

struct SweepCurve {
    Eigen::VectorXd parameter;
    Eigen::VectorXd n_tot;
    int argmin = 0;
    double parameter_opt = 0.0; // parabolic refinement of the grid minimum
};

namespace detail {

inline void locate_minimum(SweepCurve& curve) {
    int best = 0;
    for (int i = 1; i < curve.n_tot.size(); ++i)
        if (curve.n_tot[i] < curve.n_tot[best]) best = i;
    curve.argmin = best;
    curve.parameter_opt = curve.parameter[best];
    if (best > 0 && best + 1 < curve.parameter.size()) {
        const double x0 = curve.parameter[best - 1], x1 = curve.parameter[best],
                     x2 = curve.parameter[best + 1];
        const double f0 = curve.n_tot[best - 1], f1 = curve.n_tot[best], f2 = curve.n_tot[best + 1];
        const double denom = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
        if (denom != 0.0) {
            const double num =
                (x1 - x0) * (x1 - x0) * (f1 - f2) - (x1 - x2) * (x1 - x2) * (f1 - f0);
            curve.parameter_opt = x1 - 0.5 * num / denom;
        }
    }
}

} // namespace detail

/// n_tot as a function of one drive's detuning, other drives fixed.
inline SweepCurve detuning_sweep(const SystemConfig& cfg, int drive,
                                 const Eigen::VectorXd& detunings, int threads = 1) {
    if (drive < 0 || drive >= cfg.num_optical())
        throw std::invalid_argument("detuning_sweep: drive index out of range");
    const double n_th = bath_occupancy(cfg);
    SweepCurve curve;
    curve.parameter = detunings;
    curve.n_tot.resize(detunings.size());
    parallel_for(static_cast<int>(detunings.size()), threads, [&](int i) {
        SystemConfig c = cfg;
        c.optical[drive].nu = detunings[i] + c.optical[drive].drive_frequency;
        LinearizedSystem ls = make_direct_linearized(c);
        curve.n_tot[i] = phonon_numbers(steady_state_moments(build_generator(ls, n_th))).total;
    });
    detail::locate_minimum(curve);
    return curve;
}

/// n_tot against the pump contrast (|g1|^2 - |g2|^2) / (|g1|^2 + |g2|^2) at
/// fixed |g1|^2 + |g2|^2 (taken from the config's coupling matrix).
inline SweepCurve contrast_sweep(const SystemConfig& cfg, const Eigen::VectorXd& contrasts,
                                 int threads = 1) {
    if (cfg.num_optical() != 2)
        throw std::invalid_argument("contrast_sweep: exactly two drives required");
    if (cfg.coupling.kind != CouplingMatrix::Kind::Linearized)
        throw std::invalid_argument("contrast_sweep: linearized couplings required");
    const double total = cfg.coupling.g.row(0).squaredNorm() + cfg.coupling.g.row(1).squaredNorm();
    if (total == 0.0) throw std::invalid_argument("contrast_sweep: zero coupling matrix");
    for (int k = 0; k < 2; ++k)
        if (cfg.coupling.g.row(k).norm() == 0.0)
            throw std::invalid_argument("contrast_sweep: both rows need a direction");
    const double n_th = bath_occupancy(cfg);
    SweepCurve curve;
    curve.parameter = contrasts;
    curve.n_tot.resize(contrasts.size());
    parallel_for(static_cast<int>(contrasts.size()), threads, [&](int i) {
        const double c = contrasts[i];
        if (c < -1.0 || c > 1.0)
            throw std::invalid_argument("contrast_sweep: contrast outside [-1, 1]");
        SystemConfig sc = cfg;
        const double n1 = total * (1.0 + c) / 2.0, n2 = total * (1.0 - c) / 2.0;
        sc.coupling.g.row(0) *= std::sqrt(n1) / cfg.coupling.g.row(0).norm();
        sc.coupling.g.row(1) *= std::sqrt(n2) / cfg.coupling.g.row(1).norm();
        LinearizedSystem ls = make_direct_linearized(sc);
        curve.n_tot[i] = phonon_numbers(steady_state_moments(build_generator(ls, n_th))).total;
    });
    detail::locate_minimum(curve);
    return curve;
}

} // namespace omcool
