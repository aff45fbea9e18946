#pragma once

// Full (non-RWA) second-moment dynamics of the linearized system. The state
// collects every second moment of the fluctuation operators:
//
//   <a_p^dag a_q>  M x M Hermitian     <b_p^dag b_q>  N x N Hermitian
//   <a_p a_q>      M x M symmetric     <b_p b_q>      N x N symmetric
//   <a_k^dag b_j>  M x N               <a_k b_j>      M x N
//
// packed into a real vector of dimension
//   D(M,N) = M^2 + N^2 + M(M+1) + N(N+1) + 4MN        (D(2,2) = 36).
//
// Packing order (fixed; golden files depend on it):
//   1. Hermitian <a^dag a>: diagonal (M reals), then re/im of the strict
//      upper triangle in row-major order.
//   2. Hermitian <b^dag b>: same with N.
//   3. Symmetric <a a>: re/im of the upper triangle including the diagonal,
//      row-major.
//   4. Symmetric <b b>: same with N.
//   5. <a^dag b>: re/im, row-major over (k, j).
//   6. <a b>: re/im, row-major over (k, j).
//
// The packed representation stores each independent real degree of freedom
// exactly once, so Hermiticity/symmetry cannot drift during integration;
// symmetrization is structural rather than a per-step correction.
//
// The dynamics is affine, dM/dt = A M + c. A and c are assembled by probing
// the derivative map (evaluated verbatim from the six coupled-moment equation
// families, counter-rotating terms included) on the canonical basis: the map
// is linear, so columns of A are recovered exactly. The constant source c
// carries the gamma_j n_th thermal feed and the -i g_kj term of d<a b>/dt
// that originates from normal ordering <a a^dag> = <a^dag a> + 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "omcool/errors.hpp"
#include "omcool/linearize.hpp"

namespace omcool {

class MomentLayout {
public:
    MomentLayout() = default;
    MomentLayout(int num_optical, int num_mechanical) : m_(num_optical), n_(num_mechanical) {
        off_herm_a_ = 0;
        off_herm_b_ = off_herm_a_ + m_ * m_;
        off_sym_a_ = off_herm_b_ + n_ * n_;
        off_sym_b_ = off_sym_a_ + m_ * (m_ + 1);
        off_adb_ = off_sym_b_ + n_ * (n_ + 1);
        off_ab_ = off_adb_ + 2 * m_ * n_;
        dim_ = off_ab_ + 2 * m_ * n_;
    }

    int drives() const { return m_; }
    int modes() const { return n_; }
    int dim() const { return dim_; }

    // Index helpers. Hermitian blocks: p == q lives on the real diagonal
    // slot; p < q at (re, im) pairs. Symmetric blocks: p <= q only.
    int herm_a_diag(int p) const { return off_herm_a_ + p; }
    int herm_a_upper(int p, int q) const {
        return off_herm_a_ + m_ + 2 * strict_upper(m_, p, q);
    }
    int herm_b_diag(int p) const { return off_herm_b_ + p; }
    int herm_b_upper(int p, int q) const {
        return off_herm_b_ + n_ + 2 * strict_upper(n_, p, q);
    }
    int sym_a(int p, int q) const { return off_sym_a_ + 2 * incl_upper(m_, p, q); }
    int sym_b(int p, int q) const { return off_sym_b_ + 2 * incl_upper(n_, p, q); }
    int adb(int k, int j) const { return off_adb_ + 2 * (k * n_ + j); }
    int ab(int k, int j) const { return off_ab_ + 2 * (k * n_ + j); }

private:
    static int strict_upper(int size, int p, int q) {
        // row-major enumeration of pairs p < q
        return p * (2 * size - p - 1) / 2 + (q - p - 1);
    }
    static int incl_upper(int size, int p, int q) {
        // row-major enumeration of pairs p <= q
        return p * size - p * (p - 1) / 2 + (q - p);
    }
    int m_ = 0, n_ = 0;
    int off_herm_a_ = 0, off_herm_b_ = 0, off_sym_a_ = 0, off_sym_b_ = 0, off_adb_ = 0,
        off_ab_ = 0;
    int dim_ = 0;
};

class MomentState {
public:
    MomentState() = default;
    MomentState(const MomentLayout& layout)
        : layout_(layout), x_(Eigen::VectorXd::Zero(layout.dim())) {}
    MomentState(const MomentLayout& layout, Eigen::VectorXd packed)
        : layout_(layout), x_(std::move(packed)) {
        if (x_.size() != layout_.dim())
            throw std::invalid_argument("MomentState: packed vector has wrong dimension");
    }

    const MomentLayout& layout() const { return layout_; }
    const Eigen::VectorXd& packed() const { return x_; }
    Eigen::VectorXd& packed() { return x_; }

    Complex herm_a(int p, int q) const { return herm_get(p, q, true); }
    Complex herm_b(int p, int q) const { return herm_get(p, q, false); }
    Complex sym_a(int p, int q) const {
        int i = layout_.sym_a(std::min(p, q), std::max(p, q));
        return Complex(x_[i], x_[i + 1]);
    }
    Complex sym_b(int p, int q) const {
        int i = layout_.sym_b(std::min(p, q), std::max(p, q));
        return Complex(x_[i], x_[i + 1]);
    }
    Complex adb(int k, int j) const {
        int i = layout_.adb(k, j);
        return Complex(x_[i], x_[i + 1]);
    }
    Complex ab(int k, int j) const {
        int i = layout_.ab(k, j);
        return Complex(x_[i], x_[i + 1]);
    }

    void set_herm_a(int p, int q, Complex z) { herm_set(p, q, z, true); }
    void set_herm_b(int p, int q, Complex z) { herm_set(p, q, z, false); }
    void set_sym_a(int p, int q, Complex z) {
        int i = layout_.sym_a(std::min(p, q), std::max(p, q));
        x_[i] = z.real();
        x_[i + 1] = z.imag();
    }
    void set_sym_b(int p, int q, Complex z) {
        int i = layout_.sym_b(std::min(p, q), std::max(p, q));
        x_[i] = z.real();
        x_[i + 1] = z.imag();
    }
    void set_adb(int k, int j, Complex z) {
        int i = layout_.adb(k, j);
        x_[i] = z.real();
        x_[i + 1] = z.imag();
    }
    void set_ab(int k, int j, Complex z) {
        int i = layout_.ab(k, j);
        x_[i] = z.real();
        x_[i + 1] = z.imag();
    }

    Eigen::MatrixXcd herm_a_matrix() const { return herm_matrix(true); }
    Eigen::MatrixXcd herm_b_matrix() const { return herm_matrix(false); }

private:
    Complex herm_get(int p, int q, bool optical) const {
        if (p == q) {
            int i = optical ? layout_.herm_a_diag(p) : layout_.herm_b_diag(p);
            return Complex(x_[i], 0.0);
        }
        bool flip = p > q;
        if (flip) std::swap(p, q);
        int i = optical ? layout_.herm_a_upper(p, q) : layout_.herm_b_upper(p, q);
        Complex z(x_[i], x_[i + 1]);
        return flip ? std::conj(z) : z;
    }
    void herm_set(int p, int q, Complex z, bool optical) {
        if (p == q) {
            int i = optical ? layout_.herm_a_diag(p) : layout_.herm_b_diag(p);
            x_[i] = z.real();
            return;
        }
        bool flip = p > q;
        if (flip) {
            std::swap(p, q);
            z = std::conj(z);
        }
        int i = optical ? layout_.herm_a_upper(p, q) : layout_.herm_b_upper(p, q);
        x_[i] = z.real();
        x_[i + 1] = z.imag();
    }
    Eigen::MatrixXcd herm_matrix(bool optical) const {
        int size = optical ? layout_.drives() : layout_.modes();
        Eigen::MatrixXcd out(size, size);
        for (int p = 0; p < size; ++p)
            for (int q = 0; q < size; ++q) out(p, q) = herm_get(p, q, optical);
        return out;
    }

    MomentLayout layout_;
    Eigen::VectorXd x_;
};

/// Thermal-equilibrium initial state: <b_j^dag b_j> = n_j, everything else 0.
inline MomentState thermal_state(const MomentLayout& layout, const Eigen::VectorXd& n_mech) {
    MomentState s(layout);
    for (int j = 0; j < layout.modes(); ++j) s.set_herm_b(j, j, Complex(n_mech[j], 0.0));
    return s;
}

inline MomentState thermal_state(const MomentLayout& layout, double n_th) {
    return thermal_state(layout, Eigen::VectorXd::Constant(layout.modes(), n_th));
}

/// Right-hand sides of the six coupled-moment equation families, evaluated
/// verbatim (no rotating-wave approximation). Pure function of the state.
inline MomentState moment_derivative(const LinearizedSystem& ls, double n_th,
                                     const MomentState& s) {
    const int m = ls.drives(), n = ls.modes();
    const Eigen::MatrixXcd& G = ls.g;
    const Complex I(0.0, 1.0);
    MomentState d(s.layout());

    // d<b_j'^dag b_j>
    for (int jp = 0; jp < n; ++jp) {
        for (int j = jp; j < n; ++j) {
            Complex v = (I * (ls.omega[jp] - ls.omega[j]) - 0.5 * (ls.gamma[jp] + ls.gamma[j])) *
                        s.herm_b(jp, j);
            if (jp == j) v += ls.gamma[j] * n_th;
            Complex w1(0.0, 0.0), w2(0.0, 0.0);
            for (int k = 0; k < m; ++k) {
                w1 += std::conj(G(k, j)) * std::conj(s.adb(k, jp)) +
                      G(k, j) * std::conj(s.ab(k, jp));
                w2 += std::conj(G(k, jp)) * s.ab(k, j) + G(k, jp) * s.adb(k, j);
            }
            v += -I * w1 + I * w2;
            d.set_herm_b(jp, j, v);
        }
    }

    // d<b_j' b_j>
    for (int jp = 0; jp < n; ++jp) {
        for (int j = jp; j < n; ++j) {
            Complex v = (-I * (ls.omega[j] + ls.omega[jp]) - 0.5 * (ls.gamma[j] + ls.gamma[jp])) *
                        s.sym_b(jp, j);
            Complex w(0.0, 0.0);
            for (int k = 0; k < m; ++k) {
                w += std::conj(G(k, j)) * s.ab(k, jp) + G(k, j) * s.adb(k, jp);
                w += std::conj(G(k, jp)) * s.ab(k, j) + G(k, jp) * s.adb(k, j);
            }
            v += -I * w;
            d.set_sym_b(jp, j, v);
        }
    }

    // d<a_k'^dag a_k>
    for (int kp = 0; kp < m; ++kp) {
        for (int k = kp; k < m; ++k) {
            Complex v = (I * (ls.delta[kp] - ls.delta[k]) - 0.5 * (ls.kappa[k] + ls.kappa[kp])) *
                        s.herm_a(kp, k);
            Complex w1(0.0, 0.0), w2(0.0, 0.0);
            for (int j = 0; j < n; ++j) {
                w1 += G(k, j) * (s.adb(kp, j) + std::conj(s.ab(kp, j)));
                w2 += std::conj(G(kp, j)) * (s.ab(k, j) + std::conj(s.adb(k, j)));
            }
            v += -I * w1 + I * w2;
            d.set_herm_a(kp, k, v);
        }
    }

    // d<a_k' a_k>
    for (int kp = 0; kp < m; ++kp) {
        for (int k = kp; k < m; ++k) {
            Complex v = (-I * (ls.delta[kp] + ls.delta[k]) - 0.5 * (ls.kappa[kp] + ls.kappa[k])) *
                        s.sym_a(kp, k);
            Complex w(0.0, 0.0);
            for (int j = 0; j < n; ++j) {
                w += G(k, j) * (s.ab(kp, j) + std::conj(s.adb(kp, j)));
                w += G(kp, j) * (s.ab(k, j) + std::conj(s.adb(k, j)));
            }
            v += -I * w;
            d.set_sym_a(kp, k, v);
        }
    }

    // d<a_k^dag b_j>
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < n; ++j) {
            Complex v = (I * (ls.delta[k] - ls.omega[j]) - 0.5 * (ls.gamma[j] + ls.kappa[k])) *
                        s.adb(k, j);
            Complex w1(0.0, 0.0), w2(0.0, 0.0);
            for (int kp = 0; kp < m; ++kp)
                w1 += std::conj(G(kp, j)) * s.herm_a(k, kp) + G(kp, j) * std::conj(s.sym_a(k, kp));
            for (int jp = 0; jp < n; ++jp)
                w2 += std::conj(G(k, jp)) * (s.sym_b(jp, j) + s.herm_b(jp, j));
            v += -I * w1 + I * w2;
            d.set_adb(k, j, v);
        }
    }

    // d<a_k b_j>, including the -i g_kj normal-ordering source
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < n; ++j) {
            Complex v = (-I * (ls.delta[k] + ls.omega[j]) - 0.5 * (ls.gamma[j] + ls.kappa[k])) *
                        s.ab(k, j);
            v += -I * G(k, j);
            Complex w1(0.0, 0.0), w2(0.0, 0.0);
            for (int kp = 0; kp < m; ++kp)
                w1 += std::conj(G(kp, j)) * s.sym_a(kp, k) + G(kp, j) * s.herm_a(kp, k);
            for (int jp = 0; jp < n; ++jp)
                w2 += G(k, jp) * (s.sym_b(jp, j) + s.herm_b(jp, j));
            v += -I * (w1 + w2);
            d.set_ab(k, j, v);
        }
    }

    return d;
}

struct MomentGenerator {
    MomentLayout layout;
    Eigen::MatrixXd drift;    // A, D x D
    Eigen::VectorXd source;   // c, D
    double drift_norm = 0.0;  // infinity norm of A, for the RK4 step check
};

/// Assemble dM/dt = A M + c by probing the affine derivative map on the
/// canonical basis; exact because the map is linear in the packed state.
inline MomentGenerator build_generator(const LinearizedSystem& ls, double n_th) {
    MomentGenerator gen;
    gen.layout = MomentLayout(ls.drives(), ls.modes());
    const int dim = gen.layout.dim();
    MomentState zero(gen.layout);
    gen.source = moment_derivative(ls, n_th, zero).packed();
    gen.drift.resize(dim, dim);
    MomentState probe(gen.layout);
    for (int i = 0; i < dim; ++i) {
        probe.packed().setZero();
        probe.packed()[i] = 1.0;
        gen.drift.col(i) = moment_derivative(ls, n_th, probe).packed() - gen.source;
    }
    gen.drift_norm = gen.drift.cwiseAbs().rowwise().sum().maxCoeff();
    return gen;
}

inline MomentGenerator build_generator(const LinearizedSystem& ls, const ThermalBath& bath,
                                       const SystemConfig& cfg) {
    (void)bath;
    return build_generator(ls, bath_occupancy(cfg));
}

/// Steady state by dense LU with iterative refinement. Residual contract:
/// ||A M + c|| / ||c|| < 1e-10. A reciprocal condition estimate below 1e-14
/// signals an effectively undamped mode and raises StabilityError.
inline MomentState steady_state_moments(const MomentGenerator& gen, double tol = 1e-10) {
    const Eigen::MatrixXd& A = gen.drift;
    const Eigen::VectorXd& c = gen.source;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double rc = lu.rcond();
    if (!(rc > 1e-14))
        throw StabilityError(
            "steady_state_moments: drift matrix is singular or near-singular "
            "(condition estimate > 1e14); an undamped dark mode or parametric "
            "instability is likely");
    const double cnorm = c.norm();
    if (cnorm == 0.0) return MomentState(gen.layout, Eigen::VectorXd::Zero(gen.layout.dim()));
    Eigen::VectorXd x = lu.solve(-c);
    double resid = (A * x + c).norm() / cnorm;
    for (int pass = 0; pass < 4 && resid > tol; ++pass) {
        Eigen::VectorXd r = -c - A * x;
        x += lu.solve(r);
        resid = (A * x + c).norm() / cnorm;
    }
    if (!(resid < tol))
        throw NumericalError("steady_state_moments: residual " + std::to_string(resid) +
                             " above tolerance");
    return MomentState(gen.layout, std::move(x));
}

struct PhononNumbers {
    Eigen::VectorXd per_mode;
    double total = 0.0;
};

inline PhononNumbers phonon_numbers(const MomentState& s) {
    PhononNumbers out;
    const int n = s.layout().modes();
    out.per_mode.resize(n);
    for (int j = 0; j < n; ++j) {
        out.per_mode[j] = s.herm_b(j, j).real();
        out.total += out.per_mode[j];
    }
    return out;
}

/// Occupancy of the hybrid mode with coefficient vector e (||e|| = 1):
/// n~ = e^dag <b^dag b> e.
inline double hybrid_occupancy(const MomentState& s, const Eigen::VectorXcd& e) {
    if (e.size() != s.layout().modes())
        throw std::invalid_argument("hybrid_occupancy: coefficient vector has wrong length");
    if (std::abs(e.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("hybrid_occupancy: coefficient vector must be normalized");
    Complex acc(0.0, 0.0);
    const int n = s.layout().modes();
    for (int jp = 0; jp < n; ++jp)
        for (int j = 0; j < n; ++j) acc += std::conj(e[jp]) * e[j] * s.herm_b(jp, j);
    return acc.real();
}

struct EvolveOptions {
    int record_stride = 1; // record every k-th step
    double tol_blowup = 1e12;
};

struct MomentTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states; // packed
    MomentLayout layout;

    MomentState state(size_t i) const { return MomentState(layout, states[i]); }
    MomentState final_state() const { return MomentState(layout, states.back()); }
};

/// Default step 0.01 / max(kappa_k, omega_j); the drift-norm stability bound
/// ||A||_inf * dt < 2.7 is enforced before integrating.
inline double default_time_step(const LinearizedSystem& ls) {
    double rate = 0.0;
    for (int k = 0; k < ls.drives(); ++k) rate = std::max(rate, ls.kappa[k]);
    for (int j = 0; j < ls.modes(); ++j) rate = std::max(rate, ls.omega[j]);
    if (rate <= 0.0) throw std::invalid_argument("default_time_step: no positive rate");
    return 0.01 / rate;
}

/// Classic fixed-step RK4 on dM/dt = A M + c.
inline MomentTrajectory evolve_moments(const MomentGenerator& gen, const MomentState& m0,
                                       double dt, double t_end, EvolveOptions opts = {}) {
    if (!(dt > 0.0)) throw std::invalid_argument("evolve_moments: dt must be positive");
    if (!(t_end >= 0.0)) throw std::invalid_argument("evolve_moments: t_end must be nonnegative");
    if (gen.drift_norm * dt >= 2.7)
        throw NumericalError("evolve_moments: dt fails the stability bound ||A||*dt < 2.7");

    const Eigen::MatrixXd& A = gen.drift;
    const Eigen::VectorXd& c = gen.source;
    const int stride = std::max(1, opts.record_stride);
    const auto steps = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-12));
    const double blow = opts.tol_blowup * std::max(1.0, m0.packed().norm() + c.norm() * (t_end + 1.0));

    MomentTrajectory traj;
    traj.layout = gen.layout;
    Eigen::VectorXd x = m0.packed();
    traj.times.push_back(0.0);
    traj.states.push_back(x);

    Eigen::VectorXd k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size());
    for (std::int64_t i = 0; i < steps; ++i) {
        k1.noalias() = A * x;
        k1 += c;
        k2.noalias() = A * (x + 0.5 * dt * k1);
        k2 += c;
        k3.noalias() = A * (x + 0.5 * dt * k2);
        k3 += c;
        k4.noalias() = A * (x + dt * k3);
        k4 += c;
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((i & 1023) == 0 && (!x.allFinite() || x.norm() > blow))
            throw NumericalError("evolve_moments: trajectory diverged (step-size instability)");
        if ((i + 1) % stride == 0 || i + 1 == steps) {
            traj.times.push_back(static_cast<double>(i + 1) * dt);
            traj.states.push_back(x);
        }
    }
    return traj;
}

} // namespace omcool
