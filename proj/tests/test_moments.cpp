#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "omcool/moments.hpp"
#include "helpers.hpp"

using namespace omcool;
using Catch::Approx;

namespace {

// ---------------------------------------------------------------------------
// Independent oracle for the moment dynamics.
//
// Instead of the normal-ordered equation families, track the full ordered
// moment matrix Sigma_pq = <v_p v_q> for v = (a, b, a^dag, b^dag). The linear
// Langevin dynamics dv = W v dt + dxi gives
//     dSigma/dt = W Sigma + Sigma W^T + C,
// with C the noise correlator <xi_p xi_q>. Redundant entries (<a a^dag> etc.)
// are carried explicitly, so no normal-ordering bookkeeping enters; agreement
// with the packed generator validates every sign, conjugation and the
// constant source terms.
// ---------------------------------------------------------------------------

struct OrderedOracle {
    int m, n, size; // size = 2(m+n)
    Eigen::MatrixXcd w, c;

    OrderedOracle(const LinearizedSystem& ls, double n_th)
        : m(ls.drives()), n(ls.modes()), size(2 * (ls.drives() + ls.modes())) {
        const Complex I(0.0, 1.0);
        w = Eigen::MatrixXcd::Zero(size, size);
        c = Eigen::MatrixXcd::Zero(size, size);
        auto a = [&](int k) { return k; };
        auto b = [&](int j) { return m + j; };
        auto ad = [&](int k) { return m + n + k; };
        auto bd = [&](int j) { return 2 * m + n + j; };
        for (int k = 0; k < m; ++k) {
            w(a(k), a(k)) = -I * ls.delta[k] - ls.kappa[k] / 2.0;
            w(ad(k), ad(k)) = I * ls.delta[k] - ls.kappa[k] / 2.0;
            for (int j = 0; j < n; ++j) {
                w(a(k), b(j)) = -I * ls.g(k, j);
                w(a(k), bd(j)) = -I * ls.g(k, j);
                w(ad(k), b(j)) = I * std::conj(ls.g(k, j));
                w(ad(k), bd(j)) = I * std::conj(ls.g(k, j));
            }
        }
        for (int j = 0; j < n; ++j) {
            w(b(j), b(j)) = -I * ls.omega[j] - ls.gamma[j] / 2.0;
            w(bd(j), bd(j)) = I * ls.omega[j] - ls.gamma[j] / 2.0;
            for (int k = 0; k < m; ++k) {
                w(b(j), a(k)) = -I * std::conj(ls.g(k, j));
                w(b(j), ad(k)) = -I * ls.g(k, j);
                w(bd(j), a(k)) = I * std::conj(ls.g(k, j));
                w(bd(j), ad(k)) = I * ls.g(k, j);
            }
            c(b(j), bd(j)) = ls.gamma[j] * (n_th + 1.0);
            c(bd(j), b(j)) = ls.gamma[j] * n_th;
        }
        for (int k = 0; k < m; ++k) c(a(k), ad(k)) = ls.kappa[k]; // optical bath at n ~ 0
    }

    // Embed a packed state into the ordered matrix using the commutators.
    Eigen::MatrixXcd embed(const MomentState& s) const {
        Eigen::MatrixXcd sig(size, size);
        auto value = [&](int p, int q) -> Complex {
            auto kind = [&](int i) { return i < m ? 0 : (i < m + n ? 1 : (i < 2 * m + n ? 2 : 3)); };
            auto idx = [&](int i) {
                int k = kind(i);
                return k == 0 ? i : (k == 1 ? i - m : (k == 2 ? i - m - n : i - 2 * m - n));
            };
            int kp = kind(p), kq = kind(q), ip = idx(p), iq = idx(q);
            // order-independent pairs first
            if (kp == 0 && kq == 0) return s.sym_a(ip, iq);
            if (kp == 1 && kq == 1) return s.sym_b(ip, iq);
            if (kp == 2 && kq == 2) return std::conj(s.sym_a(ip, iq));
            if (kp == 3 && kq == 3) return std::conj(s.sym_b(ip, iq));
            if ((kp == 0 && kq == 1)) return s.ab(ip, iq);
            if ((kp == 1 && kq == 0)) return s.ab(iq, ip);
            if ((kp == 2 && kq == 3)) return std::conj(s.ab(ip, iq));
            if ((kp == 3 && kq == 2)) return std::conj(s.ab(iq, ip));
            if (kp == 2 && kq == 1) return s.adb(ip, iq);
            if (kp == 1 && kq == 2) return s.adb(iq, ip);
            if (kp == 0 && kq == 3) return std::conj(s.adb(ip, iq));
            if (kp == 3 && kq == 0) return std::conj(s.adb(iq, ip));
            if (kp == 2 && kq == 0) return s.herm_a(ip, iq);
            if (kp == 0 && kq == 2) // <a a^dag> = <a^dag a> + delta
                return s.herm_a(iq, ip) + (ip == iq ? 1.0 : 0.0);
            if (kp == 3 && kq == 1) return s.herm_b(ip, iq);
            /* kp == 1 && kq == 3 */
            return s.herm_b(iq, ip) + (ip == iq ? 1.0 : 0.0);
        };
        for (int p = 0; p < size; ++p)
            for (int q = 0; q < size; ++q) sig(p, q) = value(p, q);
        return sig;
    }

    // Extract the packed derivative from dSigma/dt.
    Eigen::VectorXd derivative_packed(const MomentState& s) const {
        Eigen::MatrixXcd sig = embed(s);
        Eigen::MatrixXcd dsig = w * sig + sig * w.transpose() + c;
        MomentState d(s.layout());
        auto a = [&](int k) { return k; };
        auto b = [&](int j) { return m + j; };
        auto ad = [&](int k) { return m + n + k; };
        auto bd = [&](int j) { return 2 * m + n + j; };
        for (int p = 0; p < m; ++p)
            for (int q = p; q < m; ++q) {
                d.set_herm_a(p, q, dsig(ad(p), a(q)));
                d.set_sym_a(p, q, dsig(a(p), a(q)));
            }
        for (int p = 0; p < n; ++p)
            for (int q = p; q < n; ++q) {
                d.set_herm_b(p, q, dsig(bd(p), b(q)));
                d.set_sym_b(p, q, dsig(b(p), b(q)));
            }
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < n; ++j) {
                d.set_adb(k, j, dsig(ad(k), b(j)));
                d.set_ab(k, j, dsig(a(k), b(j)));
            }
        return d.packed();
    }

    // Consistency of the redundant ordered entries: commutators must be
    // conserved, d(<a a^dag> - <a^dag a>)/dt = 0.
    double commutator_drift(const MomentState& s) const {
        Eigen::MatrixXcd sig = embed(s);
        Eigen::MatrixXcd dsig = w * sig + sig * w.transpose() + c;
        double worst = 0.0;
        for (int k = 0; k < m; ++k)
            for (int kp = 0; kp < m; ++kp)
                worst = std::max(worst, std::abs(dsig(k, m + n + kp) - dsig(m + n + kp, k)));
        for (int j = 0; j < n; ++j)
            for (int jp = 0; jp < n; ++jp)
                worst = std::max(worst,
                                 std::abs(dsig(m + j, 2 * m + n + jp) - dsig(2 * m + n + jp, m + j)));
        return worst;
    }
};

LinearizedSystem random_system(std::mt19937& rng, int m, int n, double g_scale = 0.5) {
    std::uniform_real_distribution<double> u(0.2, 2.0);
    std::normal_distribution<double> z;
    LinearizedSystem ls;
    ls.delta.resize(m);
    ls.kappa.resize(m);
    ls.omega.resize(n);
    ls.gamma.resize(n);
    ls.g.resize(m, n);
    for (int k = 0; k < m; ++k) {
        ls.delta[k] = u(rng) * 2.0;
        ls.kappa[k] = u(rng);
    }
    for (int j = 0; j < n; ++j) {
        ls.omega[j] = u(rng) * 2.0;
        ls.gamma[j] = 0.1 * u(rng);
    }
    for (int k = 0; k < m; ++k)
        for (int j = 0; j < n; ++j) ls.g(k, j) = g_scale * Complex(z(rng), z(rng)) * 0.3;
    ls.alpha = Eigen::VectorXcd::Zero(m);
    ls.beta = Eigen::VectorXcd::Zero(n);
    return ls;
}

} // namespace

TEST_CASE("packed dimension formula", "[moments]") {
    REQUIRE(MomentLayout(2, 2).dim() == 36);
    REQUIRE(MomentLayout(1, 2).dim() == 21);
    REQUIRE(MomentLayout(1, 1).dim() == 10);
    REQUIRE(MomentLayout(12, 10).dim() == 990);
}

TEST_CASE("packing round trip and Hermitian access", "[moments]") {
    MomentLayout layout(2, 3);
    MomentState s(layout);
    s.set_herm_b(0, 1, Complex(0.5, -0.25));
    REQUIRE(s.herm_b(0, 1) == Complex(0.5, -0.25));
    REQUIRE(s.herm_b(1, 0) == Complex(0.5, 0.25));
    s.set_herm_b(2, 1, Complex(1.0, 2.0)); // stores the conjugate at (1,2)
    REQUIRE(s.herm_b(1, 2) == Complex(1.0, -2.0));
    s.set_sym_a(1, 0, Complex(3.0, 4.0));
    REQUIRE(s.sym_a(0, 1) == Complex(3.0, 4.0));
    REQUIRE(s.sym_a(1, 0) == Complex(3.0, 4.0));
    s.set_herm_b(1, 1, Complex(7.0, 0.0));
    REQUIRE(s.herm_b(1, 1).real() == 7.0);
    Eigen::MatrixXcd hb = s.herm_b_matrix();
    REQUIRE(hb(0, 1) == Complex(0.5, -0.25));
    REQUIRE((hb - hb.adjoint()).norm() == 0.0);
}

TEST_CASE("generator agrees with the ordered-moment oracle", "[moments]") {
    std::mt19937 rng(777);
    std::normal_distribution<double> z;
    for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 2}, {2, 3}}) {
        for (int trial = 0; trial < 8; ++trial) {
            LinearizedSystem ls = random_system(rng, m, n);
            const double n_th = 3.7;
            MomentGenerator gen = build_generator(ls, n_th);
            OrderedOracle oracle(ls, n_th);

            MomentState s(gen.layout);
            for (int i = 0; i < gen.layout.dim(); ++i) s.packed()[i] = z(rng);

            Eigen::VectorXd via_gen = gen.drift * s.packed() + gen.source;
            Eigen::VectorXd via_oracle = oracle.derivative_packed(s);
            double scale = std::max(1.0, via_oracle.norm());
            REQUIRE((via_gen - via_oracle).norm() / scale < 1e-12);
            REQUIRE(oracle.commutator_drift(s) < 1e-12);
        }
    }
}

TEST_CASE("drift diagonal carries the quoted a^dag b coefficient", "[moments]") {
    std::mt19937 rng(31);
    LinearizedSystem ls = random_system(rng, 2, 2);
    MomentGenerator gen = build_generator(ls, 1.0);
    for (int k = 0; k < 2; ++k) {
        for (int j = 0; j < 2; ++j) {
            const Complex lambda(-0.5 * (ls.gamma[j] + ls.kappa[k]), ls.delta[k] - ls.omega[j]);
            int i = gen.layout.adb(k, j);
            REQUIRE(gen.drift(i, i) == Approx(lambda.real()).margin(1e-14));
            REQUIRE(gen.drift(i, i + 1) == Approx(-lambda.imag()).margin(1e-14));
            REQUIRE(gen.drift(i + 1, i) == Approx(lambda.imag()).margin(1e-14));
            REQUIRE(gen.drift(i + 1, i + 1) == Approx(lambda.real()).margin(1e-14));
        }
    }
}

TEST_CASE("decoupled system thermalizes", "[moments]") {
    testutil::TwoModeParams p;
    SystemConfig cfg = testutil::two_mode_config(p);
    cfg.coupling.g.setZero();
    LinearizedSystem ls = make_direct_linearized(cfg);
    MomentGenerator gen = build_generator(ls, p.n_th);
    MomentState ss = steady_state_moments(gen);
    auto ph = phonon_numbers(ss);
    REQUIRE(ph.per_mode[0] == Approx(p.n_th).epsilon(1e-10));
    REQUIRE(ph.per_mode[1] == Approx(p.n_th).epsilon(1e-10));
    REQUIRE(ss.herm_a(0, 0).real() == Approx(0.0).margin(1e-12));
    REQUIRE(std::abs(ss.ab(0, 0)) < 1e-12);
}

TEST_CASE("dual-drive steady state matches the adiabatic closed form", "[moments]") {
    testutil::TwoModeParams p; // Gamma = 0.05, cos(theta) = 0.8
    SystemConfig cfg = testutil::two_mode_config(p);
    LinearizedSystem ls = make_direct_linearized(cfg);
    MomentGenerator gen = build_generator(ls, p.n_th);
    auto ph = phonon_numbers(steady_state_moments(gen));

    // Adiabatic two-mode result evaluated independently here.
    const double g = p.gamma_mech, G = p.gamma_total, s2 = 1.0 - p.cos_theta * p.cos_theta;
    const double expected = 2.0 * g * p.n_th * (g + 2.0 * G) /
                            (g * g + 4.0 * g * G + 4.0 * G * G * s2);
    REQUIRE(expected / p.n_th == Approx(5.5e-3).epsilon(0.02)); // sanity of the oracle itself
    REQUIRE(ph.total == Approx(expected).epsilon(0.05));
}

TEST_CASE("single-drive dark mode saturates at the thermal occupancy", "[moments]") {
    testutil::TwoModeParams p;
    p.drives = 1;
    p.gamma_total = 0.2; // well above the mechanical splitting
    SystemConfig cfg = testutil::two_mode_config(p);
    LinearizedSystem ls = make_direct_linearized(cfg);
    MomentGenerator gen = build_generator(ls, p.n_th);
    MomentState ss = steady_state_moments(gen);

    Eigen::VectorXcd row = cfg.coupling.g.row(0).transpose();
    Eigen::VectorXcd dark(2);
    dark[0] = -std::conj(row[1]);
    dark[1] = std::conj(row[0]);
    dark.normalize();
    double n_dark = hybrid_occupancy(ss, dark);
    REQUIRE(n_dark == Approx(p.n_th).epsilon(0.02));
}

TEST_CASE("hybrid occupancy basics", "[moments]") {
    testutil::TwoModeParams p;
    SystemConfig cfg = testutil::two_mode_config(p);
    LinearizedSystem ls = make_direct_linearized(cfg);
    MomentGenerator gen = build_generator(ls, p.n_th);
    MomentState ss = steady_state_moments(gen);
    auto ph = phonon_numbers(ss);

    SECTION("basis vectors reproduce per-mode numbers") {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(2);
        e[0] = 1.0;
        REQUIRE(hybrid_occupancy(ss, e) == Approx(ph.per_mode[0]).epsilon(1e-12));
    }
    SECTION("trace invariance over a random orthonormal basis") {
        std::mt19937 rng(5);
        std::normal_distribution<double> z;
        Eigen::MatrixXcd zmat(2, 2);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) zmat(a, b) = Complex(z(rng), z(rng));
        Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(zmat).householderQ();
        double sum = 0.0;
        for (int i = 0; i < 2; ++i) sum += hybrid_occupancy(ss, q.col(i));
        REQUIRE(sum == Approx(ph.total).epsilon(1e-10));
    }
    SECTION("non-normalized vectors are rejected") {
        Eigen::VectorXcd e = Eigen::VectorXcd::Constant(2, Complex(1.0, 0.0));
        REQUIRE_THROWS_AS(hybrid_occupancy(ss, e), std::invalid_argument);
    }
    SECTION("numerical positivity of mechanical occupancies") {
        REQUIRE(ph.per_mode.minCoeff() > -1e-9 * p.n_th);
    }
}

TEST_CASE("steady state is a fixed point of the integrator", "[moments]") {
    testutil::TwoModeParams p;
    SystemConfig cfg = testutil::two_mode_config(p);
    LinearizedSystem ls = make_direct_linearized(cfg);
    MomentGenerator gen = build_generator(ls, p.n_th);
    MomentState ss = steady_state_moments(gen);

    double dt = default_time_step(ls);
    MomentTrajectory traj = evolve_moments(gen, ss, dt, 2000 * dt, {.record_stride = 2000});
    double rel = (traj.states.back() - ss.packed()).norm() / ss.packed().norm();
    REQUIRE(rel < 1e-9);
}

TEST_CASE("long-time evolution agrees with the linear solve", "[moments][oracle]") {
    std::mt19937 rng(99);
    for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 1}, {2, 2}}) {
        LinearizedSystem ls = random_system(rng, m, n, 0.8);
        // keep the system distinctly damped so the horizon stays short
        for (int j = 0; j < n; ++j) ls.gamma[j] = 0.2 + 0.2 * j;
        const double n_th = 2.0;
        MomentGenerator gen = build_generator(ls, n_th);
        MomentState ss = steady_state_moments(gen);
        MomentState m0 = thermal_state(gen.layout, n_th);
        double dt = 0.5 * default_time_step(ls);
        MomentTrajectory traj = evolve_moments(gen, m0, dt, 400.0, {.record_stride = 100000});
        double rel = (traj.states.back() - ss.packed()).norm() /
                     std::max(1.0, ss.packed().norm());
        REQUIRE(rel < 1e-6);
    }
}

TEST_CASE("integrator shows fourth-order convergence", "[moments]") {
    std::mt19937 rng(2024);
    LinearizedSystem ls = random_system(rng, 1, 1, 1.0);
    MomentGenerator gen = build_generator(ls, 1.5);
    MomentState m0 = thermal_state(gen.layout, 1.5);
    const double t_end = 2.0;

    auto run = [&](double dt) {
        return evolve_moments(gen, m0, dt, t_end, {.record_stride = 1 << 30}).states.back();
    };
    Eigen::VectorXd coarse = run(0.02);
    Eigen::VectorXd mid = run(0.01);
    Eigen::VectorXd fine = run(0.005);
    double order = std::log2((coarse - mid).norm() / (mid - fine).norm());
    REQUIRE(order == Approx(4.0).margin(0.2));
}

TEST_CASE("weak-coupling consistency with the closed form", "[moments]") {
    testutil::TwoModeParams p;
    p.gamma_total = 0.02;
    SystemConfig cfg = testutil::two_mode_config(p);
    LinearizedSystem ls = make_direct_linearized(cfg);
    MomentGenerator gen = build_generator(ls, p.n_th);
    auto ph = phonon_numbers(steady_state_moments(gen));
    const double g = p.gamma_mech, G = p.gamma_total, s2 = 0.36;
    const double eq2 = 2.0 * g * p.n_th * (g + 2.0 * G) / (g * g + 4.0 * g * G + 4.0 * G * G * s2);
    REQUIRE(ph.total == Approx(eq2).epsilon(0.05));
}

TEST_CASE("undamped dark mode is reported as a stability error", "[moments]") {
    testutil::TwoModeParams p;
    p.drives = 1;
    p.gamma_mech = 0.0; // invalid physically; the solver must refuse
    SystemConfig cfg = testutil::two_mode_config(p);
    cfg.mechanical[0].gamma = 0.0;
    cfg.mechanical[1].gamma = 0.0;
    cfg.mechanical[0].omega = 20.0; // fully degenerate: exact dark mode
    cfg.mechanical[1].omega = 20.0;
    LinearizedSystem ls = make_direct_linearized(cfg);
    MomentGenerator gen = build_generator(ls, p.n_th);
    REQUIRE_THROWS_AS(steady_state_moments(gen), StabilityError);
}

TEST_CASE("step-size guards", "[moments]") {
    testutil::TwoModeParams p;
    SystemConfig cfg = testutil::two_mode_config(p);
    LinearizedSystem ls = make_direct_linearized(cfg);
    MomentGenerator gen = build_generator(ls, p.n_th);
    MomentState m0 = thermal_state(gen.layout, p.n_th);
    REQUIRE_THROWS_AS(evolve_moments(gen, m0, 1.0, 10.0), NumericalError);
    REQUIRE_THROWS_AS(evolve_moments(gen, m0, -0.1, 10.0), std::invalid_argument);
}
