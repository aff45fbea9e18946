#pragma once

// Rotating-wave (beam-splitter) eigenanalysis of the linearized system:
// dynamical matrix, branch composition and continuity matching along
// parameter sweeps, exceptional-point detection, dark-subspace and Schmidt
// bases, the optically induced dissipation matrix P = 2 G^dag K^-1 G, and
// coupling angles.
//
// Dark-mode convention for complex couplings: a hybrid mode b~ = sum_j e_j b_j
// couples to drive k with strength sum_j g_kj e_j^*, so darkness means
// g_k^* . e = 0 — equivalently Hermitian orthogonality to the coupling row.
// The bright vector of row g is therefore e_+ = g / ||g||, and all dark
// vectors span the Hermitian-orthogonal complement of the rows.

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "omcool/errors.hpp"
#include "omcool/linearize.hpp"

namespace omcool {

enum class BranchLabel { OpticalLike, BrightLike, DarkLike };

inline const char* to_string(BranchLabel label) {
    switch (label) {
        case BranchLabel::OpticalLike: return "optical";
        case BranchLabel::BrightLike: return "bright";
        default: return "dark";
    }
}

struct SpectralReport {
    Eigen::VectorXcd eigenvalues;     // M+N complex frequencies
    Eigen::MatrixXcd eigenvectors;    // columns, normalized
    Eigen::VectorXd photonic_weight;  // per eigenvector, in [0, 1]
    Eigen::VectorXd phononic_weight;  // 1 - photonic
    std::vector<BranchLabel> labels;
    bool matching_tie = false; // set by sweep matching on a degenerate overlap

    int size() const { return static_cast<int>(eigenvalues.size()); }
};

struct DarkSubspace {
    Eigen::MatrixXcd basis; // N x dimension, orthonormal columns
    int dimension = 0;
};

struct DissipationMatrix {
    Eigen::MatrixXcd total;                  // P, Hermitian N x N
    std::vector<Eigen::MatrixXcd> per_drive; // rank-1 parts P^(k)
};

struct SchmidtBasis {
    Eigen::MatrixXcd vectors; // N x rank, orthonormal columns e_1..e_rank
    int rank = 0;
    int requested = 0; // number of coupling rows fed in
};

struct CouplingAngles {
    double theta = 0.0;      // angle between the first two rows (N = 2 use)
    Eigen::VectorXd theta_k; // general-N angles, square invertible G only
};

struct ExceptionalPoint {
    double parameter = 0.0; // sweep coordinate of the coalescence
    double distance = 0.0;  // refined minimum pairwise eigenvalue distance
    int branch_a = 0;
    int branch_b = 0;
};

/// Non-Hermitian RWA dynamical matrix
///   [ diag(delta_k - i kappa_k/2)    G                   ]
///   [ G^dag                          diag(omega_j - i gamma_j/2) ]
/// whose eigenvalues are the hybrid-mode complex frequencies.
inline Eigen::MatrixXcd rwa_dynamical_matrix(const LinearizedSystem& ls) {
    const int m = ls.drives(), n = ls.modes();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + n, m + n);
    const Complex I(0.0, 1.0);
    for (int k = 0; k < m; ++k) h(k, k) = ls.delta[k] - I * ls.kappa[k] / 2.0;
    for (int j = 0; j < n; ++j) h(m + j, m + j) = ls.omega[j] - I * ls.gamma[j] / 2.0;
    h.topRightCorner(m, n) = ls.g;
    h.bottomLeftCorner(n, m) = ls.g.adjoint();
    return h;
}

/// Eigen-decomposition with per-branch photonic/phononic weights. The
/// optional coupling matrix refines mechanical-like branches into bright vs
/// dark by their overlap with the span of the coupling rows. Standalone
/// ordering is deterministic (ascending real part, then imaginary part);
/// sweep continuity is restored by match_to_previous.
inline SpectralReport eigenmodes(const Eigen::MatrixXcd& matrix, int num_optical,
                                 const Eigen::MatrixXcd* coupling = nullptr) {
    const int total = static_cast<int>(matrix.rows());
    const int m = num_optical, n = total - num_optical;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigenmodes: eigen-decomposition failed");

    std::vector<int> order(total);
    for (int i = 0; i < total; ++i) order[i] = i;
    const auto& ev = solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (ev[a].real() != ev[b].real()) return ev[a].real() < ev[b].real();
        return ev[a].imag() < ev[b].imag();
    });

    SpectralReport rep;
    rep.eigenvalues.resize(total);
    rep.eigenvectors.resize(total, total);
    rep.photonic_weight.resize(total);
    rep.phononic_weight.resize(total);
    rep.labels.resize(total);

    // Bright space = span of the conjugated coupling rows in the mechanical
    // sector (darkness is Hermitian orthogonality to them).
    Eigen::MatrixXcd bright_basis;
    if (coupling && coupling->rows() > 0 && coupling->norm() > 0.0) {
        Eigen::MatrixXcd rows = coupling->transpose(); // N x M, columns = rows of G
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(rows, Eigen::ComputeThinU);
        int rank = 0;
        const double thresh = 1e-12 * svd.singularValues().maxCoeff();
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > thresh) ++rank;
        bright_basis = svd.matrixU().leftCols(rank);
    }

    for (int i = 0; i < total; ++i) {
        const int src = order[i];
        rep.eigenvalues[i] = ev[src];
        Eigen::VectorXcd v = solver.eigenvectors().col(src);
        v.normalize();
        rep.eigenvectors.col(i) = v;
        const double wopt = v.head(m).squaredNorm();
        rep.photonic_weight[i] = wopt;
        rep.phononic_weight[i] = 1.0 - wopt;
        if (wopt > 0.5) {
            rep.labels[i] = BranchLabel::OpticalLike;
        } else if (bright_basis.size() > 0 && n > 0) {
            Eigen::VectorXcd mech = v.tail(n);
            double mnorm = mech.squaredNorm();
            double bright = (bright_basis.adjoint() * mech).squaredNorm();
            rep.labels[i] = (mnorm > 0.0 && bright / mnorm > 0.5) ? BranchLabel::BrightLike
                                                                  : BranchLabel::DarkLike;
        } else {
            rep.labels[i] = BranchLabel::DarkLike;
        }
    }
    return rep;
}

/// Reorder a report so branch i continues previous branch i, by greedy
/// maximal eigenvector overlap. Degenerate overlaps are flagged and broken
/// by index order.
inline void match_to_previous(const Eigen::MatrixXcd& previous_vectors, SpectralReport& rep) {
    const int total = rep.size();
    Eigen::MatrixXd overlap(total, total);
    for (int i = 0; i < total; ++i)
        for (int j = 0; j < total; ++j)
            overlap(i, j) = std::abs(previous_vectors.col(i).dot(rep.eigenvectors.col(j)));

    std::vector<int> assign(total, -1);
    std::vector<bool> used_row(total, false), used_col(total, false);
    for (int pass = 0; pass < total; ++pass) {
        int best_i = -1, best_j = -1;
        double best = -1.0;
        for (int i = 0; i < total; ++i) {
            if (used_row[i]) continue;
            for (int j = 0; j < total; ++j) {
                if (used_col[j]) continue;
                if (overlap(i, j) > best + 1e-12) {
                    best = overlap(i, j);
                    best_i = i;
                    best_j = j;
                } else if (std::abs(overlap(i, j) - best) <= 1e-12 && best >= 0.0) {
                    rep.matching_tie = true;
                }
            }
        }
        assign[best_i] = best_j;
        used_row[best_i] = true;
        used_col[best_j] = true;
    }

    SpectralReport out = rep;
    for (int i = 0; i < total; ++i) {
        const int j = assign[i];
        out.eigenvalues[i] = rep.eigenvalues[j];
        out.eigenvectors.col(i) = rep.eigenvectors.col(j);
        out.photonic_weight[i] = rep.photonic_weight[j];
        out.phononic_weight[i] = rep.phononic_weight[j];
        out.labels[i] = rep.labels[j];
    }
    rep = std::move(out);
}

struct SpectrumSweepPoint {
    double parameter = 0.0;
    SpectralReport report;
};

/// Eigenvalue branches along a parameter sweep with continuity matching.
inline std::vector<SpectrumSweepPoint> spectrum_sweep(
    const std::function<Eigen::MatrixXcd(double)>& matrix_at, int num_optical,
    const std::vector<double>& grid, const Eigen::MatrixXcd* coupling = nullptr) {
    std::vector<SpectrumSweepPoint> out;
    out.reserve(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        SpectralReport rep = eigenmodes(matrix_at(grid[i]), num_optical, coupling);
        if (!out.empty()) match_to_previous(out.back().report.eigenvectors, rep);
        out.push_back({grid[i], std::move(rep)});
    }
    return out;
}

namespace detail {

inline double min_pairwise_distance(const Eigen::VectorXcd& ev, int* ia = nullptr,
                                    int* ib = nullptr) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ev.size(); ++i)
        for (int j = i + 1; j < ev.size(); ++j) {
            double d = std::abs(ev[i] - ev[j]);
            if (d < best) {
                best = d;
                if (ia) *ia = i;
                if (ib) *ib = j;
            }
        }
    return best;
}

} // namespace detail

/// Exceptional points along a sweep: local minima of the minimum pairwise
/// eigenvalue distance, refined by golden-section search, accepted when the
/// refined distance falls below the coalescence threshold (1e-6 in sweep
/// frequency units by default; pass kappa to scale).
inline std::vector<ExceptionalPoint> find_exceptional_points(
    const std::function<Eigen::MatrixXcd(double)>& matrix_at, const std::vector<double>& grid,
    double coalescence_threshold) {
    auto distance_at = [&](double p, int* a = nullptr, int* b = nullptr) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> s(matrix_at(p), false);
        return detail::min_pairwise_distance(s.eigenvalues(), a, b);
    };

    std::vector<double> d(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) d[i] = distance_at(grid[i]);

    std::vector<ExceptionalPoint> eps;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (size_t i = 1; i + 1 < grid.size(); ++i) {
        if (!(d[i] <= d[i - 1] && d[i] <= d[i + 1])) continue;
        double a = grid[i - 1], b = grid[i + 1];
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = distance_at(x1), f2 = distance_at(x2);
        for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(std::abs(b), 1e-30); ++it) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = distance_at(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = distance_at(x2);
            }
        }
        const double p_star = 0.5 * (a + b);
        int ia = 0, ib = 0;
        const double d_star = distance_at(p_star, &ia, &ib);
        if (d_star < coalescence_threshold) {
            // merge with a previously found EP if the refinement landed twice
            bool dup = false;
            for (const auto& e : eps)
                if (std::abs(e.parameter - p_star) <
                    1e-6 * std::max(std::abs(p_star), 1e-30))
                    dup = true;
            if (!dup) eps.push_back({p_star, d_star, ia, ib});
        }
    }
    return eps;
}

/// Orthonormal basis of the dark subspace: all mechanical superpositions with
/// g_k^* . e = 0 for every drive. Dimension N - rank(G); singular values
/// below 1e-10 of the largest count as zero.
inline DarkSubspace dark_subspace(const CouplingMatrix& coupling,
                                  double rank_threshold = 1e-10) {
    const int n = coupling.modes();
    DarkSubspace out;
    if (coupling.drives() == 0 || coupling.g.norm() == 0.0) {
        out.basis = Eigen::MatrixXcd::Identity(n, n);
        out.dimension = n;
        return out;
    }
    Eigen::MatrixXcd gc = coupling.g.conjugate();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(gc, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double thresh = rank_threshold * sv.maxCoeff();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > thresh) ++rank;
    out.dimension = n - rank;
    out.basis = svd.matrixV().rightCols(out.dimension);
    return out;
}

/// P = 2 G^dag K^-1 G and its rank-one per-drive parts
/// p^(k)_{jj'} = 2 g^*_{kj} g_{kj'} / kappa_k. Tr P^(k) = 2 Gamma_k.
inline DissipationMatrix dissipation_matrix(const LinearizedSystem& ls) {
    const int m = ls.drives(), n = ls.modes();
    DissipationMatrix out;
    out.total = Eigen::MatrixXcd::Zero(n, n);
    out.per_drive.reserve(m);
    for (int k = 0; k < m; ++k) {
        Eigen::VectorXcd row = ls.g.row(k).transpose();
        Eigen::MatrixXcd part = 2.0 / ls.kappa[k] * row.conjugate() * row.transpose();
        out.total += part;
        out.per_drive.push_back(std::move(part));
    }
    return out;
}

/// Bright/dark pair for a two-mode mechanical space: the bright vector is the
/// coupling row direction, the dark one its Hermitian-orthogonal complement
/// (g^* . dark = 0). For real couplings this is the familiar
/// (g1, g2), (-g2, g1) pair.
inline std::pair<Eigen::Vector2cd, Eigen::Vector2cd> bright_dark_split(
    const Eigen::Vector2cd& coupling_row) {
    const double norm = coupling_row.norm();
    if (norm == 0.0) throw std::invalid_argument("bright_dark_split: zero coupling row");
    Eigen::Vector2cd bright = coupling_row / norm;
    Eigen::Vector2cd dark;
    dark[0] = -std::conj(coupling_row[1]) / norm;
    dark[1] = std::conj(coupling_row[0]) / norm;
    return {bright, dark};
}

/// Gram-Schmidt over the coupling rows in drive order (Hermitian inner
/// product). With drives 1..k active, vectors e_{k+1}.. stay dark. Linearly
/// dependent rows are dropped and reported through rank < requested.
inline SchmidtBasis schmidt_basis(const Eigen::MatrixXcd& coupling,
                                  double dependence_threshold = 1e-10) {
    const int m = static_cast<int>(coupling.rows());
    const int n = static_cast<int>(coupling.cols());
    SchmidtBasis out;
    out.requested = m;
    out.vectors.resize(n, std::min(m, n));
    int rank = 0;
    for (int k = 0; k < m && rank < n; ++k) {
        Eigen::VectorXcd v = coupling.row(k).transpose();
        const double before = v.norm();
        if (before == 0.0) continue;
        for (int r = 0; r < rank; ++r)
            v -= out.vectors.col(r).dot(v) * out.vectors.col(r);
        if (v.norm() <= dependence_threshold * before) continue;
        // second orthogonalization pass for numerical hygiene
        for (int r = 0; r < rank; ++r)
            v -= out.vectors.col(r).dot(v) * out.vectors.col(r);
        out.vectors.col(rank) = v / v.norm();
        ++rank;
    }
    out.rank = rank;
    out.vectors.conservativeResize(n, rank);
    return out;
}

/// Schmidt vectors completed to a full orthonormal mechanical basis with
/// dark-subspace vectors.
inline Eigen::MatrixXcd complete_schmidt_basis(const Eigen::MatrixXcd& coupling) {
    const int n = static_cast<int>(coupling.cols());
    SchmidtBasis sb = schmidt_basis(coupling);
    if (sb.rank == n) return sb.vectors;
    CouplingMatrix cm;
    cm.g = coupling;
    DarkSubspace dark = dark_subspace(cm);
    Eigen::MatrixXcd full(n, n);
    full.leftCols(sb.rank) = sb.vectors;
    full.rightCols(n - sb.rank) = dark.basis;
    return full;
}

/// Cross angle of the first two coupling rows, in [0, pi/2]. Collinear rows
/// give 0; zero rows give 0 by convention.
inline double coupling_pair_angle(const Eigen::MatrixXcd& coupling) {
    if (coupling.rows() < 2) return 0.0;
    Eigen::VectorXcd g1 = coupling.row(0).transpose();
    Eigen::VectorXcd g2 = coupling.row(1).transpose();
    const double denom = g1.norm() * g2.norm();
    if (denom == 0.0) return 0.0;
    double c = std::abs(g1.dot(g2)) / denom;
    return std::acos(std::clamp(c, 0.0, 1.0));
}

/// Angle between each row g_k and the hyperplane spanned by the others, via
/// the reciprocal vectors c_k (columns of conj(G)^-1, g_k^* . c_j =
/// delta_kj): sin(theta_k) = 1 / (||g_k|| ||c_k||). Requires a square
/// invertible coupling matrix; dependent rows raise an error naming the rank.
inline Eigen::VectorXd coupling_hyperplane_angles(const Eigen::MatrixXcd& coupling) {
    const int m = static_cast<int>(coupling.rows());
    const int n = static_cast<int>(coupling.cols());
    if (m != n || n == 0)
        throw std::invalid_argument("coupling_hyperplane_angles: square coupling matrix required");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(coupling);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-12 * sv.maxCoeff()) ++rank;
    if (rank < n)
        throw NumericalError("coupling_hyperplane_angles: coupling rows are linearly dependent "
                             "(rank " + std::to_string(rank) + " of " + std::to_string(n) + ")");
    Eigen::MatrixXcd c = coupling.conjugate().inverse();
    Eigen::VectorXd theta(n);
    for (int k = 0; k < n; ++k) {
        const double s = 1.0 / (coupling.row(k).norm() * c.col(k).norm());
        theta[k] = std::asin(std::clamp(s, 0.0, 1.0));
    }
    return theta;
}

/// Both angle families at once (theta_k only for square matrices, where a
/// singular G is an error).
inline CouplingAngles coupling_angles(const Eigen::MatrixXcd& coupling) {
    CouplingAngles out;
    out.theta = coupling_pair_angle(coupling);
    if (coupling.rows() == coupling.cols() && coupling.cols() > 0)
        out.theta_k = coupling_hyperplane_angles(coupling);
    return out;
}

} // namespace omcool
