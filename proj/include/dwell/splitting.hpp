#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <vector>

#include "dwell/eigensolve.hpp"
#include "dwell/errors.hpp"
#include "dwell/grid.hpp"
#include "dwell/operators.hpp"

namespace dwell {

struct SplittingResult {
    int j = 0;
    double d = 0.0;
    double E_minus = 0.0;
    double E_plus = 0.0;
    double Delta = 0.0;          // E_plus - E_minus >= 0
    double ratio = 0.0;          // Delta / (2 |rho_j|), filled by the caller
    double pairing_score = 0.0;  // cos of the largest principal angle to span{phi, R^d phi}
};

//! Effective 2x2 problem on span{phi_j, R^d phi_j}:
//!   M_nm = <R^n phi, (H_dw - e_j) R^m phi>,  S = Gram matrix, n,m in {0, d}.
//! predicted_split is the gap between the two roots of det(M - Omega S) = 0.
struct TwoLevelModel {
    double M00 = 0.0, M0d = 0.0, Mdd = 0.0;
    double s = 0.0;  // overlap <phi, R^d phi>
    double predicted_split = 0.0;
};

namespace detail {

//! cos of the largest principal angle between span(U) and span(W), both given
//! as two grid functions; inputs need not be orthonormal.
inline double pairing_score(const GridFunction& u1, const GridFunction& u2,
                            const GridFunction& w1, const GridFunction& w2) {
    const std::size_t n = u1.values.size();
    auto ortho2 = [n](const std::vector<double>* a, const std::vector<double>* b) {
        Eigen::MatrixXd Q(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            Q(i, 0) = (*a)[i];
            Q(i, 1) = (*b)[i];
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Q);
        Eigen::MatrixXd thin = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
        return thin;
    };
    const Eigen::MatrixXd A = ortho2(&u1.values, &u2.values);
    const Eigen::MatrixXd B = ortho2(&w1.values, &w2.values);
    const Eigen::Matrix2d C = A.transpose() * B;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(C);
    return svd.singularValues().minCoeff();
}

}  // namespace detail

//! Pick the split pair born from the single-well level e_j out of an already
//! computed double-well spectrum: exactly the eigenvalues inside
//! (e_j - gamma_j/2, e_j + gamma_j/2). The computed list must reach past the
//! upper window edge so the count inside the window is trustworthy.
inline SplittingResult double_well_levels(const std::vector<EigenPair>& dw_pairs,
                                          const EigenPair& phi_j, int j, double d,
                                          double gamma_j) {
    const double e = phi_j.energy;
    if (!dw_pairs.empty() && dw_pairs.back().energy < e + gamma_j / 2.0)
        throw Error("double-well spectrum does not cover the cluster window");
    std::vector<const EigenPair*> in_window;
    for (const auto& p : dw_pairs)
        if (p.energy > e - gamma_j / 2.0 && p.energy < e + gamma_j / 2.0)
            in_window.push_back(&p);
    if (in_window.size() != 2)
        throw WrongClusterSize(static_cast<int>(in_window.size()), e, gamma_j);

    SplittingResult r;
    r.j = j;
    r.d = d;
    r.E_minus = in_window[0]->energy;
    r.E_plus = in_window[1]->energy;
    r.Delta = r.E_plus - r.E_minus;
    const GridFunction shifted = translate_axis1(phi_j.vector, d);
    r.pairing_score = detail::pairing_score(in_window[0]->vector, in_window[1]->vector,
                                            phi_j.vector, shifted);
    return r;
}

//! Convenience overload that diagonalizes H_dw itself (2j+1 lowest pairs).
inline SplittingResult double_well_levels(const SparseOperator& H_dw, const Grid& grid,
                                          const EigenPair& phi_j, int j, double d,
                                          double gamma_j, double eig_tol = 1e-13) {
    const auto dw = lowest_k(H_dw, grid, 2 * j + 1, eig_tol);
    return double_well_levels(dw, phi_j, j, d, gamma_j);
}

inline TwoLevelModel two_level_matrix(const EigenPair& phi_j, const SparseOperator& H_dw,
                                      double d, double e_j) {
    const GridFunction& phi = phi_j.vector;
    const GridFunction shifted = translate_axis1(phi, d);
    const GridFunction Hphi = H_dw.apply(phi);
    const GridFunction Hshift = H_dw.apply(shifted);

    TwoLevelModel m;
    m.s = inner(phi, shifted);
    if (std::abs(m.s) > 0.99) throw OverlapTooLarge(std::abs(m.s));
    m.M00 = inner(phi, Hphi) - e_j;
    m.M0d = inner(phi, Hshift) - e_j * m.s;
    m.Mdd = inner(shifted, Hshift) - e_j;

    // det(M - Omega S) = 0 with S = [[1, s], [s, 1]]; stable quadratic roots
    const double a = 1.0 - m.s * m.s;
    const double b = -(m.M00 + m.Mdd) + 2.0 * m.s * m.M0d;
    const double c = m.M00 * m.Mdd - m.M0d * m.M0d;
    const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
    m.predicted_split = disc / a;
    return m;
}

//! Dimensionless correction ratios that must vanish relative to rho as the
//! wells separate: the diagonal cross term, the overlap, and the energy of
//! the orthonormalized translate (R^d phi - s phi)/sqrt(1 - s^2).
struct CorrectionRatios {
    double r1 = 0.0;  // |lambda^2 <phi, (R^d v) phi>| / |rho|
    double r2 = 0.0;  // |s|
    double r3 = 0.0;  // |<Rt phi, (H - e) Rt phi>| / |rho|
};

inline CorrectionRatios corrections_report(const EigenPair& phi_j,
                                           const GridFunction& pot_single, double d, double rho,
                                           const TwoLevelModel& m) {
    const GridFunction& phi = phi_j.vector;
    const GridFunction pot_shifted = translate_axis1(pot_single, d);
    double num = 0.0;
    for (std::size_t i = 0; i < phi.values.size(); ++i)
        num += phi.values[i] * pot_shifted.values[i] * phi.values[i];
    num *= phi.grid.cell_volume();

    CorrectionRatios r;
    const double arho = std::abs(rho);
    r.r1 = std::abs(num) / arho;
    r.r2 = std::abs(m.s);
    const double s2 = m.s * m.s;
    r.r3 = std::abs((m.Mdd - 2.0 * m.s * m.M0d + s2 * m.M00) / (1.0 - s2)) / arho;
    return r;
}

}  // namespace dwell
