#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dwell/errors.hpp"
#include "dwell/grid.hpp"
#include "dwell/operators.hpp"
#include "dwell/potential.hpp"

namespace dwell {

enum class Parity { Even, Odd, None };

inline const char* to_string(Parity p) {
    switch (p) {
        case Parity::Even: return "even";
        case Parity::Odd: return "odd";
        default: return "none";
    }
}

//! One computed eigenpair. The vector has unit grid norm and its entry of
//! largest magnitude is positive (first index wins ties); the residual is
//! ||H v - e v|| re-measured with an explicit matvec after the solve.
struct EigenPair {
    double energy = 0.0;
    GridFunction vector;
    double residual = 0.0;
    Parity parity = Parity::None;

    bool bound() const { return energy < 0.0; }
    double kappa() const { return energy < 0.0 ? std::sqrt(-energy) : 0.0; }
};

struct SpectralGap {
    int level = 0;       // 1-based index into the computed list
    double gamma = 0.0;  // distance from e_j to the rest of the computed spectrum
    bool degenerate = false;
};

namespace detail {

using Apply = std::function<void(const double*, double*)>;

inline void fix_phase(std::vector<double>& v) {
    std::size_t best = 0;
    double mag = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double m = std::abs(v[i]);
        if (m > mag) {
            mag = m;
            best = i;
        }
    }
    if (v[best] < 0.0)
        for (auto& x : v) x = -x;
}

//! Thick-restart Lanczos with full reorthogonalization for the k smallest
//! eigenvalues of a symmetric operator. The operator is applied shifted by a
//! Gershgorin lower bound so the iteration runs on a positive semidefinite
//! matrix; the shift is added back on exit. Residual targets are absolute.
struct LanczosResult {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;  // unit Euclidean norm
    std::vector<double> residuals;
    int cycles = 0;
};

inline LanczosResult lanczos_smallest(const Apply& apply_raw, std::size_t n, int k,
                                      double tol_abs, double shift, int max_cycles,
                                      std::uint64_t seed, int subspace_dim = 0) {
    if (k < 1) throw Error("lanczos: k must be >= 1");
    if (static_cast<std::size_t>(k) > n) throw Error("lanczos: k exceeds dimension");

    // Cap the basis so very large 2D problems stay within a few hundred MB.
    int m = subspace_dim > 0 ? subspace_dim : std::max(2 * k + 32, 60);
    const int mem_cap = static_cast<int>(std::max<std::size_t>(300'000'000 / (8 * n), 24));
    m = std::min({m, static_cast<int>(n), std::max(mem_cap, 2 * k + 8)});

    auto apply = [&](const double* x, double* y) {
        apply_raw(x, y);
        if (shift != 0.0)
            for (std::size_t i = 0; i < n; ++i) y[i] -= shift * x[i];
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::vector<double>> Q;  // orthonormal basis, grows to m columns
    Q.reserve(m + 1);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);

    auto dot = [n](const double* a, const double* b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    };
    auto reorthogonalize = [&](std::vector<double>& w, int cols) {
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < cols; ++j) {
                const double c = dot(w.data(), Q[j].data());
                for (std::size_t i = 0; i < n; ++i) w[i] -= c * Q[j][i];
            }
    };
    auto fresh_vector = [&](int cols) {
        std::vector<double> w(n);
        for (auto& x : w) x = gauss(rng);
        reorthogonalize(w, cols);
        double nm = std::sqrt(dot(w.data(), w.data()));
        for (auto& x : w) x /= nm;
        return w;
    };

    Q.push_back(fresh_vector(0));
    int nlock = 0;  // leading Ritz vectors kept across restarts
    std::vector<double> w(n), ritz_res;
    LanczosResult out;

    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        // Extend the basis to m columns; T(0..nlock-1) already holds kept Ritz
        // values on the diagonal plus their couplings to column nlock.
        double beta_m = 0.0;  // coupling of Q[m] to the last basis column
        for (int col = nlock; col < m; ++col) {
            apply(Q[col].data(), w.data());
            const double alpha = dot(w.data(), Q[col].data());
            for (std::size_t i = 0; i < n; ++i) w[i] -= alpha * Q[col][i];
            reorthogonalize(w, col + 1);
            double beta = std::sqrt(dot(w.data(), w.data()));
            T(col, col) = alpha;
            if (beta < 1e-13 * std::max(1.0, std::abs(alpha))) {
                // invariant subspace found; continue with a fresh direction
                w = fresh_vector(col + 1);
                beta = 0.0;
            } else {
                for (auto& x : w) x /= beta;
            }
            if (static_cast<int>(Q.size()) <= col + 1)
                Q.push_back(w);
            else
                Q[col + 1] = w;
            if (col + 1 < m) {
                T(col, col + 1) = beta;
                T(col + 1, col) = beta;
            } else {
                beta_m = beta;
            }
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(m, m));
        const auto& theta = es.eigenvalues();
        const auto& Y = es.eigenvectors();

        ritz_res.assign(m, 0.0);
        for (int j = 0; j < m; ++j) ritz_res[j] = std::abs(beta_m * Y(m - 1, j));

        int converged = 0;
        while (converged < k && ritz_res[converged] <= tol_abs) ++converged;

        out.cycles = cycle + 1;
        const bool done = converged >= k;
        const int keep = done ? k : std::min(m - 2, std::max(2 * k, converged + k + 4));

        // form the kept Ritz vectors in place
        std::vector<std::vector<double>> kept(keep, std::vector<double>(n, 0.0));
        for (int j = 0; j < keep; ++j)
            for (int c = 0; c < m; ++c) {
                const double y = Y(c, j);
                if (y == 0.0) continue;
                const auto& q = Q[c];
                auto& dst = kept[j];
                for (std::size_t i = 0; i < n; ++i) dst[i] += y * q[i];
            }

        if (done) {
            out.values.resize(k);
            out.vectors = std::move(kept);
            out.residuals.assign(ritz_res.begin(), ritz_res.begin() + k);
            for (int j = 0; j < k; ++j) out.values[j] = theta[j] + shift;
            return out;
        }

        // thick restart: kept Ritz vectors + the residual direction
        std::vector<double> r = Q[m];  // unit vector, the (m+1)-th Lanczos vector
        for (int j = 0; j < keep; ++j) Q[j] = std::move(kept[j]);
        Q[keep] = std::move(r);
        T.setZero();
        for (int j = 0; j < keep; ++j) {
            T(j, j) = theta[j];
            const double c = beta_m * Y(m - 1, j);
            T(j, keep) = c;
            T(keep, j) = c;
        }
        nlock = keep;
    }
    throw NoConvergence(max_cycles, "lanczos");
}

//! Euclidean-orthonormalized copy of `basis`; throws DegenerateBasis when the
//! Gram matrix is numerically singular.
inline std::vector<std::vector<double>>
orthonormal_basis(const std::vector<std::vector<double>>& basis, std::size_t n) {
    const int nb = static_cast<int>(basis.size());
    if (nb == 0) return {};
    Eigen::MatrixXd G(nb, nb);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += basis[i][t] * basis[j][t];
            G(i, j) = s;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double emin = es.eigenvalues().minCoeff(), emax = es.eigenvalues().maxCoeff();
    if (!(emin > 0.0) || emax / emin > 1e12)
        throw DegenerateBasis(emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity());

    std::vector<std::vector<double>> Q;
    for (const auto& b : basis) {
        std::vector<double> w = b;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : Q) {
                double c = 0.0;
                for (std::size_t t = 0; t < n; ++t) c += w[t] * q[t];
                for (std::size_t t = 0; t < n; ++t) w[t] -= c * q[t];
            }
        double nm = 0.0;
        for (double x : w) nm += x * x;
        nm = std::sqrt(nm);
        for (auto& x : w) x /= nm;
        Q.push_back(std::move(w));
    }
    return Q;
}

//! MINRES for symmetric (possibly indefinite) systems. Returns the relative
//! residual reached; the caller decides whether that is good enough.
inline double minres(const Apply& apply, const std::vector<double>& b, std::vector<double>& x,
                     double rel_tol, int max_iter) {
    const std::size_t n = b.size();
    auto dot = [n](const std::vector<double>& a, const std::vector<double>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * c[i];
        return s;
    };
    x.assign(n, 0.0);
    std::vector<double> v_prev(n, 0.0), v = b, v_next(n), w_prev(n, 0.0), w_pprev(n, 0.0);
    double beta = std::sqrt(dot(v, v));
    const double norm_b = beta;
    if (norm_b == 0.0) return 0.0;
    for (auto& t : v) t /= beta;

    double eta = beta;
    double c_old = 1.0, c_oold = 1.0, s_old = 0.0, s_oold = 0.0;
    double res = 1.0;

    for (int it = 0; it < max_iter; ++it) {
        apply(v.data(), v_next.data());
        const double alpha = dot(v_next, v);
        for (std::size_t i = 0; i < n; ++i) v_next[i] -= alpha * v[i] + beta * v_prev[i];
        const double beta_next = std::sqrt(dot(v_next, v_next));

        // two previous Givens rotations applied to the new tridiagonal column
        const double rho1 = s_oold * beta;
        const double rho2 = c_oold * c_old * beta + s_old * alpha;
        const double rho3_hat = c_old * alpha - c_oold * s_old * beta;
        const double rho3 = std::hypot(rho3_hat, beta_next);
        const double c_new = rho3 == 0.0 ? 1.0 : rho3_hat / rho3;
        const double s_new = rho3 == 0.0 ? 0.0 : beta_next / rho3;

        if (rho3 < 1e-300) break;  // singular system; x holds the least-squares iterate
        for (std::size_t i = 0; i < n; ++i) {
            const double wi = (v[i] - rho1 * w_pprev[i] - rho2 * w_prev[i]) / rho3;
            x[i] += c_new * eta * wi;
            w_pprev[i] = w_prev[i];
            w_prev[i] = wi;
        }
        eta = -s_new * eta;
        res = std::abs(eta) / norm_b;
        if (res <= rel_tol) return res;

        if (beta_next < 1e-300) break;
        for (std::size_t i = 0; i < n; ++i) {
            v_prev[i] = v[i];
            v[i] = v_next[i] / beta_next;
        }
        beta = beta_next;
        c_oold = c_old;
        c_old = c_new;
        s_oold = s_old;
        s_old = s_new;
    }
    return res;
}

}  // namespace detail

//! The k algebraically smallest eigenpairs of a symmetric operator, sorted
//! ascending. tol is relative to a Gershgorin estimate of the spectral
//! radius; each returned residual is verified by a direct matvec.
inline std::vector<EigenPair> lowest_k(const SparseOperator& H, const Grid& grid, int k,
                                       double tol = 1e-13) {
    if (k < 1) throw Error("lowest_k: k must be >= 1");
    if (tol <= 0.0) throw Error("lowest_k: tol must be positive");
    const auto [glo, ghi] = H.gershgorin();
    const double scale = std::max(std::abs(glo), std::abs(ghi));
    const double tol_abs = tol * scale;
    const std::size_t n = H.dim;

    detail::Apply apply = [&H](const double* x, double* y) { H.apply(x, y); };
    auto res = detail::lanczos_smallest(apply, n, k, tol_abs, glo, 50 * k,
                                        0x5eedbeefULL + n * 1315423911ULL);

    const double w = std::sqrt(grid.cell_volume());
    std::vector<EigenPair> out;
    out.reserve(k);
    std::vector<double> tmp(n);
    for (int j = 0; j < k; ++j) {
        EigenPair p;
        p.energy = res.values[j];
        detail::fix_phase(res.vectors[j]);
        H.apply(res.vectors[j].data(), tmp.data());
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ri = tmp[i] - p.energy * res.vectors[j][i];
            r2 += ri * ri;
        }
        p.residual = std::sqrt(r2);
        if (p.residual > 10.0 * tol_abs) throw NoConvergence(res.cycles, "lanczos residual check");
        for (auto& x : res.vectors[j]) x /= w;  // unit norm in the grid inner product
        p.vector = GridFunction(grid, std::move(res.vectors[j]));
        out.push_back(std::move(p));
    }
    return out;
}

//! Per-level spectral gaps from a sorted list of computed energies. A level
//! within split_tol of a neighbor is flagged degenerate; a single computed
//! energy falls back to its distance |e| from the essential spectrum edge.
inline std::vector<SpectralGap> detect_degeneracy(const std::vector<EigenPair>& pairs,
                                                  double split_tol = 1e-9) {
    std::vector<SpectralGap> out;
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        SpectralGap g;
        g.level = static_cast<int>(j) + 1;
        if (pairs.size() == 1) {
            g.gamma = std::abs(pairs[j].energy);
        } else {
            double dist = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < pairs.size(); ++i)
                if (i != j) dist = std::min(dist, std::abs(pairs[i].energy - pairs[j].energy));
            g.gamma = dist;
        }
        g.degenerate = g.gamma < split_tol;
        out.push_back(g);
    }
    return out;
}

//! Parity of f about the plane x1 = center, measured on the largest subgrid
//! that the reflection maps onto itself. Returns the label of the smaller
//! defect together with that defect (in the grid norm).
inline std::pair<Parity, double> classify_parity(const GridFunction& f, double center) {
    const Grid& g = f.grid;
    const double t = 2.0 * (center - g.x0[0]) / g.h;
    const long long t2 = std::llround(t);
    if (std::abs(t - t2) > 1e-9) throw MisalignedPlane(center);
    double minus2 = 0.0, plus2 = 0.0;
    for (int i1 = 0; i1 < g.n[0]; ++i1) {
        const long long ir = t2 - i1;  // index of the reflected node
        if (ir < 0 || ir >= g.n[0]) continue;
        const std::size_t a = g.index(i1), b = g.index(static_cast<int>(ir));
        for (int i2 = 0; i2 < g.n[1]; ++i2) {
            const double u = f.values[a + i2], v = f.values[b + i2];
            minus2 += (v - u) * (v - u);
            plus2 += (v + u) * (v + u);
        }
    }
    minus2 *= g.cell_volume();
    plus2 *= g.cell_volume();
    const double even_defect = std::sqrt(minus2), odd_defect = std::sqrt(plus2);
    if (even_defect <= odd_defect) return {Parity::Even, even_defect};
    return {Parity::Odd, odd_defect};
}

//! Smallest singular value of A restricted to the orthogonal complement of
//! span(basis), by block inverse iteration with MINRES inner solves on the
//! deflated operator P A P. An empty basis gives min |eigenvalue of A|.
inline double min_singular_on_complement(const SparseOperator& A,
                                         const std::vector<const GridFunction*>& basis,
                                         double rel_tol = 1e-6, int max_outer = 120) {
    const std::size_t n = A.dim;
    std::vector<std::vector<double>> raw;
    raw.reserve(basis.size());
    for (const auto* b : basis) {
        if (b->values.size() != n) throw GridMismatch();
        raw.push_back(b->values);
    }
    const auto Q = detail::orthonormal_basis(raw, n);

    auto project = [&](std::vector<double>& v) {
        for (const auto& q : Q) {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) c += v[i] * q[i];
            for (std::size_t i = 0; i < n; ++i) v[i] -= c * q[i];
        }
    };
    std::vector<double> work(n);
    detail::Apply deflated = [&](const double* x, double* y) {
        std::copy(x, x + n, work.begin());
        project(work);
        A.apply(work.data(), y);
        std::copy(y, y + n, work.begin());
        project(work);
        std::copy(work.begin(), work.end(), y);
    };

    const auto [glo, ghi] = A.gershgorin();
    const double scale = std::max(std::abs(glo), std::abs(ghi));

    if (Q.size() >= n) throw Error("deflation basis spans the whole space");
    std::mt19937_64 rng(0xab5ca1eULL + n);
    std::normal_distribution<double> gauss(0.0, 1.0);
    // block of two separates near-degenerate extremes
    const int nb = std::max(1, std::min<int>(2, static_cast<int>(n - Q.size())));
    std::vector<std::vector<double>> X(nb, std::vector<double>(n));
    for (auto& x : X) {
        for (auto& t : x) t = gauss(rng);
        project(x);
    }
    X = detail::orthonormal_basis(X, n);

    auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    };

    // in-block orthonormalization; falls back to a fresh random direction
    // when the two solves collapse onto one vector
    auto orthonormalize_block = [&](std::vector<std::vector<double>>& Z) {
        for (int b = 0; b < nb; ++b) {
            for (int attempt = 0; attempt < 3; ++attempt) {
                for (int pass = 0; pass < 2; ++pass)
                    for (int j = 0; j < b; ++j) {
                        const double c = dot(Z[b], Z[j]);
                        for (std::size_t i = 0; i < n; ++i) Z[b][i] -= c * Z[j][i];
                    }
                const double nm = std::sqrt(dot(Z[b], Z[b]));
                if (nm > 1e-12 && std::isfinite(nm)) {
                    for (auto& t : Z[b]) t /= nm;
                    break;
                }
                for (auto& t : Z[b]) t = gauss(rng);
                project(Z[b]);
            }
        }
    };

    double sigma_prev = std::numeric_limits<double>::infinity();
    const int minres_cap = static_cast<int>(std::min<std::size_t>(4 * n + 100, 40000));
    std::vector<double> Bx(n);
    for (int outer = 0; outer < max_outer; ++outer) {
        std::vector<std::vector<double>> Z(nb, std::vector<double>(n));
        bool solver_stalled = false;
        for (int b = 0; b < nb; ++b) {
            detail::minres(deflated, X[b], Z[b], 1e-8, minres_cap);
            project(Z[b]);
            double zn = std::sqrt(dot(Z[b], Z[b]));
            if (!(zn > 0.0) || !std::isfinite(zn)) {
                Z[b] = X[b];
                zn = 1.0;
            }
            // huge growth means the deflated operator is (near) singular
            if (zn > 1e14) solver_stalled = true;
            for (auto& t : Z[b]) t /= zn;
        }
        orthonormalize_block(Z);

        // Rayleigh-Ritz on the block
        Eigen::MatrixXd Hb(nb, nb);
        std::vector<std::vector<double>> BZ(nb, std::vector<double>(n));
        for (int b = 0; b < nb; ++b) deflated(Z[b].data(), BZ[b].data());
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j) Hb(i, j) = dot(Z[i], BZ[j]);
        Hb = 0.5 * (Hb + Hb.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hb);

        int pick = 0;
        for (int j = 1; j < nb; ++j)
            if (std::abs(es.eigenvalues()[j]) < std::abs(es.eigenvalues()[pick])) pick = j;
        const double theta = es.eigenvalues()[pick];

        // residual of the picked Ritz pair
        std::fill(Bx.begin(), Bx.end(), 0.0);
        std::vector<double> zv(n, 0.0);
        for (int b = 0; b < nb; ++b) {
            const double y = es.eigenvectors()(b, pick);
            for (std::size_t i = 0; i < n; ++i) {
                Bx[i] += y * BZ[b][i];
                zv[i] += y * Z[b][i];
            }
        }
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ri = Bx[i] - theta * zv[i];
            r2 += ri * ri;
        }
        const double resid = std::sqrt(r2);
        const double sigma = std::abs(theta);

        if (solver_stalled && sigma < 1e-10 * scale) return 0.0;
        if (resid <= std::max(rel_tol * sigma, 1e-12 * scale) &&
            std::abs(sigma - sigma_prev) <= std::max(rel_tol * sigma, 1e-12 * scale))
            return sigma;
        sigma_prev = sigma;
        X = std::move(Z);
    }
    throw NoConvergence(max_outer, "inverse iteration");
}

}  // namespace dwell
