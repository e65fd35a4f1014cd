#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dwell/eigensolve.hpp"
#include "dwell/errors.hpp"
#include "dwell/grid.hpp"
#include "dwell/hopping.hpp"
#include "dwell/potential.hpp"

namespace dwell {

//! Least-squares exponential fit of a sweep: value ~ e^{intercept + slope * x}.
struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double rate() const { return -slope; }
};

inline DecayFit fit_decay_rate(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 4) throw TooFewSamples(samples.size());
    double sign = 0.0;
    for (const auto& [x, v] : samples) {
        if (v == 0.0) throw SignChange();
        if (sign == 0.0) sign = v > 0 ? 1.0 : -1.0;
        if (v * sign < 0.0) throw SignChange();
    }
    const double n = static_cast<double>(samples.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, v] : samples) {
        const double y = std::log(std::abs(v));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    DecayFit f;
    const double vxx = sxx - sx * sx / n, vxy = sxy - sx * sy / n, vyy = syy - sy * sy / n;
    f.slope = vxy / vxx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r_squared = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
    f.window_lo = samples.front().first;
    f.window_hi = samples.back().first;
    return f;
}

//! One verification outcome, reported as a row of the JSON report.
struct CheckResult {
    std::string name;
    std::string paper_ref;  // the mathematical statement being exercised
    bool pass = false;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

// --- ratio limit -----------------------------------------------------------

struct RatioSample {
    double d = 0.0;
    double ratio = 0.0;  // Delta / (2 |rho|)
    double noise = 0.0;  // jitter scale of this ratio from the eigensolver
};

//! Delta_j/(2|rho_j|) must approach 1: within tol at the largest d and
//! |ratio - 1| non-increasing over the final three records, increases below
//! the per-point noise floor ignored.
inline CheckResult check_ratio_limit(const std::vector<RatioSample>& sweep, double tol) {
    CheckResult c;
    c.name = "ratio_limit";
    c.paper_ref = "lim_{d->inf} Delta_j / (2 |rho_j|) = 1";
    c.tolerance = tol;
    c.expected = 1.0;
    if (sweep.empty()) {
        c.detail = "empty sweep";
        return c;
    }
    c.measured = sweep.back().ratio;
    bool monotone = true;
    const std::size_t lo = sweep.size() > 3 ? sweep.size() - 3 : 0;
    for (std::size_t i = lo + 1; i < sweep.size(); ++i) {
        const double prev = std::abs(sweep[i - 1].ratio - 1.0);
        const double cur = std::abs(sweep[i].ratio - 1.0);
        const double floor = std::max(sweep[i].noise, sweep[i - 1].noise);
        if (cur > prev + floor) monotone = false;
    }
    const bool close = std::abs(c.measured - 1.0) < tol;
    c.pass = close && monotone;
    c.detail = monotone ? "tail monotone" : "tail not monotone";
    return c;
}

// --- lower bound on the hopping decay rate ---------------------------------

//! |rho_j(d)| may not decay faster than sqrt(-e_j + eps) allows: the fitted
//! rate must lie in [kappa (1 - rate_tol), sqrt(kappa^2 + eps)].
inline CheckResult check_lower_bound(const std::vector<std::pair<double, double>>& rho_samples,
                                     double e_j, double epsilon, double rate_tol) {
    const double kappa = std::sqrt(-e_j);
    const DecayFit fit = fit_decay_rate(rho_samples);
    CheckResult c;
    c.name = "hopping_lower_bound";
    c.paper_ref = "|rho(d)| >= C_eps sqrt(-e) exp(-d sqrt(-e + eps))";
    c.measured = fit.rate();
    c.expected = kappa;
    c.tolerance = rate_tol;
    const double hi = std::sqrt(kappa * kappa + epsilon);
    c.pass = fit.rate() >= kappa * (1.0 - rate_tol) && fit.rate() <= hi;
    c.detail = "admissible rate window [" + std::to_string(kappa * (1.0 - rate_tol)) + ", " +
               std::to_string(hi) + "], r^2 = " + std::to_string(fit.r_squared);
    return c;
}

// --- pointwise decay of bound states ----------------------------------------

//! Fit of log|phi| along an axis ray outside the well, with the dimensional
//! prefactor (r - a)^{-(nu-1)/2} removed before fitting.
inline DecayFit agmon_ray_fit(const EigenPair& phi, double a, int axis, int direction) {
    const Grid& g = phi.vector.grid;
    const double kappa = phi.kappa();
    if (kappa <= 0.0) throw Error("pointwise decay fit needs a bound state");
    const int i0_1 = g.node_at(0, 0.0);
    const int i0_2 = g.nu == 2 ? g.node_at(1, 0.0) : 0;
    const double lo = a + 2.0 / kappa, hi = a + 8.0 / kappa;

    std::vector<std::pair<double, double>> samples;
    const int nmax = g.n[axis];
    for (int step = 1;; ++step) {
        const int i = (axis == 0 ? i0_1 : i0_2) + direction * step;
        if (i < 0 || i >= nmax) break;
        const double r = step * g.h;
        if (r > hi) break;
        if (r < lo) continue;
        const double v =
            axis == 0 ? phi.vector.values[g.index(i, i0_2)] : phi.vector.values[g.index(i0_1, i)];
        double y = std::abs(v);
        if (g.nu == 2) y *= std::pow(r - a, 0.5);  // remove (r - a)^{-1/2}
        samples.push_back({r, v >= 0.0 ? y : -y});
    }
    if (samples.size() < 4) throw TailTooShort("ray leaves the box before the fit window ends");
    return fit_decay_rate(samples);
}

//! Pointwise exponential decay at rate kappa = sqrt(-e) along every axis ray.
inline CheckResult check_agmon(const EigenPair& phi, double a, double rate_tol) {
    const Grid& g = phi.vector.grid;
    const double kappa = phi.kappa();
    CheckResult c;
    c.name = "pointwise_decay";
    c.paper_ref = "|phi(x)| <= C (|x|-a)^{-(nu-1)/2} exp(-sqrt(-e)(|x|-a))";
    c.expected = kappa;
    c.tolerance = rate_tol;
    double worst = 0.0, worst_rate = kappa;
    for (int axis = 0; axis < g.nu; ++axis)
        for (int dir : {+1, -1}) {
            const DecayFit f = agmon_ray_fit(phi, a, axis, dir);
            const double dev = std::abs(f.rate() - kappa) / kappa;
            if (dev > worst) {
                worst = dev;
                worst_rate = f.rate();
            }
        }
    c.measured = worst_rate;
    c.pass = worst <= rate_tol;
    c.detail = "max relative rate deviation " + std::to_string(worst);
    return c;
}

// --- energy estimate --------------------------------------------------------

//! sigma_min of (H_dw - e_j) on the complement of span{phi_j, R^d phi_j} must
//! stay within margin(d) = e^{-kappa (d - 2a)/2} + 0.05 of the gap gamma_j.
inline CheckResult check_energy_estimate(double sigma_min, double gamma_j, double kappa_j,
                                         double d, double a) {
    const double margin = std::exp(-kappa_j * (d - 2.0 * a) / 2.0) + 0.05;
    CheckResult c;
    c.name = "energy_estimate";
    c.paper_ref = "||(H - e) psi|| >= (gamma - xi_d) ||psi|| on the two-level complement";
    c.measured = sigma_min;
    c.expected = gamma_j;
    c.tolerance = margin;
    c.pass = sigma_min >= gamma_j * (1.0 - margin);
    c.detail = "lower threshold " + std::to_string(gamma_j * (1.0 - margin));
    return c;
}

// --- parity -----------------------------------------------------------------

//! Definite parity of symmetric-well eigenstates: defect within 10x the
//! eigensolver residual target.
inline CheckResult check_parity(const EigenPair& phi, double center, double eig_tol_abs) {
    const auto [label, defect] = classify_parity(phi.vector, center);
    CheckResult c;
    c.name = "parity";
    c.paper_ref = "eigenspaces of a symmetric well split into even and odd states";
    c.measured = defect;
    c.expected = 0.0;
    c.tolerance = 10.0 * eig_tol_abs;
    c.pass = defect <= c.tolerance;
    c.detail = std::string("label ") + to_string(label);
    return c;
}

// --- partition of unity -----------------------------------------------------

namespace detail {

//! Normalized integral of the C-infinity mollifier exp(-1/(t(1-t))) on [0,u],
//! from a fixed Simpson table; S(0) = 0, S(1) = 1 exactly.
inline double mollifier_cdf(double u) {
    static const std::array<double, 2049> table = [] {
        std::array<double, 2049> t{};
        auto f = [](double x) {
            if (x <= 0.0 || x >= 1.0) return 0.0;
            return std::exp(-1.0 / (x * (1.0 - x)));
        };
        const int n = 2048;
        const double dh = 1.0 / n;
        t[0] = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double a = (i - 1) * dh, b = i * dh;
            t[i] = t[i - 1] + dh / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
        for (int i = 0; i <= n; ++i) t[i] /= t[n];
        t[n] = 1.0;
        return t;
    }();
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double p = u * 2048.0;
    const int i = std::min(static_cast<int>(p), 2047);
    return table[i] + (p - i) * (table[i + 1] - table[i]);
}

//! Smooth ramp equal to 1 on [0, r_in] and 0 on [r_out, inf).
inline double smooth_ramp(double r, double r_in, double r_out) {
    if (r <= r_in) return 1.0;
    if (r >= r_out) return 0.0;
    return 1.0 - mollifier_cdf((r - r_in) / (r_out - r_in));
}

}  // namespace detail

//! Theta_d(x) = f(|x|) + f(|x - d e1|) with f = 1 on [0, d/3] and 0 past d/2.
inline double theta_d(double d, const std::array<double, 2>& x, int nu) {
    const double r0 = nu == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
    const double rd = nu == 1 ? std::abs(x[0] - d) : std::hypot(x[0] - d, x[1]);
    return detail::smooth_ramp(r0, d / 3.0, d / 2.0) + detail::smooth_ramp(rd, d / 3.0, d / 2.0);
}

inline GridFunction sample_theta_d(double d, const Grid& grid) {
    GridFunction out(grid);
    for (int i1 = 0; i1 < grid.n[0]; ++i1)
        for (int i2 = 0; i2 < grid.n[1]; ++i2) {
            const std::array<double, 2> x = {grid.coord(0, i1),
                                             grid.nu == 2 ? grid.coord(1, i2) : 0.0};
            out.values[grid.index(i1, i2)] = theta_d(d, x, grid.nu);
        }
    return out;
}

//! sup-norms of the discrete gradient and Laplacian of Theta_d over the grid
//! interior; both shrink as the ramp stretches with d.
inline std::pair<double, double> partition_commutator_norms(double d, const Grid& grid) {
    if (d <= 0.0) throw Error("partition needs d > 0");
    const GridFunction th = sample_theta_d(d, grid);
    const double h = grid.h;
    double grad_max = 0.0, lap_max = 0.0;
    const int i2_lo = grid.nu == 2 ? 1 : 0;
    const int i2_hi = grid.nu == 2 ? grid.n[1] - 2 : 0;
    for (int i1 = 1; i1 + 1 < grid.n[0]; ++i1)
        for (int i2 = i2_lo; i2 <= i2_hi; ++i2) {
            const std::size_t c = grid.index(i1, i2);
            const double g1 = (th.values[grid.index(i1 + 1, i2)] - th.values[grid.index(i1 - 1, i2)]) / (2 * h);
            double lap = (th.values[grid.index(i1 + 1, i2)] - 2 * th.values[c] +
                          th.values[grid.index(i1 - 1, i2)]) /
                         (h * h);
            double g2 = 0.0;
            if (grid.nu == 2) {
                g2 = (th.values[grid.index(i1, i2 + 1)] - th.values[grid.index(i1, i2 - 1)]) / (2 * h);
                lap += (th.values[grid.index(i1, i2 + 1)] - 2 * th.values[c] +
                        th.values[grid.index(i1, i2 - 1)]) /
                       (h * h);
            }
            grad_max = std::max(grad_max, std::hypot(g1, g2));
            lap_max = std::max(lap_max, std::abs(lap));
        }
    return {grad_max, lap_max};
}

// --- plane invariance of the surface formula --------------------------------

//! Relative spread of rho_surface over planes spanning the middle half of
//! (a, d - a); the proposition says the value does not depend on the plane.
inline CheckResult plane_invariance(const EigenPair& phi, double d, double a, double tol,
                                    int max_planes = 33) {
    const Grid& g = phi.vector.grid;
    const double lo = a + 0.25 * (d - 2.0 * a), hi = d - a - 0.25 * (d - 2.0 * a);
    const int ilo = g.node_at(0, g.h * std::ceil(lo / g.h - 1e-12));
    const int ihi = g.node_at(0, g.h * std::floor(hi / g.h + 1e-12));
    const int count = ihi - ilo + 1;
    const int stride = std::max(1, count / max_planes);

    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin, vsum = 0.0;
    int used = 0;
    for (int i = ilo; i <= ihi; i += stride) {
        const double c = g.coord(0, i);
        const double v = rho_surface(phi, d, c, a);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        vsum += v;
        ++used;
    }
    CheckResult c;
    c.name = "plane_invariance";
    c.paper_ref = "the surface integral for rho is independent of the separating plane";
    c.measured = (vmax - vmin) / std::abs(vsum / used);
    c.expected = 0.0;
    c.tolerance = tol;
    c.pass = c.measured <= tol;
    c.detail = std::to_string(used) + " planes in [" + std::to_string(g.coord(0, ilo)) + ", " +
               std::to_string(g.coord(0, ihi)) + "]";
    return c;
}

//! Largest pairwise relative deviation among the hopping formulas.
inline CheckResult formula_agreement(const HoppingResult& hop, double tol) {
    CheckResult c;
    c.name = "formula_agreement";
    c.paper_ref = "volume, surface and symmetric expressions for rho agree";
    const double ref = std::abs(hop.rho_volume);
    double dev = std::abs(hop.rho_volume - hop.rho_surface);
    if (hop.rho_symmetric) {
        dev = std::max(dev, std::abs(hop.rho_volume - *hop.rho_symmetric));
        dev = std::max(dev, std::abs(hop.rho_surface - *hop.rho_symmetric));
    }
    c.measured = dev / ref;
    c.expected = 0.0;
    c.tolerance = tol;
    c.pass = c.measured <= tol;
    return c;
}

//! Relative spread (max - min) / |mean| of a list of values.
inline double relative_spread(const std::vector<double>& vals) {
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin, s = 0.0;
    for (double v : vals) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
        s += v;
    }
    return (vmax - vmin) / std::abs(s / static_cast<double>(vals.size()));
}

}  // namespace dwell
