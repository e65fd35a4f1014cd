#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dwell/eigensolve.hpp"
#include "dwell/errors.hpp"
#include "dwell/grid.hpp"
#include "dwell/potential.hpp"

namespace dwell {

struct TailFit {
    double A_plus = 0.0;
    double A_minus = 0.0;
    double kappa = 0.0;
    double fit_residual = 0.0;  // max relative deviation over the fit windows
};

//! Hopping coefficient by its defining volume integral,
//!   rho = lambda^2 <phi, v(X) R^d phi> = h^nu sum phi * pot * (R^d phi).
//! pot_single must be the lambda^2-scaled single well centered at 0.
inline double rho_volume(const EigenPair& phi, const GridFunction& pot_single, double d,
                         double a) {
    if (d <= 2.0 * a) throw SeparationTooSmall(d, a);
    const GridFunction shifted = translate_axis1(phi.vector, d);
    double s = 0.0;
    for (std::size_t i = 0; i < phi.vector.values.size(); ++i)
        s += phi.vector.values[i] * pot_single.values[i] * shifted.values[i];
    return phi.vector.grid.cell_volume() * s;
}

//! Hopping coefficient as a flux through the hyperplane {x1 = c},
//!   rho = integral over the plane of [ (d1 phi) R^d phi - phi d1 R^d phi ].
//! Any plane strictly between the supports gives the same value.
inline double rho_surface(const EigenPair& phi, double d, double c, double a) {
    if (!(c > a && c < d - a)) throw PlaneInsideSupport(c, a, d);
    const GridFunction shifted = translate_axis1(phi.vector, d);
    const SliceData sp = slice_and_normal_derivative(phi.vector, c);
    const SliceData st = slice_and_normal_derivative(shifted, c);
    double s = 0.0;
    for (std::size_t t = 0; t < sp.slice.size(); ++t)
        s += sp.dslice[t] * st.slice[t] - sp.slice[t] * st.dslice[t];
    const Grid& g = phi.vector.grid;
    return g.nu == 1 ? s : g.h * s;
}

//! Reflection-symmetric form: +/- the x1-derivative at d/2 of the transverse
//! mass g(x1) = integral |phi|^2 dxp, upper sign for even states.
inline double rho_symmetric(const EigenPair& phi, double d, Parity parity) {
    if (parity == Parity::None) throw NoDefiniteParity(1.0);
    const Grid& g = phi.vector.grid;
    const int ic = g.node_at(0, d / 2.0);
    if (ic < 1 || ic > g.n[0] - 2) throw MisalignedPlane(d / 2.0);
    auto mass = [&](int i1) {
        double s = 0.0;
        const std::size_t base = g.index(i1);
        for (int i2 = 0; i2 < g.n[1]; ++i2) {
            const double v = phi.vector.values[base + i2];
            s += v * v;
        }
        return g.nu == 1 ? s : g.h * s;
    };
    const double dg = (mass(ic + 1) - mass(ic - 1)) / (2.0 * g.h);
    return parity == Parity::Even ? dg : -dg;
}

//! Tail amplitudes of a 1D bound state: phi ~ A- e^{kappa x} on the left and
//! A+ e^{-kappa x} on the right, with kappa = sqrt(-e) taken from the
//! eigenvalue. Amplitudes come from a fixed-slope least-squares fit of
//! log|phi| on [a + 2/kappa, a + 8/kappa] (right) and its mirror; for excited
//! states the window starts beyond the outermost sign change.
inline TailFit extract_tail_amplitudes_1d(const EigenPair& phi, double a) {
    const Grid& g = phi.vector.grid;
    if (g.nu != 1) throw Error("tail extraction is one-dimensional");
    if (!phi.bound()) throw Error("tail extraction needs a bound state (e < 0)");
    const double kappa = phi.kappa();
    const auto& v = phi.vector.values;
    const int n = g.n[0];

    // outermost sign changes of the wavefunction
    double last_node_right = -std::numeric_limits<double>::infinity();
    double last_node_left = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i) {
        if (v[i] * v[i + 1] < 0.0) {
            const double x = g.coord(0, i);
            last_node_right = std::max(last_node_right, x);
            last_node_left = std::min(last_node_left, x + g.h);
        }
    }

    auto fit_side = [&](int sign) {
        double lo = a + 2.0 / kappa;
        if (sign > 0 && last_node_right > -1e300) lo = std::max(lo, last_node_right + 2.0 * g.h);
        if (sign < 0 && last_node_left < 1e300) lo = std::max(lo, -last_node_left + 2.0 * g.h);
        const double hi = lo + 6.0 / kappa;
        const double edge = sign > 0 ? g.coord(0, n - 1) : -g.coord(0, 0);
        if (hi > edge - g.h)
            throw TailTooShort("window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                               "] exceeds the box");
        double acc = 0.0;
        std::size_t cnt = 0;
        double ref_sign = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = sign > 0 ? g.coord(0, i) : -g.coord(0, i);
            if (x < lo || x > hi) continue;
            const double f = v[i];
            if (f == 0.0) throw SignChangeInWindow();
            if (ref_sign == 0.0) ref_sign = f > 0 ? 1.0 : -1.0;
            if (f * ref_sign < 0.0) throw SignChangeInWindow();
            acc += std::log(std::abs(f)) + kappa * x;
            ++cnt;
        }
        if (cnt < 4) throw TailTooShort("fewer than 4 samples in the fit window");
        const double A = ref_sign * std::exp(acc / static_cast<double>(cnt));
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = sign > 0 ? g.coord(0, i) : -g.coord(0, i);
            if (x < lo || x > hi) continue;
            const double model = A * std::exp(-kappa * x);
            worst = std::max(worst, std::abs(v[i] - model) / std::abs(model));
        }
        return std::pair<double, double>(A, worst);
    };

    TailFit out;
    out.kappa = kappa;
    const auto [ap, rp] = fit_side(+1);
    const auto [am, rm] = fit_side(-1);
    out.A_plus = ap;
    out.A_minus = am;
    out.fit_residual = std::max(rp, rm);
    return out;
}

//! Exact 1D law rho(d) = -2 A+ A- kappa e^{-kappa d} evaluated from a tail fit.
inline double rho_from_tails(const TailFit& t, double d) {
    return -2.0 * t.A_plus * t.A_minus * t.kappa * std::exp(-t.kappa * d);
}

//! One level's hopping data at a given separation.
struct HoppingResult {
    int j = 0;
    double d = 0.0;
    double rho_volume = 0.0;
    double rho_surface = 0.0;
    std::optional<double> rho_symmetric;  // present only for symmetric wells
    double plane_c = 0.0;
    std::optional<TailFit> tail;  // present only for nu == 1
};

inline HoppingResult compute_hopping(int j, const EigenPair& phi, const GridFunction& pot_single,
                                     double d, double a, bool symmetric_well) {
    HoppingResult r;
    r.j = j;
    r.d = d;
    r.plane_c = d / 2.0;
    r.rho_volume = rho_volume(phi, pot_single, d, a);
    r.rho_surface = rho_surface(phi, d, r.plane_c, a);
    if (symmetric_well && phi.parity != Parity::None)
        r.rho_symmetric = rho_symmetric(phi, d, phi.parity);
    if (phi.vector.grid.nu == 1 && phi.bound()) r.tail = extract_tail_amplitudes_1d(phi, a);
    return r;
}

}  // namespace dwell
