#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dwell/errors.hpp"
#include "dwell/grid.hpp"

namespace dwell {

enum class WellShape { SquareWell, SmoothBump, TabulatedRadial };

//! Single-atom well of compact support: v = 0 outside the ball of radius a.
//! lambda_sq is the depth factor; the Hamiltonian uses lambda_sq * v.
struct PotentialSpec {
    WellShape shape = WellShape::SquareWell;
    double a = 1.0;
    double lambda_sq = 4.0;
    bool reflection_symmetric = true;
    // TabulatedRadial only: piecewise-linear samples of v(r), clamped to 0 beyond a.
    std::vector<double> radii;
    std::vector<double> samples;
};

//! v as a function of the radius. The square well takes the jump mean -1/2 on
//! nodes that land exactly on r = a, which keeps the finite-difference
//! eigenvalues second-order accurate; everywhere else it is -1 inside, 0 out.
inline double eval_radial(const PotentialSpec& spec, double r) {
    const double edge_tol = 1e-9 * std::max(1.0, spec.a);
    switch (spec.shape) {
        case WellShape::SquareWell:
            if (std::abs(r - spec.a) <= edge_tol) return -0.5;
            return r < spec.a ? -1.0 : 0.0;
        case WellShape::SmoothBump: {
            if (r >= spec.a - edge_tol) return 0.0;
            const double a2 = spec.a * spec.a;
            return -std::exp(1.0 - a2 / (a2 - r * r));
        }
        case WellShape::TabulatedRadial: {
            if (r >= spec.a) return 0.0;
            const auto& rs = spec.radii;
            const auto& vs = spec.samples;
            if (rs.empty()) return 0.0;
            if (r <= rs.front()) return vs.front();
            if (r >= rs.back()) return 0.0;
            auto it = std::upper_bound(rs.begin(), rs.end(), r);
            const std::size_t i = static_cast<std::size_t>(it - rs.begin());
            const double t = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
            return vs[i - 1] + t * (vs[i] - vs[i - 1]);
        }
    }
    return 0.0;
}

inline double eval_single_well(const PotentialSpec& spec, const std::array<double, 2>& x,
                               int nu = 1) {
    const double r = nu == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
    return eval_radial(spec, r);
}

struct DoubleWellConfig {
    PotentialSpec spec;
    double d = 6.0;  // separation along axis 1
};

//! Samples of lambda_sq * v(x - center e1) on the grid nodes.
inline GridFunction sample_single_well(const PotentialSpec& spec, const Grid& grid,
                                       double center = 0.0) {
    GridFunction out(grid);
    for (int i1 = 0; i1 < grid.n[0]; ++i1) {
        const double x1 = grid.coord(0, i1) - center;
        for (int i2 = 0; i2 < grid.n[1]; ++i2) {
            const double x2 = grid.nu == 2 ? grid.coord(1, i2) : 0.0;
            out.values[grid.index(i1, i2)] =
                spec.lambda_sq * eval_single_well(spec, {x1, x2}, grid.nu);
        }
    }
    return out;
}

//! Samples of lambda_sq * (v(x) + v(x - d)); the separation used is the grid's
//! snapped d. Requires d > 2a and both supports at least one spacing inside
//! the walls.
inline GridFunction assemble_double_well(const DoubleWellConfig& cfg, const Grid& grid) {
    const double a = cfg.spec.a, d = grid.d;
    if (std::abs(grid.d - cfg.d) > grid.h) throw GridMismatch();
    if (d <= 2.0 * a) throw SeparationTooSmall(d, a);
    const double lo = grid.coord(0, 0), hi = grid.coord(0, grid.n[0] - 1);
    if (lo > -a - grid.h || hi < d + a + grid.h)
        throw BoxTooSmall("well support closer than one spacing to an axis-1 wall");
    if (grid.nu == 2 && grid.L < a + grid.h)
        throw BoxTooSmall("well support closer than one spacing to a transverse wall");

    GridFunction out(grid);
    for (int i1 = 0; i1 < grid.n[0]; ++i1) {
        const double x1 = grid.coord(0, i1);
        for (int i2 = 0; i2 < grid.n[1]; ++i2) {
            const double x2 = grid.nu == 2 ? grid.coord(1, i2) : 0.0;
            out.values[grid.index(i1, i2)] =
                cfg.spec.lambda_sq *
                (eval_single_well(cfg.spec, {x1, x2}, grid.nu) +
                 eval_single_well(cfg.spec, {x1 - d, x2}, grid.nu));
        }
    }
    return out;
}

//! Reflection (U f)(x1, xp) = f(2c - x1, xp). The map must send grid nodes to
//! grid nodes, which pins c to the midpoint of the axis-1 span; U is then an
//! exact involution and isometry.
inline GridFunction reflect(const GridFunction& f, double c) {
    const Grid& g = f.grid;
    const double span_mid = 0.5 * (g.coord(0, 0) + g.coord(0, g.n[0] - 1));
    const double t = 2.0 * (c - g.coord(0, 0)) / g.h;  // half-lattice alignment
    if (std::abs(t - std::llround(t)) > 1e-9 || std::abs(c - span_mid) > 1e-9 * std::max(1.0, g.L))
        throw MisalignedPlane(c);
    GridFunction out(g);
    const int n1 = g.n[0], n2 = g.n[1];
    for (int i1 = 0; i1 < n1; ++i1) {
        const std::size_t src = g.index(n1 - 1 - i1), dst = g.index(i1);
        for (int i2 = 0; i2 < n2; ++i2) out.values[dst + i2] = f.values[src + i2];
    }
    return out;
}

}  // namespace dwell
