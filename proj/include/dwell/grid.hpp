#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dwell/errors.hpp"

namespace dwell {

//! Uniform tensor grid on [-L, d+L] x [-L, L]^(nu-1) with hard-wall boundary.
//!
//! Stored nodes are the interior unknowns; the Dirichlet walls sit one spacing
//! outside the first and last node of each axis. The constructor guarantees
//! that 0, d/2 and d are nodes on axis 1, snapping d to the nearest even
//! multiple of h when necessary (the snap is kept in `d_requested`).
struct Grid {
    int nu = 1;                    // spatial dimension, 1 or 2
    double h = 0.0;                // spacing, identical on all axes
    double L = 0.0;                // box half-width measured from the well centers
    double d = 0.0;                // well separation after snapping (0 for a single centered well)
    double d_requested = 0.0;      // separation as requested, before snapping
    std::array<int, 2> n = {0, 1};         // nodes per axis (n[1] == 1 when nu == 1)
    std::array<double, 2> x0 = {0.0, 0.0}; // coordinate of node 0 per axis

    std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1]; }
    bool snapped() const { return d != d_requested; }

    double coord(int axis, int i) const { return x0[axis] + i * h; }

    std::size_t index(int i1, int i2 = 0) const {
        return static_cast<std::size_t>(i1) * n[1] + i2;
    }

    //! Index of the node at coordinate x on an axis; MisalignedPlane if x is
    //! not a node (to within 1e-9 of a spacing).
    int node_at(int axis, double x) const {
        const double t = (x - x0[axis]) / h;
        const int i = static_cast<int>(std::lround(t));
        if (std::abs(t - i) > 1e-9 || i < 0 || i >= n[axis]) throw MisalignedPlane(x);
        return i;
    }

    double cell_volume() const { return nu == 1 ? h : h * h; }

    bool same_as(const Grid& o) const {
        return nu == o.nu && n == o.n && h == o.h && x0 == o.x0;
    }
};

//! Domain sizing rule: L >= a + 12/kappa_min, rounded up to a multiple of h so
//! that node 0 lands on x = 0. kappa_min is an a-priori lower bound on the
//! decay rate sqrt(-e) of every state of interest; the 12/kappa margin keeps
//! wall effects below the solver tolerances for separations up to ~d.
inline Grid build_grid(int nu, double d, double a, double kappa_min, double h) {
    if (nu != 1 && nu != 2) throw InvalidDimension(nu);
    if (h <= 0.0) throw NonPositiveSpacing(h);
    if (kappa_min <= 0.0) throw Error("kappa_min must be positive");
    if (d < 0.0) throw Error("separation must be non-negative");

    Grid g;
    g.nu = nu;
    g.h = h;
    g.d_requested = d;
    // d snapped to an even multiple of h so that d/2 is a node.
    g.d = 2.0 * h * std::llround(d / (2.0 * h));
    g.L = h * std::ceil((a + 12.0 / kappa_min) / h - 1e-12);

    g.x0[0] = -g.L;
    g.n[0] = static_cast<int>(std::llround((g.d + 2.0 * g.L) / h)) + 1;
    if (nu == 2) {
        g.x0[1] = -g.L;
        g.n[1] = static_cast<int>(std::llround(2.0 * g.L / h)) + 1;
    }
    for (int ax = 0; ax < nu; ++ax)
        if (g.n[ax] < 3) throw BoxTooSmall("fewer than 3 nodes on axis " + std::to_string(ax));
    return g;
}

//! Real-valued samples on a Grid. Norms and inner products carry the h^nu
//! quadrature weight so they approximate their L^2 counterparts.
struct GridFunction {
    Grid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g) : grid(g), values(g.size(), 0.0) {}
    GridFunction(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != g.size()) throw GridMismatch();
    }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

inline double inner(const GridFunction& f, const GridFunction& g) {
    if (!f.grid.same_as(g.grid)) throw GridMismatch();
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += f.values[i] * g.values[i];
    return f.grid.cell_volume() * s;
}

inline double norm(const GridFunction& f) { return std::sqrt(inner(f, f)); }

//! Shift along axis 1 by a whole number of spacings, zero-filling upstream.
//! This is the grid realization of (R^d f)(x) = f(x - d).
inline GridFunction translate_axis1(const GridFunction& f, double d) {
    const Grid& g = f.grid;
    const double t = d / g.h;
    const long long m = std::llround(t);
    if (std::abs(t - m) > 1e-9) throw MisalignedTranslation(d);
    GridFunction out(g);
    const int n1 = g.n[0], n2 = g.n[1];
    for (int i1 = 0; i1 < n1; ++i1) {
        const long long src = i1 - m;
        if (src < 0 || src >= n1) continue;
        const std::size_t o = g.index(i1), s = g.index(static_cast<int>(src));
        for (int i2 = 0; i2 < n2; ++i2) out.values[o + i2] = f.values[s + i2];
    }
    return out;
}

struct SliceData {
    double c = 0.0;                // plane position actually used
    std::vector<double> slice;     // f restricted to {x1 = c}, one value per transverse node
    std::vector<double> dslice;    // central difference (f(c+h,.) - f(c-h,.)) / 2h
};

//! Restriction of f to the hyperplane {x1 = c} together with the normal
//! derivative by central differences. c must be a node at least one node away
//! from the axis-1 ends.
inline SliceData slice_and_normal_derivative(const GridFunction& f, double c) {
    const Grid& g = f.grid;
    const int ic = g.node_at(0, c);
    if (ic < 1 || ic > g.n[0] - 2) throw MisalignedPlane(c);
    SliceData out;
    out.c = g.coord(0, ic);
    const int n2 = g.n[1];
    out.slice.resize(n2);
    out.dslice.resize(n2);
    const std::size_t base = g.index(ic), up = g.index(ic + 1), dn = g.index(ic - 1);
    for (int i2 = 0; i2 < n2; ++i2) {
        out.slice[i2] = f.values[base + i2];
        out.dslice[i2] = (f.values[up + i2] - f.values[dn + i2]) / (2.0 * g.h);
    }
    return out;
}

// --- flat binary serialization -------------------------------------------
// Layout, all little-endian IEEE-754 doubles:
//   nu, n[0..nu-1], h, x0[0..nu-1], then values in row-major order.

inline void write_binary(const GridFunction& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    auto put = [&](double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
    put(static_cast<double>(f.grid.nu));
    for (int ax = 0; ax < f.grid.nu; ++ax) put(static_cast<double>(f.grid.n[ax]));
    put(f.grid.h);
    for (int ax = 0; ax < f.grid.nu; ++ax) put(f.grid.x0[ax]);
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!os) throw Error("short write to " + path);
}

inline GridFunction read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    auto get = [&] {
        double v;
        is.read(reinterpret_cast<char*>(&v), sizeof v);
        if (!is) throw Error("truncated file " + path);
        return v;
    };
    Grid g;
    g.nu = static_cast<int>(get());
    if (g.nu != 1 && g.nu != 2) throw InvalidDimension(g.nu);
    for (int ax = 0; ax < g.nu; ++ax) g.n[ax] = static_cast<int>(get());
    g.h = get();
    if (g.h <= 0.0) throw NonPositiveSpacing(g.h);
    for (int ax = 0; ax < g.nu; ++ax) g.x0[ax] = get();
    GridFunction f(g);
    is.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!is) throw Error("truncated data in " + path);
    return f;
}

}  // namespace dwell
