#pragma once

#include <stdexcept>
#include <string>

namespace dwell {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidDimension : Error {
    explicit InvalidDimension(int nu)
        : Error("spatial dimension must be 1 or 2, got " + std::to_string(nu)) {}
};

struct NonPositiveSpacing : Error {
    explicit NonPositiveSpacing(double h)
        : Error("grid spacing must be positive, got " + std::to_string(h)) {}
};

struct SeparationTooSmall : Error {
    SeparationTooSmall(double d, double a)
        : Error("well separation d=" + std::to_string(d) +
                " must exceed 2a=" + std::to_string(2 * a)) {}
};

struct BoxTooSmall : Error {
    explicit BoxTooSmall(const std::string& what) : Error("box too small: " + what) {}
};

struct MisalignedPlane : Error {
    explicit MisalignedPlane(double c)
        : Error("plane position " + std::to_string(c) + " is not aligned to the grid") {}
};

struct MisalignedTranslation : Error {
    explicit MisalignedTranslation(double d)
        : Error("translation " + std::to_string(d) + " is not a whole number of grid steps") {}
};

struct GridMismatch : Error {
    GridMismatch() : Error("grid functions live on different grids") {}
};

struct NoConvergence : Error {
    int iterations;
    explicit NoConvergence(int iters, const std::string& where)
        : Error(where + " did not converge within " + std::to_string(iters) + " iterations"),
          iterations(iters) {}
};

struct DegenerateBasis : Error {
    explicit DegenerateBasis(double cond)
        : Error("deflation basis is numerically dependent (Gram condition " +
                std::to_string(cond) + ")") {}
};

struct WrongClusterSize : Error {
    int found;
    WrongClusterSize(int n, double e, double gamma)
        : Error("expected 2 eigenvalues in window around " + std::to_string(e) +
                " (half-width " + std::to_string(gamma / 2) + "), found " + std::to_string(n)),
          found(n) {}
};

struct OverlapTooLarge : Error {
    explicit OverlapTooLarge(double s)
        : Error("overlap |<phi, R^d phi>| = " + std::to_string(s) +
                " too large for the two-level model") {}
};

struct NoDefiniteParity : Error {
    explicit NoDefiniteParity(double defect)
        : Error("state has no definite parity (defect " + std::to_string(defect) + ")") {}
};

struct PlaneInsideSupport : Error {
    PlaneInsideSupport(double c, double a, double d)
        : Error("plane x1=" + std::to_string(c) + " must lie in (" + std::to_string(a) + ", " +
                std::to_string(d - a) + ")") {}
};

struct TailTooShort : Error {
    explicit TailTooShort(const std::string& what) : Error("tail window: " + what) {}
};

struct SignChangeInWindow : Error {
    SignChangeInWindow() : Error("wavefunction changes sign inside the tail fit window") {}
};

struct SignChange : Error {
    SignChange() : Error("samples change sign; cannot fit a decay rate") {}
};

struct TooFewSamples : Error {
    explicit TooFewSamples(std::size_t n)
        : Error("need at least 4 samples for a decay fit, got " + std::to_string(n)) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

}  // namespace dwell
