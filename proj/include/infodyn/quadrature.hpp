#ifndef INFODYN_QUADRATURE_HPP
#define INFODYN_QUADRATURE_HPP

#include <functional>
#include <span>

namespace infodyn {

/// Adaptive Gauss-Kronrod integration of f over [lo, hi], split at the
/// given interior breakpoints so each panel is smooth. Throws
/// QuadratureFailure when the accumulated error estimate exceeds abs_tol.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints, double abs_tol);

inline double integrate(const std::function<double(double)>& f, double lo,
                        double hi, double abs_tol) {
    return integrate(f, lo, hi, std::span<const double>{}, abs_tol);
}

} // namespace infodyn

#endif
