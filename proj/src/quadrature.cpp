#include "infodyn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "infodyn/errors.hpp"

namespace infodyn {

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints, double abs_tol) {
    if (!(lo < hi)) {
        if (lo == hi) return 0.0;
        throw InvalidArgument("integrate: empty interval");
    }

    std::vector<double> edges;
    edges.reserve(breakpoints.size() + 2);
    edges.push_back(lo);
    for (double b : breakpoints) {
        if (b > lo && b < hi) edges.push_back(b);
    }
    edges.push_back(hi);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    double total = 0.0;
    double total_error = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        double err = 0.0;
        total += gk::integrate(f, edges[k], edges[k + 1], 15, 1e-12, &err);
        total_error += err;
    }
    if (!std::isfinite(total) || total_error > abs_tol) {
        std::ostringstream msg;
        msg << "integrate: error estimate " << total_error
            << " exceeds tolerance " << abs_tol;
        throw QuadratureFailure(msg.str());
    }
    return total;
}

} // namespace infodyn
