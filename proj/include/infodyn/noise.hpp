#ifndef INFODYN_NOISE_HPP
#define INFODYN_NOISE_HPP

#include <string>
#include <vector>

#include "infodyn/rng.hpp"

namespace infodyn {

enum class NoiseKind { Gaussian, Uniform, Laplace };

std::string to_string(NoiseKind kind);

/// Additive noise density f. Centred at zero; the single shape parameter is
/// the standard deviation (gaussian), the half-width (uniform) or the scale
/// (laplace). Immutable after construction.
class NoiseDensity {
public:
    static NoiseDensity gaussian(double sigma);
    static NoiseDensity uniform(double half_width);
    static NoiseDensity laplace(double scale);

    NoiseKind kind() const { return kind_; }
    double parameter() const { return param_; }

    double pdf(double x) const;
    /// log f(x); -infinity outside a compact support.
    double log_pdf(double x) const;
    double cdf(double x) const;
    double sample(RngStream& rng) const;

    /// Differential entropy in nats (closed form, cached).
    double entropy_nats() const { return entropy_nats_; }

    /// Half-width within which the density (and its square root) carries
    /// all mass relevant at tolerance ~1e-12. Used to bound quadrature.
    double quad_halfwidth() const;

    /// Points (relative to the centre) where the density is not smooth.
    std::vector<double> breakpoints() const;

private:
    NoiseDensity(NoiseKind kind, double param);

    NoiseKind kind_;
    double param_;
    double entropy_nats_;
};

} // namespace infodyn

#endif
