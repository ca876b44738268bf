#include "infodyn/noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "infodyn/errors.hpp"

namespace infodyn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

std::string to_string(NoiseKind kind) {
    switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Laplace: return "laplace";
    }
    return "?";
}

NoiseDensity::NoiseDensity(NoiseKind kind, double param)
    : kind_(kind), param_(param) {
    if (!(param > 0.0) || !std::isfinite(param)) {
        throw InvalidArgument("NoiseDensity: shape parameter must be finite and > 0");
    }
    switch (kind_) {
    case NoiseKind::Gaussian:
        entropy_nats_ = 0.5 * std::log(kTwoPi * std::numbers::e * param * param);
        break;
    case NoiseKind::Uniform:
        entropy_nats_ = std::log(2.0 * param);
        break;
    case NoiseKind::Laplace:
        entropy_nats_ = 1.0 + std::log(2.0 * param);
        break;
    }
}

NoiseDensity NoiseDensity::gaussian(double sigma) {
    return NoiseDensity(NoiseKind::Gaussian, sigma);
}

NoiseDensity NoiseDensity::uniform(double half_width) {
    return NoiseDensity(NoiseKind::Uniform, half_width);
}

NoiseDensity NoiseDensity::laplace(double scale) {
    return NoiseDensity(NoiseKind::Laplace, scale);
}

double NoiseDensity::pdf(double x) const {
    switch (kind_) {
    case NoiseKind::Gaussian: {
        double z = x / param_;
        return std::exp(-0.5 * z * z) / (param_ * std::sqrt(kTwoPi));
    }
    case NoiseKind::Uniform:
        return (x >= -param_ && x <= param_) ? 0.5 / param_ : 0.0;
    case NoiseKind::Laplace:
        return std::exp(-std::abs(x) / param_) / (2.0 * param_);
    }
    return 0.0;
}

double NoiseDensity::log_pdf(double x) const {
    switch (kind_) {
    case NoiseKind::Gaussian: {
        double z = x / param_;
        return -0.5 * z * z - std::log(param_) - 0.5 * std::log(kTwoPi);
    }
    case NoiseKind::Uniform:
        return (x >= -param_ && x <= param_) ? -std::log(2.0 * param_) : kNegInf;
    case NoiseKind::Laplace:
        return -std::abs(x) / param_ - std::log(2.0 * param_);
    }
    return kNegInf;
}

double NoiseDensity::cdf(double x) const {
    switch (kind_) {
    case NoiseKind::Gaussian:
        return 0.5 * std::erfc(-x / (param_ * std::numbers::sqrt2));
    case NoiseKind::Uniform: {
        if (x <= -param_) return 0.0;
        if (x >= param_) return 1.0;
        return (x + param_) / (2.0 * param_);
    }
    case NoiseKind::Laplace:
        return x < 0.0 ? 0.5 * std::exp(x / param_)
                       : 1.0 - 0.5 * std::exp(-x / param_);
    }
    return 0.0;
}

double NoiseDensity::sample(RngStream& rng) const {
    switch (kind_) {
    case NoiseKind::Gaussian:
        return param_ * rng.normal();
    case NoiseKind::Uniform:
        return param_ * (2.0 * rng.uniform() - 1.0);
    case NoiseKind::Laplace: {
        double u = rng.uniform();
        return u < 0.5 ? param_ * std::log(2.0 * u)
                       : -param_ * std::log(2.0 * (1.0 - u));
    }
    }
    return 0.0;
}

double NoiseDensity::quad_halfwidth() const {
    switch (kind_) {
    case NoiseKind::Gaussian:
        return 15.0 * param_;
    case NoiseKind::Uniform:
        return param_;
    case NoiseKind::Laplace:
        // sqrt(f) halves the exponential rate; 60 scales keeps the tail
        // contribution below 1e-13.
        return 60.0 * param_;
    }
    return 0.0;
}

std::vector<double> NoiseDensity::breakpoints() const {
    switch (kind_) {
    case NoiseKind::Gaussian:
        return {0.0};
    case NoiseKind::Uniform:
        return {-param_, param_};
    case NoiseKind::Laplace:
        return {0.0};
    }
    return {};
}

} // namespace infodyn
