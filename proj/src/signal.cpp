#include "infodyn/signal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "infodyn/errors.hpp"
#include "infodyn/quadrature.hpp"

namespace infodyn {

namespace {

constexpr double kProbSumTol = 1e-12;
// Marginals below the double-precision underflow floor count as zero.
constexpr double kZeroMarginalFloor = 1e-300;

void check_probabilities(std::span<const double> probs, const char* what) {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw InvalidArgument(std::string(what) +
                                  ": probabilities must be finite and >= 0");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbSumTol) {
        std::ostringstream msg;
        msg << what << ": probabilities sum to " << sum << ", expected 1";
        throw InvalidArgument(msg.str());
    }
}

} // namespace

Observation::Observation(double v) : value(v) {
    if (!std::isfinite(v)) throw InvalidArgument("Observation: value must be finite");
}

SignalModel::SignalModel(std::vector<double> values, std::vector<double> prior,
                         NoiseDensity noise)
    : values_(std::move(values)), prior_(std::move(prior)), noise_(noise) {
    if (values_.empty() || values_.size() != prior_.size()) {
        throw InvalidArgument("SignalModel: values and prior must have equal, nonzero length");
    }
    for (double x : values_) {
        if (!std::isfinite(x)) throw InvalidArgument("SignalModel: values must be finite");
    }
    check_probabilities(prior_, "SignalModel");
    std::vector<double> sorted = values_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidArgument("SignalModel: values must be pairwise distinct");
    }
}

double shannon_entropy(std::span<const double> probs) {
    double s = 0.0;
    for (double p : probs) {
        if (p > 0.0) s -= p * std::log(p);
    }
    return s;
}

std::vector<double> bayes_update(std::span<const double> values,
                                 std::span<const double> prior,
                                 const NoiseDensity& noise, double xi) {
    std::vector<double> w(values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        w[i] = prior[i] * noise.pdf(xi - values[i]);
        total += w[i];
    }
    if (!(total > kZeroMarginalFloor)) {
        std::ostringstream msg;
        msg << "bayes_update: marginal density vanished at xi = " << xi;
        throw ZeroMarginal(msg.str());
    }
    for (double& wi : w) wi /= total;
    return w;
}

double sample_mixture(std::span<const double> values,
                      std::span<const double> probs,
                      const NoiseDensity& noise, RngStream& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = values.size() - 1;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += probs[i];
        if (u <= acc) {
            pick = i;
            break;
        }
    }
    return values[pick] + noise.sample(rng);
}

double marginal_density(const SignalModel& model, double xi) {
    double p = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        p += model.prior()[i] * model.noise().pdf(xi - model.values()[i]);
    }
    return p;
}

double marginal_cdf(const SignalModel& model, double xi) {
    double c = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        c += model.prior()[i] * model.noise().cdf(xi - model.values()[i]);
    }
    return c;
}

Posterior posterior(const SignalModel& model, Observation xi) {
    return Posterior{
        bayes_update(model.values(), model.prior(), model.noise(), xi.value),
        xi};
}

double posterior_mean(const SignalModel& model, Observation xi) {
    Posterior post = posterior(model, xi);
    double mean = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        mean += model.values()[i] * post.probs[i];
    }
    return mean;
}

Observation sample_observation(const SignalModel& model, RngStream& rng) {
    return Observation(
        sample_mixture(model.values(), model.prior(), model.noise(), rng));
}

double entropy_change(std::span<const double> prior,
                      std::span<const double> posterior) {
    check_probabilities(prior, "entropy_change(prior)");
    check_probabilities(posterior, "entropy_change(posterior)");
    return shannon_entropy(posterior) - shannon_entropy(prior);
}

double noise_entropy(const NoiseDensity& noise) { return noise.entropy_nats(); }

double observation_entropy(const SignalModel& model, double abs_tol) {
    const double w = model.noise().quad_halfwidth();
    double lo = *std::min_element(model.values().begin(), model.values().end()) - w;
    double hi = *std::max_element(model.values().begin(), model.values().end()) + w;

    std::vector<double> breaks;
    for (double x : model.values()) {
        for (double b : model.noise().breakpoints()) breaks.push_back(x + b);
    }

    auto integrand = [&](double y) {
        double p = marginal_density(model, y);
        return p > 0.0 ? -p * std::log(p) : 0.0;
    };
    return integrate(integrand, lo, hi, breaks, abs_tol);
}

double mutual_information(const SignalModel& model, double abs_tol) {
    double j = observation_entropy(model, abs_tol) - noise_entropy(model.noise());
    return std::max(j, 0.0);
}

} // namespace infodyn
