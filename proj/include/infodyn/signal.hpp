#ifndef INFODYN_SIGNAL_HPP
#define INFODYN_SIGNAL_HPP

#include <span>
#include <vector>

#include "infodyn/noise.hpp"
#include "infodyn/rng.hpp"

namespace infodyn {

/// A real observation: one realisation of signal plus noise.
struct Observation {
    explicit Observation(double v);
    double value;
};

/// Discrete signal alphabet with prior probabilities and an additive,
/// independent noise density. Immutable after construction; all operations
/// on it are pure given an explicit random stream.
class SignalModel {
public:
    SignalModel(std::vector<double> values, std::vector<double> prior,
                NoiseDensity noise);

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& prior() const { return prior_; }
    const NoiseDensity& noise() const { return noise_; }
    std::size_t size() const { return values_.size(); }

private:
    std::vector<double> values_;
    std::vector<double> prior_;
    NoiseDensity noise_;
};

struct Posterior {
    std::vector<double> probs;
    Observation conditioning_observation;
};

/// -sum p_i ln p_i with the 0 ln 0 = 0 convention.
double shannon_entropy(std::span<const double> probs);

inline double nats_to_bits(double nats) { return nats / 0.6931471805599453; }

/// Bayes update of a discrete prior against an additive-noise observation:
/// w_i = prior_i f(xi - values_i), normalised. Values need not be distinct.
/// Throws ZeroMarginal when every weight underflows.
std::vector<double> bayes_update(std::span<const double> values,
                                 std::span<const double> prior,
                                 const NoiseDensity& noise, double xi);

/// Ancestral draw from the signal-plus-noise mixture.
double sample_mixture(std::span<const double> values,
                      std::span<const double> probs,
                      const NoiseDensity& noise, RngStream& rng);

/// Mixture density of the observation, p(xi) = sum_i p_i f(xi - x_i).
double marginal_density(const SignalModel& model, double xi);

/// CDF of the observation mixture (used for distributional checks).
double marginal_cdf(const SignalModel& model, double xi);

Posterior posterior(const SignalModel& model, Observation xi);

double posterior_mean(const SignalModel& model, Observation xi);

Observation sample_observation(const SignalModel& model, RngStream& rng);

/// S(posterior) - S(prior) in nats; negative when the observation was
/// informative.
double entropy_change(std::span<const double> prior,
                      std::span<const double> posterior);

/// Differential entropy of the noise, closed form, in nats.
double noise_entropy(const NoiseDensity& noise);

/// Differential entropy of the observation mixture by adaptive quadrature.
double observation_entropy(const SignalModel& model, double abs_tol = 1e-8);

/// Mutual information between observation and signal in nats:
/// S_xi - S_eps, clamped at zero against quadrature jitter.
double mutual_information(const SignalModel& model, double abs_tol = 1e-8);

} // namespace infodyn

#endif
