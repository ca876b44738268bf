#include "infodyn/plant.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "infodyn/errors.hpp"
#include "infodyn/noise.hpp"
#include "infodyn/signal.hpp"

namespace infodyn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLn2 = 0.6931471805599453;

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0.0 ? a + kTwoPi : a;
}

} // namespace

CircularScenario::CircularScenario(std::size_t bins, double true_bearing,
                                   double kappa, double sigma_v,
                                   double sweep_rate, std::vector<double> prior,
                                   double heading0, std::size_t memory_horizon)
    : bins_(bins), prior_(std::move(prior)), true_bearing_(true_bearing),
      kappa_(kappa), sigma_v_(sigma_v), sweep_rate_(sweep_rate),
      heading0_(heading0), memory_horizon_(memory_horizon) {
    if (bins_ < 4) throw InvalidArgument("CircularScenario: need at least 4 bins");
    if (!(kappa_ > 0.0) || !(sigma_v_ > 0.0)) {
        throw InvalidArgument("CircularScenario: kappa and sigma_v must be > 0");
    }
    if (!std::isfinite(true_bearing_) || !std::isfinite(sweep_rate_) ||
        !std::isfinite(heading0_)) {
        throw InvalidArgument("CircularScenario: angles must be finite");
    }
    if (prior_.empty()) {
        prior_.assign(bins_, 1.0 / static_cast<double>(bins_));
    }
    if (prior_.size() != bins_) {
        throw InvalidArgument("CircularScenario: prior length must equal bins");
    }
    double sum = 0.0;
    for (double p : prior_) {
        if (!(p >= 0.0)) throw InvalidArgument("CircularScenario: prior must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw InvalidArgument("CircularScenario: prior must sum to 1");
    }
}

double CircularScenario::heading(std::size_t t) const {
    return heading0_ + sweep_rate_ * static_cast<double>(t);
}

double CircularScenario::bin_center(std::size_t k) const {
    return kTwoPi * static_cast<double>(k) / static_cast<double>(bins_);
}

double CircularScenario::mean_signal(double bearing, double phi) const {
    return kappa_ * std::cos(bearing - phi);
}

InfoLedger::InfoLedger(double temperature_kelvin,
                       std::optional<double> external_energy)
    : temperature_(temperature_kelvin), external_energy_(external_energy) {
    if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
        throw InvalidArgument("InfoLedger: temperature must be finite and > 0");
    }
    if (external_energy_ && !(*external_energy_ > 0.0)) {
        throw InvalidArgument("InfoLedger: external energy must be > 0");
    }
}

void InfoLedger::record_step(double bits) {
    if (!std::isfinite(bits)) throw InvalidArgument("InfoLedger: bits must be finite");
    per_step_bits_.push_back(bits);
    bits_processed_ += bits;
}

double InfoLedger::landauer_heat() const {
    return bits_processed_ * kBoltzmann * temperature_ * kLn2;
}

std::optional<double> InfoLedger::efficiency_ratio() const {
    if (!external_energy_) return std::nullopt;
    return landauer_heat() / *external_energy_;
}

InfoLedger landauer_update(InfoLedger ledger, double bits_erased) {
    if (!(bits_erased >= 0.0)) {
        std::ostringstream msg;
        msg << "landauer_update: bits_erased = " << bits_erased << " is negative";
        throw NegativeBits(msg.str());
    }
    ledger.record_step(bits_erased);
    return ledger;
}

double circular_mean_direction(std::span<const double> probs,
                               const CircularScenario& scenario) {
    std::complex<double> resultant(0.0, 0.0);
    for (std::size_t k = 0; k < probs.size(); ++k) {
        resultant += probs[k] * std::polar(1.0, scenario.bin_center(k));
    }
    if (std::abs(resultant) < 1e-12) return 0.0;
    return wrap_angle(std::arg(resultant));
}

double argmax_direction(std::span<const double> probs,
                        const CircularScenario& scenario) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k) {
        if (probs[k] > probs[best]) best = k;
    }
    return scenario.bin_center(best);
}

double circular_distance(double a, double b) {
    double d = wrap_angle(a - b);
    return d > std::numbers::pi ? kTwoPi - d : d;
}

CuscutaStepResult cuscuta_step_with_observation(
    const CircularScenario& scenario, std::span<const double> posterior_prev,
    std::size_t t, double xi) {
    if (posterior_prev.size() != scenario.bins()) {
        throw DimensionMismatch("cuscuta_step: posterior length must equal bins");
    }
    const double phi = scenario.heading(t);
    std::vector<double> means(scenario.bins());
    for (std::size_t k = 0; k < scenario.bins(); ++k) {
        means[k] = scenario.mean_signal(scenario.bin_center(k), phi);
    }

    // Optional forgetting: old evidence decays toward the uniform prior over
    // the memory horizon before the new observation is conditioned on.
    std::vector<double> prior(posterior_prev.begin(), posterior_prev.end());
    if (scenario.memory_horizon() > 0) {
        double lambda = 1.0 / static_cast<double>(scenario.memory_horizon());
        double uniform = 1.0 / static_cast<double>(scenario.bins());
        for (double& p : prior) p = (1.0 - lambda) * p + lambda * uniform;
    }

    NoiseDensity sensor = NoiseDensity::gaussian(scenario.sigma_v());
    std::vector<double> next = bayes_update(means, prior, sensor, xi);
    double bits = (shannon_entropy(posterior_prev) - shannon_entropy(next)) / kLn2;
    return CuscutaStepResult{std::move(next), bits, xi};
}

CuscutaStepResult cuscuta_step(const CircularScenario& scenario,
                               std::span<const double> posterior_prev,
                               std::size_t t, RngStream& rng) {
    double phi = scenario.heading(t);
    double xi = scenario.mean_signal(scenario.true_bearing(), phi) +
                scenario.sigma_v() * rng.normal();
    return cuscuta_step_with_observation(scenario, posterior_prev, t, xi);
}

CuscutaRun run_cuscuta(const CircularScenario& scenario, std::size_t n_steps,
                       RngStream& rng, double temperature_kelvin) {
    CuscutaRun run{{}, {}, 0.0, InfoLedger(temperature_kelvin)};
    run.posteriors.reserve(n_steps + 1);
    run.posteriors.push_back(scenario.prior());
    run.steps.reserve(n_steps);

    for (std::size_t t = 0; t < n_steps; ++t) {
        CuscutaStepResult step =
            cuscuta_step(scenario, run.posteriors.back(), t, rng);
        run.ledger.record_step(step.bits_gained);
        CuscutaStepRecord rec{};
        rec.heading = scenario.heading(t);
        rec.observation = step.observation;
        rec.bits_gained = step.bits_gained;
        rec.entropy_bits = shannon_entropy(step.posterior) / kLn2;
        rec.direction = circular_mean_direction(step.posterior, scenario);
        run.steps.push_back(rec);
        run.posteriors.push_back(std::move(step.posterior));
    }
    run.growth_direction = circular_mean_direction(run.posteriors.back(), scenario);
    return run;
}

HeliotropismRecord run_heliotropism(double drift_rate, double coupling,
                                    std::size_t n_steps, RngStream& rng) {
    if (!(drift_rate >= 0.0)) {
        throw InvalidArgument("run_heliotropism: drift_rate must be >= 0");
    }
    if (!(coupling > 0.0)) {
        throw InvalidArgument("run_heliotropism: coupling must be > 0");
    }
    constexpr std::size_t kBins = 64;
    const double sigma_v = 1.0 / coupling;
    CircularScenario scenario(kBins, 0.0, 1.0, sigma_v, kTwoPi / 32.0);

    // One-bin circular diffusion kernel for the prediction step; lets the
    // posterior follow a moving source without assuming its drift.
    const double kernel_std_bins = 1.0;
    const int kernel_reach = 4;
    std::vector<double> kernel(2 * kernel_reach + 1);
    double kernel_sum = 0.0;
    for (int d = -kernel_reach; d <= kernel_reach; ++d) {
        double z = static_cast<double>(d) / kernel_std_bins;
        kernel[static_cast<std::size_t>(d + kernel_reach)] = std::exp(-0.5 * z * z);
        kernel_sum += kernel[static_cast<std::size_t>(d + kernel_reach)];
    }
    for (double& w : kernel) w /= kernel_sum;

    std::vector<double> belief = scenario.prior();
    std::vector<double> predicted(kBins);
    HeliotropismRecord record{drift_rate, coupling, 0.0, 0.0, {}};
    record.errors.reserve(n_steps);

    for (std::size_t t = 0; t < n_steps; ++t) {
        for (std::size_t k = 0; k < kBins; ++k) {
            double acc = 0.0;
            for (int d = -kernel_reach; d <= kernel_reach; ++d) {
                std::size_t src =
                    static_cast<std::size_t>((static_cast<long>(k) + d + 2 * kBins) %
                                             static_cast<long>(kBins));
                acc += kernel[static_cast<std::size_t>(d + kernel_reach)] * belief[src];
            }
            predicted[k] = acc;
        }

        double source = drift_rate * static_cast<double>(t);
        double phi = scenario.heading(t);
        double xi = scenario.mean_signal(source, phi) + sigma_v * rng.normal();
        CuscutaStepResult step =
            cuscuta_step_with_observation(scenario, predicted, t, xi);
        belief = std::move(step.posterior);

        double estimate = circular_mean_direction(belief, scenario);
        double err = circular_distance(estimate, wrap_angle(source));
        record.errors.push_back(err);
        record.mean_tracking_error += err;
    }
    if (n_steps > 0) {
        record.mean_tracking_error /= static_cast<double>(n_steps);
        record.final_error = record.errors.back();
    }
    return record;
}

} // namespace infodyn
