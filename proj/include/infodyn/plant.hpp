#ifndef INFODYN_PLANT_HPP
#define INFODYN_PLANT_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "infodyn/rng.hpp"

namespace infodyn {

/// Boltzmann constant, J/K (SI defined value).
inline constexpr double kBoltzmann = 1.380649e-23;

/// Host-bearing inference on a circle of M discrete bearings. The seedling
/// sweeps its heading (circumnutation) and reads a cos-projection of the
/// volatile gradient along the current heading, with gaussian sensor noise.
class CircularScenario {
public:
    CircularScenario(std::size_t bins, double true_bearing, double kappa,
                     double sigma_v, double sweep_rate,
                     std::vector<double> prior = {}, double heading0 = 0.0,
                     std::size_t memory_horizon = 0);

    std::size_t bins() const { return bins_; }
    const std::vector<double>& prior() const { return prior_; }
    double true_bearing() const { return true_bearing_; }
    double kappa() const { return kappa_; }
    double sigma_v() const { return sigma_v_; }
    /// Steps over which old evidence decays toward the uniform prior;
    /// 0 disables forgetting.
    std::size_t memory_horizon() const { return memory_horizon_; }
    double heading(std::size_t t) const;
    double bin_center(std::size_t k) const;
    /// Mean sensor reading for a source at `bearing` under heading phi.
    double mean_signal(double bearing, double phi) const;

private:
    std::size_t bins_;
    std::vector<double> prior_;
    double true_bearing_;
    double kappa_;
    double sigma_v_;
    double sweep_rate_;
    double heading0_;
    std::size_t memory_horizon_;
};

/// Cumulative information accounting with the Landauer erasure bound.
/// Heat is maintained as bits * k_B T ln 2 exactly, so the heat/bits ratio
/// identity holds to rounding.
class InfoLedger {
public:
    explicit InfoLedger(double temperature_kelvin,
                        std::optional<double> external_energy = std::nullopt);

    /// Signed per-step contribution (entropy reductions may be negative).
    void record_step(double bits);

    double bits_processed() const { return bits_processed_; }
    double landauer_heat() const;
    double temperature() const { return temperature_; }
    const std::vector<double>& per_step_bits() const { return per_step_bits_; }
    std::optional<double> external_energy() const { return external_energy_; }
    /// landauer_heat / external_energy, when the latter was supplied.
    std::optional<double> efficiency_ratio() const;

private:
    double temperature_;
    double bits_processed_ = 0.0;
    std::vector<double> per_step_bits_;
    std::optional<double> external_energy_;
};

/// Adds an explicit erasure event; bits_erased must be nonnegative.
InfoLedger landauer_update(InfoLedger ledger, double bits_erased);

/// Circular mean direction of a distribution over bin centers;
/// 0 by convention when the resultant vanishes.
double circular_mean_direction(std::span<const double> probs,
                               const CircularScenario& scenario);

/// Alternative growth-direction readout: the most probable bin's center.
double argmax_direction(std::span<const double> probs,
                        const CircularScenario& scenario);

/// Distance between two angles, in [0, pi].
double circular_distance(double a, double b);

struct CuscutaStepResult {
    std::vector<double> posterior;
    double bits_gained;
    double observation;
};

CuscutaStepResult cuscuta_step(const CircularScenario& scenario,
                               std::span<const double> posterior_prev,
                               std::size_t t, RngStream& rng);

/// Deterministic core of cuscuta_step for a given sensor reading.
CuscutaStepResult cuscuta_step_with_observation(
    const CircularScenario& scenario, std::span<const double> posterior_prev,
    std::size_t t, double xi);

struct CuscutaStepRecord {
    double heading;
    double observation;
    double bits_gained;
    double entropy_bits; // posterior entropy after the step
    double direction;    // circular posterior mean after the step
};

struct CuscutaRun {
    std::vector<std::vector<double>> posteriors; // n_steps + 1 entries
    std::vector<CuscutaStepRecord> steps;
    double growth_direction;
    InfoLedger ledger;
};

CuscutaRun run_cuscuta(const CircularScenario& scenario, std::size_t n_steps,
                       RngStream& rng, double temperature_kelvin = 300.0);

struct HeliotropismRecord {
    double drift_rate;
    double coupling;
    double mean_tracking_error;
    double final_error;
    std::vector<double> errors; // per step
};

/// Tracks a source whose bearing drifts at drift_rate rad/step. The tracker
/// is a circular Bayes filter with a fixed one-bin diffusion prediction
/// step; coupling sets the per-observation signal-to-noise (sigma_v =
/// 1/coupling at unit gradient strength).
HeliotropismRecord run_heliotropism(double drift_rate, double coupling,
                                    std::size_t n_steps, RngStream& rng);

} // namespace infodyn

#endif
