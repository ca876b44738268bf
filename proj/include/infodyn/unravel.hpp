#ifndef INFODYN_UNRAVEL_HPP
#define INFODYN_UNRAVEL_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "infodyn/quantum.hpp"
#include "infodyn/rng.hpp"

namespace infodyn {

/// Fraction of span^2 below which a trajectory's Var(L) counts as collapsed.
inline constexpr double kCollapseVarFraction = 1e-6;

/// Two-driver continuous-monitoring dynamics: a Hamiltonian generating
/// unitary drift and a monitored Hermitian observable whose noisy readout
/// is Bayes-conditioned every step. One step is the full unitary over dt
/// followed by a single-shot update in the monitored eigenbasis with
/// gaussian readout noise of variance 1/(coupling^2 dt).
class DynamicsSpec {
public:
    DynamicsSpec(Eigen::MatrixXcd hamiltonian, Eigen::MatrixXcd lindblad,
                 double coupling, double dt, double horizon);

    const Eigen::MatrixXcd& hamiltonian() const { return hamiltonian_; }
    const Eigen::MatrixXcd& lindblad() const { return lindblad_; }
    double coupling() const { return coupling_; }
    double dt() const { return dt_; }
    double horizon() const { return horizon_; }
    std::size_t dimension() const { return static_cast<std::size_t>(lindblad_.rows()); }

    std::size_t n_steps() const;
    /// Readout noise std dev per step, 1/(s sqrt(dt)); infinite when s = 0.
    double step_noise_sigma() const;
    /// Spectral span (max - min eigenvalue) of the monitored observable.
    double lindblad_span() const { return lindblad_span_; }
    /// Frobenius norm of [H, L].
    double commutator_norm() const;

private:
    Eigen::MatrixXcd hamiltonian_;
    Eigen::MatrixXcd lindblad_;
    double coupling_;
    double dt_;
    double horizon_;
    double lindblad_span_;
};

struct TrajectoryRecord {
    double time;
    double mean_h;
    double mean_l;
    double var_l;
    double max_occupation; // largest eigenstate weight, a purity proxy
};

/// One noisy realisation. States are in the original basis; records are
/// evaluated in the monitored observable's eigenbasis.
struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    std::vector<TrajectoryRecord> records;
};

/// Ensemble moments on a thinned time grid, accumulated in the monitored
/// observable's eigenbasis (eigenvalues ascending).
struct EnsembleSummary {
    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> mean_density;
    std::vector<Eigen::VectorXd> occupation_mean;
    std::vector<Eigen::VectorXd> occupation_stderr;
    std::vector<double> mean_h;
    std::vector<double> mean_var_l;
    std::vector<double> mean_max_occupation;
    std::vector<double> lindblad_eigenvalues;
    double lindblad_span = 0.0;
    double collapsed_fraction = 0.0;
    std::size_t n_trajectories = 0;
};

struct CollapseStats {
    std::vector<double> frequency; // per eigenstate, among converged runs
    std::vector<double> eigenvalues;
    std::size_t n_trajectories = 0;
    std::size_t n_converged = 0;
};

struct RegimeDiagnostics {
    double commutator_norm;
    double drive_ratio; // ||H||_F / (||L||_F coupling^2)
    double time_avg_var_l;
    double time_avg_max_occupation;
    double late_var_l; // ensemble Var(L) over the last tenth of the horizon
    double collapsed_fraction;
};

/// One step with the readout drawn from the state's own statistics.
/// Draw order per step: one uniform (eigenstate pick), then the noise draw.
StateVector step(const DynamicsSpec& spec, const StateVector& state,
                 RngStream& rng);

/// Deterministic core of `step`: unitary drift then conditioning on a
/// given readout value.
StateVector step_with_observation(const DynamicsSpec& spec,
                                  const StateVector& state, double xi);

Trajectory simulate_trajectory(const DynamicsSpec& spec,
                               const StateVector& initial, RngStream& rng);

/// Runs n_trajectories realisations, each on substream(trajectory index),
/// and accumulates moments every record_stride steps (the final step is
/// always recorded). Deterministic for fixed seed regardless of threads.
EnsembleSummary simulate_ensemble(const DynamicsSpec& spec,
                                  const StateVector& initial,
                                  std::size_t n_trajectories, RngStream& rng,
                                  unsigned n_threads = 1,
                                  std::size_t record_stride = 1);

/// Long-run collapse frequencies per eigenstate. Requires a commuting
/// driver pair; throws NonConverged when fewer than 99% of trajectories
/// reach the collapse criterion by the horizon.
CollapseStats collapse_statistics(const DynamicsSpec& spec,
                                  const StateVector& initial,
                                  std::size_t n_trajectories, RngStream& rng,
                                  unsigned n_threads = 1);

/// Least-squares decay rate of ln|mean_density[i][j]| over the window where
/// the coherence sits above the Monte Carlo noise floor.
double coherence_decay_fit(const EnsembleSummary& ensemble, std::size_t i,
                           std::size_t j);

/// Descriptive commuting-vs-noncommuting diagnostics for one spec.
RegimeDiagnostics regime_diagnostics(const DynamicsSpec& spec,
                                     const StateVector& initial,
                                     std::size_t n_trajectories,
                                     RngStream& rng, unsigned n_threads = 1);

} // namespace infodyn

#endif
