#ifndef INFODYN_QUANTUM_HPP
#define INFODYN_QUANTUM_HPP

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "infodyn/noise.hpp"
#include "infodyn/rng.hpp"

namespace infodyn {

/// Energy spectrum of the system Hamiltonian in its eigenbasis.
class QuantumSystem {
public:
    explicit QuantumSystem(std::vector<double> energies);

    const std::vector<double>& energies() const { return energies_; }
    std::size_t dimension() const { return energies_.size(); }

    /// Energy gap E_i - E_j.
    double gap(std::size_t i, std::size_t j) const;

private:
    std::vector<double> energies_;
};

/// Normalised pure state over the energy basis. Amplitudes are complex;
/// zero-phase states (real, nonnegative amplitudes) are the special case
/// the analytic averaging route requires.
class StateVector {
public:
    explicit StateVector(Eigen::VectorXcd amplitudes);

    /// sqrt(p_i) amplitudes with zero phases.
    static StateVector from_probabilities(const std::vector<double>& probs);
    static StateVector basis_state(std::size_t dim, std::size_t k);
    /// Rescales the input to unit norm.
    static StateVector normalized(Eigen::VectorXcd amplitudes);

    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    std::size_t dimension() const { return static_cast<std::size_t>(amps_.size()); }
    std::vector<double> probabilities() const;
    bool has_zero_phases(double tol = 1e-12) const;

private:
    Eigen::VectorXcd amps_;
};

/// Hermitian, unit-trace, positive-semidefinite matrix: the external
/// observer's description of the system.
class DensityMatrix {
public:
    explicit DensityMatrix(Eigen::MatrixXcd entries);

    static DensityMatrix pure(const StateVector& state);

    const Eigen::MatrixXcd& entries() const { return rho_; }
    std::size_t dimension() const { return static_cast<std::size_t>(rho_.rows()); }

private:
    Eigen::MatrixXcd rho_;
};

/// <Psi|F|Psi> for a Hermitian observable F.
double expectation(const StateVector& state, const Eigen::MatrixXcd& observable);

/// tr(rho F); agrees with the pure-state route for rho = |Psi><Psi|.
double expectation(const DensityMatrix& rho, const Eigen::MatrixXcd& observable);

/// Single-shot information acquisition: conditions |c_i|^2 on xi = E + eps
/// over the energy alphabet and rescales the amplitude moduli to the
/// posterior while preserving phases.
StateVector single_shot_update(const QuantumSystem& system,
                               const StateVector& state,
                               const NoiseDensity& noise, double xi);

/// Damping kernel for an energy gap omega: the overlap integral
/// of sqrt(f(xi) f(xi + omega)). Exactly 1 at omega = 0.
double decoherence_factor_gap(const NoiseDensity& noise, double omega,
                              double abs_tol = 1e-10);

double decoherence_factor(const QuantumSystem& system, const NoiseDensity& noise,
                          std::size_t i, std::size_t j, double abs_tol = 1e-10);

/// Observation-averaged density matrix via the damping kernel:
/// entry (i,j) = sqrt(p_i p_j) * Lambda_ij. Requires zero phases.
DensityMatrix averaged_density_analytic(const QuantumSystem& system,
                                        const StateVector& state,
                                        const NoiseDensity& noise,
                                        double abs_tol = 1e-10);

struct AveragedDensityStats {
    DensityMatrix density;
    /// Entrywise standard errors of the Monte Carlo mean.
    Eigen::MatrixXd stderr_real;
    Eigen::MatrixXd stderr_imag;
    std::size_t n_samples;
};

/// Monte Carlo mean of |Psi'(xi)><Psi'(xi)| over xi drawn from the
/// observation mixture. Deterministic for a fixed stream regardless of
/// thread count (fixed-size sample chunks, reduced in order).
AveragedDensityStats averaged_density_mc_stats(const QuantumSystem& system,
                                               const StateVector& state,
                                               const NoiseDensity& noise,
                                               std::size_t n_samples,
                                               RngStream& rng,
                                               unsigned n_threads = 1);

DensityMatrix averaged_density_mc(const QuantumSystem& system,
                                  const StateVector& state,
                                  const NoiseDensity& noise,
                                  std::size_t n_samples, RngStream& rng,
                                  unsigned n_threads = 1);

/// -tr(rho ln rho) by eigendecomposition, 0 ln 0 = 0.
double von_neumann_entropy(const DensityMatrix& rho);

} // namespace infodyn

#endif
