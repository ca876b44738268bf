#include "infodyn/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "infodyn/errors.hpp"
#include "infodyn/parallel.hpp"
#include "infodyn/quadrature.hpp"
#include "infodyn/signal.hpp"

namespace infodyn {

namespace {

constexpr double kNormTol = 1e-12;
constexpr double kHermitianTol = 1e-12;
constexpr double kEigenvalueFloor = -1e-10;
constexpr std::size_t kMcChunk = 1024;

void check_square_matching(const Eigen::MatrixXcd& m, std::size_t dim,
                           const char* what) {
    if (m.rows() != m.cols() ||
        static_cast<std::size_t>(m.rows()) != dim) {
        std::ostringstream msg;
        msg << what << ": expected " << dim << "x" << dim << " matrix, got "
            << m.rows() << "x" << m.cols();
        throw DimensionMismatch(msg.str());
    }
}

void check_hermitian(const Eigen::MatrixXcd& m, const char* what) {
    double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (!(dev <= kHermitianTol)) {
        std::ostringstream msg;
        msg << what << ": matrix deviates from Hermitian by " << dev;
        throw InvalidArgument(msg.str());
    }
}

} // namespace

QuantumSystem::QuantumSystem(std::vector<double> energies)
    : energies_(std::move(energies)) {
    if (energies_.empty()) {
        throw InvalidArgument("QuantumSystem: at least one energy level required");
    }
    for (double e : energies_) {
        if (!std::isfinite(e)) {
            throw InvalidArgument("QuantumSystem: energies must be finite");
        }
    }
}

double QuantumSystem::gap(std::size_t i, std::size_t j) const {
    if (i >= dimension() || j >= dimension()) {
        throw DimensionMismatch("QuantumSystem::gap: index out of range");
    }
    return energies_[i] - energies_[j];
}

StateVector::StateVector(Eigen::VectorXcd amplitudes)
    : amps_(std::move(amplitudes)) {
    if (amps_.size() == 0) throw InvalidArgument("StateVector: empty");
    double norm2 = amps_.squaredNorm();
    if (!std::isfinite(norm2) || std::abs(norm2 - 1.0) > kNormTol) {
        std::ostringstream msg;
        msg << "StateVector: squared norm " << norm2 << " is not 1";
        throw InvalidArgument(msg.str());
    }
}

StateVector StateVector::from_probabilities(const std::vector<double>& probs) {
    Eigen::VectorXcd c(static_cast<Eigen::Index>(probs.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0)) {
            throw InvalidArgument("StateVector: probabilities must be >= 0");
        }
        c[static_cast<Eigen::Index>(i)] = std::sqrt(probs[i]);
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > kNormTol) {
        throw InvalidArgument("StateVector: probabilities must sum to 1");
    }
    return StateVector(std::move(c));
}

StateVector StateVector::basis_state(std::size_t dim, std::size_t k) {
    if (k >= dim) throw DimensionMismatch("StateVector::basis_state: index out of range");
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
    c[static_cast<Eigen::Index>(k)] = 1.0;
    return StateVector(std::move(c));
}

StateVector StateVector::normalized(Eigen::VectorXcd amplitudes) {
    double n = amplitudes.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InvalidArgument("StateVector::normalized: zero or non-finite norm");
    }
    return StateVector(amplitudes / n);
}

std::vector<double> StateVector::probabilities() const {
    std::vector<double> p(dimension());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::norm(amps_[static_cast<Eigen::Index>(i)]);
    }
    return p;
}

bool StateVector::has_zero_phases(double tol) const {
    for (Eigen::Index i = 0; i < amps_.size(); ++i) {
        if (std::abs(amps_[i].imag()) > tol || amps_[i].real() < -tol) {
            return false;
        }
    }
    return true;
}

DensityMatrix::DensityMatrix(Eigen::MatrixXcd entries) : rho_(std::move(entries)) {
    if (rho_.rows() == 0 || rho_.rows() != rho_.cols()) {
        throw InvalidArgument("DensityMatrix: must be square and nonempty");
    }
    check_hermitian(rho_, "DensityMatrix");
    double tr_dev = std::abs(rho_.trace() - std::complex<double>(1.0, 0.0));
    if (!(tr_dev <= kNormTol)) {
        std::ostringstream msg;
        msg << "DensityMatrix: trace deviates from 1 by " << tr_dev;
        throw InvalidArgument(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho_,
                                                           Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("DensityMatrix: eigenvalue check failed to converge");
    }
    if (solver.eigenvalues().minCoeff() < kEigenvalueFloor) {
        std::ostringstream msg;
        msg << "DensityMatrix: negative eigenvalue "
            << solver.eigenvalues().minCoeff();
        throw InvalidArgument(msg.str());
    }
}

DensityMatrix DensityMatrix::pure(const StateVector& state) {
    return DensityMatrix(state.amplitudes() * state.amplitudes().adjoint());
}

double expectation(const StateVector& state, const Eigen::MatrixXcd& observable) {
    check_square_matching(observable, state.dimension(), "expectation");
    check_hermitian(observable, "expectation");
    std::complex<double> e =
        state.amplitudes().dot(observable * state.amplitudes());
    double scale = std::max(1.0, observable.cwiseAbs().maxCoeff());
    if (std::abs(e.imag()) > 1e-10 * scale) {
        throw NumericalFailure("expectation: imaginary residue too large");
    }
    return e.real();
}

double expectation(const DensityMatrix& rho, const Eigen::MatrixXcd& observable) {
    check_square_matching(observable, rho.dimension(), "expectation");
    check_hermitian(observable, "expectation");
    return (rho.entries() * observable).trace().real();
}

StateVector single_shot_update(const QuantumSystem& system,
                               const StateVector& state,
                               const NoiseDensity& noise, double xi) {
    if (system.dimension() != state.dimension()) {
        throw DimensionMismatch("single_shot_update: system/state dimensions differ");
    }
    std::vector<double> prior = state.probabilities();
    std::vector<double> post =
        bayes_update(system.energies(), prior, noise, xi);

    Eigen::VectorXcd c(state.amplitudes().size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        std::size_t k = static_cast<std::size_t>(i);
        c[i] = prior[k] > 0.0
                   ? state.amplitudes()[i] * std::sqrt(post[k] / prior[k])
                   : std::complex<double>(0.0, 0.0);
    }
    return StateVector::normalized(std::move(c));
}

double decoherence_factor_gap(const NoiseDensity& noise, double omega,
                              double abs_tol) {
    if (omega == 0.0) return 1.0;

    const double w = noise.quad_halfwidth();
    // sqrt(f(xi) f(xi+omega)) lives on the intersection of the two supports.
    double lo = std::max(-w, -w - omega);
    double hi = std::min(w, w - omega);
    if (!(lo < hi)) return 0.0;

    std::vector<double> breaks;
    for (double b : noise.breakpoints()) {
        breaks.push_back(b);
        breaks.push_back(b - omega);
    }

    // Evaluated in log space so large gaps do not underflow the product.
    auto integrand = [&](double xi) {
        double l = noise.log_pdf(xi) + noise.log_pdf(xi + omega);
        return std::isfinite(l) ? std::exp(0.5 * l) : 0.0;
    };
    double lambda = integrate(integrand, lo, hi, breaks, abs_tol);
    return std::clamp(lambda, 0.0, 1.0);
}

double decoherence_factor(const QuantumSystem& system, const NoiseDensity& noise,
                          std::size_t i, std::size_t j, double abs_tol) {
    return decoherence_factor_gap(noise, system.gap(i, j), abs_tol);
}

DensityMatrix averaged_density_analytic(const QuantumSystem& system,
                                        const StateVector& state,
                                        const NoiseDensity& noise,
                                        double abs_tol) {
    if (system.dimension() != state.dimension()) {
        throw DimensionMismatch("averaged_density_analytic: dimensions differ");
    }
    if (!state.has_zero_phases()) {
        throw PhasePresent(
            "averaged_density_analytic: state has nonzero phases; "
            "use the Monte Carlo route");
    }
    const std::size_t n = system.dimension();
    std::vector<double> p = state.probabilities();

    std::map<double, double> lambda_cache;
    auto lambda_of = [&](double omega) {
        double key = std::abs(omega);
        auto it = lambda_cache.find(key);
        if (it != lambda_cache.end()) return it->second;
        double val = decoherence_factor_gap(noise, key, abs_tol);
        lambda_cache.emplace(key, val);
        return val;
    };

    Eigen::MatrixXcd rho(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double entry = std::sqrt(p[i] * p[j]);
            if (i != j) entry *= lambda_of(system.gap(i, j));
            rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry;
            rho(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = entry;
        }
    }
    return DensityMatrix(std::move(rho));
}

AveragedDensityStats averaged_density_mc_stats(const QuantumSystem& system,
                                               const StateVector& state,
                                               const NoiseDensity& noise,
                                               std::size_t n_samples,
                                               RngStream& rng,
                                               unsigned n_threads) {
    if (system.dimension() != state.dimension()) {
        throw DimensionMismatch("averaged_density_mc: dimensions differ");
    }
    if (n_samples < 1) {
        throw InvalidArgument("averaged_density_mc: n_samples must be >= 1");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(system.dimension());
    const std::vector<double> prior = state.probabilities();

    struct Accum {
        Eigen::MatrixXcd sum;
        Eigen::MatrixXd sum_sq_re;
        Eigen::MatrixXd sum_sq_im;
    };
    const std::size_t n_chunks = (n_samples + kMcChunk - 1) / kMcChunk;
    std::vector<Accum> partial(n_chunks);

    parallel_for(n_chunks, n_threads, [&](std::size_t chunk) {
        RngStream stream = rng.substream(chunk);
        std::size_t begin = chunk * kMcChunk;
        std::size_t count = std::min(kMcChunk, n_samples - begin);

        Accum acc{Eigen::MatrixXcd::Zero(n, n), Eigen::MatrixXd::Zero(n, n),
                  Eigen::MatrixXd::Zero(n, n)};
        for (std::size_t s = 0; s < count; ++s) {
            double xi = sample_mixture(system.energies(), prior, noise, stream);
            StateVector updated = single_shot_update(system, state, noise, xi);
            Eigen::MatrixXcd outer =
                updated.amplitudes() * updated.amplitudes().adjoint();
            acc.sum += outer;
            acc.sum_sq_re += outer.real().cwiseAbs2();
            acc.sum_sq_im += outer.imag().cwiseAbs2();
        }
        partial[chunk] = std::move(acc);
    });

    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXd sq_re = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sq_im = Eigen::MatrixXd::Zero(n, n);
    for (const Accum& acc : partial) {
        sum += acc.sum;
        sq_re += acc.sum_sq_re;
        sq_im += acc.sum_sq_im;
    }

    const double count = static_cast<double>(n_samples);
    Eigen::MatrixXcd mean = sum / count;
    // Hermitise away rounding drift before validation.
    mean = 0.5 * (mean + mean.adjoint()).eval();

    auto stderr_of = [&](const Eigen::MatrixXd& sq,
                         const Eigen::MatrixXd& mean_part) {
        Eigen::MatrixXd var =
            (sq / count - mean_part.cwiseAbs2()).cwiseMax(0.0);
        return (var / count).cwiseSqrt().eval();
    };

    return AveragedDensityStats{DensityMatrix(mean),
                                stderr_of(sq_re, mean.real()),
                                stderr_of(sq_im, mean.imag()), n_samples};
}

DensityMatrix averaged_density_mc(const QuantumSystem& system,
                                  const StateVector& state,
                                  const NoiseDensity& noise,
                                  std::size_t n_samples, RngStream& rng,
                                  unsigned n_threads) {
    return averaged_density_mc_stats(system, state, noise, n_samples, rng,
                                     n_threads)
        .density;
}

double von_neumann_entropy(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho.entries(),
                                                           Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("von_neumann_entropy: eigensolve did not converge");
    }
    double s = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        double lambda = std::max(solver.eigenvalues()[i], 0.0);
        if (lambda > 0.0) s -= lambda * std::log(lambda);
    }
    return s;
}

} // namespace infodyn
