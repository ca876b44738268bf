#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "infodyn/errors.hpp"
#include "infodyn/quantum.hpp"
#include "infodyn/signal.hpp"

using namespace infodyn;
using Complex = std::complex<double>;

namespace {

Eigen::MatrixXcd random_hermitian(Eigen::Index n, RngStream& rng) {
    Eigen::MatrixXcd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = Complex(rng.normal(), rng.normal());
        }
    }
    return 0.5 * (a + a.adjoint()).eval();
}

StateVector random_state(Eigen::Index n, RngStream& rng, bool zero_phase) {
    Eigen::VectorXcd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        c[i] = zero_phase ? Complex(std::abs(rng.normal()), 0.0)
                          : Complex(rng.normal(), rng.normal());
    }
    return StateVector::normalized(std::move(c));
}

} // namespace

TEST_CASE("expectation of the identity is one") {
    RngStream rng(3);
    StateVector psi = random_state(4, rng, false);
    CHECK(expectation(psi, Eigen::MatrixXcd::Identity(4, 4)) ==
          doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("expectation of the diagonal Hamiltonian in an eigenstate is E_k") {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
    h.diagonal() << 0.5, 1.5, -2.0;
    CHECK(expectation(StateVector::basis_state(3, 1), h) ==
          doctest::Approx(1.5).epsilon(1e-14));
    CHECK(expectation(StateVector::basis_state(3, 2), h) ==
          doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("pure-state and trace expectation routes agree") {
    RngStream rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        StateVector psi = random_state(4, rng, false);
        Eigen::MatrixXcd f = random_hermitian(4, rng);
        double via_state = expectation(psi, f);
        double via_trace = expectation(DensityMatrix::pure(psi), f);
        CHECK(std::abs(via_state - via_trace) <= 1e-12 * std::max(1.0, std::abs(via_trace)));
    }
}

TEST_CASE("expectation rejects mismatched dimensions") {
    StateVector psi = StateVector::basis_state(3, 0);
    CHECK_THROWS_AS(expectation(psi, Eigen::MatrixXcd::Identity(4, 4)),
                    DimensionMismatch);
}

TEST_CASE("eigenstates are fixed points of the single-shot update") {
    QuantumSystem sys({0.0, 1.0, 2.5});
    StateVector psi = StateVector::basis_state(3, 1);
    for (double xi : {-3.0, 0.2, 1.0, 4.0}) {
        StateVector out = single_shot_update(sys, psi, NoiseDensity::gaussian(0.7), xi);
        CHECK(std::abs(out.amplitudes()[1]) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("symmetric superposition is unchanged by a symmetric observation") {
    QuantumSystem sys({-1.0, 1.0});
    StateVector psi = StateVector::from_probabilities({0.5, 0.5});
    StateVector out = single_shot_update(sys, psi, NoiseDensity::gaussian(1.0), 0.0);
    CHECK(std::norm(out.amplitudes()[0]) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(std::norm(out.amplitudes()[1]) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("single-shot update delegates to the classical posterior") {
    QuantumSystem sys({0.0, 1.0, 2.0});
    StateVector psi = StateVector::from_probabilities({0.2, 0.3, 0.5});
    NoiseDensity noise = NoiseDensity::gaussian(0.5);
    StateVector out = single_shot_update(sys, psi, noise, 0.8);

    SignalModel model({0.0, 1.0, 2.0}, {0.2, 0.3, 0.5}, noise);
    Posterior post = posterior(model, Observation(0.8));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::norm(out.amplitudes()[static_cast<Eigen::Index>(i)]) ==
              doctest::Approx(post.probs[i]).epsilon(1e-12));
    }
}

TEST_CASE("single-shot update preserves amplitude phases") {
    QuantumSystem sys({0.0, 1.0});
    Eigen::VectorXcd c(2);
    c << std::polar(std::sqrt(0.4), 0.9), std::polar(std::sqrt(0.6), -1.7);
    StateVector psi(c);
    StateVector out = single_shot_update(sys, psi, NoiseDensity::gaussian(0.8), 0.3);
    for (Eigen::Index i = 0; i < 2; ++i) {
        CHECK(std::arg(out.amplitudes()[i]) ==
              doctest::Approx(std::arg(psi.amplitudes()[i])).epsilon(1e-12));
    }
}

TEST_CASE("decoherence factor is exactly one on the diagonal") {
    QuantumSystem sys({0.3, 1.7});
    CHECK(decoherence_factor(sys, NoiseDensity::gaussian(1.0), 0, 0) == 1.0);
    CHECK(decoherence_factor(sys, NoiseDensity::laplace(0.5), 1, 1) == 1.0);
}

TEST_CASE("gaussian decoherence factor matches the closed form on a grid") {
    for (double sigma : {0.3, 0.5, 1.0, 2.0, 4.0}) {
        for (double omega : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            double closed = std::exp(-omega * omega / (8.0 * sigma * sigma));
            double quad = decoherence_factor_gap(NoiseDensity::gaussian(sigma), omega);
            CHECK(std::abs(quad - closed) <= 1e-8);
        }
    }
    CHECK(decoherence_factor_gap(NoiseDensity::gaussian(1.0), 2.0) ==
          doctest::Approx(0.6065306597126334).epsilon(1e-9));
}

TEST_CASE("uniform noise with disjoint supports gives zero overlap") {
    NoiseDensity noise = NoiseDensity::uniform(0.5);
    CHECK(decoherence_factor_gap(noise, 1.0) == 0.0);
    CHECK(decoherence_factor_gap(noise, 1.5) == 0.0);
    // Partially overlapping boxes: 1 - |omega| / (2a).
    CHECK(decoherence_factor_gap(noise, 0.4) == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("laplace decoherence factor matches its closed form") {
    for (double b : {0.5, 1.0, 2.0}) {
        for (double omega : {0.3, 1.0, 2.0, 5.0}) {
            double z = std::abs(omega) / (2.0 * b);
            double closed = std::exp(-z) * (1.0 + z);
            CHECK(decoherence_factor_gap(NoiseDensity::laplace(b), omega) ==
                  doctest::Approx(closed).epsilon(1e-8));
        }
    }
}

TEST_CASE("decoherence factor is symmetric in its indices") {
    QuantumSystem sys({-0.7, 0.4, 2.2});
    NoiseDensity noise = NoiseDensity::laplace(0.9);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(decoherence_factor(sys, noise, i, j) ==
                  doctest::Approx(decoherence_factor(sys, noise, j, i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("analytic averaged density: eigenstate stays a projector") {
    QuantumSystem sys({0.0, 1.0});
    StateVector psi = StateVector::basis_state(2, 0);
    DensityMatrix rho = averaged_density_analytic(sys, psi, NoiseDensity::gaussian(1.0));
    CHECK(rho.entries()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(rho.entries()(0, 1)) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("analytic averaged density damps the off-diagonal by Lambda") {
    QuantumSystem sys({0.0, 2.0});
    StateVector psi = StateVector::from_probabilities({0.5, 0.5});
    DensityMatrix rho = averaged_density_analytic(sys, psi, NoiseDensity::gaussian(1.0));
    CHECK(rho.entries()(0, 1).real() ==
          doctest::Approx(0.3032653298563167).epsilon(1e-8));
    CHECK(rho.entries()(0, 0).real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(rho.entries()(1, 1).real() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("analytic averaged density preserves any diagonal exactly") {
    QuantumSystem sys({-0.3, 0.9, 1.4});
    StateVector psi = StateVector::from_probabilities({0.1, 0.6, 0.3});
    DensityMatrix rho = averaged_density_analytic(sys, psi, NoiseDensity::laplace(0.7));
    CHECK(rho.entries()(0, 0).real() == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(rho.entries()(1, 1).real() == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(rho.entries()(2, 2).real() == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("analytic route rejects states with phases") {
    QuantumSystem sys({0.0, 1.0});
    Eigen::VectorXcd c(2);
    c << std::polar(std::sqrt(0.5), 0.4), std::sqrt(0.5);
    CHECK_THROWS_AS(
        averaged_density_analytic(sys, StateVector(c), NoiseDensity::gaussian(1.0)),
        PhasePresent);
}

TEST_CASE("degenerate energy levels are not damped") {
    QuantumSystem sys({1.0, 1.0});
    StateVector psi = StateVector::from_probabilities({0.5, 0.5});
    DensityMatrix rho = averaged_density_analytic(sys, psi, NoiseDensity::gaussian(0.5));
    CHECK(rho.entries()(0, 1).real() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("single-sample MC of an eigenstate is the exact projector") {
    QuantumSystem sys({0.0, 1.0});
    RngStream rng(9);
    DensityMatrix rho = averaged_density_mc(sys, StateVector::basis_state(2, 1),
                                            NoiseDensity::gaussian(1.0), 1, rng);
    CHECK(rho.entries()(1, 1).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(rho.entries()(0, 1)) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("MC averaged density agrees with the analytic kernel") {
    QuantumSystem sys({0.0, 2.0});
    StateVector psi = StateVector::from_probabilities({0.5, 0.5});
    NoiseDensity noise = NoiseDensity::gaussian(1.0);
    RngStream rng(123);
    AveragedDensityStats stats =
        averaged_density_mc_stats(sys, psi, noise, 100000, rng);
    double mc = stats.density.entries()(0, 1).real();
    CHECK(std::abs(mc - 0.3032653298563167) <= 3.0 * stats.stderr_real(0, 1));
}

TEST_CASE("MC averaged density is bit-identical for a fixed seed and any thread count") {
    QuantumSystem sys({0.0, 1.0, 2.5});
    StateVector psi = StateVector::from_probabilities({0.2, 0.3, 0.5});
    NoiseDensity noise = NoiseDensity::laplace(0.8);
    RngStream a(77), b(77), c(77);
    Eigen::MatrixXcd first = averaged_density_mc(sys, psi, noise, 20000, a, 1).entries();
    Eigen::MatrixXcd second = averaged_density_mc(sys, psi, noise, 20000, b, 1).entries();
    Eigen::MatrixXcd threaded = averaged_density_mc(sys, psi, noise, 20000, c, 4).entries();
    CHECK((first - second).cwiseAbs().maxCoeff() == 0.0);
    CHECK((first - threaded).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("von Neumann entropy: pure, maximally mixed, and 2x2 closed form") {
    StateVector psi = StateVector::from_probabilities({0.3, 0.7});
    CHECK(von_neumann_entropy(DensityMatrix::pure(psi)) ==
          doctest::Approx(0.0).epsilon(1e-10));

    DensityMatrix mixed(0.5 * Eigen::MatrixXcd::Identity(2, 2));
    CHECK(von_neumann_entropy(mixed) ==
          doctest::Approx(std::numbers::ln2).epsilon(1e-12));

    QuantumSystem sys({0.0, 2.0});
    DensityMatrix rho = averaged_density_analytic(
        sys, StateVector::from_probabilities({0.5, 0.5}), NoiseDensity::gaussian(1.0));
    double det = (rho.entries()(0, 0) * rho.entries()(1, 1) -
                  rho.entries()(0, 1) * rho.entries()(1, 0))
                     .real();
    double root = std::sqrt(1.0 - 4.0 * det);
    double lp = 0.5 * (1.0 + root), lm = 0.5 * (1.0 - root);
    double closed = -(lp * std::log(lp) + lm * std::log(lm));
    CHECK(von_neumann_entropy(rho) == doctest::Approx(closed).epsilon(1e-12));
    CHECK(von_neumann_entropy(rho) == doctest::Approx(0.4958422580214431).epsilon(1e-9));
}

TEST_CASE("information acquisition damps every off-diagonal element") {
    RngStream rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        QuantumSystem sys({0.0, 0.8, 0.8, 2.1}); // includes a degenerate pair
        StateVector psi = random_state(4, rng, true);
        DensityMatrix before = DensityMatrix::pure(psi);
        DensityMatrix after =
            averaged_density_analytic(sys, psi, NoiseDensity::gaussian(0.9));
        for (Eigen::Index i = 0; i < 4; ++i) {
            for (Eigen::Index j = 0; j < 4; ++j) {
                double b = std::abs(before.entries()(i, j));
                double a = std::abs(after.entries()(i, j));
                CHECK(a <= b + 1e-12);
                if (sys.gap(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ==
                    0.0) {
                    CHECK(a == doctest::Approx(b).epsilon(1e-12));
                } else if (b > 1e-8) {
                    CHECK(a < b);
                }
            }
        }
    }
}

TEST_CASE("gaussian damping is strictly decreasing in the gap") {
    NoiseDensity noise = NoiseDensity::gaussian(1.3);
    double prev = 1.0;
    for (double omega : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        double lambda = decoherence_factor_gap(noise, omega);
        CHECK(lambda < prev);
        CHECK(lambda > 0.0);
        prev = lambda;
    }
}

TEST_CASE("observer entropy strictly increases for superpositions with distinct energies") {
    QuantumSystem sys({0.0, 1.0, 3.0});
    StateVector psi = StateVector::from_probabilities({0.25, 0.35, 0.4});
    DensityMatrix rho = averaged_density_analytic(sys, psi, NoiseDensity::gaussian(1.0));
    CHECK(von_neumann_entropy(DensityMatrix::pure(psi)) ==
          doctest::Approx(0.0).epsilon(1e-10));
    CHECK(von_neumann_entropy(rho) > 1e-3);
}

TEST_CASE("MC and analytic routes agree entrywise within three standard errors") {
    QuantumSystem sys({0.0, 1.0, 2.5});
    StateVector psi = StateVector::from_probabilities({0.25, 0.45, 0.3});
    NoiseDensity noise = NoiseDensity::gaussian(0.9);
    DensityMatrix analytic = averaged_density_analytic(sys, psi, noise);
    RngStream rng(2024);
    AveragedDensityStats stats = averaged_density_mc_stats(sys, psi, noise, 100000, rng);
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            double dev = std::abs((stats.density.entries()(i, j) -
                                   analytic.entries()(i, j)).real());
            // Diagonal entries of every sample are the exact posterior mean,
            // so their stderr can be tiny; allow rounding headroom.
            CHECK(dev <= 3.0 * stats.stderr_real(i, j) + 1e-12);
        }
    }
}
