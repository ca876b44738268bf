#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "infodyn/errors.hpp"
#include "infodyn/signal.hpp"
#include "infodyn/unravel.hpp"

using namespace infodyn;
using Complex = std::complex<double>;

namespace {

Eigen::MatrixXcd pauli_x() {
    Eigen::MatrixXcd m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Eigen::MatrixXcd pauli_z() {
    Eigen::MatrixXcd m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Eigen::MatrixXcd diag2(double a, double b) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m.diagonal() << a, b;
    return m;
}

double fidelity(const StateVector& a, const StateVector& b) {
    return std::norm(a.amplitudes().dot(b.amplitudes()));
}

} // namespace

TEST_CASE("spec validation: hermiticity, stability ceiling, time grid") {
    Eigen::MatrixXcd bad(2, 2);
    bad << 0, 1, 0, 0;
    CHECK_THROWS_AS(DynamicsSpec(bad, pauli_z(), 1.0, 0.01, 1.0), InvalidArgument);
    // coupling^2 dt span^2 = 4 * 0.1 * 4 > 0.1
    CHECK_THROWS_AS(DynamicsSpec(pauli_x(), pauli_z(), 2.0, 0.1, 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(DynamicsSpec(pauli_x(), pauli_z(), 1.0, 0.5, 0.1),
                    InvalidArgument);
    DynamicsSpec ok(pauli_x(), pauli_z(), 1.0, 0.01, 1.0);
    CHECK(ok.n_steps() == 100);
    CHECK(ok.step_noise_sigma() == doctest::Approx(10.0));
    CHECK(ok.lindblad_span() == doctest::Approx(2.0));
}

TEST_CASE("monitored eigenstates are fixed points of the step") {
    DynamicsSpec spec(Eigen::MatrixXcd::Zero(2, 2), diag2(0.0, 1.0), 1.0, 0.01, 1.0);
    RngStream rng(4);
    StateVector psi = StateVector::basis_state(2, 1);
    for (int k = 0; k < 20; ++k) {
        psi = step(spec, psi, rng);
        CHECK(std::norm(psi.amplitudes()[1]) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("vanishing coupling reproduces pure unitary evolution") {
    const double dt = 5e-4;
    DynamicsSpec spec(pauli_x(), pauli_z(), 1e-9, dt, 1000 * dt);
    StateVector psi0 = StateVector::basis_state(2, 0);
    RngStream rng(6);
    Trajectory traj = simulate_trajectory(spec, psi0, rng);

    // Closed form: exp(-i t sigma_x) = cos(t) I - i sin(t) sigma_x.
    double t = 1000 * dt;
    Eigen::VectorXcd expected(2);
    expected << Complex(std::cos(t), 0.0), Complex(0.0, -std::sin(t));
    CHECK(fidelity(traj.states.back(), StateVector(expected)) >= 1.0 - 1e-8);
}

TEST_CASE("a commuting step's modulus update is the classical posterior") {
    const double dt = 0.04;
    DynamicsSpec spec(diag2(0.0, 1.0), diag2(0.0, 1.0), 1.0, dt, 1.0);
    StateVector psi = StateVector::from_probabilities({0.35, 0.65});
    const double xi = 0.6;
    StateVector out = step_with_observation(spec, psi, xi);

    double sigma = 1.0 / std::sqrt(dt);
    SignalModel model({0.0, 1.0}, {0.35, 0.65}, NoiseDensity::gaussian(sigma));
    Posterior post = posterior(model, Observation(xi));
    CHECK(std::norm(out.amplitudes()[0]) == doctest::Approx(post.probs[0]).epsilon(1e-12));
    CHECK(std::norm(out.amplitudes()[1]) == doctest::Approx(post.probs[1]).epsilon(1e-12));
}

TEST_CASE("drift-free dynamics is exactly iterated single-shot updating") {
    const double dt = 0.02;
    DynamicsSpec spec(Eigen::MatrixXcd::Zero(2, 2), diag2(0.0, 1.0), 2.0, dt, 50 * dt);
    StateVector psi0 = StateVector::from_probabilities({0.4, 0.6});

    RngStream traj_rng(99);
    Trajectory traj = simulate_trajectory(spec, psi0, traj_rng);

    QuantumSystem sys({0.0, 1.0});
    NoiseDensity noise = NoiseDensity::gaussian(spec.step_noise_sigma());
    RngStream manual_rng(99);
    StateVector state = psi0;
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        double xi = sample_mixture(sys.energies(), state.probabilities(), noise,
                                   manual_rng);
        state = single_shot_update(sys, state, noise, xi);
        CHECK((traj.states[k].amplitudes() - state.amplitudes()).cwiseAbs().maxCoeff() <=
              1e-12);
    }
}

TEST_CASE("energy-monitored trajectories conserve the energy expectation") {
    DynamicsSpec spec(diag2(0.0, 1.0), diag2(0.0, 1.0), 2.0, 0.02, 2.0);
    StateVector psi0 = StateVector::from_probabilities({0.3, 0.7});
    RngStream rng(12);
    EnsembleSummary ens = simulate_ensemble(spec, psi0, 2000, rng, 0, 10);

    double h0 = ens.mean_h.front();
    CHECK(h0 == doctest::Approx(0.7).epsilon(1e-12));
    for (std::size_t r = 0; r < ens.times.size(); ++r) {
        // stderr of <H> equals the stderr of the excited occupation here.
        double band = 3.0 * ens.occupation_stderr[r][1] + 1e-12;
        CHECK(std::abs(ens.mean_h[r] - h0) <= band);
    }
}

TEST_CASE("per-eigenstate occupations are martingales") {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 3);
    h.diagonal() << 0.0, 1.0, 2.0;
    DynamicsSpec spec(h, h, 1.0, 0.02, 2.0);
    StateVector psi0 = StateVector::from_probabilities({0.2, 0.3, 0.5});
    RngStream rng(13);
    EnsembleSummary ens = simulate_ensemble(spec, psi0, 2000, rng, 0, 20);

    std::vector<double> initial{0.2, 0.3, 0.5};
    for (std::size_t r = 0; r < ens.times.size(); ++r) {
        for (Eigen::Index i = 0; i < 3; ++i) {
            double dev = std::abs(ens.occupation_mean[r][i] -
                                  initial[static_cast<std::size_t>(i)]);
            CHECK(dev <= 3.0 * ens.occupation_stderr[r][i] + 1e-12);
        }
    }
}

TEST_CASE("long-horizon energy monitoring collapses each trajectory") {
    DynamicsSpec spec(diag2(0.0, 1.0), diag2(0.0, 1.0), 2.0, 0.02, 40.0);
    StateVector psi0 = StateVector::from_probabilities({0.5, 0.5});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RngStream rng(300 + seed);
        Trajectory traj = simulate_trajectory(spec, psi0, rng);
        const TrajectoryRecord& last = traj.records.back();
        CHECK(last.var_l < 1e-6);
        CHECK(last.max_occupation >= 1.0 - 1e-3);
    }
}

TEST_CASE("trajectory states stay normalised") {
    DynamicsSpec spec(pauli_x(), pauli_z(), 1.0, 0.01, 1.0);
    RngStream rng(8);
    Trajectory traj = simulate_trajectory(
        spec, StateVector::from_probabilities({0.5, 0.5}), rng);
    for (const StateVector& s : traj.states) {
        CHECK(std::abs(s.amplitudes().squaredNorm() - 1.0) <= 1e-10);
    }
}

TEST_CASE("collapse statistics: eigenstate input collapses to itself") {
    DynamicsSpec spec(diag2(0.0, 1.0), diag2(0.0, 1.0), 2.0, 0.02, 5.0);
    RngStream rng(21);
    CollapseStats stats =
        collapse_statistics(spec, StateVector::basis_state(2, 1), 200, rng, 0);
    CHECK(stats.n_converged == 200);
    CHECK(stats.frequency[0] == doctest::Approx(0.0));
    CHECK(stats.frequency[1] == doctest::Approx(1.0));
}

TEST_CASE("collapse frequencies reproduce the initial occupations") {
    DynamicsSpec spec(diag2(0.0, 1.0), diag2(0.0, 1.0), 2.0, 0.02, 40.0);
    struct Case {
        std::vector<double> p;
        std::uint64_t seed;
    };
    for (const auto& c : {Case{{0.5, 0.5}, 501}, Case{{0.25, 0.75}, 502}}) {
        RngStream rng(c.seed);
        CollapseStats stats = collapse_statistics(
            spec, StateVector::from_probabilities(c.p), 2000, rng, 0);
        for (std::size_t i = 0; i < 2; ++i) {
            double half_width =
                3.0 * std::sqrt(c.p[i] * (1.0 - c.p[i]) / 2000.0);
            CHECK(std::abs(stats.frequency[i] - c.p[i]) <= half_width);
        }
    }
}

TEST_CASE("collapse statistics reports NonConverged for short horizons") {
    DynamicsSpec spec(diag2(0.0, 1.0), diag2(0.0, 1.0), 1.0, 0.02, 0.2);
    RngStream rng(22);
    CHECK_THROWS_AS(collapse_statistics(
                        spec, StateVector::from_probabilities({0.5, 0.5}), 100, rng, 0),
                    NonConverged);
}

TEST_CASE("collapse statistics requires commuting drivers") {
    DynamicsSpec spec(pauli_x(), pauli_z(), 1.0, 0.01, 1.0);
    RngStream rng(23);
    CHECK_THROWS_AS(collapse_statistics(
                        spec, StateVector::from_probabilities({0.5, 0.5}), 10, rng, 0),
                    InvalidArgument);
}

TEST_CASE("degenerate monitored levels keep their coherence") {
    DynamicsSpec spec(Eigen::MatrixXcd::Zero(2, 2), Eigen::MatrixXcd::Identity(2, 2),
                      1.0, 0.05, 10.0);
    StateVector psi0 = StateVector::from_probabilities({0.5, 0.5});
    RngStream rng(31);
    EnsembleSummary ens = simulate_ensemble(spec, psi0, 200, rng, 0, 4);
    double gamma = coherence_decay_fit(ens, 0, 1);
    CHECK(std::abs(gamma) <= 1e-9);
}

TEST_CASE("coherence decays at rate coupling^2 gap^2 / 8") {
    const double s = 1.0, omega = 2.0;
    DynamicsSpec spec(Eigen::MatrixXcd::Zero(2, 2), diag2(0.0, omega), s, 0.02, 4.0);
    StateVector psi0 = StateVector::from_probabilities({0.5, 0.5});
    RngStream rng(41);
    EnsembleSummary ens = simulate_ensemble(spec, psi0, 1000, rng, 0, 2);
    double gamma = coherence_decay_fit(ens, 0, 1);
    double expected = s * s * omega * omega / 8.0;
    CHECK(std::abs(gamma - expected) <= 0.1 * expected);
}

TEST_CASE("doubling the gap quadruples the decay rate") {
    StateVector psi0 = StateVector::from_probabilities({0.5, 0.5});
    DynamicsSpec narrow(Eigen::MatrixXcd::Zero(2, 2), diag2(0.0, 1.0), 1.0, 0.05, 16.0);
    DynamicsSpec wide(Eigen::MatrixXcd::Zero(2, 2), diag2(0.0, 2.0), 1.0, 0.02, 4.0);
    RngStream r1(42), r2(43);
    double g1 = coherence_decay_fit(simulate_ensemble(narrow, psi0, 1000, r1, 0, 2), 0, 1);
    double g2 = coherence_decay_fit(simulate_ensemble(wide, psi0, 1000, r2, 0, 2), 0, 1);
    CHECK(std::abs(g2 / g1 - 4.0) <= 0.15 * 4.0);
}

TEST_CASE("ensemble results are deterministic and thread-count independent") {
    DynamicsSpec spec(pauli_x(), pauli_z(), 0.5, 0.02, 1.0);
    StateVector psi0 = StateVector::from_probabilities({0.5, 0.5});
    RngStream a(71), b(71);
    EnsembleSummary one = simulate_ensemble(spec, psi0, 300, a, 1, 5);
    EnsembleSummary four = simulate_ensemble(spec, psi0, 300, b, 4, 5);
    for (std::size_t r = 0; r < one.times.size(); ++r) {
        CHECK((one.mean_density[r] - four.mean_density[r]).cwiseAbs().maxCoeff() == 0.0);
        CHECK(one.mean_h[r] == four.mean_h[r]);
    }
}

TEST_CASE("halving dt leaves ensemble coherence inside the MC band") {
    StateVector psi0 = StateVector::from_probabilities({0.5, 0.5});
    DynamicsSpec coarse(Eigen::MatrixXcd::Zero(2, 2), diag2(0.0, 2.0), 1.0, 0.02, 2.0);
    DynamicsSpec fine(Eigen::MatrixXcd::Zero(2, 2), diag2(0.0, 2.0), 1.0, 0.01, 2.0);
    RngStream r1(81), r2(82);
    EnsembleSummary ec = simulate_ensemble(coarse, psi0, 1000, r1, 0, 10);
    EnsembleSummary ef = simulate_ensemble(fine, psi0, 1000, r2, 0, 20);
    REQUIRE(ec.times.size() == ef.times.size());
    double band = 3.0 * 2.0 * 0.5 / std::sqrt(1000.0);
    for (std::size_t r = 0; r < ec.times.size(); ++r) {
        CHECK(ec.times[r] == doctest::Approx(ef.times[r]));
        double dc = std::abs(ec.mean_density[r](0, 1));
        double df = std::abs(ef.mean_density[r](0, 1));
        CHECK(std::abs(dc - df) <= band);
    }
}

TEST_CASE("regime diagnostics separate commuting from non-commuting drivers") {
    StateVector psi0 = StateVector::from_probabilities({0.5, 0.5});

    DynamicsSpec commuting(diag2(0.0, 1.0), diag2(0.0, 1.0), 2.0, 0.02, 40.0);
    RngStream r1(91);
    RegimeDiagnostics dc = regime_diagnostics(commuting, psi0, 100, r1, 0);
    CHECK(dc.commutator_norm == doctest::Approx(0.0));
    CHECK(dc.collapsed_fraction >= 0.99);
    CHECK(dc.late_var_l < 1e-6 * 1.0);

    DynamicsSpec rotating(10.0 * pauli_x(), pauli_z(), 0.3, 0.01, 20.0);
    RngStream r2(92);
    RegimeDiagnostics dn = regime_diagnostics(rotating, psi0, 100, r2, 0);
    CHECK(dn.commutator_norm > 1.0);
    CHECK(dn.time_avg_var_l > 10.0 * 1e-6 * 4.0);
    CHECK(dn.collapsed_fraction <= 0.5);
}

TEST_CASE("strong monitoring pins the state (Zeno regime)") {
    DynamicsSpec spec(pauli_x(), pauli_z(), 50.0, 1e-5, 0.02);
    RngStream rng(93);
    RegimeDiagnostics d = regime_diagnostics(spec, StateVector::basis_state(2, 0),
                                             50, rng, 0);
    CHECK(d.time_avg_max_occupation > 0.99);
}
