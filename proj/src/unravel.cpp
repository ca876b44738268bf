#include "infodyn/unravel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "infodyn/errors.hpp"
#include "infodyn/parallel.hpp"
#include "infodyn/signal.hpp"

namespace infodyn {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kStabilityCeiling = 0.1;
constexpr double kRenormBudget = 1e-6;
constexpr std::size_t kTrajChunk = 64;

using Complex = std::complex<double>;

void check_hermitian(const Eigen::MatrixXcd& m, const char* what) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        throw DimensionMismatch(std::string(what) + ": matrix must be square");
    }
    double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (!(dev <= kHermitianTol)) {
        std::ostringstream msg;
        msg << what << ": deviates from Hermitian by " << dev;
        throw InvalidArgument(msg.str());
    }
}

/// Precomputed per-spec machinery. All stepping happens in the monitored
/// observable's eigenbasis (eigenvalues ascending).
struct Engine {
    Eigen::MatrixXcd basis;        // columns: L eigenvectors (original <- L)
    Eigen::MatrixXcd propagator;   // basis^† exp(-iH dt) basis
    Eigen::MatrixXcd h_monitored;  // basis^† H basis
    std::vector<double> l_values;
    std::optional<NoiseDensity> readout_noise; // absent when coupling = 0
    double dt = 0.0;
    std::size_t n_steps = 0;
    double collapse_threshold = 0.0;

    Eigen::Index dim() const { return basis.rows(); }
};

Engine build_engine(const DynamicsSpec& spec) {
    Engine eng;
    const Eigen::Index n = spec.hamiltonian().rows();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> l_solver(spec.lindblad());
    if (l_solver.info() != Eigen::Success) {
        throw NumericalFailure("unravel: eigensolve of monitored observable failed");
    }
    eng.basis = l_solver.eigenvectors();
    eng.l_values.assign(l_solver.eigenvalues().data(),
                        l_solver.eigenvalues().data() + n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> h_solver(spec.hamiltonian());
    if (h_solver.info() != Eigen::Success) {
        throw NumericalFailure("unravel: eigensolve of hamiltonian failed");
    }
    Eigen::VectorXcd phases(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        phases[k] = std::exp(Complex(0.0, -h_solver.eigenvalues()[k] * spec.dt()));
    }
    Eigen::MatrixXcd unitary = h_solver.eigenvectors() *
                               phases.asDiagonal() *
                               h_solver.eigenvectors().adjoint();
    eng.propagator = eng.basis.adjoint() * unitary * eng.basis;
    eng.h_monitored = eng.basis.adjoint() * spec.hamiltonian() * eng.basis;

    if (spec.coupling() > 0.0) {
        eng.readout_noise = NoiseDensity::gaussian(spec.step_noise_sigma());
    }
    eng.dt = spec.dt();
    eng.n_steps = spec.n_steps();
    double span = spec.lindblad_span();
    eng.collapse_threshold = kCollapseVarFraction * span * span;
    return eng;
}

std::vector<double> occupations(const Eigen::VectorXcd& a) {
    std::vector<double> p(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) p[static_cast<std::size_t>(i)] = std::norm(a[i]);
    return p;
}

void condition_on(const Engine& eng, Eigen::VectorXcd& a,
                  const std::vector<double>& probs, double xi) {
    std::vector<double> post =
        bayes_update(eng.l_values, probs, *eng.readout_noise, xi);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        std::size_t k = static_cast<std::size_t>(i);
        a[i] = probs[k] > 0.0 ? a[i] * std::sqrt(post[k] / probs[k])
                              : Complex(0.0, 0.0);
    }
    double norm2 = a.squaredNorm();
    if (!std::isfinite(norm2) || std::abs(norm2 - 1.0) > kRenormBudget) {
        std::ostringstream msg;
        msg << "unravel: renormalisation residue " << std::abs(norm2 - 1.0)
            << " exceeds budget";
        throw StabilityViolation(msg.str());
    }
    a /= std::sqrt(norm2);
}

void step_in_place(const Engine& eng, Eigen::VectorXcd& a, RngStream& rng) {
    a = eng.propagator * a;
    if (!eng.readout_noise) return;
    std::vector<double> probs = occupations(a);
    for (int attempt = 0;; ++attempt) {
        double xi = sample_mixture(eng.l_values, probs, *eng.readout_noise, rng);
        try {
            condition_on(eng, a, probs, xi);
            return;
        } catch (const ZeroMarginal&) {
            // Single tail-underflow draws are resampled once.
            if (attempt >= 1) throw;
        }
    }
}

TrajectoryRecord record_state(const Engine& eng, const Eigen::VectorXcd& a,
                              double time) {
    TrajectoryRecord rec{};
    rec.time = time;
    std::vector<double> p = occupations(a);
    double mean_l = 0.0, mean_l2 = 0.0, max_occ = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mean_l += p[i] * eng.l_values[i];
        mean_l2 += p[i] * eng.l_values[i] * eng.l_values[i];
        max_occ = std::max(max_occ, p[i]);
    }
    rec.mean_l = mean_l;
    rec.var_l = std::max(0.0, mean_l2 - mean_l * mean_l);
    rec.max_occupation = max_occ;
    rec.mean_h = a.dot(eng.h_monitored * a).real();
    return rec;
}

Eigen::VectorXcd to_monitored_basis(const Engine& eng, const StateVector& state) {
    if (state.dimension() != static_cast<std::size_t>(eng.dim())) {
        throw DimensionMismatch("unravel: state dimension does not match spec");
    }
    return eng.basis.adjoint() * state.amplitudes();
}

double final_var_l(const Engine& eng, const Eigen::VectorXcd& a) {
    std::vector<double> p = occupations(a);
    double m = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        m += p[i] * eng.l_values[i];
        m2 += p[i] * eng.l_values[i] * eng.l_values[i];
    }
    return std::max(0.0, m2 - m * m);
}

} // namespace

DynamicsSpec::DynamicsSpec(Eigen::MatrixXcd hamiltonian, Eigen::MatrixXcd lindblad,
                           double coupling, double dt, double horizon)
    : hamiltonian_(std::move(hamiltonian)), lindblad_(std::move(lindblad)),
      coupling_(coupling), dt_(dt), horizon_(horizon) {
    check_hermitian(hamiltonian_, "DynamicsSpec(hamiltonian)");
    check_hermitian(lindblad_, "DynamicsSpec(lindblad)");
    if (hamiltonian_.rows() != lindblad_.rows()) {
        throw DimensionMismatch("DynamicsSpec: driver dimensions differ");
    }
    if (!(coupling_ >= 0.0) || !std::isfinite(coupling_)) {
        throw InvalidArgument("DynamicsSpec: coupling must be finite and >= 0");
    }
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
        throw InvalidArgument("DynamicsSpec: dt must be finite and > 0");
    }
    if (!(horizon_ >= dt_) || !std::isfinite(horizon_)) {
        throw InvalidArgument("DynamicsSpec: horizon must satisfy dt <= horizon");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(lindblad_,
                                                           Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("DynamicsSpec: eigensolve of monitored observable failed");
    }
    lindblad_span_ =
        solver.eigenvalues().maxCoeff() - solver.eigenvalues().minCoeff();

    double stability = coupling_ * coupling_ * dt_ * lindblad_span_ * lindblad_span_;
    if (stability > kStabilityCeiling * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "DynamicsSpec: coupling^2 * dt * span^2 = " << stability
            << " exceeds the stability ceiling " << kStabilityCeiling;
        throw InvalidArgument(msg.str());
    }
}

std::size_t DynamicsSpec::n_steps() const {
    return static_cast<std::size_t>(
        std::max<long long>(1, std::llround(horizon_ / dt_)));
}

double DynamicsSpec::step_noise_sigma() const {
    if (coupling_ == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (coupling_ * std::sqrt(dt_));
}

double DynamicsSpec::commutator_norm() const {
    return (hamiltonian_ * lindblad_ - lindblad_ * hamiltonian_).norm();
}

StateVector step(const DynamicsSpec& spec, const StateVector& state,
                 RngStream& rng) {
    Engine eng = build_engine(spec);
    Eigen::VectorXcd a = to_monitored_basis(eng, state);
    step_in_place(eng, a, rng);
    return StateVector::normalized(eng.basis * a);
}

StateVector step_with_observation(const DynamicsSpec& spec,
                                  const StateVector& state, double xi) {
    Engine eng = build_engine(spec);
    Eigen::VectorXcd a = to_monitored_basis(eng, state);
    a = eng.propagator * a;
    if (eng.readout_noise) {
        condition_on(eng, a, occupations(a), xi);
    }
    return StateVector::normalized(eng.basis * a);
}

Trajectory simulate_trajectory(const DynamicsSpec& spec,
                               const StateVector& initial, RngStream& rng) {
    Engine eng = build_engine(spec);
    Eigen::VectorXcd a = to_monitored_basis(eng, initial);

    Trajectory traj;
    traj.times.reserve(eng.n_steps + 1);
    traj.states.reserve(eng.n_steps + 1);
    traj.records.reserve(eng.n_steps + 1);

    auto push = [&](std::size_t k) {
        double t = static_cast<double>(k) * eng.dt;
        traj.times.push_back(t);
        traj.states.push_back(StateVector::normalized(eng.basis * a));
        traj.records.push_back(record_state(eng, a, t));
    };
    push(0);
    for (std::size_t k = 0; k < eng.n_steps; ++k) {
        step_in_place(eng, a, rng);
        push(k + 1);
    }
    return traj;
}

EnsembleSummary simulate_ensemble(const DynamicsSpec& spec,
                                  const StateVector& initial,
                                  std::size_t n_trajectories, RngStream& rng,
                                  unsigned n_threads,
                                  std::size_t record_stride) {
    if (n_trajectories == 0) {
        throw InvalidArgument("simulate_ensemble: need at least one trajectory");
    }
    record_stride = std::max<std::size_t>(1, record_stride);
    Engine eng = build_engine(spec);
    Eigen::VectorXcd a0 = to_monitored_basis(eng, initial);
    const Eigen::Index n = eng.dim();

    std::vector<std::size_t> record_steps;
    for (std::size_t k = 0; k <= eng.n_steps; ++k) {
        if (k % record_stride == 0 || k == eng.n_steps) record_steps.push_back(k);
    }
    const std::size_t n_rec = record_steps.size();

    struct Accum {
        std::vector<Eigen::MatrixXcd> density;
        std::vector<Eigen::VectorXd> occ, occ_sq;
        std::vector<double> h, var_l, max_occ;
        std::size_t collapsed = 0;
    };
    const std::size_t n_chunks = (n_trajectories + kTrajChunk - 1) / kTrajChunk;
    std::vector<Accum> partial(n_chunks);

    parallel_for(n_chunks, n_threads, [&](std::size_t chunk) {
        Accum acc;
        acc.density.assign(n_rec, Eigen::MatrixXcd::Zero(n, n));
        acc.occ.assign(n_rec, Eigen::VectorXd::Zero(n));
        acc.occ_sq.assign(n_rec, Eigen::VectorXd::Zero(n));
        acc.h.assign(n_rec, 0.0);
        acc.var_l.assign(n_rec, 0.0);
        acc.max_occ.assign(n_rec, 0.0);

        std::size_t begin = chunk * kTrajChunk;
        std::size_t end = std::min(begin + kTrajChunk, n_trajectories);
        for (std::size_t traj = begin; traj < end; ++traj) {
            RngStream stream = rng.substream(traj);
            Eigen::VectorXcd a = a0;
            std::size_t rec_pos = 0;
            auto maybe_record = [&](std::size_t k) {
                if (rec_pos >= n_rec || record_steps[rec_pos] != k) return;
                TrajectoryRecord rec =
                    record_state(eng, a, static_cast<double>(k) * eng.dt);
                acc.density[rec_pos] += a * a.adjoint();
                for (Eigen::Index i = 0; i < n; ++i) {
                    double p = std::norm(a[i]);
                    acc.occ[rec_pos][i] += p;
                    acc.occ_sq[rec_pos][i] += p * p;
                }
                acc.h[rec_pos] += rec.mean_h;
                acc.var_l[rec_pos] += rec.var_l;
                acc.max_occ[rec_pos] += rec.max_occupation;
                ++rec_pos;
            };
            maybe_record(0);
            for (std::size_t k = 0; k < eng.n_steps; ++k) {
                step_in_place(eng, a, stream);
                maybe_record(k + 1);
            }
            if (final_var_l(eng, a) < eng.collapse_threshold) ++acc.collapsed;
        }
        partial[chunk] = std::move(acc);
    });

    EnsembleSummary summary;
    summary.n_trajectories = n_trajectories;
    summary.lindblad_eigenvalues = eng.l_values;
    summary.lindblad_span = spec.lindblad_span();
    summary.times.reserve(n_rec);
    for (std::size_t k : record_steps) {
        summary.times.push_back(static_cast<double>(k) * eng.dt);
    }

    const double count = static_cast<double>(n_trajectories);
    std::size_t collapsed = 0;
    for (std::size_t r = 0; r < n_rec; ++r) {
        Eigen::MatrixXcd density = Eigen::MatrixXcd::Zero(n, n);
        Eigen::VectorXd occ = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd occ_sq = Eigen::VectorXd::Zero(n);
        double h = 0.0, var_l = 0.0, max_occ = 0.0;
        for (const Accum& acc : partial) {
            density += acc.density[r];
            occ += acc.occ[r];
            occ_sq += acc.occ_sq[r];
            h += acc.h[r];
            var_l += acc.var_l[r];
            max_occ += acc.max_occ[r];
        }
        summary.mean_density.push_back(density / count);
        Eigen::VectorXd mean = occ / count;
        summary.occupation_mean.push_back(mean);
        Eigen::VectorXd var =
            (occ_sq / count - mean.cwiseAbs2()).cwiseMax(0.0);
        summary.occupation_stderr.push_back((var / count).cwiseSqrt());
        summary.mean_h.push_back(h / count);
        summary.mean_var_l.push_back(var_l / count);
        summary.mean_max_occupation.push_back(max_occ / count);
    }
    for (const Accum& acc : partial) collapsed += acc.collapsed;
    summary.collapsed_fraction = static_cast<double>(collapsed) / count;
    return summary;
}

CollapseStats collapse_statistics(const DynamicsSpec& spec,
                                  const StateVector& initial,
                                  std::size_t n_trajectories, RngStream& rng,
                                  unsigned n_threads) {
    if (n_trajectories == 0) {
        throw InvalidArgument("collapse_statistics: need at least one trajectory");
    }
    double comm_tol = 1e-10 * std::max(1.0, spec.hamiltonian().norm() *
                                                spec.lindblad().norm());
    if (spec.commutator_norm() > comm_tol) {
        throw InvalidArgument(
            "collapse_statistics: drivers must commute for collapse counting");
    }

    Engine eng = build_engine(spec);
    Eigen::VectorXcd a0 = to_monitored_basis(eng, initial);
    const std::size_t n = static_cast<std::size_t>(eng.dim());

    struct Accum {
        std::vector<std::size_t> counts;
        std::size_t converged = 0;
    };
    const std::size_t n_chunks = (n_trajectories + kTrajChunk - 1) / kTrajChunk;
    std::vector<Accum> partial(n_chunks);

    parallel_for(n_chunks, n_threads, [&](std::size_t chunk) {
        Accum acc;
        acc.counts.assign(n, 0);
        std::size_t begin = chunk * kTrajChunk;
        std::size_t end = std::min(begin + kTrajChunk, n_trajectories);
        for (std::size_t traj = begin; traj < end; ++traj) {
            RngStream stream = rng.substream(traj);
            Eigen::VectorXcd a = a0;
            for (std::size_t k = 0; k < eng.n_steps; ++k) {
                step_in_place(eng, a, stream);
            }
            if (final_var_l(eng, a) < eng.collapse_threshold) {
                std::vector<double> p = occupations(a);
                std::size_t target = static_cast<std::size_t>(
                    std::max_element(p.begin(), p.end()) - p.begin());
                ++acc.counts[target];
                ++acc.converged;
            }
        }
        partial[chunk] = std::move(acc);
    });

    CollapseStats stats;
    stats.eigenvalues = eng.l_values;
    stats.n_trajectories = n_trajectories;
    std::vector<std::size_t> counts(n, 0);
    for (const Accum& acc : partial) {
        stats.n_converged += acc.converged;
        for (std::size_t i = 0; i < n; ++i) counts[i] += acc.counts[i];
    }
    if (static_cast<double>(stats.n_converged) <
        0.99 * static_cast<double>(n_trajectories)) {
        std::ostringstream msg;
        msg << "collapse_statistics: only " << stats.n_converged << " of "
            << n_trajectories << " trajectories collapsed by the horizon";
        throw NonConverged(msg.str());
    }
    stats.frequency.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        stats.frequency[i] = static_cast<double>(counts[i]) /
                             static_cast<double>(stats.n_converged);
    }
    return stats;
}

double coherence_decay_fit(const EnsembleSummary& ensemble, std::size_t i,
                           std::size_t j) {
    if (ensemble.mean_density.empty()) {
        throw InvalidArgument("coherence_decay_fit: empty ensemble");
    }
    const Eigen::Index n = ensemble.mean_density.front().rows();
    if (i >= static_cast<std::size_t>(n) || j >= static_cast<std::size_t>(n)) {
        throw DimensionMismatch("coherence_decay_fit: index out of range");
    }
    const double floor =
        3.0 / std::sqrt(static_cast<double>(ensemble.n_trajectories));

    std::vector<double> ts, ys;
    for (std::size_t r = 0; r < ensemble.times.size(); ++r) {
        double coh = std::abs(ensemble.mean_density[r](
            static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        if (coh < floor) break;
        ts.push_back(ensemble.times[r]);
        ys.push_back(std::log(coh));
    }
    if (ts.size() < 5) {
        throw FitFailure(
            "coherence_decay_fit: fewer than 5 points above the noise floor");
    }
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    const double m = static_cast<double>(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
        st += ts[k];
        sy += ys[k];
        stt += ts[k] * ts[k];
        sty += ts[k] * ys[k];
    }
    double denom = m * stt - st * st;
    if (denom <= 0.0) throw FitFailure("coherence_decay_fit: degenerate time grid");
    double slope = (m * sty - st * sy) / denom;
    return -slope;
}

RegimeDiagnostics regime_diagnostics(const DynamicsSpec& spec,
                                     const StateVector& initial,
                                     std::size_t n_trajectories,
                                     RngStream& rng, unsigned n_threads) {
    std::size_t stride = std::max<std::size_t>(1, spec.n_steps() / 200);
    EnsembleSummary summary = simulate_ensemble(spec, initial, n_trajectories,
                                                rng, n_threads, stride);
    RegimeDiagnostics diag{};
    diag.commutator_norm = spec.commutator_norm();
    double l_norm = spec.lindblad().norm();
    double s2 = spec.coupling() * spec.coupling();
    diag.drive_ratio = (l_norm > 0.0 && s2 > 0.0)
                           ? spec.hamiltonian().norm() / (l_norm * s2)
                           : std::numeric_limits<double>::infinity();

    const std::size_t n_rec = summary.times.size();
    double var_sum = 0.0, occ_sum = 0.0;
    for (std::size_t r = 0; r < n_rec; ++r) {
        var_sum += summary.mean_var_l[r];
        occ_sum += summary.mean_max_occupation[r];
    }
    diag.time_avg_var_l = var_sum / static_cast<double>(n_rec);
    diag.time_avg_max_occupation = occ_sum / static_cast<double>(n_rec);

    std::size_t late_begin = n_rec - std::max<std::size_t>(1, n_rec / 10);
    double late_sum = 0.0;
    for (std::size_t r = late_begin; r < n_rec; ++r) late_sum += summary.mean_var_l[r];
    diag.late_var_l = late_sum / static_cast<double>(n_rec - late_begin);
    diag.collapsed_fraction = summary.collapsed_fraction;
    return diag;
}

} // namespace infodyn
