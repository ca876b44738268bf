#include "infodyn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include <Eigen/Dense>

#include "infodyn/parallel.hpp"
#include "infodyn/plant.hpp"
#include "infodyn/quantum.hpp"
#include "infodyn/signal.hpp"
#include "infodyn/unravel.hpp"

namespace infodyn::cli {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// 99% two-sided normal quantile, for binomial confidence intervals.
constexpr double kZ99 = 2.5758293035489004;

std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

/// Collects violations while pulling typed fields out of a JSON object.
class Checker {
public:
    Checker(const json& obj, std::string path, std::vector<Violation>& out)
        : obj_(obj), path_(std::move(path)), out_(out) {}

    void add(const std::string& field_suffix, const std::string& message) {
        out_.push_back({field_suffix.empty() ? path_ : join_path(path_, field_suffix),
                        message});
    }

    /// Rejects keys outside required + optional; reports missing required keys.
    bool keys(std::initializer_list<const char*> required,
              std::initializer_list<const char*> optional = {}) {
        bool ok = true;
        if (!obj_.is_object()) {
            add("", "must be an object");
            return false;
        }
        for (const auto& item : obj_.items()) {
            bool known =
                std::any_of(required.begin(), required.end(),
                            [&](const char* k) { return item.key() == k; }) ||
                std::any_of(optional.begin(), optional.end(),
                            [&](const char* k) { return item.key() == k; });
            if (!known) {
                add(item.key(), "unknown field");
                ok = false;
            }
        }
        for (const char* k : required) {
            if (!obj_.contains(k)) {
                add(k, "missing required field");
                ok = false;
            }
        }
        return ok;
    }

    const json* field(const char* key) const {
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::optional<double> number(const char* key, bool required = true) {
        const json* f = field(key);
        if (!f) {
            if (required) add(key, "missing required field");
            return std::nullopt;
        }
        if (!f->is_number()) {
            add(key, "must be a number");
            return std::nullopt;
        }
        double v = f->get<double>();
        if (!std::isfinite(v)) {
            add(key, "must be finite");
            return std::nullopt;
        }
        return v;
    }

    std::optional<double> positive(const char* key, bool required = true) {
        auto v = number(key, required);
        if (v && !(*v > 0.0)) {
            add(key, "must be > 0");
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::uint64_t> uinteger(const char* key, bool required = true,
                                          std::uint64_t min_value = 0) {
        const json* f = field(key);
        if (!f) {
            if (required) add(key, "missing required field");
            return std::nullopt;
        }
        if (!f->is_number_integer() ||
            (f->is_number_integer() && f->get<long long>() < 0)) {
            add(key, "must be a nonnegative integer");
            return std::nullopt;
        }
        std::uint64_t v = f->get<std::uint64_t>();
        if (v < min_value) {
            std::ostringstream msg;
            msg << "must be >= " << min_value;
            add(key, msg.str());
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::vector<double>> number_array(const char* key,
                                                    std::size_t min_len = 1,
                                                    bool required = true) {
        const json* f = field(key);
        if (!f) {
            if (required) add(key, "missing required field");
            return std::nullopt;
        }
        if (!f->is_array()) {
            add(key, "must be an array of numbers");
            return std::nullopt;
        }
        std::vector<double> v;
        v.reserve(f->size());
        for (const auto& e : *f) {
            if (!e.is_number() || !std::isfinite(e.get<double>())) {
                add(key, "entries must be finite numbers");
                return std::nullopt;
            }
            v.push_back(e.get<double>());
        }
        if (v.size() < min_len) {
            std::ostringstream msg;
            msg << "needs at least " << min_len << " entries";
            add(key, msg.str());
            return std::nullopt;
        }
        return v;
    }

    const json& raw() const { return obj_; }
    const std::string& path() const { return path_; }
    std::vector<Violation>& sink() const { return out_; }

private:
    const json& obj_;
    std::string path_;
    std::vector<Violation>& out_;
};

void check_probability_vector(Checker& c, const char* key,
                              const std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) {
            c.add(key, "probabilities must be >= 0");
            return;
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "probabilities sum to " << sum << ", expected 1 within 1e-12";
        c.add(key, msg.str());
    }
}

void check_distinct(Checker& c, const char* key, std::vector<double> values) {
    std::sort(values.begin(), values.end());
    if (std::adjacent_find(values.begin(), values.end()) != values.end()) {
        c.add(key, "values must be pairwise distinct");
    }
}

// --- noise block -----------------------------------------------------------

void validate_noise(const json& obj, const std::string& path,
                    std::vector<Violation>& out) {
    Checker c(obj, path, out);
    if (!c.raw().is_object()) {
        c.add("", "must be an object");
        return;
    }
    const json* kind = c.field("kind");
    if (!kind || !kind->is_string()) {
        c.add("kind", "must be one of gaussian, uniform, laplace");
        return;
    }
    std::string k = kind->get<std::string>();
    if (k == "gaussian") {
        if (c.keys({"kind", "sigma"})) c.positive("sigma");
    } else if (k == "uniform") {
        if (c.keys({"kind", "half_width"})) c.positive("half_width");
    } else if (k == "laplace") {
        if (c.keys({"kind", "scale"})) c.positive("scale");
    } else {
        c.add("kind", "must be one of gaussian, uniform, laplace");
    }
}

NoiseDensity parse_noise(const json& obj) {
    std::string k = obj.at("kind").get<std::string>();
    if (k == "gaussian") return NoiseDensity::gaussian(obj.at("sigma").get<double>());
    if (k == "uniform") return NoiseDensity::uniform(obj.at("half_width").get<double>());
    return NoiseDensity::laplace(obj.at("scale").get<double>());
}

// --- matrices ----------------------------------------------------------------

std::optional<Eigen::MatrixXd> parse_real_matrix(const json* f, Checker& c,
                                                 const char* key) {
    if (!f->is_array() || f->empty()) {
        c.add(key, "must be a nonempty array of rows");
        return std::nullopt;
    }
    const std::size_t n = f->size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const json& row = (*f)[i];
        if (!row.is_array() || row.size() != n) {
            c.add(key, "must be square (rows of equal length)");
            return std::nullopt;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!row[j].is_number() || !std::isfinite(row[j].get<double>())) {
                c.add(key, "entries must be finite numbers");
                return std::nullopt;
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                row[j].get<double>();
        }
    }
    return m;
}

std::optional<Eigen::MatrixXcd> parse_hermitian(Checker& c, const char* real_key,
                                                const char* imag_key) {
    const json* real_field = c.field(real_key);
    if (!real_field) {
        c.add(real_key, "missing required field");
        return std::nullopt;
    }
    auto real_part = parse_real_matrix(real_field, c, real_key);
    if (!real_part) return std::nullopt;

    Eigen::MatrixXd imag_part =
        Eigen::MatrixXd::Zero(real_part->rows(), real_part->cols());
    if (const json* imag_field = c.field(imag_key)) {
        auto parsed = parse_real_matrix(imag_field, c, imag_key);
        if (!parsed) return std::nullopt;
        if (parsed->rows() != real_part->rows()) {
            c.add(imag_key, "must match the real part's dimensions");
            return std::nullopt;
        }
        imag_part = *parsed;
    }
    Eigen::MatrixXcd m =
        real_part->cast<std::complex<double>>() +
        std::complex<double>(0.0, 1.0) * imag_part.cast<std::complex<double>>();
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        c.add(real_key, "must be Hermitian within 1e-12");
        return std::nullopt;
    }
    return m;
}

// --- per-kind validators -----------------------------------------------------

void validate_posterior(Checker& c) {
    if (!c.keys({"values", "prior", "noise", "observations"})) return;
    auto values = c.number_array("values");
    auto prior = c.number_array("prior");
    if (values) check_distinct(c, "values", *values);
    if (values && prior && values->size() != prior->size()) {
        c.add("prior", "length must match values");
    }
    if (prior) check_probability_vector(c, "prior", *prior);
    if (const json* noise = c.field("noise")) {
        validate_noise(*noise, join_path(c.path(), "noise"), c.sink());
    }
    c.number_array("observations");
}

void validate_mutual_info(Checker& c) {
    if (!c.keys({"values", "prior", "noise"}, {"n_samples", "quad_tol"})) return;
    auto values = c.number_array("values");
    auto prior = c.number_array("prior");
    if (values) check_distinct(c, "values", *values);
    if (values && prior && values->size() != prior->size()) {
        c.add("prior", "length must match values");
    }
    if (prior) check_probability_vector(c, "prior", *prior);
    if (const json* noise = c.field("noise")) {
        validate_noise(*noise, join_path(c.path(), "noise"), c.sink());
    }
    c.uinteger("n_samples", false, 100);
    if (c.field("quad_tol")) c.positive("quad_tol", false);
}

void validate_decohere(Checker& c) {
    if (!c.keys({"energies", "probabilities", "noise"}, {"n_samples"})) return;
    auto energies = c.number_array("energies", 2);
    auto probs = c.number_array("probabilities", 2);
    if (energies && probs && energies->size() != probs->size()) {
        c.add("probabilities", "length must match energies");
    }
    if (probs) check_probability_vector(c, "probabilities", *probs);
    if (const json* noise = c.field("noise")) {
        validate_noise(*noise, join_path(c.path(), "noise"), c.sink());
    }
    c.uinteger("n_samples", false, 2);
}

void validate_dynamics(Checker& c, const Eigen::MatrixXcd& hamiltonian,
                       const Eigen::MatrixXcd& lindblad) {
    auto coupling = c.number("coupling");
    auto dt = c.positive("dt");
    auto horizon = c.positive("horizon");
    if (coupling && !(*coupling >= 0.0)) c.add("coupling", "must be >= 0");
    if (dt && horizon && !(*horizon >= *dt)) c.add("horizon", "must be >= dt");
    if (coupling && dt && horizon && *coupling >= 0.0 && *horizon >= *dt) {
        try {
            DynamicsSpec spec(hamiltonian, lindblad, *coupling, *dt, *horizon);
            (void)spec;
        } catch (const Error& e) {
            c.add("coupling", e.what());
        }
    }
}

void validate_unravel(Checker& c) {
    if (!c.keys({"hamiltonian", "lindblad", "coupling", "dt", "horizon",
                 "initial_probabilities", "n_trajectories"},
                {"hamiltonian_imag", "lindblad_imag", "record_stride"})) {
        return;
    }
    auto h = parse_hermitian(c, "hamiltonian", "hamiltonian_imag");
    auto l = parse_hermitian(c, "lindblad", "lindblad_imag");
    if (h && l && h->rows() != l->rows()) {
        c.add("lindblad", "dimensions must match hamiltonian");
        return;
    }
    auto probs = c.number_array("initial_probabilities");
    if (probs) {
        check_probability_vector(c, "initial_probabilities", *probs);
        if (h && static_cast<Eigen::Index>(probs->size()) != h->rows()) {
            c.add("initial_probabilities", "length must match matrix dimension");
        }
    }
    c.uinteger("n_trajectories", true, 1);
    c.uinteger("record_stride", false, 1);
    if (h && l) validate_dynamics(c, *h, *l);
}

void validate_collapse(Checker& c) {
    if (!c.keys({"energies", "initial_probabilities", "coupling", "dt", "horizon",
                 "n_trajectories"})) {
        return;
    }
    auto energies = c.number_array("energies", 2);
    if (energies) {
        for (std::size_t i = 0; i + 1 < energies->size(); ++i) {
            if (!((*energies)[i] < (*energies)[i + 1])) {
                c.add("energies", "must be strictly increasing");
                break;
            }
        }
    }
    auto probs = c.number_array("initial_probabilities");
    if (probs) {
        check_probability_vector(c, "initial_probabilities", *probs);
        if (energies && probs->size() != energies->size()) {
            c.add("initial_probabilities", "length must match energies");
        }
    }
    auto coupling = c.positive("coupling");
    c.uinteger("n_trajectories", true, 1);
    if (energies && coupling) {
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(
            static_cast<Eigen::Index>(energies->size()),
            static_cast<Eigen::Index>(energies->size()));
        for (std::size_t i = 0; i < energies->size(); ++i) {
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
                (*energies)[i];
        }
        validate_dynamics(c, h, h);
    }
}

void validate_cuscuta(Checker& c) {
    if (!c.keys({"bins", "true_bearing", "kappa", "sigma_v", "n_steps"},
                {"sweep_rate", "heading0", "temperature"})) {
        return;
    }
    c.uinteger("bins", true, 4);
    c.number("true_bearing");
    c.positive("kappa");
    c.positive("sigma_v");
    c.uinteger("n_steps", true, 1);
    if (c.field("sweep_rate")) c.number("sweep_rate", false);
    if (c.field("heading0")) c.number("heading0", false);
    if (c.field("temperature")) c.positive("temperature", false);
}

void validate_heliotropism(Checker& c) {
    if (!c.keys({"drift_rates", "coupling", "n_steps", "n_runs"})) return;
    auto drifts = c.number_array("drift_rates");
    if (drifts) {
        for (double d : *drifts) {
            if (d < 0.0) {
                c.add("drift_rates", "entries must be >= 0");
                break;
            }
        }
    }
    c.positive("coupling");
    c.uinteger("n_steps", true, 1);
    c.uinteger("n_runs", true, 1);
}

void validate_ledger(Checker& c) {
    if (!c.keys({"temperature", "bits_entries"}, {"external_energy"})) return;
    c.positive("temperature");
    auto entries = c.number_array("bits_entries");
    if (entries) {
        for (double b : *entries) {
            if (b < 0.0) {
                c.add("bits_entries", "erased bits must be >= 0");
                break;
            }
        }
    }
    if (c.field("external_energy")) c.positive("external_energy", false);
}

void validate_params(const std::string& kind, const json& params,
                     std::vector<Violation>& out) {
    Checker c(params, "params", out);
    if (kind == "posterior") validate_posterior(c);
    else if (kind == "mutual-info") validate_mutual_info(c);
    else if (kind == "decohere") validate_decohere(c);
    else if (kind == "unravel") validate_unravel(c);
    else if (kind == "collapse") validate_collapse(c);
    else if (kind == "cuscuta") validate_cuscuta(c);
    else if (kind == "heliotropism") validate_heliotropism(c);
    else if (kind == "ledger") validate_ledger(c);
}

// --- runners -------------------------------------------------------------------

struct RunOutput {
    std::vector<std::string> rows;
    json headline;
};

std::string fmt_u(std::size_t v) { return std::to_string(v); }

template <typename... Parts>
std::string csv_row(const Parts&... parts) {
    std::string row;
    bool first = true;
    auto append = [&](const std::string& p) {
        if (!first) row += ',';
        row += p;
        first = false;
    };
    (append(parts), ...);
    return row;
}

RunOutput run_posterior_kind(const json& p, std::uint64_t, unsigned) {
    SignalModel model(p.at("values").get<std::vector<double>>(),
                      p.at("prior").get<std::vector<double>>(),
                      parse_noise(p.at("noise")));
    RunOutput out;
    json means = json::array();
    for (double xi : p.at("observations").get<std::vector<double>>()) {
        Posterior post = posterior(model, Observation(xi));
        for (std::size_t i = 0; i < model.size(); ++i) {
            out.rows.push_back(csv_row(format_double(xi), fmt_u(i),
                                       format_double(model.values()[i]),
                                       format_double(model.prior()[i]),
                                       format_double(post.probs[i])));
        }
        means.push_back(posterior_mean(model, Observation(xi)));
    }
    out.headline = {{"posterior_means", means}};
    return out;
}

RunOutput run_mutual_info_kind(const json& p, std::uint64_t seed, unsigned) {
    SignalModel model(p.at("values").get<std::vector<double>>(),
                      p.at("prior").get<std::vector<double>>(),
                      parse_noise(p.at("noise")));
    const double tol = p.value("quad_tol", 1e-8);
    const std::size_t n_samples = p.value("n_samples", std::uint64_t{20000});

    double s_eps = noise_entropy(model.noise());
    double s_xi = observation_entropy(model, tol);
    double mi = mutual_information(model, tol);

    RngStream rng(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        Observation xi = sample_observation(model, rng);
        double ds = entropy_change(model.prior(), posterior(model, xi).probs);
        sum += ds;
        sum_sq += ds * ds;
    }
    double mean = sum / static_cast<double>(n_samples);
    double var = std::max(0.0, sum_sq / static_cast<double>(n_samples) - mean * mean);
    double std_err = std::sqrt(var / static_cast<double>(n_samples));

    RunOutput out;
    out.rows.push_back(csv_row(format_double(s_eps), format_double(s_xi),
                               format_double(mi), format_double(nats_to_bits(mi)),
                               format_double(-mean), format_double(std_err)));
    out.headline = {{"mi_nats", mi},
                    {"mi_bits", nats_to_bits(mi)},
                    {"s_xi_nats", s_xi},
                    {"s_eps_nats", s_eps},
                    {"mc_neg_mean_entropy_change", -mean},
                    {"mc_std_err", std_err}};
    return out;
}

RunOutput run_decohere_kind(const json& p, std::uint64_t seed, unsigned threads) {
    QuantumSystem system(p.at("energies").get<std::vector<double>>());
    StateVector state = StateVector::from_probabilities(
        p.at("probabilities").get<std::vector<double>>());
    NoiseDensity noise = parse_noise(p.at("noise"));
    const std::size_t n_samples = p.value("n_samples", std::uint64_t{100000});

    DensityMatrix analytic = averaged_density_analytic(system, state, noise);
    RngStream rng(seed);
    AveragedDensityStats mc =
        averaged_density_mc_stats(system, state, noise, n_samples, rng, threads);

    RunOutput out;
    double max_dev = 0.0;
    const Eigen::Index n = analytic.entries().rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            std::complex<double> a = analytic.entries()(i, j);
            std::complex<double> m = mc.density.entries()(i, j);
            double dev = std::abs(m - a);
            max_dev = std::max(max_dev, dev);
            out.rows.push_back(csv_row(
                fmt_u(static_cast<std::size_t>(i)), fmt_u(static_cast<std::size_t>(j)),
                format_double(a.real()), format_double(a.imag()),
                format_double(m.real()), format_double(m.imag()),
                format_double(mc.stderr_real(i, j)), format_double(mc.stderr_imag(i, j)),
                format_double(dev)));
        }
    }
    out.headline = {{"max_abs_dev", max_dev},
                    {"entropy_analytic_nats", von_neumann_entropy(analytic)},
                    {"entropy_mc_nats", von_neumann_entropy(mc.density)},
                    {"n_samples", n_samples}};
    return out;
}

DynamicsSpec spec_from_params(const json& p) {
    auto to_matrix = [&](const char* real_key, const char* imag_key) {
        const json& rows = p.at(real_key);
        const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXcd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                double re = rows[static_cast<std::size_t>(i)]
                                [static_cast<std::size_t>(j)].get<double>();
                double im = 0.0;
                if (p.contains(imag_key)) {
                    im = p.at(imag_key)[static_cast<std::size_t>(i)]
                                       [static_cast<std::size_t>(j)].get<double>();
                }
                m(i, j) = std::complex<double>(re, im);
            }
        }
        return m;
    };
    return DynamicsSpec(to_matrix("hamiltonian", "hamiltonian_imag"),
                        to_matrix("lindblad", "lindblad_imag"),
                        p.at("coupling").get<double>(), p.at("dt").get<double>(),
                        p.at("horizon").get<double>());
}

RunOutput run_unravel_kind(const json& p, std::uint64_t seed, unsigned threads) {
    DynamicsSpec spec = spec_from_params(p);
    StateVector initial = StateVector::from_probabilities(
        p.at("initial_probabilities").get<std::vector<double>>());
    const std::size_t n_traj = p.at("n_trajectories").get<std::uint64_t>();
    const std::size_t stride =
        p.contains("record_stride")
            ? p.at("record_stride").get<std::uint64_t>()
            : std::max<std::size_t>(1, spec.n_steps() / 200);

    RngStream rng(seed);
    EnsembleSummary ens =
        simulate_ensemble(spec, initial, n_traj, rng, threads, stride);

    RunOutput out;
    const Eigen::Index n = static_cast<Eigen::Index>(spec.dimension());
    for (std::size_t r = 0; r < ens.times.size(); ++r) {
        double mean_l = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            mean_l += ens.occupation_mean[r][i] *
                      ens.lindblad_eigenvalues[static_cast<std::size_t>(i)];
        }
        double max_coh = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                max_coh = std::max(max_coh, std::abs(ens.mean_density[r](i, j)));
            }
        }
        out.rows.push_back(csv_row(format_double(ens.times[r]),
                                   format_double(ens.mean_h[r]),
                                   format_double(mean_l),
                                   format_double(ens.mean_var_l[r]),
                                   format_double(ens.mean_max_occupation[r]),
                                   format_double(max_coh)));
    }

    double var_sum = 0.0, occ_sum = 0.0;
    for (std::size_t r = 0; r < ens.times.size(); ++r) {
        var_sum += ens.mean_var_l[r];
        occ_sum += ens.mean_max_occupation[r];
    }
    std::size_t n_rec = ens.times.size();
    std::size_t late_begin = n_rec - std::max<std::size_t>(1, n_rec / 10);
    double late = 0.0;
    for (std::size_t r = late_begin; r < n_rec; ++r) late += ens.mean_var_l[r];
    double l_norm = spec.lindblad().norm();
    double s2 = spec.coupling() * spec.coupling();
    out.headline = {
        {"commutator_norm", spec.commutator_norm()},
        {"drive_ratio", (l_norm > 0.0 && s2 > 0.0)
                            ? json(spec.hamiltonian().norm() / (l_norm * s2))
                            : json()},
        {"time_avg_var_l", var_sum / static_cast<double>(n_rec)},
        {"time_avg_max_occupation", occ_sum / static_cast<double>(n_rec)},
        {"late_var_l", late / static_cast<double>(n_rec - late_begin)},
        {"collapsed_fraction", ens.collapsed_fraction},
        {"mean_h_initial", ens.mean_h.front()},
        {"mean_h_final", ens.mean_h.back()},
        {"n_trajectories", n_traj}};
    return out;
}

RunOutput run_collapse_kind(const json& p, std::uint64_t seed, unsigned threads) {
    std::vector<double> energies = p.at("energies").get<std::vector<double>>();
    std::vector<double> probs =
        p.at("initial_probabilities").get<std::vector<double>>();
    const Eigen::Index n = static_cast<Eigen::Index>(energies.size());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) h(i, i) = energies[static_cast<std::size_t>(i)];
    DynamicsSpec spec(h, h, p.at("coupling").get<double>(), p.at("dt").get<double>(),
                      p.at("horizon").get<double>());
    const std::size_t n_traj = p.at("n_trajectories").get<std::uint64_t>();

    RngStream rng(seed);
    CollapseStats stats = collapse_statistics(
        spec, StateVector::from_probabilities(probs), n_traj, rng, threads);

    RunOutput out;
    bool all_within = true;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        double pi = probs[i];
        double half = kZ99 * std::sqrt(pi * (1.0 - pi) /
                                       static_cast<double>(stats.n_converged));
        double lo = pi - half, hi = pi + half;
        if (stats.frequency[i] < lo || stats.frequency[i] > hi) all_within = false;
        out.rows.push_back(csv_row(fmt_u(i), format_double(stats.eigenvalues[i]),
                                   format_double(pi),
                                   format_double(stats.frequency[i]),
                                   format_double(lo), format_double(hi)));
    }
    out.headline = {{"n_trajectories", stats.n_trajectories},
                    {"n_converged", stats.n_converged},
                    {"all_within_99ci", all_within}};
    return out;
}

RunOutput run_cuscuta_kind(const json& p, std::uint64_t seed, unsigned) {
    const std::size_t n_steps = p.at("n_steps").get<std::uint64_t>();
    const double sweep = p.contains("sweep_rate")
                             ? p.at("sweep_rate").get<double>()
                             : kTwoPi / static_cast<double>(n_steps);
    CircularScenario scenario(p.at("bins").get<std::uint64_t>(),
                              p.at("true_bearing").get<double>(),
                              p.at("kappa").get<double>(),
                              p.at("sigma_v").get<double>(), sweep, {},
                              p.value("heading0", 0.0));
    const double temperature = p.value("temperature", 300.0);

    RngStream rng(seed);
    CuscutaRun run = run_cuscuta(scenario, n_steps, rng, temperature);

    RunOutput out;
    double cumulative = 0.0;
    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        const CuscutaStepRecord& s = run.steps[t];
        cumulative += s.bits_gained;
        out.rows.push_back(csv_row(
            fmt_u(t), format_double(s.heading), format_double(s.observation),
            format_double(s.bits_gained), format_double(cumulative),
            format_double(s.entropy_bits), format_double(s.direction),
            format_double(circular_distance(s.direction, scenario.true_bearing()))));
    }
    double prior_bits = nats_to_bits(shannon_entropy(scenario.prior()));
    double final_bits = nats_to_bits(shannon_entropy(run.posteriors.back()));
    out.headline = {
        {"growth_direction", run.growth_direction},
        {"direction_error",
         circular_distance(run.growth_direction, scenario.true_bearing())},
        {"bits_processed", run.ledger.bits_processed()},
        {"landauer_heat_joules", run.ledger.landauer_heat()},
        {"prior_entropy_bits", prior_bits},
        {"telescope_residual_bits",
         std::abs(run.ledger.bits_processed() - (prior_bits - final_bits))}};
    return out;
}

RunOutput run_heliotropism_kind(const json& p, std::uint64_t seed,
                                unsigned threads) {
    std::vector<double> drifts = p.at("drift_rates").get<std::vector<double>>();
    const double coupling = p.at("coupling").get<double>();
    const std::size_t n_steps = p.at("n_steps").get<std::uint64_t>();
    const std::size_t n_runs = p.at("n_runs").get<std::uint64_t>();

    RunOutput out;
    json mean_errors = json::array();
    RngStream root(seed);
    for (double drift : drifts) {
        std::vector<double> errors(n_runs);
        parallel_for(n_runs, threads, [&](std::size_t r) {
            RngStream rng = root.substream(r);
            errors[r] =
                run_heliotropism(drift, coupling, n_steps, rng).mean_tracking_error;
        });
        double sum = 0.0, sum_sq = 0.0;
        for (double e : errors) {
            sum += e;
            sum_sq += e * e;
        }
        double mean = sum / static_cast<double>(n_runs);
        double var = std::max(0.0, sum_sq / static_cast<double>(n_runs) - mean * mean);
        double std_err =
            n_runs > 1 ? std::sqrt(var / static_cast<double>(n_runs)) : 0.0;
        out.rows.push_back(csv_row(format_double(drift), format_double(coupling),
                                   format_double(mean), format_double(std_err)));
        mean_errors.push_back(mean);
    }
    out.headline = {{"drift_rates", drifts}, {"mean_tracking_errors", mean_errors}};
    return out;
}

RunOutput run_ledger_kind(const json& p, std::uint64_t, unsigned) {
    std::optional<double> external;
    if (p.contains("external_energy")) {
        external = p.at("external_energy").get<double>();
    }
    InfoLedger ledger(p.at("temperature").get<double>(), external);

    RunOutput out;
    std::size_t idx = 0;
    for (double bits : p.at("bits_entries").get<std::vector<double>>()) {
        ledger = landauer_update(std::move(ledger), bits);
        out.rows.push_back(csv_row(fmt_u(idx++), format_double(bits),
                                   format_double(ledger.bits_processed()),
                                   format_double(ledger.landauer_heat())));
    }
    out.headline = {{"bits_processed", ledger.bits_processed()},
                    {"landauer_heat_joules", ledger.landauer_heat()},
                    {"efficiency_ratio", ledger.efficiency_ratio()
                                             ? json(*ledger.efficiency_ratio())
                                             : json()}};
    return out;
}

RunOutput dispatch(const std::string& kind, const json& params,
                   std::uint64_t seed, unsigned threads) {
    if (kind == "posterior") return run_posterior_kind(params, seed, threads);
    if (kind == "mutual-info") return run_mutual_info_kind(params, seed, threads);
    if (kind == "decohere") return run_decohere_kind(params, seed, threads);
    if (kind == "unravel") return run_unravel_kind(params, seed, threads);
    if (kind == "collapse") return run_collapse_kind(params, seed, threads);
    if (kind == "cuscuta") return run_cuscuta_kind(params, seed, threads);
    if (kind == "heliotropism") return run_heliotropism_kind(params, seed, threads);
    if (kind == "ledger") return run_ledger_kind(params, seed, threads);
    throw InvalidArgument("unknown experiment kind: " + kind);
}

std::string read_file(const std::filesystem::path& path,
                      std::vector<Violation>& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        out.push_back({"config", "cannot read file: " + path.string()});
        return {};
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

ConfigError::ConfigError(ValidationReport report)
    : Error("configuration invalid (" + std::to_string(report.violations.size()) +
            " violation(s))"),
      report_(std::move(report)) {}

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{
        "posterior", "mutual-info", "decohere",     "unravel",
        "collapse",  "cuscuta",     "heliotropism", "ledger"};
    return kinds;
}

std::string csv_header(const std::string& kind) {
    if (kind == "posterior") return "observation,index,value,prior,posterior";
    if (kind == "mutual-info") {
        return "s_eps_nats,s_xi_nats,mi_nats,mi_bits,"
               "mc_neg_mean_entropy_change,mc_std_err";
    }
    if (kind == "decohere") {
        return "i,j,analytic_re,analytic_im,mc_re,mc_im,stderr_re,stderr_im,abs_dev";
    }
    if (kind == "unravel") {
        return "time,mean_h,mean_l,var_l,max_occupation,max_offdiag_coherence";
    }
    if (kind == "collapse") {
        return "eigenstate,energy,initial_probability,frequency,ci_low,ci_high";
    }
    if (kind == "cuscuta") {
        return "step,heading,observation,bits_step,bits_cumulative,entropy_bits,"
               "direction,direction_error";
    }
    if (kind == "heliotropism") {
        return "drift_rate,coupling,mean_tracking_error,std_err";
    }
    if (kind == "ledger") return "entry,bits_erased,bits_cumulative,heat_joules";
    throw InvalidArgument("unknown experiment kind: " + kind);
}

ValidationReport validate_config_text(const std::string& text) {
    ValidationReport report;
    json config;
    try {
        config = json::parse(text);
    } catch (const json::parse_error& e) {
        report.violations.push_back(
            {"config", std::string("invalid JSON: ") + e.what()});
        return report;
    }
    Checker c(config, "", report.violations);
    if (!c.keys({"schema_version", "kind", "seed", "params"}, {"out_dir"})) {
        return report;
    }
    auto version = c.uinteger("schema_version");
    if (version && *version != 1) c.add("schema_version", "must be 1");
    const json* kind = c.field("kind");
    std::string kind_name;
    if (!kind || !kind->is_string()) {
        c.add("kind", "must be a string");
    } else {
        kind_name = kind->get<std::string>();
        const auto& kinds = experiment_kinds();
        if (std::find(kinds.begin(), kinds.end(), kind_name) == kinds.end()) {
            c.add("kind", "unknown experiment kind: " + kind_name);
            kind_name.clear();
        }
    }
    c.uinteger("seed");
    if (const json* out_dir = c.field("out_dir")) {
        if (!out_dir->is_string()) c.add("out_dir", "must be a string");
    }
    const json* params = c.field("params");
    if (!params || !params->is_object()) {
        c.add("params", "must be an object");
    } else if (!kind_name.empty()) {
        validate_params(kind_name, *params, report.violations);
    }
    return report;
}

ValidationReport validate_config_file(const std::filesystem::path& path) {
    ValidationReport report;
    std::string text = read_file(path, report.violations);
    if (!report.ok()) return report;
    return validate_config_text(text);
}

RunResult run_config_file(const std::filesystem::path& path,
                          const RunOptions& options) {
    ValidationReport report;
    std::string text = read_file(path, report.violations);
    if (report.ok()) report = validate_config_text(text);
    if (!report.ok()) throw ConfigError(std::move(report));

    json config = json::parse(text);
    const std::string kind = config.at("kind").get<std::string>();
    const std::uint64_t seed =
        options.seed_override.value_or(config.at("seed").get<std::uint64_t>());
    std::filesystem::path out_dir = options.out_dir_override.value_or(
        std::filesystem::path(config.value("out_dir", "out")));

    auto start = std::chrono::steady_clock::now();
    RunOutput output = dispatch(kind, config.at("params"), seed, options.threads);
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    std::filesystem::create_directories(out_dir);
    RunResult result;
    result.kind = kind;
    result.seed = seed;
    result.csv_path = out_dir / (kind + ".csv");
    result.summary_path = out_dir / "summary.json";

    {
        std::ofstream csv(result.csv_path, std::ios::binary | std::ios::trunc);
        if (!csv) throw Error("cannot write " + result.csv_path.string());
        csv << csv_header(kind) << '\n';
        for (const std::string& row : output.rows) csv << row << '\n';
    }
    {
        json summary = {{"schema_version", 1},
                        {"kind", kind},
                        {"seed", seed},
                        {"config_hash", hex64(fnv1a64(text))},
                        {"csv", kind + ".csv"},
                        {"n_rows", output.rows.size()},
                        {"wall_time_seconds", wall},
                        {"headline", output.headline}};
        std::ofstream js(result.summary_path, std::ios::binary | std::ios::trunc);
        if (!js) throw Error("cannot write " + result.summary_path.string());
        js << summary.dump(2) << '\n';
    }
    return result;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string format_double(double value) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

} // namespace infodyn::cli
