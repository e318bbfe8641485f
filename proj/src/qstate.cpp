#include "timebin/qstate.hpp"

#include <cmath>
#include <stdexcept>

namespace timebin::qstate {

namespace {

constexpr double kNormTol = 1e-12;

void check_train(int d, const std::vector<double>& c, const std::vector<double>& phi,
                 double spacing, double mu) {
    if (d < 1) throw std::invalid_argument("pump train: d >= 1 required");
    if (static_cast<int>(c.size()) != d || static_cast<int>(phi.size()) != d)
        throw std::invalid_argument("pump train: amplitude/phase vectors must have length d");
    if (!(spacing > 0.0)) throw std::invalid_argument("pump train: bin spacing must be > 0");
    if (mu < 0.0) throw std::invalid_argument("pump train: mu >= 0 required");
    double sum = 0.0;
    for (double cj : c) {
        if (cj < 0.0) throw std::invalid_argument("pump train: amplitudes must be non-negative");
        sum += cj * cj;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("pump train: sum of c_j^2 must equal 1");
    if (phi[0] != 0.0)
        throw std::invalid_argument("pump train: phase reference phi_1 must be 0");
}

} // namespace

PumpTrain::PumpTrain(int d_, std::vector<double> amplitudes_, std::vector<double> phases_,
                     double bin_spacing_ns_, double mu_)
    : d(d_),
      amplitudes(std::move(amplitudes_)),
      phases(std::move(phases_)),
      bin_spacing_ns(bin_spacing_ns_),
      mu(mu_) {
    check_train(d, amplitudes, phases, bin_spacing_ns, mu);
}

PumpTrain make_uniform_train(int d, double phase_step, double mu, double spacing_ns) {
    if (d < 1) throw std::invalid_argument("make_uniform_train: d >= 1 required");
    std::vector<double> c(d, 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> phi(d);
    for (int j = 0; j < d; ++j) phi[j] = j * phase_step;
    return PumpTrain(d, std::move(c), std::move(phi), spacing_ns, mu);
}

PumpTrain make_envelope_train(int d, double phase_step, double mu, double spacing_ns,
                              double edge_attenuation) {
    if (d < 1) throw std::invalid_argument("make_envelope_train: d >= 1 required");
    if (!(edge_attenuation > 0.0) || edge_attenuation > 1.0)
        throw std::invalid_argument("make_envelope_train: edge_attenuation must be in (0, 1]");
    std::vector<double> c(d, 1.0);
    c.front() = std::sqrt(edge_attenuation);
    c.back() = std::sqrt(edge_attenuation);
    double sum = 0.0;
    for (double cj : c) sum += cj * cj;
    const double inv = 1.0 / std::sqrt(sum);
    for (double& cj : c) cj *= inv;
    std::vector<double> phi(d);
    for (int j = 0; j < d; ++j) phi[j] = j * phase_step;
    return PumpTrain(d, std::move(c), std::move(phi), spacing_ns, mu);
}

double BiphotonState::norm_squared() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
}

BiphotonState build_spdc_state(const PumpTrain& train) {
    check_train(train.d, train.amplitudes, train.phases, train.bin_spacing_ns, train.mu);
    BiphotonState state;
    state.dim = train.d;
    state.amplitudes.resize(train.d);
    for (int j = 0; j < train.d; ++j)
        state.amplitudes[j] = std::polar(train.amplitudes[j], train.phases[j]);
    if (std::abs(state.norm_squared() - 1.0) > 1e-9)
        throw std::invalid_argument("build_spdc_state: state not normalized");
    return state;
}

void AnalyzerConfig::validate() const {
    if (!(t_s > 0.0) || t_s > 1.0 || !(t_l > 0.0) || t_l > 1.0)
        throw std::invalid_argument("analyzer: arm transmissions must be in (0, 1]");
    if (delay_bins != 1)
        throw std::invalid_argument("analyzer: delay_bins is fixed to 1");
}

double JointOutcomeTable::probability(int arrival_bin, int dt_bins) const {
    for (const auto& e : entries)
        if (e.arrival_bin == arrival_bin && e.dt_bins == dt_bins) return e.probability;
    return 0.0;
}

double JointOutcomeTable::probability_dt0() const {
    double s = 0.0;
    for (const auto& e : entries)
        if (e.dt_bins == 0) s += e.probability;
    return s;
}

JointOutcomeTable apply_analyzer(const BiphotonState& state, const AnalyzerConfig& cfg) {
    cfg.validate();
    if (state.dim < 1) throw std::invalid_argument("apply_analyzer: empty state");
    if (std::abs(state.norm_squared() - 1.0) > 1e-9)
        throw std::invalid_argument("apply_analyzer: state not normalized");

    const int d = state.dim;
    const std::complex<double> long_a = std::polar(cfg.t_l, cfg.delta_a);
    const std::complex<double> long_b = std::polar(cfg.t_l, cfg.delta_b);
    const double ts2 = cfg.t_s * cfg.t_s;

    auto amp = [&](int bin) -> std::complex<double> {
        // bins are 1-based; out of range contributes nothing
        if (bin < 1 || bin > d) return {0.0, 0.0};
        return state.amplitudes[bin - 1];
    };

    JointOutcomeTable table;
    table.entries.reserve(3 * d + 1);

    // dt = 0: both short lands the pair at its source bin, both long at the
    // next one; interior bins receive both contributions coherently.
    for (int k = 1; k <= d + 1; ++k) {
        std::complex<double> a = amp(k) * ts2 + amp(k - 1) * long_a * long_b;
        table.entries.push_back({k, 0, a, std::norm(a)});
    }
    // dt = -1: A short at bin j, B long at bin j+1
    for (int j = 1; j <= d; ++j) {
        std::complex<double> a = amp(j) * cfg.t_s * long_b;
        table.entries.push_back({j, -1, a, std::norm(a)});
    }
    // dt = +1: A long at bin j+1, B short at bin j
    for (int j = 1; j <= d; ++j) {
        std::complex<double> a = amp(j) * long_a * cfg.t_s;
        table.entries.push_back({j + 1, +1, a, std::norm(a)});
    }

    double total = 0.0;
    for (const auto& e : table.entries) total += e.probability;
    table.total_probability = total;
    table.loss_fraction = 1.0 - total;
    return table;
}

double coincidence_rate(const BiphotonState& state, const AnalyzerConfig& cfg) {
    return apply_analyzer(state, cfg).probability_dt0();
}

} // namespace timebin::qstate
