#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "timebin/qstate.hpp"
#include "timebin/rng.hpp"

namespace timebin::montecarlo {

struct DetectorConfig {
    double efficiency = 1.0;
    // counts per ns when free-running; dark probability per ns inside a
    // gate when gated
    double dark_rate = 0.0;
    bool gated = false;
    double gate_width_ns = 1.0;

    void validate() const;
};

struct ExperimentConfig {
    qstate::PumpTrain train;
    qstate::AnalyzerConfig analyzer;
    double phase_noise_sigma = 0.0; // radians per bin step
    DetectorConfig detector_a;      // 1310 nm side, free-running
    DetectorConfig detector_b;      // 1550 nm side, may be gated
    std::int64_t n_trains = 1;
    double coincidence_window_ns = 1.0;
    std::uint64_t seed = 0;
    int workers = 0; // 0 = hardware concurrency; never affects results

    void validate() const;
};

enum class CoincidenceOrigin { self_pair, cross_pair, dark };

const char* to_string(CoincidenceOrigin origin);

// One recorded coincidence between an A click and a B click.
struct DetectionRecord {
    std::int64_t train_index;
    double t_a_ns;
    double t_b_ns;
    CoincidenceOrigin origin;
};

struct CoincidenceHistogram {
    double bin_width_ns = 1.0;
    double bin_spacing_ns = 13.0; // pump pulse spacing, locates the peaks
    double t_min_ns = 0.0;        // center of the first bin
    std::vector<std::int64_t> counts;
    std::int64_t total_trains = 0;

    double bin_center(std::size_t i) const { return t_min_ns + i * bin_width_ns; }
    std::int64_t total_counts() const;
};

// Windowed counts of interest, split by origin where it matters.
struct RunResult {
    CoincidenceHistogram histogram;
    CoincidenceHistogram histogram_self;
    CoincidenceHistogram histogram_cross;
    CoincidenceHistogram histogram_dark;

    std::int64_t win0 = 0; // |dt| <= window/2
    std::int64_t win0_self = 0;
    std::int64_t win0_cross = 0;
    std::int64_t win0_dark = 0;
    std::int64_t win_side_minus = 0; // around dt = -spacing
    std::int64_t win_side_plus = 0;
    std::int64_t win_far_minus = 0; // around dt = -2*spacing, any origin
    std::int64_t win_far_plus = 0;

    std::int64_t pairs_generated = 0;
    std::vector<DetectionRecord> records; // only when requested
};

// Per-pulse pair numbers, Poisson with mean mu*d*c_j^2 (mean mu per pulse
// for a uniform train). Returned as (bin j, count) for occupied bins.
std::vector<std::pair<int, int>> sample_pairs(const qstate::PumpTrain& train, RngStream& rng);

// Categorical sampler for the fate of one pair behind the analyzer.
// Joint outcomes carry the coherent interference of apply_analyzer;
// single-click outcomes use the incoherent marginals (a lost partner
// reveals the creation bin to the environment).
class PairSampler {
public:
    PairSampler() = default;
    PairSampler(const qstate::BiphotonState& state, const qstate::AnalyzerConfig& cfg);

    void rebuild(const qstate::BiphotonState& state, const qstate::AnalyzerConfig& cfg);

    struct Outcome {
        bool a_detected = false;
        bool b_detected = false;
        int bin_a = 0; // arrival bins, 1-based, valid when detected
        int bin_b = 0;
    };

    Outcome sample(RngStream& rng) const;

private:
    struct Category {
        double cum;
        std::int8_t kind; // 0 joint, 1 a only, 2 b only
        std::int16_t bin_a;
        std::int16_t bin_b;
    };
    std::vector<Category> cats_;
    double p_any_ = 0.0; // total probability of at least one click
};

// Propagates one pair created within the coherent superposition through the
// analyzer, with the per-train accumulated phase walk already applied to
// the state used to build `sampler`. Arrival times in ns, or nullopt per
// photon when it is lost or exits the unmonitored port.
struct PairArrival {
    std::optional<double> t_a_ns;
    std::optional<double> t_b_ns;
};

PairArrival propagate_single_pair(const PairSampler& sampler, double bin_spacing_ns,
                                  RngStream& rng);

// Full deterministic run: Poissonian pair creation, coherent per-pair
// propagation, cross-pair accidentals, detector efficiency and dark counts,
// coincidence histogramming. Bit-identical output for a given cfg + seed
// regardless of worker count.
RunResult run_experiment(const ExperimentConfig& cfg, bool keep_records = false,
                         std::uint64_t phase_index = 0, double histogram_bin_ns = 1.0);

// Phase scan: point i targets theta_i = delta_a + delta_b - phi via the
// long-arm phase of photon A, with an independent substream per point.
struct ScanResult {
    std::vector<double> theta;
    std::vector<std::int64_t> counts; // windowed dt=0 coincidences
    std::vector<std::int64_t> side_minus;
    std::vector<std::int64_t> side_plus;
    std::vector<std::int64_t> counts_dark;
    std::int64_t exposure = 0; // trains per point
};

ScanResult scan_phase(const ExperimentConfig& cfg, const std::vector<double>& theta_values);

// Monte Carlo estimate of |<exp(i (phi_{j+m} - phi_j))>| for a Gaussian
// per-step phase walk; oracle for the exp(-m eps^2 / 2) coherence law.
double phase_walk_coherence(double delta_eps, int m, std::int64_t n_samples,
                            std::uint64_t seed);

} // namespace timebin::montecarlo
