#pragma once

#include <complex>
#include <vector>

namespace timebin::qstate {

// d-pulse pump excitation: amplitudes c_j (sum of squares = 1), phases
// phi_j with phi_1 = 0, pulse spacing in ns and mean pair number per pulse.
struct PumpTrain {
    int d = 1;
    std::vector<double> amplitudes;
    std::vector<double> phases;
    double bin_spacing_ns = 13.0;
    double mu = 0.0;

    PumpTrain() = default;
    PumpTrain(int d_, std::vector<double> amplitudes_, std::vector<double> phases_,
              double bin_spacing_ns_, double mu_);
};

PumpTrain make_uniform_train(int d, double phase_step, double mu, double spacing_ns);

// Uniform train with the first and last pulse intensities scaled by
// edge_attenuation (AOM rise/fall), renormalized.
PumpTrain make_envelope_train(int d, double phase_step, double mu, double spacing_ns,
                              double edge_attenuation);

// Complex amplitude over the time-bin basis |j,j>, j = 1..dim.
struct BiphotonState {
    int dim = 0;
    std::vector<std::complex<double>> amplitudes;

    double norm_squared() const;
};

BiphotonState build_spdc_state(const PumpTrain& train);

// Two-arm analyzer: long-arm phases per photon, amplitude transmissions of
// the short and long arm (shared by both wavelengths), one-bin delay.
struct AnalyzerConfig {
    double delta_a = 0.0;
    double delta_b = 0.0;
    double t_s = 0.5;
    double t_l = 0.5;
    int delay_bins = 1;

    void validate() const;
};

// Single-pair outcomes after the analyzer. Keyed by the arrival bin of
// photon A (1..dim+1) and dt_bins = (t_A - t_B)/spacing in {-1, 0, +1};
// the B arrival bin is arrival_bin - dt_bins. Amplitudes at identical
// (bin, dt=0) keys are summed coherently. loss_fraction = 1 - total; with
// the 1/sqrt(2) reference transmissions it can go negative at constructive
// phases (probability drawn from the unmonitored port).
struct JointOutcomeTable {
    struct Entry {
        int arrival_bin;
        int dt_bins;
        std::complex<double> amplitude;
        double probability;
    };

    std::vector<Entry> entries;
    double total_probability = 0.0;
    double loss_fraction = 1.0;

    double probability(int arrival_bin, int dt_bins) const;
    double probability_dt0() const;
};

JointOutcomeTable apply_analyzer(const BiphotonState& state, const AnalyzerConfig& cfg);

// Total dt=0 probability, all arrival bins included (no postselection of
// the interfering terms). For a uniform-phase-step train with t_s = t_l
// this is K*(1 + (d-1)/d * cos(delta_a + delta_b - phi)).
double coincidence_rate(const BiphotonState& state, const AnalyzerConfig& cfg);

} // namespace timebin::qstate
