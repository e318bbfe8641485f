#pragma once

#include <stdexcept>
#include <vector>

#include "timebin/montecarlo.hpp"

namespace timebin::analysis {

struct FringeScan {
    std::vector<double> theta;
    std::vector<double> counts;
    double accidental_level = 0.0; // flat background under the window
    double exposure = 1.0;         // trains per point
};

FringeScan to_fringe_scan(const montecarlo::ScanResult& scan);

struct FitResult {
    double visibility = 0.0;
    double visibility_err = 0.0;
    double phase_offset = 0.0;
    double mean_level = 0.0;
    double mean_level_err = 0.0;
    double reduced_chisq = 0.0;
};

// Weighted least squares of C(theta) = M * (1 + V cos(theta - theta0)),
// Poisson weights with variance floor max(count, 1). V is reported >= 0;
// the sign is absorbed into theta0.
FitResult fit_fringe(const FringeScan& scan);

struct NetVisibility {
    double value = 0.0;
    double err = 0.0;
};

// V_net = V_raw * M / (M - A); throws when the background A reaches the
// fitted mean level.
NetVisibility net_visibility(const FitResult& fit, double accidental_level);

std::int64_t window_counts(const montecarlo::CoincidenceHistogram& hist, double center_ns,
                           double width_ns, bool* empty_warning = nullptr);

struct estimator_unavailable_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat background under a window of the given width, estimated from the
// off-peak region within one pulse spacing of dt = 0. Slightly biased low
// by the triangular train overlap, O(spacing / span).
double estimate_accidentals_offpeak(const montecarlo::CoincidenceHistogram& hist,
                                    double window_ns);

struct insufficient_statistics_error : std::runtime_error {
    insufficient_statistics_error(const std::string& msg, double min_resolvable_mu_)
        : std::runtime_error(msg), min_resolvable_mu(min_resolvable_mu_) {}
    double min_resolvable_mu;
};

// Side-peak estimate of the mean pair number per pulse. The dt = +-2
// spacing peaks are fed only by photons of independent pairs and scale as
// mu^2, while the (phase-averaged) dt = 0 peak scales as mu; the ratio
// gives mu after the path and bin-overlap geometry below.
//
//   C2/K = (mu d)^2 [ T4 P2 + ts^2 tl^2 (P1 + P3) ]
//   C0/K = (mu d) T4 + (mu d)^2 [ T4 P0 + 2 ts^2 tl^2 P1 ]
//
// with T4 = ts^4 + tl^4 and Pm = sum_j c_j^2 c_{j-m}^2. The dt = 0 input
// must be phase-averaged (or taken at quadrature); detector efficiencies
// cancel in the ratio. Solving the ratio for mu is exact in expectation
// for this event model; validated against origin-tagged runs.
double estimate_mu_sidepeak(const montecarlo::CoincidenceHistogram& hist,
                            const qstate::PumpTrain& train,
                            const qstate::AnalyzerConfig& analyzer, double window_ns);

// counts variant for callers holding windowed counters directly
double estimate_mu_sidepeak_counts(std::int64_t win0, std::int64_t far_minus,
                                   std::int64_t far_plus, std::int64_t n_trains,
                                   const qstate::PumpTrain& train,
                                   const qstate::AnalyzerConfig& analyzer);

struct Fig3Row {
    int d;
    double v_net;
    double v_err;
    double v_eq4;
};

struct Fig3Result {
    std::vector<Fig3Row> rows;
    double v_max = 0.0;
    double v_max_err = 0.0;
};

// Runs a phase scan per dimension with shared imperfection parameters,
// fits each fringe, and fits the dimension law for V_max.
Fig3Result reproduce_fig3(const montecarlo::ExperimentConfig& base, const std::vector<int>& ds,
                          const std::vector<double>& theta_values);

} // namespace timebin::analysis
