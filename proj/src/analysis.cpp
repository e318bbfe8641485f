#include "timebin/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "timebin/noise.hpp"

namespace timebin::analysis {

namespace {

// solve S x = b for symmetric 3x3 S; returns false when singular
bool solve3(const double S[3][3], const double b[3], double x[3], double inv[3][3]) {
    const double det = S[0][0] * (S[1][1] * S[2][2] - S[1][2] * S[2][1]) -
                       S[0][1] * (S[1][0] * S[2][2] - S[1][2] * S[2][0]) +
                       S[0][2] * (S[1][0] * S[2][1] - S[1][1] * S[2][0]);
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(S[i][j]));
    if (std::abs(det) < 1e-12 * scale * scale * scale) return false;

    const double c[3][3] = {
        {S[1][1] * S[2][2] - S[1][2] * S[2][1], S[0][2] * S[2][1] - S[0][1] * S[2][2],
         S[0][1] * S[1][2] - S[0][2] * S[1][1]},
        {S[1][2] * S[2][0] - S[1][0] * S[2][2], S[0][0] * S[2][2] - S[0][2] * S[2][0],
         S[0][2] * S[1][0] - S[0][0] * S[1][2]},
        {S[1][0] * S[2][1] - S[1][1] * S[2][0], S[0][1] * S[2][0] - S[0][0] * S[2][1],
         S[0][0] * S[1][1] - S[0][1] * S[1][0]}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) inv[i][j] = c[i][j] / det;
    for (int i = 0; i < 3; ++i)
        x[i] = inv[i][0] * b[0] + inv[i][1] * b[1] + inv[i][2] * b[2];
    return true;
}

} // namespace

FringeScan to_fringe_scan(const montecarlo::ScanResult& scan) {
    FringeScan f;
    f.theta = scan.theta;
    f.counts.assign(scan.counts.begin(), scan.counts.end());
    f.exposure = static_cast<double>(scan.exposure);
    return f;
}

FitResult fit_fringe(const FringeScan& scan) {
    const std::size_t n = scan.theta.size();
    if (n != scan.counts.size())
        throw std::invalid_argument("fit_fringe: theta/counts length mismatch");
    if (n < 3) throw std::invalid_argument("fit_fringe: at least 3 phase points required");
    if (!(scan.exposure > 0.0)) throw std::invalid_argument("fit_fringe: exposure must be > 0");

    // linear model C = M + a cos(theta) + b sin(theta)
    double S[3][3] = {};
    double rhs[3] = {};
    for (std::size_t i = 0; i < n; ++i) {
        const double x[3] = {1.0, std::cos(scan.theta[i]), std::sin(scan.theta[i])};
        const double w = 1.0 / std::max(scan.counts[i], 1.0);
        for (int r = 0; r < 3; ++r) {
            rhs[r] += w * x[r] * scan.counts[i];
            for (int c = 0; c < 3; ++c) S[r][c] += w * x[r] * x[c];
        }
    }

    double beta[3];
    double cov[3][3];
    if (!solve3(S, rhs, beta, cov))
        throw std::runtime_error("fit_fringe: singular design (degenerate phase values)");

    const double m = beta[0], a = beta[1], b = beta[2];
    if (m <= 0.0) throw std::runtime_error("fit_fringe: non-positive fitted mean level");

    const double r = std::hypot(a, b);
    FitResult fit;
    fit.mean_level = m;
    fit.mean_level_err = std::sqrt(std::max(0.0, cov[0][0]));
    fit.visibility = r / m;
    fit.phase_offset = (r > 0.0) ? std::atan2(b, a) : 0.0;

    // delta method on V = sqrt(a^2 + b^2) / M
    const double ra = (r > 0.0) ? a / r : 1.0;
    const double rb = (r > 0.0) ? b / r : 0.0;
    const double g[3] = {-fit.visibility / m, ra / m, rb / m};
    double var = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) var += g[i] * cov[i][j] * g[j];
    fit.visibility_err = std::sqrt(std::max(0.0, var));

    double chisq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double model = m + a * std::cos(scan.theta[i]) + b * std::sin(scan.theta[i]);
        const double w = 1.0 / std::max(scan.counts[i], 1.0);
        const double res = scan.counts[i] - model;
        chisq += w * res * res;
    }
    fit.reduced_chisq = (n > 3) ? chisq / static_cast<double>(n - 3) : 0.0;
    return fit;
}

NetVisibility net_visibility(const FitResult& fit, double accidental_level) {
    if (accidental_level < 0.0)
        throw std::invalid_argument("net_visibility: accidental level must be >= 0");
    if (accidental_level >= fit.mean_level)
        throw std::invalid_argument("net_visibility: background exceeds fitted mean level");
    const double scale = fit.mean_level / (fit.mean_level - accidental_level);
    return {fit.visibility * scale, fit.visibility_err * scale};
}

std::int64_t window_counts(const montecarlo::CoincidenceHistogram& hist, double center_ns,
                           double width_ns, bool* empty_warning) {
    if (!(width_ns > 0.0)) throw std::invalid_argument("window_counts: width must be > 0");
    if (empty_warning) *empty_warning = hist.counts.empty();
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
        if (std::abs(hist.bin_center(i) - center_ns) <= 0.5 * width_ns) sum += hist.counts[i];
    return sum;
}

double estimate_accidentals_offpeak(const montecarlo::CoincidenceHistogram& hist,
                                    double window_ns) {
    if (!(window_ns > 0.0))
        throw std::invalid_argument("estimate_accidentals: window must be > 0");
    const double spacing = hist.bin_spacing_ns;
    double offpeak = 0.0;
    double offpeak_ns = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const double t = hist.bin_center(i);
        if (std::abs(t) > spacing) continue; // stay close to dt = 0
        const double to_peak = std::abs(t - std::round(t / spacing) * spacing);
        if (to_peak <= 1.5) continue; // exclude the peaks themselves
        offpeak += static_cast<double>(hist.counts[i]);
        offpeak_ns += hist.bin_width_ns;
    }
    if (offpeak_ns <= 0.0)
        throw estimator_unavailable_error("estimate_accidentals: no off-peak bins in histogram");
    return offpeak / offpeak_ns * window_ns;
}

double estimate_mu_sidepeak_counts(std::int64_t win0, std::int64_t far_minus,
                                   std::int64_t far_plus, std::int64_t n_trains,
                                   const qstate::PumpTrain& train,
                                   const qstate::AnalyzerConfig& analyzer) {
    if (train.d < 2)
        throw std::invalid_argument("estimate_mu_sidepeak: d >= 2 required");
    const int d = train.d;
    const double ts2 = analyzer.t_s * analyzer.t_s;
    const double tl2 = analyzer.t_l * analyzer.t_l;
    const double t4 = ts2 * ts2 + tl2 * tl2;

    auto overlap = [&](int m) {
        double s = 0.0;
        for (int j = m; j < d; ++j) {
            const double cj = train.amplitudes[j] * train.amplitudes[j];
            const double ck = train.amplitudes[j - m] * train.amplitudes[j - m];
            s += cj * ck;
        }
        return s;
    };
    const double p0 = overlap(0), p1 = overlap(1), p2 = overlap(2), p3 = overlap(3);
    const double g2 = t4 * p2 + ts2 * tl2 * (p1 + p3);
    const double q = t4 * p0 + 2.0 * ts2 * tl2 * p1;

    const double c2 = 0.5 * (static_cast<double>(far_minus) + static_cast<double>(far_plus));
    constexpr double kMinFarCounts = 12.5; // 25 counts over both far peaks
    if (c2 < kMinFarCounts || win0 <= 0) {
        // smallest mu whose expected far-peak yield reaches the floor
        const double min_mu =
            (n_trains > 0 && g2 > 0.0)
                ? std::sqrt(kMinFarCounts / (static_cast<double>(n_trains) * d * d * g2))
                : 0.0;
        throw insufficient_statistics_error(
            "estimate_mu_sidepeak: side peaks below statistical floor", min_mu);
    }

    const double rho = c2 / static_cast<double>(win0);
    const double denom = g2 - rho * q;
    if (denom <= 0.0)
        throw std::runtime_error("estimate_mu_sidepeak: ratio outside model range");
    return rho * t4 / (d * denom);
}

double estimate_mu_sidepeak(const montecarlo::CoincidenceHistogram& hist,
                            const qstate::PumpTrain& train,
                            const qstate::AnalyzerConfig& analyzer, double window_ns) {
    const double spacing = hist.bin_spacing_ns;
    const std::int64_t win0 = window_counts(hist, 0.0, window_ns);
    const std::int64_t far_m = window_counts(hist, -2.0 * spacing, window_ns);
    const std::int64_t far_p = window_counts(hist, +2.0 * spacing, window_ns);
    return estimate_mu_sidepeak_counts(win0, far_m, far_p, hist.total_trains, train, analyzer);
}

Fig3Result reproduce_fig3(const montecarlo::ExperimentConfig& base, const std::vector<int>& ds,
                          const std::vector<double>& theta_values) {
    Fig3Result result;
    const double v_static =
        noise::visibility_misalignment(base.analyzer.t_s, base.analyzer.t_l) *
        noise::visibility_phase_noise(1.0, base.phase_noise_sigma, 1);

    double num = 0.0, den = 0.0;
    for (int d : ds) {
        const double v_imperfections =
            v_static * noise::visibility_multipair(base.train.mu, d, 1.0);
        montecarlo::ExperimentConfig cfg = base;
        cfg.train = qstate::make_uniform_train(d, 0.0, base.train.mu, base.train.bin_spacing_ns);
        const auto scan = scan_phase(cfg, theta_values);
        FringeScan fringe = to_fringe_scan(scan);
        const auto fit = fit_fringe(fringe);
        const auto net = net_visibility(fit, fringe.accidental_level);
        const double x = noise::analytic_visibility_d(d, 1.0);
        result.rows.push_back({d, net.value, net.err, x * v_imperfections});
        if (net.err > 0.0) {
            const double w = 1.0 / (net.err * net.err);
            num += w * x * net.value;
            den += w * x * x;
        }
    }
    if (den > 0.0) {
        result.v_max = num / den;
        result.v_max_err = 1.0 / std::sqrt(den);
    }
    return result;
}

} // namespace timebin::analysis
