#include "timebin/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace timebin::montecarlo {

namespace {

constexpr double kCombHalfWidthNs = 0.5; // 1-ns t0 comb around each pulse

struct Click {
    double t_ns;
    int pair_id; // -1 for dark counts
};

double uniform_phase_step(const qstate::PumpTrain& train) {
    return train.d >= 2 ? train.phases[1] - train.phases[0] : 0.0;
}

} // namespace

void DetectorConfig::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
        throw std::invalid_argument("detector: efficiency must be in [0, 1]");
    if (dark_rate < 0.0) throw std::invalid_argument("detector: dark rate must be >= 0");
    if (!(gate_width_ns > 0.0))
        throw std::invalid_argument("detector: gate width must be > 0");
}

void ExperimentConfig::validate() const {
    analyzer.validate();
    detector_a.validate();
    detector_b.validate();
    if (n_trains < 1) throw std::invalid_argument("experiment: n_trains >= 1 required");
    if (!(coincidence_window_ns > 0.0) ||
        coincidence_window_ns > 0.5 * train.bin_spacing_ns)
        throw std::invalid_argument(
            "experiment: coincidence window must be in (0, bin_spacing/2]");
    if (phase_noise_sigma < 0.0)
        throw std::invalid_argument("experiment: phase_noise_sigma >= 0 required");
    // event probabilities must stay proper; each photon's two monitored
    // paths can carry at most half the input (double pass of the splitter)
    if (analyzer.t_s * analyzer.t_s + analyzer.t_l * analyzer.t_l > 0.5 + 1e-12)
        throw std::invalid_argument(
            "experiment: t_s^2 + t_l^2 must be <= 1/2 for event sampling");
    if (static_cast<double>(n_trains) * train.d > 9e15)
        throw std::invalid_argument("experiment: n_trains * d too large");
}

const char* to_string(CoincidenceOrigin origin) {
    switch (origin) {
        case CoincidenceOrigin::self_pair: return "self";
        case CoincidenceOrigin::cross_pair: return "cross";
        case CoincidenceOrigin::dark: return "dark";
    }
    return "?";
}

std::int64_t CoincidenceHistogram::total_counts() const {
    std::int64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

std::vector<std::pair<int, int>> sample_pairs(const qstate::PumpTrain& train, RngStream& rng) {
    // total first, then bins by intensity weight; same joint law as
    // independent per-pulse Poissons with mean mu*d*c_j^2
    const double mu_total = train.mu * train.d;
    const int n = rng.poisson(mu_total);
    std::vector<std::pair<int, int>> out;
    if (n == 0) return out;
    std::vector<int> per_bin(train.d, 0);
    for (int p = 0; p < n; ++p) {
        double u = rng.uniform();
        double cum = 0.0;
        int j = train.d - 1;
        for (int k = 0; k < train.d; ++k) {
            cum += train.amplitudes[k] * train.amplitudes[k];
            if (u < cum) {
                j = k;
                break;
            }
        }
        ++per_bin[j];
    }
    for (int j = 0; j < train.d; ++j)
        if (per_bin[j] > 0) out.emplace_back(j + 1, per_bin[j]);
    return out;
}

PairSampler::PairSampler(const qstate::BiphotonState& state, const qstate::AnalyzerConfig& cfg) {
    rebuild(state, cfg);
}

void PairSampler::rebuild(const qstate::BiphotonState& state, const qstate::AnalyzerConfig& cfg) {
    const int d = state.dim;
    const double ts2 = cfg.t_s * cfg.t_s;
    const double tl2 = cfg.t_l * cfg.t_l;

    auto prob_bin = [&](int bin) {
        return (bin >= 1 && bin <= d) ? std::norm(state.amplitudes[bin - 1]) : 0.0;
    };

    const auto table = qstate::apply_analyzer(state, cfg);

    // per-photon marginals are incoherent: the creation bin is revealed
    // whenever the partner is not jointly detected
    std::vector<double> row_a(d + 2, 0.0), row_b(d + 2, 0.0);
    cats_.clear();
    cats_.reserve(5 * d + 5);
    double cum = 0.0;
    for (const auto& e : table.entries) {
        if (e.probability <= 0.0) continue;
        const int bin_b = e.arrival_bin - e.dt_bins;
        row_a[e.arrival_bin] += e.probability;
        row_b[bin_b] += e.probability;
        cum += e.probability;
        cats_.push_back({cum, 0, static_cast<std::int16_t>(e.arrival_bin),
                         static_cast<std::int16_t>(bin_b)});
    }
    for (int k = 1; k <= d + 1; ++k) {
        const double marginal = prob_bin(k) * ts2 + prob_bin(k - 1) * tl2;
        const double a_only = std::max(0.0, marginal - row_a[k]);
        if (a_only > 0.0) {
            cum += a_only;
            cats_.push_back({cum, 1, static_cast<std::int16_t>(k), 0});
        }
    }
    for (int k = 1; k <= d + 1; ++k) {
        const double marginal = prob_bin(k) * ts2 + prob_bin(k - 1) * tl2;
        const double b_only = std::max(0.0, marginal - row_b[k]);
        if (b_only > 0.0) {
            cum += b_only;
            cats_.push_back({cum, 2, 0, static_cast<std::int16_t>(k)});
        }
    }
    p_any_ = cum;
    if (p_any_ > 1.0 + 1e-9)
        throw std::logic_error("pair sampler: click probability exceeds 1");
}

PairSampler::Outcome PairSampler::sample(RngStream& rng) const {
    Outcome out;
    const double u = rng.uniform();
    if (u >= p_any_) return out; // neither photon reaches a detector
    auto it = std::lower_bound(cats_.begin(), cats_.end(), u,
                               [](const Category& c, double v) { return c.cum <= v; });
    const Category& c = *it;
    if (c.kind == 0 || c.kind == 1) {
        out.a_detected = true;
        out.bin_a = c.bin_a;
    }
    if (c.kind == 0 || c.kind == 2) {
        out.b_detected = true;
        out.bin_b = c.bin_b;
    }
    return out;
}

PairArrival propagate_single_pair(const PairSampler& sampler, double bin_spacing_ns,
                                  RngStream& rng) {
    const auto out = sampler.sample(rng);
    PairArrival arrival;
    if (out.a_detected) arrival.t_a_ns = (out.bin_a - 1) * bin_spacing_ns;
    if (out.b_detected) arrival.t_b_ns = (out.bin_b - 1) * bin_spacing_ns;
    return arrival;
}

namespace {

struct Accum {
    std::vector<std::int64_t> hist, hist_self, hist_cross, hist_dark;
    std::int64_t win0 = 0, win0_self = 0, win0_cross = 0, win0_dark = 0;
    std::int64_t side_m = 0, side_p = 0, far_m = 0, far_p = 0;
    std::int64_t pairs = 0;
    std::vector<DetectionRecord> records;

    void merge(const Accum& o) {
        for (std::size_t i = 0; i < hist.size(); ++i) {
            hist[i] += o.hist[i];
            hist_self[i] += o.hist_self[i];
            hist_cross[i] += o.hist_cross[i];
            hist_dark[i] += o.hist_dark[i];
        }
        win0 += o.win0;
        win0_self += o.win0_self;
        win0_cross += o.win0_cross;
        win0_dark += o.win0_dark;
        side_m += o.side_m;
        side_p += o.side_p;
        far_m += o.far_m;
        far_p += o.far_p;
        pairs += o.pairs;
        records.insert(records.end(), o.records.begin(), o.records.end());
    }
};

struct Worker {
    // immutable run parameters
    const ExperimentConfig* cfg;
    const PairSampler* shared_sampler;
    std::uint64_t phase_index;
    bool keep_records;
    double spacing, window_half, span_start, span_len;
    double mu_total, exp_neg_mu;
    double dark_mean_a, exp_neg_dark_a;
    double dark_mean_b_free, exp_neg_dark_b_free;
    double bin_width;
    double t_min;
    std::size_t n_bins;

    // per-worker scratch
    Accum acc;
    std::vector<Click> clicks_a, clicks_b;
    qstate::BiphotonState walked_state;
    std::vector<double> walk;
    PairSampler local_sampler;

    void init_scratch() {
        acc.hist.assign(n_bins, 0);
        acc.hist_self.assign(n_bins, 0);
        acc.hist_cross.assign(n_bins, 0);
        acc.hist_dark.assign(n_bins, 0);
        walked_state.dim = cfg->train.d;
        walked_state.amplitudes.resize(cfg->train.d);
        walk.resize(cfg->train.d);
    }

    void add_hist(std::vector<std::int64_t>& h, double dt) {
        const double x = (dt - t_min) / bin_width;
        if (x < -0.5) return;
        const auto idx = static_cast<std::size_t>(std::llround(x));
        if (idx < n_bins) ++h[idx];
    }

    void run_train(std::int64_t train_index) {
        RngStream rng(cfg->seed, phase_index, static_cast<std::uint64_t>(train_index));
        const int n_pairs = rng.poisson(mu_total, exp_neg_mu);
        const bool darks = dark_mean_a > 0.0 || cfg->detector_b.dark_rate > 0.0;
        if (n_pairs == 0 && !darks) return;

        clicks_a.clear();
        clicks_b.clear();
        acc.pairs += n_pairs;

        if (n_pairs > 0) {
            const PairSampler* sampler = shared_sampler;
            if (cfg->phase_noise_sigma > 0.0) {
                // fresh Gaussian phase walk for this train
                walk[0] = 0.0;
                for (int j = 1; j < cfg->train.d; ++j)
                    walk[j] = walk[j - 1] + cfg->phase_noise_sigma * rng.normal();
                for (int j = 0; j < cfg->train.d; ++j)
                    walked_state.amplitudes[j] =
                        std::polar(cfg->train.amplitudes[j], cfg->train.phases[j] + walk[j]);
                local_sampler.rebuild(walked_state, cfg->analyzer);
                sampler = &local_sampler;
            }
            for (int p = 0; p < n_pairs; ++p) {
                const auto out = sampler->sample(rng);
                if (out.a_detected && rng.uniform() < cfg->detector_a.efficiency)
                    clicks_a.push_back({(out.bin_a - 1) * spacing, p});
                if (out.b_detected && rng.uniform() < cfg->detector_b.efficiency)
                    clicks_b.push_back({(out.bin_b - 1) * spacing, p});
            }
        }

        // detector A free-running dark counts over the train span
        if (dark_mean_a > 0.0) {
            const int n_dark = rng.poisson(dark_mean_a, exp_neg_dark_a);
            for (int k = 0; k < n_dark; ++k)
                clicks_a.push_back({span_start + rng.uniform() * span_len, -1});
        }

        if (cfg->detector_b.gated) {
            // gates open on A clicks that coincide with the t0 comb
            bool triggered = false;
            const double p_gate_dark =
                cfg->detector_b.dark_rate * cfg->detector_b.gate_width_ns;
            std::size_t n_a = clicks_a.size();
            for (std::size_t i = 0; i < n_a; ++i) {
                const double t = clicks_a[i].t_ns;
                const double off = t - std::round(t / spacing) * spacing;
                if (std::abs(off) > kCombHalfWidthNs) continue;
                triggered = true;
                if (p_gate_dark > 0.0 && rng.uniform() < p_gate_dark)
                    clicks_b.push_back(
                        {t + (rng.uniform() - 0.5) * cfg->detector_b.gate_width_ns, -1});
            }
            if (!triggered) clicks_b.clear();
        } else if (cfg->detector_b.dark_rate > 0.0) {
            const int n_dark = rng.poisson(dark_mean_b_free, exp_neg_dark_b_free);
            for (int k = 0; k < n_dark; ++k)
                clicks_b.push_back({span_start + rng.uniform() * span_len, -1});
        }

        if (clicks_a.empty() || clicks_b.empty()) return;

        for (const Click& a : clicks_a) {
            for (const Click& b : clicks_b) {
                const double dt = a.t_ns - b.t_ns;
                CoincidenceOrigin origin;
                if (a.pair_id < 0 || b.pair_id < 0)
                    origin = CoincidenceOrigin::dark;
                else if (a.pair_id == b.pair_id)
                    origin = CoincidenceOrigin::self_pair;
                else
                    origin = CoincidenceOrigin::cross_pair;

                add_hist(acc.hist, dt);
                switch (origin) {
                    case CoincidenceOrigin::self_pair: add_hist(acc.hist_self, dt); break;
                    case CoincidenceOrigin::cross_pair: add_hist(acc.hist_cross, dt); break;
                    case CoincidenceOrigin::dark: add_hist(acc.hist_dark, dt); break;
                }

                if (std::abs(dt) <= window_half) {
                    ++acc.win0;
                    switch (origin) {
                        case CoincidenceOrigin::self_pair: ++acc.win0_self; break;
                        case CoincidenceOrigin::cross_pair: ++acc.win0_cross; break;
                        case CoincidenceOrigin::dark: ++acc.win0_dark; break;
                    }
                } else if (std::abs(dt + spacing) <= window_half) {
                    ++acc.side_m;
                } else if (std::abs(dt - spacing) <= window_half) {
                    ++acc.side_p;
                } else if (std::abs(dt + 2.0 * spacing) <= window_half) {
                    ++acc.far_m;
                } else if (std::abs(dt - 2.0 * spacing) <= window_half) {
                    ++acc.far_p;
                }

                if (keep_records)
                    acc.records.push_back({train_index, a.t_ns, b.t_ns, origin});
            }
        }
    }
};

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, bool keep_records,
                         std::uint64_t phase_index, double histogram_bin_ns) {
    cfg.validate();
    if (!(histogram_bin_ns > 0.0))
        throw std::invalid_argument("run_experiment: histogram bin width must be > 0");

    const int d = cfg.train.d;
    const double spacing = cfg.train.bin_spacing_ns;
    const auto state = qstate::build_spdc_state(cfg.train);
    PairSampler shared(state, cfg.analyzer);

    const double half_span = (d + 2) * spacing;
    const auto half_bins = static_cast<std::size_t>(std::floor(half_span / histogram_bin_ns));
    const std::size_t n_bins = 2 * half_bins + 1;

    Worker proto;
    proto.cfg = &cfg;
    proto.shared_sampler = &shared;
    proto.phase_index = phase_index;
    proto.keep_records = keep_records;
    proto.spacing = spacing;
    proto.window_half = 0.5 * cfg.coincidence_window_ns;
    proto.span_start = -0.5 * spacing;
    proto.span_len = (d + 1) * spacing;
    proto.mu_total = cfg.train.mu * d;
    proto.exp_neg_mu = std::exp(-proto.mu_total);
    proto.dark_mean_a = cfg.detector_a.dark_rate * proto.span_len;
    proto.exp_neg_dark_a = std::exp(-proto.dark_mean_a);
    proto.dark_mean_b_free = cfg.detector_b.gated
                                 ? 0.0
                                 : cfg.detector_b.dark_rate * proto.span_len;
    proto.exp_neg_dark_b_free = std::exp(-proto.dark_mean_b_free);
    proto.bin_width = histogram_bin_ns;
    proto.t_min = -static_cast<double>(half_bins) * histogram_bin_ns;
    proto.n_bins = n_bins;

    int workers = cfg.workers;
    if (workers <= 0)
        workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = static_cast<int>(
        std::min<std::int64_t>(workers, std::max<std::int64_t>(1, cfg.n_trains / 1024)));

    std::vector<Worker> ws(static_cast<std::size_t>(workers), proto);
    for (auto& w : ws) w.init_scratch();

    if (workers == 1) {
        for (std::int64_t t = 0; t < cfg.n_trains; ++t) ws[0].run_train(t);
    } else {
        const std::int64_t chunk = (cfg.n_trains + workers - 1) / workers;
        std::vector<std::thread> threads;
        threads.reserve(ws.size());
        for (int w = 0; w < workers; ++w) {
            const std::int64_t begin = w * chunk;
            const std::int64_t end = std::min<std::int64_t>(cfg.n_trains, begin + chunk);
            threads.emplace_back([&ws, w, begin, end] {
                for (std::int64_t t = begin; t < end; ++t) ws[static_cast<std::size_t>(w)].run_train(t);
            });
        }
        for (auto& th : threads) th.join();
        for (std::size_t w = 1; w < ws.size(); ++w) ws[0].acc.merge(ws[w].acc);
    }

    Accum& acc = ws[0].acc;
    RunResult res;
    auto make_hist = [&](std::vector<std::int64_t>&& counts) {
        CoincidenceHistogram h;
        h.bin_width_ns = histogram_bin_ns;
        h.bin_spacing_ns = spacing;
        h.t_min_ns = proto.t_min;
        h.counts = std::move(counts);
        h.total_trains = cfg.n_trains;
        return h;
    };
    res.histogram = make_hist(std::move(acc.hist));
    res.histogram_self = make_hist(std::move(acc.hist_self));
    res.histogram_cross = make_hist(std::move(acc.hist_cross));
    res.histogram_dark = make_hist(std::move(acc.hist_dark));
    res.win0 = acc.win0;
    res.win0_self = acc.win0_self;
    res.win0_cross = acc.win0_cross;
    res.win0_dark = acc.win0_dark;
    res.win_side_minus = acc.side_m;
    res.win_side_plus = acc.side_p;
    res.win_far_minus = acc.far_m;
    res.win_far_plus = acc.far_p;
    res.pairs_generated = acc.pairs;
    res.records = std::move(acc.records);
    return res;
}

ScanResult scan_phase(const ExperimentConfig& cfg, const std::vector<double>& theta_values) {
    cfg.validate();
    if (theta_values.empty())
        throw std::invalid_argument("scan_phase: at least one phase value required");

    const double phi = uniform_phase_step(cfg.train);
    ScanResult scan;
    scan.exposure = cfg.n_trains;
    scan.theta = theta_values;
    for (std::size_t i = 0; i < theta_values.size(); ++i) {
        ExperimentConfig point = cfg;
        point.analyzer.delta_a = theta_values[i] - cfg.analyzer.delta_b + phi;
        const auto res = run_experiment(point, false, static_cast<std::uint64_t>(i));
        scan.counts.push_back(res.win0);
        scan.side_minus.push_back(res.win_side_minus);
        scan.side_plus.push_back(res.win_side_plus);
        scan.counts_dark.push_back(res.win0_dark);
    }
    return scan;
}

double phase_walk_coherence(double delta_eps, int m, std::int64_t n_samples,
                            std::uint64_t seed) {
    if (delta_eps < 0.0 || m < 1 || n_samples < 1)
        throw std::invalid_argument("phase_walk_coherence: invalid arguments");
    RngStream rng(seed, 0, 0);
    double re = 0.0, im = 0.0;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        double phase = 0.0;
        for (int k = 0; k < m; ++k) phase += delta_eps * rng.normal();
        re += std::cos(phase);
        im += std::sin(phase);
    }
    re /= static_cast<double>(n_samples);
    im /= static_cast<double>(n_samples);
    return std::hypot(re, im);
}

} // namespace timebin::montecarlo
