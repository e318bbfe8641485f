#include <doctest.h>

#include <cmath>

#include "timebin/qstate.hpp"

using namespace timebin::qstate;

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;

AnalyzerConfig balanced_half() {
    AnalyzerConfig cfg;
    cfg.t_s = kInvSqrt2;
    cfg.t_l = kInvSqrt2;
    return cfg;
}
} // namespace

TEST_CASE("uniform train normalization and phase ramp") {
    const auto train = make_uniform_train(5, 0.3, 0.1, 13.0);
    CHECK(train.d == 5);
    double sum = 0.0;
    for (double c : train.amplitudes) {
        CHECK(c == doctest::Approx(1.0 / std::sqrt(5.0)));
        sum += c * c;
    }
    CHECK(sum == doctest::Approx(1.0));
    for (int j = 0; j < 5; ++j) CHECK(train.phases[j] == doctest::Approx(0.3 * j));
}

TEST_CASE("envelope train attenuates the edge pulses") {
    const auto train = make_envelope_train(3, 0.0, 0.1, 13.0, 0.81);
    CHECK(train.amplitudes[0] == doctest::Approx(0.556023).epsilon(1e-5));
    CHECK(train.amplitudes[1] == doctest::Approx(0.617802).epsilon(1e-5));
    CHECK(train.amplitudes[2] == doctest::Approx(0.556023).epsilon(1e-5));
    double sum = 0.0;
    for (double c : train.amplitudes) sum += c * c;
    CHECK(sum == doctest::Approx(1.0));
    // intensity ratio of edge to center equals the attenuation
    const double ratio = train.amplitudes[0] * train.amplitudes[0] /
                         (train.amplitudes[1] * train.amplitudes[1]);
    CHECK(ratio == doctest::Approx(0.81));
}

TEST_CASE("train constructor rejects bad input") {
    CHECK_THROWS_AS(make_uniform_train(0, 0.0, 0.1, 13.0), std::invalid_argument);
    CHECK_THROWS_AS(make_uniform_train(3, 0.0, -0.1, 13.0), std::invalid_argument);
    CHECK_THROWS_AS(make_uniform_train(3, 0.0, 0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(PumpTrain(2, {1.0, 1.0}, {0.0, 0.0}, 13.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(PumpTrain(2, {kInvSqrt2, kInvSqrt2}, {0.1, 0.0}, 13.0, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_envelope_train(3, 0.0, 0.1, 13.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_envelope_train(3, 0.0, 0.1, 13.0, 1.5), std::invalid_argument);
}

TEST_CASE("spdc state carries amplitudes and phases") {
    const auto train = make_uniform_train(4, 0.5, 0.1, 13.0);
    const auto state = build_spdc_state(train);
    CHECK(state.dim == 4);
    CHECK(state.norm_squared() == doctest::Approx(1.0));
    for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(state.amplitudes[j]) == doctest::Approx(0.5));
        CHECK(std::arg(state.amplitudes[j]) == doctest::Approx(0.5 * j));
    }
}

TEST_CASE("analyzer outcome table, d = 2, balanced reference arms") {
    const auto state = build_spdc_state(make_uniform_train(2, 0.0, 0.0, 13.0));
    const auto table = apply_analyzer(state, balanced_half());

    // dt = 0 probabilities in ratio 1:4:1, the interior bin interferes
    CHECK(table.probability(1, 0) == doctest::Approx(0.125));
    CHECK(table.probability(2, 0) == doctest::Approx(0.5));
    CHECK(table.probability(3, 0) == doctest::Approx(0.125));
    CHECK(table.probability_dt0() == doctest::Approx(0.75));

    // four non-interfering side outcomes of 1/8 each
    CHECK(table.probability(1, -1) == doctest::Approx(0.125));
    CHECK(table.probability(2, -1) == doctest::Approx(0.125));
    CHECK(table.probability(2, +1) == doctest::Approx(0.125));
    CHECK(table.probability(3, +1) == doctest::Approx(0.125));

    // with the 1/sqrt(2) reference arms the constructive bins borrow from
    // the unmonitored port: declared loss goes negative
    CHECK(table.total_probability == doctest::Approx(1.25));
    CHECK(table.loss_fraction == doctest::Approx(-0.25));
}

TEST_CASE("analyzer outcome table, d = 1") {
    const auto state = build_spdc_state(make_uniform_train(1, 0.0, 0.0, 13.0));
    const auto table = apply_analyzer(state, balanced_half());
    CHECK(table.probability(1, 0) == doctest::Approx(0.25));
    CHECK(table.probability(2, 0) == doctest::Approx(0.25));
    CHECK(table.probability(1, -1) == doctest::Approx(0.25));
    CHECK(table.probability(2, +1) == doctest::Approx(0.25));
    CHECK(table.total_probability == doctest::Approx(1.0));
}

TEST_CASE("destructive interference empties the interior bins") {
    const auto state = build_spdc_state(make_uniform_train(2, 0.0, 0.0, 13.0));
    auto cfg = balanced_half();
    cfg.delta_a = M_PI;
    const auto table = apply_analyzer(state, cfg);
    CHECK(table.probability(2, 0) == doctest::Approx(0.0));
    CHECK(table.probability_dt0() == doctest::Approx(0.25));
}

TEST_CASE("coincidence fringe max/min ratio for d = 3") {
    const auto state = build_spdc_state(make_uniform_train(3, 0.0, 0.0, 13.0));
    auto cfg = balanced_half();
    const double rmax = coincidence_rate(state, cfg);
    cfg.delta_a = M_PI;
    const double rmin = coincidence_rate(state, cfg);
    CHECK(rmax / rmin == doctest::Approx(5.0)); // (1 + 2/3) / (1 - 2/3)
}

TEST_CASE("fringe visibility equals (d-1)/d") {
    for (int d = 1; d <= 20; ++d) {
        const auto state = build_spdc_state(make_uniform_train(d, 0.0, 0.0, 13.0));
        auto cfg = balanced_half();
        const double rmax = coincidence_rate(state, cfg);
        cfg.delta_a = M_PI;
        const double rmin = coincidence_rate(state, cfg);
        const double v = (rmax - rmin) / (rmax + rmin);
        CHECK(std::abs(v - (d - 1.0) / d) < 1e-12);
    }
}

TEST_CASE("phase ramp shifts the fringe") {
    const double phi = 0.7;
    const auto state = build_spdc_state(make_uniform_train(4, phi, 0.0, 13.0));
    auto cfg = balanced_half();
    cfg.delta_a = phi; // delta_a + delta_b - phi = 0
    const double at_crest = coincidence_rate(state, cfg);
    cfg.delta_a = phi + M_PI;
    const double at_trough = coincidence_rate(state, cfg);
    const double v = (at_crest - at_trough) / (at_crest + at_trough);
    CHECK(v == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("outcome table entries sum to the declared total") {
    const auto state = build_spdc_state(make_uniform_train(6, 0.4, 0.0, 13.0));
    AnalyzerConfig cfg;
    cfg.t_s = 0.5;
    cfg.t_l = 0.5;
    cfg.delta_a = 1.1;
    cfg.delta_b = -0.3;
    const auto table = apply_analyzer(state, cfg);
    double sum = 0.0;
    for (const auto& e : table.entries) sum += e.probability;
    CHECK(sum == doctest::Approx(table.total_probability).epsilon(1e-14));
    CHECK(table.total_probability + table.loss_fraction == doctest::Approx(1.0));
    // event-sampling transmissions keep the table a proper distribution
    CHECK(table.total_probability <= 1.0);
    CHECK(table.total_probability > 0.0);
}

TEST_CASE("opposite-phase settings conserve probability pairwise") {
    const auto state = build_spdc_state(make_uniform_train(5, 0.2, 0.0, 13.0));
    AnalyzerConfig cfg;
    cfg.t_s = 0.5;
    cfg.t_l = 0.5;
    double reference = -1.0;
    for (double theta : {0.0, 0.4, 1.3, 2.2}) {
        cfg.delta_a = theta;
        const double t1 = apply_analyzer(state, cfg).total_probability;
        cfg.delta_a = theta + M_PI;
        const double t2 = apply_analyzer(state, cfg).total_probability;
        if (reference < 0.0) reference = t1 + t2;
        CHECK(std::abs(t1 + t2 - reference) < 1e-12);
    }
}

TEST_CASE("analyzer validation") {
    AnalyzerConfig cfg;
    cfg.t_s = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = AnalyzerConfig{};
    cfg.delay_bins = 2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    const auto state = build_spdc_state(make_uniform_train(2, 0.0, 0.0, 13.0));
    BiphotonState bad = state;
    bad.amplitudes[0] *= 2.0;
    CHECK_THROWS_AS(apply_analyzer(bad, AnalyzerConfig{}), std::invalid_argument);
}
