#include "timebin/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace timebin::noise {

double analytic_visibility_d(int d, double v_max) {
    if (d < 1) throw std::invalid_argument("analytic_visibility_d: d >= 1 required");
    if (v_max < 0.0 || v_max > 1.0)
        throw std::invalid_argument("analytic_visibility_d: v_max must be in [0, 1]");
    return v_max * (d - 1.0) / d;
}

MultipairRates multipair_rates(double mu, int d) {
    if (mu < 0.0) throw std::invalid_argument("multipair_rates: mu >= 0 required");
    if (d < 1) throw std::invalid_argument("multipair_rates: d >= 1 required");
    MultipairRates r;
    r.r1 = 0.5 * mu * d;
    r.r2_same = 0.5 * mu * mu * d;
    r.r2_consecutive = 0.5 * mu * mu * (d - 1);
    return r;
}

double visibility_multipair(double mu, int d, double v_d) {
    if (mu < 0.0) throw std::invalid_argument("visibility_multipair: mu >= 0 required");
    if (d < 1) throw std::invalid_argument("visibility_multipair: d >= 1 required");
    if (v_d < 0.0 || v_d > 1.0)
        throw std::invalid_argument("visibility_multipair: v_d must be in [0, 1]");
    return v_d / (1.0 + 2.0 * mu - mu / d);
}

double visibility_phase_noise(double v_d, double delta_eps, int m) {
    if (delta_eps < 0.0)
        throw std::invalid_argument("visibility_phase_noise: delta_eps >= 0 required");
    if (m < 1) throw std::invalid_argument("visibility_phase_noise: m >= 1 required");
    return v_d * std::exp(-0.5 * m * delta_eps * delta_eps);
}

double visibility_misalignment(double t_s, double t_l) {
    if (!(t_s > 0.0) || !(t_l > 0.0))
        throw std::invalid_argument("visibility_misalignment: transmissions must be > 0");
    const double ts2 = t_s * t_s;
    const double tl2 = t_l * t_l;
    return 2.0 * ts2 * tl2 / (ts2 * ts2 + tl2 * tl2);
}

VisibilityBudget visibility_budget(int d, double mu, double t_s, double t_l,
                                   double delta_eps, double v_residual) {
    if (v_residual < 0.0 || v_residual > 1.0)
        throw std::invalid_argument("visibility_budget: v_residual must be in [0, 1]");
    VisibilityBudget b;
    b.v_d = analytic_visibility_d(d, 1.0);
    b.v_multipair = visibility_multipair(mu, d, 1.0);
    b.v_misalign = visibility_misalignment(t_s, t_l);
    // the 2-arm analyzer compares consecutive bins only, hence m = 1
    b.v_phase_noise = visibility_phase_noise(1.0, delta_eps, 1);
    b.v_residual = v_residual;
    b.v_total = b.v_d * b.v_multipair * b.v_misalign * b.v_phase_noise * b.v_residual;
    return b;
}

VisibilityBudget budget_from_factors(double v_d, double v_multipair, double v_misalign,
                                     double v_phase_noise, double v_residual) {
    for (double f : {v_d, v_multipair, v_misalign, v_phase_noise, v_residual})
        if (f < 0.0 || f > 1.0)
            throw std::invalid_argument("budget_from_factors: factors must be in [0, 1]");
    VisibilityBudget b;
    b.v_d = v_d;
    b.v_multipair = v_multipair;
    b.v_misalign = v_misalign;
    b.v_phase_noise = v_phase_noise;
    b.v_residual = v_residual;
    b.v_total = v_d * v_multipair * v_misalign * v_phase_noise * v_residual;
    return b;
}

} // namespace timebin::noise
