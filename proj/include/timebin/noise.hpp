#pragma once

namespace timebin::noise {

// V_d = v_max * (d-1)/d
double analytic_visibility_d(int d, double v_max);

// Coincidence rate decomposition per pump train: single-pair rate and the
// two multi-pair contributions (same bin, consecutive bins).
struct MultipairRates {
    double r1 = 0.0;
    double r2_same = 0.0;
    double r2_consecutive = 0.0;
};

MultipairRates multipair_rates(double mu, int d);

// V(mu, d) = v_d / (1 + 2 mu - mu/d); identical to
// v_d * r1 / (r1 + r2_same + r2_consecutive).
double visibility_multipair(double mu, int d, double v_d);

// Gaussian phase noise of width delta_eps per bin step; bins m apart
// decohere as exp(-m delta_eps^2 / 2).
double visibility_phase_noise(double v_d, double delta_eps, int m);

// V = 2 t_s^2 t_l^2 / (t_s^4 + t_l^4); invariant under joint rescaling.
double visibility_misalignment(double t_s, double t_l);

// Multiplicative visibility budget. v_total includes the dimension factor;
// v_max() is the imperfection-only product, i.e. the visibility the setup
// would reach at d -> infinity.
struct VisibilityBudget {
    double v_d = 1.0;
    double v_multipair = 1.0;
    double v_misalign = 1.0;
    double v_phase_noise = 1.0;
    double v_residual = 1.0;
    double v_total = 1.0;

    double v_max() const { return v_multipair * v_misalign * v_phase_noise * v_residual; }
};

VisibilityBudget visibility_budget(int d, double mu, double t_s, double t_l,
                                   double delta_eps, double v_residual);

// Budget assembled from already-known factors (e.g. quoted estimates).
VisibilityBudget budget_from_factors(double v_d, double v_multipair, double v_misalign,
                                     double v_phase_noise, double v_residual);

} // namespace timebin::noise
