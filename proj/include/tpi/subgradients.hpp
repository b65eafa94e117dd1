#pragma once
#include <vector>

#include "tpi/model.hpp"
#include "tpi/policy.hpp"

namespace tpi {

struct SubgradPair {
    double up = 0.0;
    double down = 0.0;
    double rho = 0.0;
};

// Grid strategies: inter-node integrals in closed form.
SubgradPair subgrad(const MarketParams& p, const GridStrategy& s, double t, double rho = 0.0);

// J(Y) - J(X) - int grad_up J(X) d(Y_up - X_up) - int grad_down J(X) d(Y_down - X_down)
double subgrad_ineq_check(const MarketParams& p, const GridStrategy& x, const GridStrategy& y, double rho = 0.0);

// Piecewise strategies: values at each requested time (sorted, within [0, tau]); rho comes from the strategy.
std::vector<SubgradPair> subgrad(const PiecewiseStrategy& s, const std::vector<double>& times);
SubgradPair subgrad(const PiecewiseStrategy& s, double t);

struct FocReport {
    std::vector<double> times;
    std::vector<double> up;
    std::vector<double> down;
    std::vector<bool> buy_active;
    std::vector<bool> sell_active;
    double min_value = 0.0;
    double active_max = 0.0;
    bool exclusive = true;  // no sample where both subgradients vanish
    double tol = 1e-6;
    bool pass = false;
};

FocReport check_foc(const PiecewiseStrategy& s, std::size_t n_samples = 1000, double tol = 1e-6);

// Gradient maps of strategies that idle for theta before following an optimal base strategy.
struct GradientMaps {
    double up = 0.0;
    double down = 0.0;
};
// base_integral: int e^{-kappa u} d(X_up + X_down) over the base strategy plus e^{-kappa tau} |phi_tau|
GradientMaps g_maps(const MarketParams& p, double theta, double zeta, double phi, double base_integral);
GradientMaps h_maps(const MarketParams& p, double theta, double zeta, double rho);
double base_integral(const PiecewiseStrategy& s);
// closed form of base_integral when the base state sits on the sell boundary
double sell_base_integral(const MarketParams& p, double zeta, double phi);

}
