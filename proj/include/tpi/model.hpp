#pragma once
#include <vector>

#include "tpi/params.hpp"

namespace tpi {

// Block increments of X-up and X-down executed at the grid nodes.
struct GridStrategy {
    std::vector<double> grid;  // t_0 = 0 < ... < t_N = T
    std::vector<double> d_up;
    std::vector<double> d_down;
    double phi0 = 0.0;
    double zeta0 = 0.0;

    std::size_t nodes() const { return grid.size(); }
    double horizon() const { return grid.empty() ? 0.0 : grid.back(); }
    void validate() const;
    // holdings right after node i
    std::vector<double> holdings() const;
    // spread right after node i
    std::vector<double> spreads(const MarketParams& p) const;
    double holdings_at(double t) const;

    static GridStrategy zero(double T, std::size_t n_cells, double phi0, double zeta0);
};

bool operator==(const GridStrategy& a, const GridStrategy& b);

struct SpreadState {
    double zeta_t = 0.0;
    double decayed_initial = 0.0;
};

SpreadState spread_at(const MarketParams& p, const GridStrategy& s, double t);
double liquidity_cost(const MarketParams& p, const GridStrategy& s, double t);
double liquidity_cost_initial(const MarketParams& p, double phi0, double zeta0);
// right-hand side of the cost lower bound at node i
double liquidity_lower_bound(const MarketParams& p, const GridStrategy& s, std::size_t node);
double tracking_cost(const MarketParams& p, const GridStrategy& s);

// Partial derivatives of tracking_cost with respect to every d_up / d_down entry.
// `rho` selects the sign of the terminal position when it is zero.
struct CostGradient {
    std::vector<double> up;
    std::vector<double> down;
};
CostGradient tracking_gradient(const MarketParams& p, const GridStrategy& s, double rho = 0.0);

struct WealthResult {
    double direct = 0.0;
    double decomposition = 0.0;
};

// price[i] is the unaffected price at grid node i; price[0] is also the initial mid-quote
WealthResult liquidation_wealth(const MarketParams& p, const GridStrategy& s, const std::vector<double>& price,
                                double xi0);

// V0 + L0 + mu*int(phi) - L_T - (alpha sigma^2 / 2) int(phi^2); book0 stands for V0 + L0
double mean_variance_value(const MarketParams& p, const GridStrategy& s, double book0 = 0.0);
double holdings_square_integral(const GridStrategy& s);
double holdings_integral(const GridStrategy& s);

}
