#pragma once
#include <cmath>
#include <random>
#include <vector>

#include "tpi/model.hpp"

namespace testing {

inline tpi::GridStrategy random_grid_strategy(std::mt19937_64& rng, std::size_t n, double T, double phi0,
                                              double zeta0, double density = 0.5) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    tpi::GridStrategy s;
    s.phi0 = phi0;
    s.zeta0 = zeta0;
    std::vector<double> w(n);
    double tot = 0.0;
    for (auto& v : w) tot += (v = 0.2 + u(rng));
    s.grid.push_back(0.0);
    for (std::size_t i = 0; i < n; ++i) s.grid.push_back(s.grid.back() + T * w[i] / tot);
    s.grid.back() = T;
    for (std::size_t i = 0; i <= n; ++i) {
        s.d_up.push_back(u(rng) < density ? 2.0 * u(rng) : 0.0);
        s.d_down.push_back(u(rng) < density ? 2.0 * u(rng) : 0.0);
    }
    return s;
}

// Cash accounting against a constant unaffected price: ask/bid start at +-zeta0/2, every block
// pays the average of the pre- and post-trade quote, the book ends with a liquidation at the
// terminal quote. Returns the final liquidation wealth with zero cash and zero price.
inline double flat_price_wealth(const tpi::MarketParams& p, const tpi::GridStrategy& s) {
    double ask = 0.5 * s.zeta0, bid = -0.5 * s.zeta0, cash = 0.0, phi = s.phi0, last = 0.0;
    for (std::size_t i = 0; i < s.nodes(); ++i) {
        const double decay = std::exp(-p.kappa * (s.grid[i] - last));
        last = s.grid[i];
        const double mid = 0.5 * (ask + bid);
        const double half = 0.5 * (ask - bid) * decay;
        ask = mid + half;
        bid = mid - half;
        cash -= s.d_up[i] * (ask + 0.5 * p.eta * s.d_up[i]);
        ask += p.eta * s.d_up[i];
        cash += s.d_down[i] * (bid - 0.5 * p.eta * s.d_down[i]);
        bid -= p.eta * s.d_down[i];
        phi += s.d_up[i] - s.d_down[i];
    }
    // unwinding phi in one block walks through the book: average price is the quote minus eta*phi/2
    const double quote = phi > 0 ? bid : ask;
    return cash + phi * (quote - 0.5 * p.eta * phi);
}

template <class F>
double simpson(F&& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

}
