#include "tpi/model.hpp"

#include <algorithm>
#include <cmath>

#include "tpi/errors.hpp"

namespace tpi {

void GridStrategy::validate() const {
    if (grid.size() < 2) throw ValidationError("grid needs at least two nodes");
    if (d_up.size() != grid.size() || d_down.size() != grid.size())
        throw ValidationError("d_up/d_down must have one entry per grid node");
    if (grid.front() != 0.0) throw ValidationError("grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ValidationError("grid must be strictly increasing");
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!(d_up[i] >= 0.0) || !(d_down[i] >= 0.0) || !std::isfinite(d_up[i]) || !std::isfinite(d_down[i]))
            throw ValidationError("increments must be finite and >= 0");
    if (!std::isfinite(phi0)) throw ValidationError("phi0 must be finite");
    if (!(zeta0 >= 0.0) || !std::isfinite(zeta0)) throw ValidationError("zeta0 must be finite and >= 0");
}

std::vector<double> GridStrategy::holdings() const {
    std::vector<double> h(grid.size());
    double phi = phi0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        phi += d_up[i] - d_down[i];
        h[i] = phi;
    }
    return h;
}

std::vector<double> GridStrategy::spreads(const MarketParams& p) const {
    std::vector<double> z(grid.size());
    double zeta = zeta0, prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        zeta = zeta * std::exp(-p.kappa * (grid[i] - prev)) + p.eta * (d_up[i] + d_down[i]);
        z[i] = zeta;
        prev = grid[i];
    }
    return z;
}

double GridStrategy::holdings_at(double t) const {
    double phi = phi0;
    for (std::size_t i = 0; i < grid.size() && grid[i] <= t; ++i) phi += d_up[i] - d_down[i];
    return phi;
}

GridStrategy GridStrategy::zero(double T, std::size_t n_cells, double phi0, double zeta0) {
    if (!(T > 0.0) || n_cells < 1) throw ValidationError("zero strategy needs T > 0 and at least one cell");
    GridStrategy s;
    s.grid.resize(n_cells + 1);
    for (std::size_t i = 0; i <= n_cells; ++i) s.grid[i] = T * double(i) / double(n_cells);
    s.grid.back() = T;
    s.d_up.assign(n_cells + 1, 0.0);
    s.d_down.assign(n_cells + 1, 0.0);
    s.phi0 = phi0;
    s.zeta0 = zeta0;
    return s;
}

bool operator==(const GridStrategy& a, const GridStrategy& b) {
    return a.grid == b.grid && a.d_up == b.d_up && a.d_down == b.d_down && a.phi0 == b.phi0 && a.zeta0 == b.zeta0;
}

static void check_time(const GridStrategy& s, double t) {
    if (!(t >= 0.0) || t > s.horizon()) throw ValidationError("time outside the strategy horizon");
}

SpreadState spread_at(const MarketParams& p, const GridStrategy& s, double t) {
    s.validate();
    check_time(s, t);
    double zeta = s.zeta0, prev = 0.0;
    for (std::size_t i = 0; i < s.nodes() && s.grid[i] <= t; ++i) {
        zeta = zeta * std::exp(-p.kappa * (s.grid[i] - prev)) + p.eta * (s.d_up[i] + s.d_down[i]);
        prev = s.grid[i];
    }
    zeta *= std::exp(-p.kappa * (t - prev));
    return {zeta, s.zeta0 * std::exp(-p.kappa * t)};
}

double liquidity_cost_initial(const MarketParams& p, double phi0, double zeta0) {
    return 0.5 * zeta0 * std::abs(phi0) + 0.5 * p.eta * phi0 * phi0;
}

// excess spread Delta decays like the spread, so each cell integrates in closed form
static double cell_weight(double kappa, double h) { return -std::expm1(-2.0 * kappa * h) / (2.0 * kappa); }

double liquidity_cost(const MarketParams& p, const GridStrategy& s, double t) {
    s.validate();
    check_time(s, t);
    const double k = p.kappa, eta = p.eta;
    double zeta = s.zeta0, phi = s.phi0, prev = 0.0;
    double block_term = 0.0, integral = 0.0;
    std::size_t i = 0;
    for (; i < s.nodes() && s.grid[i] <= t; ++i) {
        const double h = s.grid[i] - prev;
        if (i > 0) {
            const double delta = zeta - s.zeta0 * std::exp(-k * prev);
            integral += delta * delta * cell_weight(k, h);
        }
        zeta = zeta * std::exp(-k * h) + eta * (s.d_up[i] + s.d_down[i]);
        phi += s.d_up[i] - s.d_down[i];
        block_term += std::exp(-k * s.grid[i]) * (s.d_up[i] + s.d_down[i]);
        prev = s.grid[i];
    }
    {
        const double delta = zeta - s.zeta0 * std::exp(-k * prev);
        integral += delta * delta * cell_weight(k, t - prev);
        zeta *= std::exp(-k * (t - prev));
    }
    const double ez = std::exp(-k * t) * s.zeta0;
    const double a = eta * std::abs(phi) + (zeta - ez);
    return a * a / (4.0 * eta) + 0.5 * std::abs(phi) * ez + 0.25 * eta * s.phi0 * s.phi0 +
           0.5 * s.zeta0 * block_term + k / (2.0 * eta) * integral;
}

double liquidity_lower_bound(const MarketParams& p, const GridStrategy& s, std::size_t node) {
    s.validate();
    if (node >= s.nodes()) throw ValidationError("node index out of range");
    const double k = p.kappa;
    double cum = 0.0, integral = 0.0;
    for (std::size_t i = 0; i <= node; ++i) {
        if (i > 0) {
            const double a = s.grid[i - 1], h = s.grid[i] - a;
            // int_a^{a+h} e^{-2 k u} du
            integral += cum * cum * std::exp(-2.0 * k * a) * cell_weight(k, h);
        }
        cum += s.d_up[i] + s.d_down[i];
    }
    const double t = s.grid[node];
    return 0.25 * p.eta * std::exp(-2.0 * k * t) * cum * cum + 0.5 * k * p.eta * integral;
}

double holdings_integral(const GridStrategy& s) {
    auto h = s.holdings();
    double v = 0.0;
    for (std::size_t i = 0; i + 1 < s.nodes(); ++i) v += h[i] * (s.grid[i + 1] - s.grid[i]);
    return v;
}

double holdings_square_integral(const GridStrategy& s) {
    auto h = s.holdings();
    double v = 0.0;
    for (std::size_t i = 0; i + 1 < s.nodes(); ++i) v += h[i] * h[i] * (s.grid[i + 1] - s.grid[i]);
    return v;
}

double tracking_cost(const MarketParams& p, const GridStrategy& s) {
    const double T = s.horizon();
    double dev = 0.0;
    auto h = s.holdings();
    for (std::size_t i = 0; i + 1 < s.nodes(); ++i) {
        const double x = h[i] - p.merton;
        dev += x * x * (s.grid[i + 1] - s.grid[i]);
    }
    return liquidity_cost(p, s, T) + 0.5 * p.lambda2() * dev;
}

CostGradient tracking_gradient(const MarketParams& p, const GridStrategy& s, double rho) {
    s.validate();
    const std::size_t n = s.nodes();
    const double k = p.kappa, eta = p.eta, T = s.horizon();
    auto phi = s.holdings();
    auto zeta = s.spreads(p);
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = zeta[i] - s.zeta0 * std::exp(-k * s.grid[i]);

    const double phiN = phi[n - 1];
    const double sgn = phiN > 0 ? 1.0 : (phiN < 0 ? -1.0 : rho);
    const double term_common = 0.5 * (eta * std::abs(phiN) + delta[n - 1]);
    const double term_signed = 0.5 * eta * phiN + 0.5 * sgn * zeta[n - 1];

    CostGradient g;
    g.up.resize(n);
    g.down.resize(n);
    double spread_sum = 0.0;  // sum_{i>=j} delta_i w_i e^{-k (t_i - t_j)}
    double dev_sum = 0.0;     // sum_{i>=j} h_i (phi_i - m)
    for (std::size_t j = n; j-- > 0;) {
        const double h = j + 1 < n ? s.grid[j + 1] - s.grid[j] : 0.0;
        spread_sum = delta[j] * cell_weight(k, h) + (j + 1 < n ? std::exp(-k * h) * spread_sum : 0.0);
        dev_sum += h * (phi[j] - p.merton);
        const double tj = s.grid[j];
        const double common = 0.5 * s.zeta0 * std::exp(-k * tj) + term_common * std::exp(-k * (T - tj)) +
                              k * spread_sum;
        const double signed_part = p.lambda2() * dev_sum + term_signed;
        g.up[j] = common + signed_part;
        g.down[j] = common - signed_part;
    }
    return g;
}

WealthResult liquidation_wealth(const MarketParams& p, const GridStrategy& s, const std::vector<double>& price,
                                double xi0) {
    s.validate();
    if (price.size() != s.nodes()) throw ValidationError("price path must have one sample per grid node");
    const double k = p.kappa, eta = p.eta;
    // direct cash accounting on bid/ask
    double mid = price[0], zeta = s.zeta0, cash = xi0, phi = s.phi0, prev = 0.0;
    for (std::size_t i = 0; i < s.nodes(); ++i) {
        if (i > 0) mid += price[i] - price[i - 1];
        zeta *= std::exp(-k * (s.grid[i] - prev));
        prev = s.grid[i];
        const double u = s.d_up[i], d = s.d_down[i];
        double ask = mid + 0.5 * zeta, bid = mid - 0.5 * zeta;
        cash -= (ask + 0.5 * eta * u) * u;
        cash += (bid - 0.5 * eta * d) * d;
        ask += eta * u;
        bid -= eta * d;
        mid = 0.5 * (ask + bid);
        zeta = ask - bid;
        phi += u - d;
    }
    WealthResult r;
    r.direct = cash + mid * phi - (0.5 * zeta * std::abs(phi) + 0.5 * eta * phi * phi);

    auto h = s.holdings();
    double stieltjes = 0.0;
    for (std::size_t i = 0; i + 1 < s.nodes(); ++i) stieltjes += h[i] * (price[i + 1] - price[i]);
    const double book0 = xi0 + s.phi0 * price[0];
    r.decomposition = book0 + stieltjes - liquidity_cost(p, s, s.horizon());
    const double scale = std::max({1.0, std::abs(r.direct), std::abs(r.decomposition)});
    if (std::abs(r.direct - r.decomposition) > 1e-8 * scale)
        throw NumericalError("liquidation wealth: direct and decomposed values disagree");
    return r;
}

double mean_variance_value(const MarketParams& p, const GridStrategy& s, double book0) {
    return book0 + p.mu * holdings_integral(s) - liquidity_cost(p, s, s.horizon()) -
           0.5 * p.lambda2() * holdings_square_integral(s);
}

}
