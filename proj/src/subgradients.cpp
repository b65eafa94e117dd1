#include "tpi/subgradients.hpp"

#include <algorithm>
#include <cmath>
#include <boost/math/quadrature/gauss.hpp>

#include "tpi/errors.hpp"

namespace tpi {

using boost::math::quadrature::gauss;

namespace {

double sign_rho(double phi, double rho) { return phi > 0 ? 1.0 : (phi < 0 ? -1.0 : rho); }

void terminal_terms(const MarketParams& p, double phiT, double zetaT, double rho, double lag, double integral_k,
                    double integral_dev, SubgradPair& out) {
    const double common = integral_k + 0.5 * (zetaT + p.eta * std::abs(phiT)) * std::exp(-p.kappa * lag);
    const double signed_part = integral_dev + 0.5 * p.eta * phiT + 0.5 * sign_rho(phiT, rho) * zetaT;
    out.up = common + signed_part;
    out.down = common - signed_part;
    out.rho = rho;
}

}

SubgradPair subgrad(const MarketParams& p, const GridStrategy& s, double t, double rho) {
    s.validate();
    const double T = s.horizon();
    if (!(t >= 0.0) || t > T) throw ValidationError("subgrad: time outside the horizon");
    if (rho < -1.0 || rho > 1.0) throw ValidationError("subgrad: rho must lie in [-1, 1]");
    const double k = p.kappa;
    auto phi = s.holdings();
    auto zeta = s.spreads(p);
    const std::size_t n = s.nodes();
    double ik = 0.0, idev = 0.0;
    std::size_t j = 0;
    while (j + 1 < n && s.grid[j + 1] <= t) ++j;
    for (std::size_t i = j; i + 1 < n; ++i) {
        const double a = i == j ? t : s.grid[i], b = s.grid[i + 1];
        if (b <= a) continue;
        // int_a^b kappa e^{-k(u-t)} zeta_i e^{-k(u-t_i)} du
        ik += 0.5 * zeta[i] * std::exp(-k * (a - t)) * std::exp(-k * (a - s.grid[i])) * -std::expm1(-2.0 * k * (b - a));
        idev += p.lambda2() * (phi[i] - p.merton) * (b - a);
    }
    SubgradPair out;
    terminal_terms(p, phi[n - 1], zeta[n - 1], rho, T - t, ik, idev, out);
    return out;
}

double subgrad_ineq_check(const MarketParams& p, const GridStrategy& x, const GridStrategy& y, double rho) {
    x.validate();
    y.validate();
    if (x.phi0 != y.phi0 || x.zeta0 != y.zeta0) throw ValidationError("strategies must share the initial endowment");
    if (x.horizon() != y.horizon()) throw ValidationError("strategies must share the horizon");
    double gap = tracking_cost(p, y) - tracking_cost(p, x);
    for (std::size_t i = 0; i < y.nodes(); ++i) {
        if (y.d_up[i] == 0.0 && y.d_down[i] == 0.0) continue;
        SubgradPair g = subgrad(p, x, y.grid[i], rho);
        gap -= g.up * y.d_up[i] + g.down * y.d_down[i];
    }
    for (std::size_t i = 0; i < x.nodes(); ++i) {
        if (x.d_up[i] == 0.0 && x.d_down[i] == 0.0) continue;
        SubgradPair g = subgrad(p, x, x.grid[i], rho);
        gap += g.up * x.d_up[i] + g.down * x.d_down[i];
    }
    return gap;
}

std::vector<SubgradPair> subgrad(const PiecewiseStrategy& s, const std::vector<double>& times) {
    const MarketParams& p = s.params;
    const double T = s.horizon(), k = p.kappa;
    for (double t : times)
        if (!(t >= 0.0) || t > T) throw ValidationError("subgrad: time outside the horizon");

    std::vector<double> cuts = s.breakpoints();
    cuts.insert(cuts.end(), times.begin(), times.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // segment covering an open cell
    auto segment_for = [&](double a, double b) -> const Segment* {
        const double mid = 0.5 * (a + b);
        for (const auto& g : s.segments) {
            if (g.type == SegmentType::InitialBlock || g.type == SegmentType::TerminalBlock) continue;
            if (g.t_start <= mid && mid <= g.t_end) return &g;
        }
        return nullptr;
    };

    const std::size_t m = cuts.size();
    std::vector<double> kint(m, 0.0), dint(m, 0.0);
    for (std::size_t c = m - 1; c-- > 0;) {
        const double a = cuts[c], b = cuts[c + 1];
        double ik = 0.0, id = 0.0;
        if (const Segment* g = segment_for(a, b)) {
            ik = gauss<double, 20>::integrate(
                [&](double u) { return k * std::exp(-k * (u - a)) * s.segment_state(*g, u).zeta; }, a, b);
            id = gauss<double, 20>::integrate(
                [&](double u) { return p.lambda2() * s.segment_state(*g, u).phi - p.mu; }, a, b);
        }
        kint[c] = ik + std::exp(-k * (b - a)) * kint[c + 1];
        dint[c] = id + dint[c + 1];
    }

    const StatePoint end = s.at(T);
    const double rho = std::abs(end.phi) <= 1e-12 ? s.rho : 0.0;
    const double phiT = std::abs(end.phi) <= 1e-12 ? 0.0 : end.phi;
    std::vector<SubgradPair> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const std::size_t c = std::lower_bound(cuts.begin(), cuts.end(), times[i]) - cuts.begin();
        terminal_terms(p, phiT, end.zeta, rho, T - times[i], kint[c], dint[c], out[i]);
    }
    return out;
}

SubgradPair subgrad(const PiecewiseStrategy& s, double t) { return subgrad(s, std::vector<double>{t}).front(); }

FocReport check_foc(const PiecewiseStrategy& s, std::size_t n_samples, double tol) {
    if (n_samples < 2) throw ValidationError("check_foc needs at least two samples");
    FocReport r;
    r.tol = tol;
    const double T = s.horizon();
    r.times.resize(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) r.times[k] = k + 1 == n_samples ? T : T * double(k) / (n_samples - 1);
    auto g = subgrad(s, r.times);
    bool nonzero = s.extra_block > 0.0;
    for (const auto& seg : s.segments)
        if ((seg.size > 0.0) || seg.type == SegmentType::BuyFlow || seg.type == SegmentType::SellFlow) nonzero = true;

    r.min_value = INFINITY;
    r.active_max = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double t = r.times[k];
        r.up.push_back(g[k].up);
        r.down.push_back(g[k].down);
        r.buy_active.push_back(s.buy_active(t));
        r.sell_active.push_back(s.sell_active(t));
        r.min_value = std::min({r.min_value, g[k].up, g[k].down});
        if (r.buy_active.back()) r.active_max = std::max(r.active_max, std::abs(g[k].up));
        if (r.sell_active.back()) r.active_max = std::max(r.active_max, std::abs(g[k].down));
        if (nonzero && g[k].up <= tol && g[k].down <= tol) r.exclusive = false;
    }
    r.pass = r.min_value >= -tol && r.active_max <= tol;
    return r;
}

GradientMaps g_maps(const MarketParams& p, double theta, double zeta, double phi, double itot) {
    const double k = p.kappa;
    const double lin = (p.lambda2() * phi - p.mu) * theta;
    const double ek = std::exp(k * theta), em = std::exp(-k * theta);
    return {lin + 0.5 * zeta * (ek + 1.0) + 0.5 * p.eta * (em + 1.0) * itot,
            -lin + 0.5 * zeta * (ek - 1.0) + 0.5 * p.eta * (em - 1.0) * itot};
}

GradientMaps h_maps(const MarketParams& p, double theta, double zeta, double rho) {
    const double ek = std::exp(p.kappa * theta);
    return {-p.mu * theta + 0.5 * zeta * (ek + rho), p.mu * theta + 0.5 * zeta * (ek - rho)};
}

double base_integral(const PiecewiseStrategy& s) {
    const double k = s.params.kappa, T = s.horizon();
    double v = 0.0;
    for (const auto& g : s.segments) {
        if (g.type == SegmentType::InitialBlock) v += g.size;
        if (g.type == SegmentType::TerminalBlock) v += std::exp(-k * T) * g.size;
        if ((g.type == SegmentType::BuyFlow || g.type == SegmentType::SellFlow) && g.t_end > g.t_start) {
            // holdings are monotone inside a flow; integrate e^{-k u} d(phi) by parts
            const double pa = s.segment_state(g, g.t_start).phi, pb = s.segment_state(g, g.t_end).phi;
            double inner = 0.0;
            const int pieces = 8;
            const double w = (g.t_end - g.t_start) / pieces;
            for (int i = 0; i < pieces; ++i) {
                const double a = g.t_start + i * w;
                inner += gauss<double, 20>::integrate(
                    [&](double u) { return std::exp(-k * u) * s.segment_state(g, u).phi; }, a, a + w);
            }
            v += std::abs(std::exp(-k * g.t_end) * pb - std::exp(-k * g.t_start) * pa + k * inner);
        }
    }
    return v;
}

double sell_base_integral(const MarketParams& p, double zeta, double phi) {
    return 2.0 / (p.eta * p.kappa) * (p.mu - p.lambda2() * phi + 0.5 * p.kappa * zeta);
}

}
