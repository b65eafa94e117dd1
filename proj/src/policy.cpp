#include "tpi/policy.hpp"

#include <algorithm>
#include <cmath>
#include <boost/math/quadrature/gauss.hpp>

#include "tpi/errors.hpp"
#include "tpi/roots.hpp"

namespace tpi {

namespace {

template <class E>
const char* label_of(E v, std::initializer_list<std::pair<E, const char*>> table) {
    for (auto& [k, name] : table)
        if (k == v) return name;
    return "?";
}

template <class E>
E parse_label(const std::string& s, std::initializer_list<std::pair<E, const char*>> table, const char* what) {
    for (auto& [k, name] : table)
        if (s == name) return k;
    throw ValidationError(std::string("unknown ") + what + ": " + s);
}

const std::initializer_list<std::pair<Region, const char*>> kRegions = {{Region::Buy, "Buy"},
                                                                         {Region::BuyBoundary, "BuyBoundary"},
                                                                         {Region::Wait, "Wait"},
                                                                         {Region::SellBoundary, "SellBoundary"},
                                                                         {Region::Sell, "Sell"}};
const std::initializer_list<std::pair<SegmentType, const char*>> kSegments = {
    {SegmentType::InitialBlock, "InitialBlock"}, {SegmentType::BuyFlow, "BuyFlow"}, {SegmentType::Wait, "Wait"},
    {SegmentType::SellFlow, "SellFlow"},         {SegmentType::TerminalBlock, "TerminalBlock"}};
const std::initializer_list<std::pair<FlowForm, const char*>> kForms = {{FlowForm::None, "none"},
                                                                         {FlowForm::HatBuy, "hat_buy"},
                                                                         {FlowForm::HatSell, "hat_sell"},
                                                                         {FlowForm::MirroredSell, "mirrored_sell"},
                                                                         {FlowForm::Hold, "hold"}};

bool is_block(const Segment& g) {
    return g.type == SegmentType::InitialBlock || g.type == SegmentType::TerminalBlock;
}

StatePoint eval(const MarketParams& p, const Segment& g, double t) {
    const double theta = std::clamp(t - g.t_start, 0.0, g.t_end - g.t_start);
    switch (g.form) {
        case FlowForm::HatSell:
            return {hat::phi_sell(p, g.coef, theta), hat::zeta_sell(p, g.coef, g.anchor_zeta, theta)};
        case FlowForm::MirroredSell:
            return {hat::phi_sell(p, g.coef, theta), -hat::zeta_sell(p, g.coef, -g.anchor_zeta, theta)};
        case FlowForm::HatBuy: {
            const double s = g.ttm_start - theta;
            return {hat::phi_buy(p, s, g.anchor_zeta, g.anchor_phi, g.anchor_tau),
                    hat::zeta_buy(p, s, g.anchor_zeta, g.anchor_phi, g.anchor_tau)};
        }
        default:
            return {g.phi_start, g.zeta_start * std::exp(-p.kappa * theta)};
    }
}

}

const char* region_label(Region r) { return label_of(r, kRegions); }
Region region_from_label(const std::string& s) { return parse_label(s, kRegions, "region"); }
const char* segment_label(SegmentType t) { return label_of(t, kSegments); }
SegmentType segment_from_label(const std::string& s) { return parse_label(s, kSegments, "segment type"); }
const char* form_label(FlowForm f) { return label_of(f, kForms); }
FlowForm form_from_label(const std::string& s) { return parse_label(s, kForms, "flow form"); }

StatePoint PiecewiseStrategy::segment_state(const Segment& g, double t) const {
    StatePoint st = eval(params, g, t);
    if (extra_block != 0.0 && !is_block(g)) {
        st.phi += extra_block;
        st.zeta += params.eta * extra_block * std::exp(-params.kappa * t);
    }
    return st;
}

StatePoint PiecewiseStrategy::at(double t) const {
    const Segment* last = nullptr;
    for (const auto& g : segments) {
        if (is_block(g)) continue;
        if (g.t_start <= t && t < g.t_end) return segment_state(g, t);
        last = &g;
    }
    if (last && t >= last->t_end) return segment_state(*last, last->t_end);
    return {data.phi + extra_block, data.zeta + params.eta * extra_block};
}

StatePoint PiecewiseStrategy::before(double t) const {
    if (t <= 0.0) return {data.phi, data.zeta};
    for (const auto& g : segments) {
        if (is_block(g)) continue;
        if (g.t_start < t && t <= g.t_end) return segment_state(g, t);
    }
    return at(t);
}

double PiecewiseStrategy::bought(double t) const {
    double v = 0.0;
    for (const auto& g : segments) {
        if (g.type == SegmentType::InitialBlock && g.side > 0) v += g.size;
        if (g.type == SegmentType::BuyFlow && t > g.t_start)
            v += segment_state(g, std::min(t, g.t_end)).phi - g.phi_start;
    }
    return v;
}

double PiecewiseStrategy::sold(double t) const {
    double v = 0.0;
    for (const auto& g : segments) {
        if (g.type == SegmentType::InitialBlock && g.side < 0) v += g.size;
        if (g.type == SegmentType::SellFlow && t > g.t_start)
            v += g.phi_start - segment_state(g, std::min(t, g.t_end)).phi;
    }
    return v;
}

bool PiecewiseStrategy::buy_active(double t) const {
    for (const auto& g : segments) {
        if (g.side <= 0) continue;
        if (g.type == SegmentType::InitialBlock && t == 0.0 && g.size > 0) return true;
        if (g.type == SegmentType::TerminalBlock && t == horizon() && g.size > 0) return true;
        if (g.type == SegmentType::BuyFlow && t >= g.t_start && t <= g.t_end) return true;
    }
    return false;
}

bool PiecewiseStrategy::sell_active(double t) const {
    for (const auto& g : segments) {
        if (g.side >= 0) continue;
        if (g.type == SegmentType::InitialBlock && t == 0.0 && g.size > 0) return true;
        if (g.type == SegmentType::TerminalBlock && t == horizon() && g.size > 0) return true;
        if (g.type == SegmentType::SellFlow && t >= g.t_start && t <= g.t_end) return true;
    }
    return false;
}

std::vector<double> PiecewiseStrategy::breakpoints() const {
    std::vector<double> b{0.0, horizon()};
    for (const auto& g : segments) {
        b.push_back(g.t_start);
        b.push_back(g.t_end);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

std::vector<SegmentType> PiecewiseStrategy::sequence(bool skip_empty_blocks) const {
    std::vector<SegmentType> out;
    for (const auto& g : segments) {
        if (skip_empty_blocks && is_block(g) && g.size == 0.0) continue;
        out.push_back(g.type);
    }
    return out;
}

bool operator==(const PiecewiseStrategy& a, const PiecewiseStrategy& b) {
    auto same_params = [](const MarketParams& x, const MarketParams& y) {
        return x.kappa == y.kappa && x.eta == y.eta && x.mu == y.mu && x.sigma == y.sigma && x.alpha == y.alpha;
    };
    auto same_dur = [](const Durations& x, const Durations& y) {
        return x.tau_buy == y.tau_buy && x.tau_wait == y.tau_wait && x.tau_sell == y.tau_sell;
    };
    return same_params(a.params, b.params) && a.data.tau == b.data.tau && a.data.zeta == b.data.zeta &&
           a.data.phi == b.data.phi && a.region == b.region && a.piece == b.piece &&
           same_dur(a.durations, b.durations) && a.rho == b.rho && a.rho_used == b.rho_used &&
           a.terminal_position == b.terminal_position && a.extra_block == b.extra_block &&
           a.segments == b.segments;
}

Policy::Policy(const MarketParams& p) : fb_(p) {}

Region Policy::classify(const ProblemData& d) const {
    validate(d);
    const double eps = tolerance(d.phi);
    const double sell = fb_.phi_sell(d.tau, d.zeta);
    if (d.phi > sell + eps) return Region::Sell;
    if (std::abs(d.phi - sell) <= eps) return Region::SellBoundary;
    const double buy = fb_.phi_buy(d.tau, d.zeta);
    if (std::abs(d.phi - buy) <= eps) return Region::BuyBoundary;
    if (d.phi < buy - eps) return Region::Buy;
    return Region::Wait;
}

Policy::Impulse Policy::impulse_sell(const ProblemData& d) const {
    Region r = classify(d);
    if (r != Region::Sell && r != Region::SellBoundary)
        throw ValidationError("impulse_sell: state is not in the sell region");
    const MarketParams& p = params();
    Impulse out;
    out.size = r == Region::Sell
                   ? (d.phi - fb_.phi_sell(d.tau, d.zeta)) / (1.0 + p.eta * fb_.sell_slope(d.tau))
                   : 0.0;
    out.post = {d.tau, d.zeta + p.eta * out.size, d.phi - out.size};
    out.residual = out.post.phi - fb_.phi_sell(d.tau, out.post.zeta);
    return out;
}

Policy::Impulse Policy::impulse_buy(const ProblemData& d) const {
    Region r = classify(d);
    if (r != Region::Buy && r != Region::BuyBoundary)
        throw ValidationError("impulse_buy: state is not in the buy region");
    const MarketParams& p = params();
    Impulse out;
    auto resid = [&](double x) { return d.phi + x - fb_.phi_buy(d.tau, d.zeta + p.eta * x); };
    double x = 0.0;
    if (r == Region::Buy && resid(0.0) < 0.0) {
        double hi = std::max(1.0, p.merton - d.phi + 1.0);
        int widen = 0;
        while (resid(hi) <= 0.0) {
            hi *= 2.0;
            if (++widen > 60) throw NumericalError("impulse_buy: no sign change in bracket");
        }
        x = roots::bisect(resid, 0.0, hi, 1e-15 * (1.0 + hi));
        const double cf = (fb_.phi_sell(d.tau, -d.zeta) - d.phi) / (1.0 + p.eta * fb_.sell_slope(d.tau));
        if (cf > 0.0 && fb_.phi_buy_detail(d.tau, d.zeta + p.eta * cf).piece == Piece::I) {
            out.closed_form = cf;
            x = cf;
        }
    }
    out.size = x;
    out.post = {d.tau, d.zeta + p.eta * x, d.phi + x};
    out.residual = resid(x);
    return out;
}

std::optional<Policy::Hit> Policy::first_hit(const ProblemData& d) const {
    validate(d);
    const MarketParams& p = params();
    const double tau = d.tau;
    auto hs = [&](double t) { return d.phi - fb_.phi_sell(tau - t, d.zeta * std::exp(-p.kappa * t)); };
    auto hb = [&](double t) { return d.phi - fb_.phi_buy(tau - t, d.zeta * std::exp(-p.kappa * t)); };
    if (hs(0.0) >= 0.0) return Hit{0.0, Region::SellBoundary};
    if (hb(0.0) <= 0.0) return Hit{0.0, Region::BuyBoundary};
    if (tau <= 0.0) return std::nullopt;
    const int cells = 256;
    const double width = 1e-14 * std::max(1.0, tau);
    double prev = 0.0;
    for (int k = 1; k <= cells; ++k) {
        const double t = k == cells ? tau : tau * double(k) / cells;
        const bool sell_hit = hs(t) >= 0.0, buy_hit = hb(t) <= 0.0;
        if (sell_hit || buy_hit) {
            std::optional<Hit> best;
            if (sell_hit) best = Hit{roots::bisect(hs, prev, t, width), Region::SellBoundary};
            if (buy_hit) {
                double tb = roots::bisect(hb, prev, t, width);
                if (!best || tb < best->t) best = Hit{tb, Region::BuyBoundary};
            }
            return best;
        }
        prev = t;
    }
    return std::nullopt;
}

void Policy::append_hold(PiecewiseStrategy& s, double t0, double t1, double zeta, double phi) const {
    if (!(t1 > t0)) return;
    Segment g;
    g.type = SegmentType::Wait;
    g.form = FlowForm::Hold;
    g.t_start = t0;
    g.t_end = t1;
    g.ttm_start = s.horizon() - t0;
    g.phi_start = phi;
    g.zeta_start = zeta;
    g.anchor_tau = s.horizon() - t0;
    g.anchor_zeta = zeta;
    g.anchor_phi = phi;
    s.segments.push_back(g);
}

void Policy::append_sell_boundary(PiecewiseStrategy& s, double t0, double tau, double zeta, double phi) const {
    if (!(tau > 0.0)) return;
    Segment g;
    g.type = SegmentType::SellFlow;
    g.form = FlowForm::HatSell;
    g.side = -1;
    g.t_start = t0;
    g.t_end = s.horizon();
    g.ttm_start = tau;
    g.anchor_tau = tau;
    g.anchor_zeta = zeta;
    g.anchor_phi = phi;
    g.coef = fb_.coefficients(tau, zeta, phi);
    StatePoint st = eval(params(), g, t0);
    g.phi_start = st.phi;
    g.zeta_start = st.zeta;
    s.segments.push_back(g);
}

void Policy::append_buy_boundary(PiecewiseStrategy& s, double t0, double tau, double zeta, double phi) const {
    const BuyPoint bp = fb_.phi_buy_detail(tau, zeta);
    if (!s.piece) s.piece = bp.piece;
    if (!(tau > 0.0)) return;
    const double T = s.horizon();
    const double k = params().kappa;
    switch (bp.piece) {
        case Piece::I: {
            Segment g;
            g.type = SegmentType::BuyFlow;
            g.form = FlowForm::MirroredSell;
            g.side = 1;
            g.t_start = t0;
            g.t_end = T;
            g.ttm_start = tau;
            g.anchor_tau = tau;
            g.anchor_zeta = zeta;
            g.anchor_phi = phi;
            g.coef = fb_.coefficients(tau, -zeta, phi);
            StatePoint st = eval(params(), g, t0);
            g.phi_start = st.phi;
            g.zeta_start = st.zeta;
            s.segments.push_back(g);
            return;
        }
        case Piece::II_1:
        case Piece::II_2:
        case Piece::II_3: {
            const double tstar = tau - bp.tau_buy;
            const CurvePoint c = fb_.curve(tstar);
            const double t1 = bp.tau_buy >= tau ? T : t0 + bp.tau_buy;
            if (bp.tau_buy > 0.0) {
                Segment g;
                g.type = SegmentType::BuyFlow;
                g.form = FlowForm::HatBuy;
                g.side = 1;
                g.t_start = t0;
                g.t_end = t1;
                g.ttm_start = tau;
                g.anchor_tau = tstar;
                g.anchor_zeta = c.zbar;
                g.anchor_phi = c.pbar;
                StatePoint st = eval(params(), g, t0);
                g.phi_start = st.phi;
                g.zeta_start = st.zeta;
                s.segments.push_back(g);
            }
            if (bp.piece == Piece::II_1) {
                const double tb = fb_.theta_bar();
                append_hold(s, t1, t1 + tb, c.zbar, c.pbar);
                append_sell_boundary(s, t1 + tb, T - (t1 + tb), c.zbar * std::exp(-k * tb), c.pbar);
            } else {
                append_hold(s, t1, T, c.zbar, c.pbar);
            }
            return;
        }
        case Piece::III_1: {
            const double tw = bp.tau_wait;
            append_hold(s, t0, t0 + tw, zeta, phi);
            append_sell_boundary(s, t0 + tw, T - (t0 + tw), zeta * std::exp(-k * tw), phi);
            return;
        }
        case Piece::III_2:
            append_hold(s, t0, T, zeta, phi);
            return;
        case Piece::III_3:
            append_hold(s, t0, T, zeta, 0.0);
            return;
    }
}

void Policy::finish(PiecewiseStrategy& s) const {
    const MarketParams& p = params();
    const double T = s.horizon();
    const StatePoint end = s.at(T);
    s.terminal_position = end.phi;
    Segment g;
    g.type = SegmentType::TerminalBlock;
    g.t_start = g.t_end = T;
    g.size = std::abs(end.phi);
    g.side = end.phi > 0 ? -1 : (end.phi < 0 ? 1 : 0);
    g.phi_start = end.phi;
    g.zeta_start = end.zeta;
    s.segments.push_back(g);

    s.durations = {};
    for (const auto& x : s.segments) {
        const double len = x.t_end - x.t_start;
        if (x.type == SegmentType::BuyFlow) s.durations.tau_buy += len;
        if (x.type == SegmentType::SellFlow) s.durations.tau_sell += len;
        if (x.type == SegmentType::Wait) s.durations.tau_wait += len;
    }

    s.rho = 0.0;
    s.rho_used = false;
    if (end.phi == 0.0 && end.zeta > 0.0) {
        // largest lower bound the buy-subgradient imposes along the final hold at zero
        double hold = 0.0;
        for (auto it = s.segments.rbegin(); it != s.segments.rend(); ++it) {
            if (is_block(*it)) continue;
            if (it->form == FlowForm::Hold && it->phi_start == 0.0) hold = T - it->t_start;
            break;
        }
        if (T == 0.0 || s.segments.size() == 1) hold = 0.0;
        const double zT = end.zeta;
        double theta0 = std::log(2.0 * p.mu / (p.kappa * zT)) / p.kappa;
        if (!std::isfinite(theta0)) theta0 = 0.0;
        theta0 = std::clamp(theta0, 0.0, hold);
        s.rho = std::max(-1.0, 2.0 * p.mu * theta0 / zT - std::exp(p.kappa * theta0));
        s.rho_used = true;
    }
}

PiecewiseStrategy Policy::build(const ProblemData& d) const {
    validate(d);
    PiecewiseStrategy s;
    s.params = params();
    s.data = d;
    s.region = classify(d);
    if (d.tau > 0.0) {
        switch (s.region) {
            case Region::Sell: {
                Impulse imp = impulse_sell(d);
                Segment g;
                g.type = SegmentType::InitialBlock;
                g.side = -1;
                g.size = imp.size;
                g.phi_start = imp.post.phi;
                g.zeta_start = imp.post.zeta;
                s.segments.push_back(g);
                append_sell_boundary(s, 0.0, d.tau, imp.post.zeta, imp.post.phi);
                break;
            }
            case Region::SellBoundary:
                append_sell_boundary(s, 0.0, d.tau, d.zeta, d.phi);
                break;
            case Region::Buy: {
                Impulse imp = impulse_buy(d);
                Segment g;
                g.type = SegmentType::InitialBlock;
                g.side = 1;
                g.size = imp.size;
                g.phi_start = imp.post.phi;
                g.zeta_start = imp.post.zeta;
                s.segments.push_back(g);
                append_buy_boundary(s, 0.0, d.tau, imp.post.zeta, imp.post.phi);
                break;
            }
            case Region::BuyBoundary:
                append_buy_boundary(s, 0.0, d.tau, d.zeta, d.phi);
                break;
            case Region::Wait: {
                auto hit = first_hit(d);
                if (!hit) {
                    append_hold(s, 0.0, d.tau, d.zeta, d.phi);
                    break;
                }
                const double t = hit->t;
                const double z = d.zeta * std::exp(-params().kappa * t);
                append_hold(s, 0.0, t, d.zeta, d.phi);
                if (hit->side == Region::SellBoundary)
                    append_sell_boundary(s, t, d.tau - t, z, d.phi);
                else
                    append_buy_boundary(s, t, d.tau - t, z, d.phi);
                break;
            }
        }
    }
    finish(s);

    // consecutive segments must join continuously
    StatePoint prev{d.phi, d.zeta};
    for (const auto& g : s.segments) {
        if (g.type == SegmentType::InitialBlock) {
            prev = {g.phi_start, g.zeta_start};
            continue;
        }
        if (g.type == SegmentType::TerminalBlock) continue;
        StatePoint st = eval(params(), g, g.t_start);
        if (std::abs(st.phi - prev.phi) > 1e-8 * (1.0 + std::abs(prev.phi)) ||
            std::abs(st.zeta - prev.zeta) > 1e-8 * (1.0 + std::abs(prev.zeta)))
            throw NumericalError("strategy synthesis: segment endpoints do not join");
        prev = eval(params(), g, g.t_end);
    }
    return s;
}

PiecewiseStrategy Policy::restart(const PiecewiseStrategy& s, double t, double tol) const {
    const double T = s.horizon();
    if (!(t >= 0.0) || (T > 0.0 && t >= T)) throw ValidationError("restart time must lie in [0, tau)");
    const StatePoint st = s.before(t);
    PiecewiseStrategy fresh = build({T - t, st.zeta, st.phi});
    const int n = 200;
    for (int k = 0; k <= n; ++k) {
        const double u = t + (T - t) * double(k) / n;
        StatePoint a = k == 0 && t > 0.0 ? s.at(t) : s.at(u);
        StatePoint b = fresh.at(u - t);
        const double scale = std::max(1.0, std::abs(a.phi));
        if (std::abs(a.phi - b.phi) > tol * scale || std::abs(a.zeta - b.zeta) > tol * std::max(1.0, a.zeta))
            throw NumericalError("restart: tail of the rebuilt strategy deviates from the original");
    }
    return fresh;
}

PiecewiseStrategy with_extra_block(const PiecewiseStrategy& s, double delta) {
    if (!(delta >= 0.0)) throw ValidationError("extra block must be >= 0");
    PiecewiseStrategy out = s;
    if (!out.segments.empty() && out.segments.back().type == SegmentType::TerminalBlock) out.segments.pop_back();
    out.extra_block += delta;
    Segment g;
    g.type = SegmentType::InitialBlock;
    g.side = 1;
    g.size = delta;
    g.phi_start = s.data.phi + delta;
    g.zeta_start = s.data.zeta + s.params.eta * delta;
    out.segments.insert(out.segments.begin(), g);
    const StatePoint end = out.at(out.horizon());
    out.terminal_position = end.phi;
    Segment tb;
    tb.type = SegmentType::TerminalBlock;
    tb.t_start = tb.t_end = out.horizon();
    tb.size = std::abs(end.phi);
    tb.side = end.phi > 0 ? -1 : (end.phi < 0 ? 1 : 0);
    tb.phi_start = end.phi;
    tb.zeta_start = end.zeta;
    out.segments.push_back(tb);
    return out;
}

PiecewiseStrategy delayed(const PiecewiseStrategy& s, double theta) {
    if (!(theta >= 0.0)) throw ValidationError("delay must be >= 0");
    for (const auto& g : s.segments)
        if (g.type == SegmentType::InitialBlock && g.size > 0.0)
            throw ValidationError("delayed: base strategy must not start with a block");
    PiecewiseStrategy out = s;
    const double k = s.params.kappa;
    out.data = {s.data.tau + theta, s.data.zeta * std::exp(k * theta), s.data.phi};
    out.region = Region::Wait;
    out.segments.clear();
    Segment hold;
    hold.type = SegmentType::Wait;
    hold.form = FlowForm::Hold;
    hold.t_end = theta;
    hold.ttm_start = out.data.tau;
    hold.phi_start = out.data.phi;
    hold.zeta_start = out.data.zeta;
    hold.anchor_tau = out.data.tau;
    hold.anchor_zeta = out.data.zeta;
    hold.anchor_phi = out.data.phi;
    if (theta > 0.0) out.segments.push_back(hold);
    for (auto g : s.segments) {
        if (g.type == SegmentType::InitialBlock) continue;
        g.t_start += theta;
        g.t_end += theta;
        out.segments.push_back(g);
    }
    out.durations.tau_wait += theta;
    return out;
}

std::vector<TrajectoryRow> sample_trajectory(const Policy& pol, const PiecewiseStrategy& s, std::size_t n) {
    if (n < 2) throw ValidationError("trajectory needs at least two samples");
    const double T = s.horizon();
    const double eta = s.params.eta;
    auto row = [&](double t, StatePoint st) {
        double z = std::max(st.zeta, 0.0);
        return TrajectoryRow{t, st.phi, st.zeta, pol.classify({std::max(T - t, 0.0), z, st.phi})};
    };
    std::vector<TrajectoryRow> out;
    const bool has_initial = !s.segments.empty() && s.segments.front().type == SegmentType::InitialBlock &&
                             s.segments.front().size > 0.0;
    if (has_initial) out.push_back(row(0.0, {s.data.phi, s.data.zeta}));
    for (std::size_t k = 0; k < n; ++k) {
        const double t = k + 1 == n ? T : T * double(k) / double(n - 1);
        out.push_back(row(t, s.at(t)));
        if (T == 0.0) break;
    }
    if (s.terminal_position != 0.0) {
        StatePoint end = s.at(T);
        out.push_back(row(T, {0.0, end.zeta + eta * std::abs(end.phi)}));
    }
    return out;
}

double strategy_cost(const PiecewiseStrategy& s) {
    using boost::math::quadrature::gauss;
    const MarketParams& p = s.params;
    const double T = s.horizon(), k = p.kappa, eta = p.eta, z0 = s.data.zeta;
    double dev = 0.0, excess = 0.0, weighted = 0.0;
    const double rate = std::max(k, p.beta);
    for (const auto& g : s.segments) {
        if (is_block(g) || !(g.t_end > g.t_start)) continue;
        const int pieces = 1 + int(std::ceil((g.t_end - g.t_start) * rate * 2.0));
        const double h = (g.t_end - g.t_start) / pieces;
        for (int i = 0; i < pieces; ++i) {
            const double a = g.t_start + i * h, b = i + 1 == pieces ? g.t_end : a + h;
            dev += gauss<double, 20>::integrate(
                [&](double t) {
                    double x = s.segment_state(g, t).phi - p.merton;
                    return x * x;
                },
                a, b);
            excess += gauss<double, 20>::integrate(
                [&](double t) {
                    double x = s.segment_state(g, t).zeta - std::exp(-k * t) * z0;
                    return x * x;
                },
                a, b);
            weighted += gauss<double, 20>::integrate([&](double t) { return std::exp(-k * t) * s.segment_state(g, t).zeta; },
                                                     a, b);
        }
    }
    const StatePoint end = s.at(T);
    const double eT = std::exp(-k * T);
    const double block_integral = (eT * end.zeta - z0 + 2.0 * k * weighted) / eta;
    const double a = eta * std::abs(end.phi) + end.zeta - eT * z0;
    const double L = a * a / (4.0 * eta) + 0.5 * std::abs(end.phi) * eT * z0 + 0.25 * eta * s.data.phi * s.data.phi +
                     0.5 * z0 * block_integral + k / (2.0 * eta) * excess;
    return L + 0.5 * p.lambda2() * dev;
}

GridStrategy to_grid(const PiecewiseStrategy& s, std::size_t n_cells) {
    GridStrategy g = GridStrategy::zero(s.horizon(), n_cells, s.data.phi, s.data.zeta);
    double up_prev = 0.0, down_prev = 0.0;
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        const double up = s.bought(g.grid[i]), down = s.sold(g.grid[i]);
        g.d_up[i] = std::max(0.0, up - up_prev);
        g.d_down[i] = std::max(0.0, down - down_prev);
        up_prev = std::max(up, up_prev);
        down_prev = std::max(down, down_prev);
    }
    return g;
}

}
