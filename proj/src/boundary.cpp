#include "tpi/boundary.hpp"

#include <algorithm>
#include <cmath>

#include "tpi/errors.hpp"
#include "tpi/roots.hpp"

namespace tpi {

const char* piece_label(Piece p) {
    switch (p) {
        case Piece::I: return "I";
        case Piece::II_1: return "II.1";
        case Piece::II_2: return "II.2";
        case Piece::II_3: return "II.3";
        case Piece::III_1: return "III.1";
        case Piece::III_2: return "III.2";
        case Piece::III_3: return "III.3";
    }
    return "?";
}

Piece piece_from_label(const std::string& s) {
    for (Piece p : {Piece::I, Piece::II_1, Piece::II_2, Piece::II_3, Piece::III_1, Piece::III_2, Piece::III_3})
        if (s == piece_label(p)) return p;
    throw ValidationError("unknown piece label: " + s);
}

BoundaryConstants solve_thetas(double kappa) {
    if (!(kappa > 0.0)) throw ValidationError("kappa must be > 0");
    auto fbar = [](double x) { return std::exp(x) * (2.0 - x) + 2.0 + x; };
    auto dbar = [](double x) { return std::exp(x) * (1.0 - x) + 1.0; };
    auto fund = [](double x) { return std::exp(x) * (x - 1.0) - 1.0; };
    auto dund = [](double x) { return std::exp(x) * x; };

    double xb = roots::bisect_newton(fbar, dbar, 2.0, 3.0);
    double xu = roots::bisect_newton(fund, dund, 1.0, 1.5);
    BoundaryConstants k;
    k.theta_bar = xb / kappa;
    k.theta_under = xu / kappa;
    k.residual_bar = fbar(xb);
    k.residual_under = fund(xu);
    return k;
}

double FlowCoefficients::c_plus(double beta) const { return c_plus_scaled * std::exp(-beta * tau); }

FreeBoundary::FreeBoundary(const MarketParams& p) : p_(p), k_(solve_thetas(p.kappa)) {}

bool FreeBoundary::above(double a, double b) { return a > b + 1e-12 * (1.0 + std::abs(b)); }

CD FreeBoundary::C_D(double tau) const {
    const double gm = p_.gamma_minus, gp = p_.gamma_plus;
    const double e = std::exp(-p_.beta * tau);
    const double q = e * e;
    const double den = q * gm * gm + gp * gp;
    return {(q * gm + gp) / den, 1.0 - 2.0 * p_.kappa * p_.eta * e / den};
}

double FreeBoundary::sell_slope(double tau) const { return p_.kappa / p_.lambda * C_D(tau).C; }

double FreeBoundary::phi_sell(double tau, double zeta) const {
    CD cd = C_D(tau);
    return p_.merton * cd.D + zeta * p_.kappa / p_.lambda * cd.C;
}

double FreeBoundary::s1(double tau, double theta) const {
    const double k = p_.kappa;
    const double em = std::exp(-k * theta);
    const double w = k * theta - 1.0 - em;
    CD cd = C_D(tau);
    return p_.mu * (1.0 - cd.D) * w / (p_.lambda * k * cd.C * w * em + 0.5 * k * (1.0 + em) * (1.0 + em));
}

double FreeBoundary::s2(double tau) const {
    const double k = p_.kappa, l2 = p_.lambda2();
    const double em = std::exp(-k * tau);
    return p_.mu * p_.eta * (k * tau * em + 1.0 + em) /
           (l2 * k * tau + 0.5 * k * p_.eta * (1.0 + em) * (1.0 + em) - l2 * (1.0 + em));
}

double FreeBoundary::s3(double tau) const { return 2.0 * p_.mu * tau / (1.0 + std::exp(-p_.kappa * tau)); }

double FreeBoundary::phi2(double tau, double zeta) const {
    const double em = std::exp(-p_.kappa * tau);
    return (p_.mu * tau - 0.5 * zeta * (1.0 + em)) / (p_.lambda2() * tau + 0.5 * p_.eta * (1.0 + em));
}

CurvePoint FreeBoundary::curve(double tau) const {
    CurvePoint c{tau, 2.0 * p_.mu / p_.kappa, 0.0};
    if (tau > k_.theta_bar) {
        c.zbar = s1(tau - k_.theta_bar, k_.theta_bar);
        c.pbar = p_.merton - 0.5 * p_.kappa * c.zbar * (1.0 - std::exp(-p_.kappa * k_.theta_bar)) / p_.lambda2();
    } else if (tau > k_.theta_under) {
        c.zbar = s2(tau);
        c.pbar = phi2(tau, c.zbar);
    }
    return c;
}

namespace hat {

FlowCoefficients coefficients(const MarketParams& p, double tau, double zeta, double phi) {
    const double gm = p.gamma_minus, gp = p.gamma_plus, k = p.kappa;
    const double e = std::exp(-p.beta * tau);
    const double A = p.eta * p.mu - p.lambda2() * (zeta + p.eta * phi);
    const double em = p.eta * p.mu;
    const double den = p.lambda2() * p.root * (gp * gp - e * e * gm * gm);
    FlowCoefficients c;
    c.tau = tau;
    c.c_plus_scaled = k * (e * gm * A + em * gp) / den;
    c.c_minus = k * (gp * A + e * em * gm) / den;
    return c;
}

double zeta_buy(const MarketParams& p, double tau, double zeta, double phi, double theta) {
    const double b = p.beta, k = p.kappa, u = tau - theta;
    return zeta * p.eta * b * b / (2.0 * p.lambda2()) *
               (std::exp(-b * u) / (k + b) + std::exp(b * u) / (k - b)) -
           p.eta * b / k * (phi - p.merton) * std::sinh(b * u);
}

double phi_buy(const MarketParams& p, double tau, double zeta, double phi, double theta) {
    const double b = p.beta, k = p.kappa, u = tau - theta, m = p.merton;
    return (phi - m) * std::cosh(b * u) - b / k * std::sinh(b * u) * (phi - m + k / p.lambda2() * zeta) + m;
}

double zeta_sell(const MarketParams& p, const FlowCoefficients& c, double zeta, double theta) {
    const double b = p.beta, k = p.kappa;
    const double ek = std::exp(-k * theta);
    const double cpb = c.c_plus_scaled * std::exp(-b * (c.tau - theta));  // c_+ e^{beta theta}
    const double cpk = c.c_plus_scaled * std::exp(-b * c.tau - k * theta);  // c_+ e^{-kappa theta}
    const double cm_b = c.c_minus * std::exp(-b * theta);
    const double cm_k = c.c_minus * ek;
    return zeta * ek + p.eta * (b / (k + b) * (cpb - cpk) + b / (b - k) * (cm_b - cm_k));
}

double phi_sell(const MarketParams& p, const FlowCoefficients& c, double theta) {
    const double b = p.beta;
    return -c.c_plus_scaled * std::exp(-b * (c.tau - theta)) - c.c_minus * std::exp(-b * theta) + p.merton;
}

double phi_sell_rate(const MarketParams& p, const FlowCoefficients& c, double theta) {
    const double b = p.beta;
    return -b * c.c_plus_scaled * std::exp(-b * (c.tau - theta)) + b * c.c_minus * std::exp(-b * theta);
}

}

FlowCoefficients FreeBoundary::coefficients(double tau, double zeta, double phi) const {
    return hat::coefficients(p_, tau, zeta, phi);
}
double FreeBoundary::zeta_hat_buy(double tau, double zeta, double phi, double theta) const {
    return hat::zeta_buy(p_, tau, zeta, phi, theta);
}
double FreeBoundary::phi_hat_buy(double tau, double zeta, double phi, double theta) const {
    return hat::phi_buy(p_, tau, zeta, phi, theta);
}
double FreeBoundary::zeta_hat_sell(const FlowCoefficients& c, double zeta, double theta) const {
    return hat::zeta_sell(p_, c, zeta, theta);
}
double FreeBoundary::phi_hat_sell(const FlowCoefficients& c, double theta) const { return hat::phi_sell(p_, c, theta); }
double FreeBoundary::phi_hat_sell_rate(const FlowCoefficients& c, double theta) const {
    return hat::phi_sell_rate(p_, c, theta);
}

HatFlows FreeBoundary::hat_flows(double tau, double zeta, double phi, double theta) const {
    if (theta < 0.0 || theta > tau) throw ValidationError("hat_flows: theta must lie in [0, tau]");
    HatFlows h;
    h.coef = coefficients(tau, zeta, phi);
    h.zeta_buy = zeta_hat_buy(tau, zeta, phi, theta);
    h.phi_buy = phi_hat_buy(tau, zeta, phi, theta);
    h.zeta_sell = zeta_hat_sell(h.coef, zeta, theta);
    h.phi_sell = phi_hat_sell(h.coef, theta);
    return h;
}

double FreeBoundary::buy_top(double tau) const { return zeta_hat_buy(tau, 2.0 * p_.mu / p_.kappa, 0.0, 0.0); }

double FreeBoundary::tau_buy(double tau, double zeta) const {
    auto F = [&](double z) {
        CurvePoint c = curve(tau - z);
        return zeta_hat_buy(tau, c.zbar, c.pbar, tau - z);
    };
    if (zeta > F(tau)) return tau;
    if (zeta <= F(0.0)) return 0.0;
    return roots::bisect([&](double z) { return F(z) - zeta; }, 0.0, tau);
}

double FreeBoundary::solve_wait(double tau, double zeta) const {
    const double hi = std::min(tau, k_.theta_bar);
    return roots::bisect([&](double z) { return s1(tau - z, z) - zeta; }, 0.0, hi);
}

double FreeBoundary::tau_wait(double tau, double zeta) const {
    const double tb = k_.theta_bar, tu = k_.theta_under;
    if (tau >= tb) {
        CurvePoint c = curve(tau);
        if (zeta <= c.zbar) return solve_wait(tau, zeta);
        CurvePoint cb = curve(tb);
        if (zeta <= zeta_hat_buy(tau, cb.zbar, cb.pbar, tb)) return tb;
    } else if (tau >= tu && zeta <= s1(0.0, tau)) {
        return solve_wait(tau, zeta);
    }
    return tau - tau_buy(tau, zeta);
}

Durations FreeBoundary::durations(double tau, double zeta) const {
    Durations d;
    d.tau_buy = tau_buy(tau, zeta);
    d.tau_wait = tau_wait(tau, zeta);
    d.tau_sell = std::max(0.0, tau - d.tau_buy - d.tau_wait);
    return d;
}

BuyPoint FreeBoundary::phi_buy_detail(double tau, double zeta) const {
    BuyPoint out;
    if (p_.mu == 0.0) {
        out.phi = phi_sell(tau, -zeta);
        out.piece = Piece::I;
        out.tau_buy = tau;
        return out;
    }
    const double top = buy_top(tau);
    const CurvePoint c = curve(tau);
    const double tb = k_.theta_bar, tu = k_.theta_under;
    if (above(zeta, top)) {
        out.phi = phi_sell(tau, -zeta);
        out.piece = Piece::I;
        out.tau_buy = tau;
        return out;
    }
    if (above(zeta, c.zbar)) {
        out.tau_buy = tau_buy(tau, zeta);
        const double ts = tau - out.tau_buy;
        const CurvePoint cs = curve(ts);
        out.phi = phi_hat_buy(tau, cs.zbar, cs.pbar, ts);
        out.piece = ts > tb ? Piece::II_1 : (ts > tu ? Piece::II_2 : Piece::II_3);
        out.tau_wait = tau_wait(tau, zeta);
        return out;
    }
    if (tau >= tb) {
        out.piece = Piece::III_1;
    } else if (tau >= tu) {
        out.piece = above(zeta, s1(0.0, tau)) ? Piece::III_2 : Piece::III_1;
    } else {
        out.piece = above(zeta, s3(tau)) ? Piece::III_3 : Piece::III_2;
    }
    switch (out.piece) {
        case Piece::III_1:
            out.tau_wait = solve_wait(tau, std::min(zeta, tau >= tb ? c.zbar : s1(0.0, tau)));
            out.phi = phi_sell(tau - out.tau_wait, zeta * std::exp(-p_.kappa * out.tau_wait));
            break;
        case Piece::III_2:
            out.tau_wait = tau;
            out.phi = phi2(tau, zeta);
            break;
        default:
            out.tau_wait = tau;
            out.phi = 0.0;
    }
    return out;
}

}
