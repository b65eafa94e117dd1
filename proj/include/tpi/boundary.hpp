#pragma once
#include <string>

#include "tpi/params.hpp"

namespace tpi {

// Partition of the (tau, zeta) quadrant used by the buy boundary.
enum class Piece { I, II_1, II_2, II_3, III_1, III_2, III_3 };

const char* piece_label(Piece p);
Piece piece_from_label(const std::string& s);

struct BoundaryConstants {
    double theta_bar = 0.0;
    double theta_under = 0.0;
    double residual_bar = 0.0;
    double residual_under = 0.0;
};

BoundaryConstants solve_thetas(double kappa);

struct CD {
    double C = 0.0;
    double D = 0.0;
};

struct CurvePoint {
    double tau = 0.0;
    double zbar = 0.0;
    double pbar = 0.0;
};

// c_minus plus c_plus carried as c_plus * e^{beta*tau} so that large tau stays finite.
struct FlowCoefficients {
    double tau = 0.0;
    double c_plus_scaled = 0.0;
    double c_minus = 0.0;

    double c_plus(double beta) const;
    bool operator==(const FlowCoefficients&) const = default;
};

// Flow maps that only depend on the market constants.
namespace hat {
FlowCoefficients coefficients(const MarketParams& p, double tau, double zeta, double phi);
double zeta_buy(const MarketParams& p, double tau, double zeta, double phi, double theta);
double phi_buy(const MarketParams& p, double tau, double zeta, double phi, double theta);
double zeta_sell(const MarketParams& p, const FlowCoefficients& c, double zeta, double theta);
double phi_sell(const MarketParams& p, const FlowCoefficients& c, double theta);
double phi_sell_rate(const MarketParams& p, const FlowCoefficients& c, double theta);
}

struct HatFlows {
    double zeta_buy = 0.0;
    double phi_buy = 0.0;
    double zeta_sell = 0.0;
    double phi_sell = 0.0;
    FlowCoefficients coef;
};

struct Durations {
    double tau_buy = 0.0;
    double tau_wait = 0.0;
    double tau_sell = 0.0;
};

struct BuyPoint {
    double phi = 0.0;
    Piece piece = Piece::I;
    double tau_buy = 0.0;
    double tau_wait = 0.0;
};

class FreeBoundary {
public:
    explicit FreeBoundary(const MarketParams& p);

    const MarketParams& params() const { return p_; }
    const BoundaryConstants& constants() const { return k_; }
    double theta_bar() const { return k_.theta_bar; }
    double theta_under() const { return k_.theta_under; }

    CD C_D(double tau) const;
    // zeta may be negative (mirrored boundary)
    double phi_sell(double tau, double zeta) const;
    // slope of phi_sell in zeta
    double sell_slope(double tau) const;

    double s1(double tau, double theta) const;
    double s2(double tau) const;
    double s3(double tau) const;
    double phi2(double tau, double zeta) const;
    CurvePoint curve(double tau) const;

    FlowCoefficients coefficients(double tau, double zeta, double phi) const;
    double zeta_hat_buy(double tau, double zeta, double phi, double theta) const;
    double phi_hat_buy(double tau, double zeta, double phi, double theta) const;
    double zeta_hat_sell(const FlowCoefficients& c, double zeta, double theta) const;
    double phi_hat_sell(const FlowCoefficients& c, double theta) const;
    // derivative of phi_hat_sell in theta
    double phi_hat_sell_rate(const FlowCoefficients& c, double theta) const;
    HatFlows hat_flows(double tau, double zeta, double phi, double theta) const;

    // upper zeta edge of the piece-II band: zeta_hat_buy(tau, 2mu/kappa, 0, 0)
    double buy_top(double tau) const;
    double tau_buy(double tau, double zeta) const;
    double tau_wait(double tau, double zeta) const;
    Durations durations(double tau, double zeta) const;

    BuyPoint phi_buy_detail(double tau, double zeta) const;
    double phi_buy(double tau, double zeta) const { return phi_buy_detail(tau, zeta).phi; }

private:
    // true when a > b beyond the tie band
    static bool above(double a, double b);
    double solve_wait(double tau, double zeta) const;

    MarketParams p_;
    BoundaryConstants k_;
};

}
