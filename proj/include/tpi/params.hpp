#pragma once
#include <cmath>
#include <string>

#include "tpi/errors.hpp"

namespace tpi {

struct MarketParams {
    double kappa = 1.0;
    double eta = 2.0;
    double mu = 10.0;
    double sigma = 1.0;
    double alpha = 1.0;

    // derived
    double lambda = 1.0;
    double root = 0.0;  // sqrt(kappa*eta + lambda^2)
    double beta = 0.0;
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;
    double merton = 0.0;  // mu / lambda^2

    double lambda2() const { return lambda * lambda; }
};

MarketParams make_params(double kappa, double eta, double mu, double sigma, double alpha);
inline MarketParams default_params() { return make_params(1.0, 2.0, 10.0, 1.0, 1.0); }

struct ProblemData {
    double tau = 0.0;
    double zeta = 0.0;
    double phi = 0.0;
};

void validate(const ProblemData& d);

}
