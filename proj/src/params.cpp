#include "tpi/params.hpp"

namespace tpi {

MarketParams make_params(double kappa, double eta, double mu, double sigma, double alpha) {
    auto positive = [](double v, const char* name) {
        if (!std::isfinite(v) || !(v > 0.0))
            throw ValidationError(std::string(name) + " must be finite and > 0");
    };
    positive(kappa, "kappa");
    positive(eta, "eta");
    positive(sigma, "sigma");
    positive(alpha, "alpha");
    if (!std::isfinite(mu) || mu < 0.0) throw ValidationError("mu must be finite and >= 0");

    MarketParams p;
    p.kappa = kappa;
    p.eta = eta;
    p.mu = mu;
    p.sigma = sigma;
    p.alpha = alpha;
    p.lambda = std::sqrt(alpha) * sigma;
    p.root = std::sqrt(kappa * eta + p.lambda * p.lambda);
    p.beta = kappa * p.lambda / p.root;
    p.gamma_plus = p.lambda + p.root;
    p.gamma_minus = p.lambda - p.root;
    p.merton = mu / (p.lambda * p.lambda);
    return p;
}

void validate(const ProblemData& d) {
    if (!std::isfinite(d.tau) || d.tau < 0.0) throw ValidationError("tau must be finite and >= 0");
    if (!std::isfinite(d.zeta) || d.zeta < 0.0) throw ValidationError("zeta must be finite and >= 0");
    if (!std::isfinite(d.phi)) throw ValidationError("phi must be finite");
}

}
