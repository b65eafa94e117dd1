#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <chrono>
#include <cmath>
#include <random>

#include "tpi/boundary.hpp"

using namespace tpi;

namespace {

double bisection(double (*f)(double), double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double upper_equation(double x) { return std::exp(x) * (2 - x) + 2 + x; }
double lower_equation(double x) { return std::exp(x) * (x - 1) - 1; }

// classical RK4 on y'' = b^2 (y - m)
std::vector<double> rk4(double b, double m, double y0, double v0, double T, int n) {
    std::vector<double> out{y0};
    const double h = T / n;
    double y = y0, v = v0;
    auto acc = [&](double yy) { return b * b * (yy - m); };
    for (int i = 0; i < n; ++i) {
        const double k1y = v, k1v = acc(y);
        const double k2y = v + 0.5 * h * k1v, k2v = acc(y + 0.5 * h * k1y);
        const double k3y = v + 0.5 * h * k2v, k3v = acc(y + 0.5 * h * k2y);
        const double k4y = v + h * k3v, k4v = acc(y + h * k3y);
        y += h / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
        v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
        out.push_back(y);
    }
    return out;
}

const FreeBoundary& fb() {
    static const FreeBoundary b(default_params());
    return b;
}

}

TEST_CASE("boundary constants match an independent bisection") {
    const BoundaryConstants k = solve_thetas(1.0);
    const double ub = bisection(upper_equation, 2.0, 3.0);
    const double lb = bisection(lower_equation, 1.0, 1.5);
    CHECK(std::abs(k.theta_bar - ub) < 1e-12);
    CHECK(std::abs(k.theta_under - lb) < 1e-12);
    CHECK(std::abs(upper_equation(k.theta_bar)) < 1e-12);
    CHECK(std::abs(lower_equation(k.theta_under)) < 1e-12);
    CHECK(k.theta_under < k.theta_bar);
    for (double kappa : {0.5, 2.0, 4.0}) {
        const BoundaryConstants s = solve_thetas(kappa);
        CHECK(s.theta_bar == doctest::Approx(k.theta_bar / kappa).epsilon(1e-14));
        CHECK(s.theta_under == doctest::Approx(k.theta_under / kappa).epsilon(1e-14));
    }
    CHECK_THROWS_AS(solve_thetas(0.0), ValidationError);
}

TEST_CASE("C and D at zero, at one and in the long-horizon limit") {
    const MarketParams p = default_params();
    const CD c0 = fb().C_D(0.0);
    CHECK(c0.C == doctest::Approx(p.lambda / (2 * p.lambda2() + p.kappa * p.eta)).epsilon(1e-15));
    CHECK(c0.C == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(c0.D == doctest::Approx(0.5).epsilon(1e-15));
    const CD inf = fb().C_D(200.0);
    CHECK(inf.C == doctest::Approx(1.0 / p.gamma_plus).epsilon(1e-14));
    CHECK(inf.D == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::isfinite(fb().C_D(1e4).C));

    using big = boost::multiprecision::cpp_bin_float_50;
    const big kappa = 1, eta = 2, lambda = 1;
    const big root = sqrt(kappa * eta + lambda * lambda);
    const big beta = kappa * lambda / root, gp = lambda + root, gm = lambda - root;
    const big tau = 1;
    const big em = exp(-beta * tau), ep = exp(beta * tau);
    const big den = em * gm * gm + ep * gp * gp;
    const big C = (em * gm + ep * gp) / den;
    const big D = 1 - 2 * kappa * eta / den;
    const CD c1 = fb().C_D(1.0);
    CHECK(std::abs(c1.C - C.convert_to<double>()) < 1e-13);
    CHECK(std::abs(c1.D - D.convert_to<double>()) < 1e-13);

    for (double tau = 0.0; tau < 20.0; tau += 0.37) {
        const CD c = fb().C_D(tau);
        CHECK(c.C > 0.0);
        CHECK(c.D > 0.0);
        CHECK(c.D < 1.0);
    }
}

TEST_CASE("sell boundary values") {
    const MarketParams p = default_params();
    CHECK(fb().phi_sell(0.0, 0.0) == doctest::Approx(2 * p.mu / (2 * p.lambda2() + p.kappa * p.eta)));
    CHECK(fb().phi_sell(0.0, 0.0) == doctest::Approx(5.0));
    for (double tau = 0.0; tau < 30.0; tau += 0.5) {
        CHECK(fb().phi_sell(tau, 0.0) == doctest::Approx(p.merton * fb().C_D(tau).D));
        CHECK(fb().phi_sell(tau, 0.0) > 0.0);
        double prev = fb().phi_sell(tau, -5.0);
        for (double z = -4.5; z < 30.0; z += 0.5) {
            const double cur = fb().phi_sell(tau, z);
            CHECK(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("curve pieces and anchors") {
    const MarketParams p = default_params();
    const double tu = fb().theta_under(), tb = fb().theta_bar();
    for (double tau : {0.0, 0.3, 1.0, tu}) {
        const CurvePoint c = fb().curve(tau);
        CHECK(c.zbar == doctest::Approx(2 * p.mu / p.kappa));
        CHECK(c.pbar == 0.0);
    }
    CHECK(fb().s3(0.0) == 0.0);
    CHECK(fb().s3(tu) == doctest::Approx(2 * p.mu / p.kappa).epsilon(1e-12));
    for (double tau = 0.05; tau < tu; tau += 0.1) CHECK(std::abs(fb().phi2(tau, fb().s3(tau))) < 1e-13);

    // continuity across the two knots
    for (double knot : {tu, tb}) {
        const CurvePoint a = fb().curve(knot - 1e-9), b = fb().curve(knot + 1e-9);
        CHECK(std::abs(a.zbar - b.zbar) < 1e-6);
        CHECK(std::abs(a.pbar - b.pbar) < 1e-6);
    }

    CurvePoint prev = fb().curve(0.0);
    for (double tau = 0.01; tau < 15.0; tau += 0.01) {
        const CurvePoint c = fb().curve(tau);
        CHECK(c.zbar <= prev.zbar + 1e-12);
        CHECK(c.pbar >= prev.pbar - 1e-12);
        CHECK(c.zbar > 0.0);
        CHECK(c.zbar <= 2 * p.mu / p.kappa + 1e-12);
        CHECK(c.pbar >= 0.0);
        CHECK(c.pbar < p.merton);
        prev = c;
    }
}

TEST_CASE("hat flows start at the given state") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double tau = 6 * u(rng), zeta = 25 * u(rng), phi = 30 * u(rng) - 10;
        const HatFlows h = fb().hat_flows(tau, zeta, phi, tau);
        CHECK(h.zeta_buy == doctest::Approx(zeta).epsilon(1e-13));
        CHECK(h.phi_buy == doctest::Approx(phi).epsilon(1e-13));
        const double ps = fb().phi_sell(tau, zeta);
        const FlowCoefficients c = fb().coefficients(tau, zeta, ps);
        CHECK(fb().zeta_hat_sell(c, zeta, 0.0) == doctest::Approx(zeta).epsilon(1e-12));
        CHECK(fb().phi_hat_sell(c, 0.0) == doctest::Approx(ps).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fb().hat_flows(1.0, 1.0, 0.0, 1.5), ValidationError);
    const FlowCoefficients far = fb().coefficients(50.0, 3.0, fb().phi_sell(50.0, 3.0));
    CHECK(std::isfinite(fb().phi_hat_sell(far, 25.0)));
}

TEST_CASE("sell flow solves the second-order equation") {
    const MarketParams p = default_params();
    for (double tau : {0.5, 1.0, 3.0, 6.0}) {
        for (double zeta : {0.0, 4.0, 18.0, -6.0}) {
            const double ps = fb().phi_sell(tau, zeta);
            const FlowCoefficients c = fb().coefficients(tau, zeta, ps);
            const double v0 = p.beta * (c.c_minus - c.c_plus(p.beta));
            const int n = 4000;
            const auto ref = rk4(p.beta, p.merton, ps, v0, tau, n);
            for (int i = 0; i <= n; i += 200)
                CHECK(std::abs(fb().phi_hat_sell(c, tau * i / n) - ref[i]) < 1e-8);
            // spread of the flow: decay plus eta times the sold amount
            for (double th = 0.05 * tau; th < tau; th += 0.1 * tau) {
                const double h = 1e-5;
                const double dz = (fb().zeta_hat_sell(c, zeta, th + h) - fb().zeta_hat_sell(c, zeta, th - h)) / (2 * h);
                const double rate = fb().phi_hat_sell_rate(c, th);
                CHECK(dz == doctest::Approx(-p.kappa * fb().zeta_hat_sell(c, zeta, th) - p.eta * rate).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("monotonicity battery") {
    const double tu = fb().theta_under(), tb = fb().theta_bar();
    // item 1 and 3: anchored buy flows in tau
    for (double theta : {0.0, 0.5, tu, 2.0, tb, 4.0}) {
        const CurvePoint c = fb().curve(theta);
        CHECK(fb().zeta_hat_buy(theta, c.zbar, c.pbar, theta) == doctest::Approx(c.zbar));
        CHECK(fb().phi_hat_buy(theta, c.zbar, c.pbar, theta) == doctest::Approx(c.pbar));
        double pz = c.zbar, pp = c.pbar;
        for (double tau = theta + 0.05; tau < theta + 5; tau += 0.05) {
            const double z = fb().zeta_hat_buy(tau, c.zbar, c.pbar, theta);
            const double ph = fb().phi_hat_buy(tau, c.zbar, c.pbar, theta);
            CHECK(z > pz);
            CHECK(ph < pp);
            pz = z;
            pp = ph;
        }
    }
    // item 2
    for (double tau : {0.5, 1.5, 3.0, 6.0}) {
        double prev = -1e300;
        for (double z = 0.0; z <= tau; z += tau / 100) {
            const CurvePoint c = fb().curve(tau - z);
            const double v = fb().zeta_hat_buy(tau, c.zbar, c.pbar, tau - z);
            CHECK(v > prev);
            prev = v;
        }
    }
    // items 4 and 5; the mirrored flow is only monotone where it is used, above the piece-II band
    for (double tau : {0.5, 2.0, 5.0}) {
        for (double zeta : {0.5, 5.0, 20.0}) {
            for (int sign : {1, -1}) {
                const double zs = sign > 0 ? zeta : -fb().buy_top(tau) * (1.0 + zeta / 10);
                const FlowCoefficients c = fb().coefficients(tau, zs, fb().phi_sell(tau, zs));
                double prev = fb().phi_hat_sell(c, 0.0);
                CHECK(prev == doctest::Approx(fb().phi_sell(tau, zs)));
                for (double t = tau / 50; t <= tau + 1e-12; t += tau / 50) {
                    const double v = fb().phi_hat_sell(c, t);
                    if (sign > 0)
                        CHECK(v < prev);
                    else
                        CHECK(v > prev);
                    prev = v;
                }
            }
        }
    }
}

TEST_CASE("buying duration") {
    for (double tau : {0.4, 1.0, 2.0, 3.0, 5.0}) {
        CHECK(fb().tau_buy(tau, fb().curve(tau).zbar) == doctest::Approx(0.0).epsilon(1e-10));
        const CurvePoint c0 = fb().curve(0.0);
        CHECK(fb().tau_buy(tau, fb().zeta_hat_buy(tau, c0.zbar, c0.pbar, 0.0)) == doctest::Approx(tau));
        const double theta = tau / 2;
        const CurvePoint c = fb().curve(theta);
        const double zeta = fb().zeta_hat_buy(tau, c.zbar, c.pbar, theta);
        if (zeta > fb().curve(tau).zbar + 1e-9)
            CHECK(std::abs(fb().tau_buy(tau, zeta) - (tau - theta)) < 1e-10);
        CHECK(fb().tau_buy(tau, 1e6) == tau);
        CHECK(fb().tau_buy(tau, 0.0) == 0.0);
    }
}

TEST_CASE("waiting duration") {
    const double tu = fb().theta_under(), tb = fb().theta_bar();
    for (double tau : {tb, 3.0, 5.0, 8.0})
        CHECK(fb().tau_wait(tau, fb().curve(tau).zbar) == doctest::Approx(tb).epsilon(1e-10));
    for (double tau : {tu, 1.6, 2.0, 2.3})
        CHECK(fb().tau_wait(tau, fb().s1(0.0, tau)) == doctest::Approx(tau).epsilon(1e-10));
    for (double tau : {1.5, 2.2, 4.0}) {
        const double hi = tau >= tb ? fb().curve(tau).zbar : fb().s1(0.0, tau);
        for (double frac : {0.1, 0.4, 0.8}) {
            const double zeta = frac * hi;
            const double z = fb().tau_wait(tau, zeta);
            CHECK(std::abs(fb().s1(tau - z, z) - zeta) < 1e-10);
            const Durations d = fb().durations(tau, zeta);
            CHECK(d.tau_buy >= 0.0);
            CHECK(d.tau_wait <= tau);
            CHECK(d.tau_buy + d.tau_wait + d.tau_sell == doctest::Approx(tau));
        }
    }
}

TEST_CASE("buy boundary pieces") {
    const MarketParams p = default_params();
    for (double tau : {0.3, 1.0, 2.0, 4.0}) {
        const double zeta = fb().buy_top(tau) + 1.0;
        const BuyPoint b = fb().phi_buy_detail(tau, zeta);
        CHECK(b.piece == Piece::I);
        CHECK(b.phi == doctest::Approx(fb().phi_sell(tau, -zeta)));
    }
    for (double tau : {0.2, 0.6, 1.0}) {
        for (double frac : {0.2, 0.6, 0.99}) {
            const double zeta = fb().s3(tau) + frac * (2 * p.mu / p.kappa - fb().s3(tau));
            const BuyPoint b = fb().phi_buy_detail(tau, zeta);
            CHECK(b.phi == 0.0);
            CHECK(b.piece == Piece::III_3);
        }
    }
    for (double tau : {0.5, fb().theta_under(), 2.0, fb().theta_bar(), 5.0})
        CHECK(fb().phi_buy(tau, fb().curve(tau).zbar) == doctest::Approx(fb().curve(tau).pbar).epsilon(1e-9));

    for (double tau = 0.0; tau <= 5.0; tau += 0.25)
        for (double zeta = 0.0; zeta <= 25.0; zeta += 0.5) CHECK(fb().phi_buy(tau, zeta) < fb().phi_sell(tau, zeta));

    for (Piece pc : {Piece::I, Piece::II_1, Piece::II_2, Piece::II_3, Piece::III_1, Piece::III_2, Piece::III_3})
        CHECK(piece_from_label(piece_label(pc)) == pc);
    CHECK_THROWS_AS(piece_from_label("IV"), ValidationError);
}

TEST_CASE("constants solve quickly") {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 100; ++i) (void)solve_thetas(1.0 + 0.01 * i);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ms / 100 < 1.0);
}

TEST_CASE("zero drift degrades to the liquidation boundary") {
    const FreeBoundary z(make_params(1.0, 2.0, 0.0, 1.0, 1.0));
    for (double tau : {0.5, 2.0})
        for (double zeta : {0.0, 3.0}) CHECK(z.phi_buy(tau, zeta) == doctest::Approx(z.phi_sell(tau, -zeta)));
}
