#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "tpi/model.hpp"

using namespace tpi;

TEST_CASE("market parameters derive the impact constants") {
    const MarketParams p = default_params();
    CHECK(p.lambda == doctest::Approx(1.0));
    CHECK(p.beta > 0.0);
    CHECK(p.beta < p.kappa);
    CHECK(p.gamma_plus > 0.0);
    CHECK(p.gamma_minus < 0.0);
    CHECK(p.gamma_plus * p.gamma_minus == doctest::Approx(-p.kappa * p.eta).epsilon(1e-14));
    CHECK(p.merton == doctest::Approx(10.0));
    const MarketParams q = make_params(0.7, 3.0, 2.0, 0.5, 4.0);
    CHECK(q.lambda == doctest::Approx(1.0));
    CHECK(q.beta == doctest::Approx(0.7 * 1.0 / std::sqrt(1.0 + 2.1)));
}

TEST_CASE("market parameters reject invalid inputs") {
    CHECK_THROWS_AS(make_params(0.0, 2, 10, 1, 1), ValidationError);
    CHECK_THROWS_AS(make_params(1, -2, 10, 1, 1), ValidationError);
    CHECK_THROWS_AS(make_params(1, 2, -1, 1, 1), ValidationError);
    CHECK_THROWS_AS(make_params(1, 2, 10, 0, 1), ValidationError);
    CHECK_THROWS_AS(make_params(1, 2, 10, 1, std::nan("")), ValidationError);
    CHECK_NOTHROW(make_params(1, 2, 0, 1, 1));
    CHECK_THROWS_AS(validate(ProblemData{-1, 0, 0}), ValidationError);
    CHECK_THROWS_AS(validate(ProblemData{1, -0.5, 0}), ValidationError);
}

TEST_CASE("grid strategies are validated") {
    GridStrategy s = GridStrategy::zero(1.0, 4, 0.0, 0.0);
    CHECK_NOTHROW(s.validate());
    s.d_up[2] = -1.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = GridStrategy::zero(1.0, 4, 0.0, 0.0);
    s.grid[2] = s.grid[1];
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = GridStrategy::zero(1.0, 4, 0.0, 0.0);
    s.d_down.pop_back();
    CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("spread decays and jumps with trades") {
    const MarketParams p = default_params();
    GridStrategy s = GridStrategy::zero(2.0, 10, 0.0, 4.0);
    CHECK(spread_at(p, s, std::log(2.0)).zeta_t == doctest::Approx(2.0).epsilon(1e-14));
    s = GridStrategy::zero(1.0, 10, 0.0, 0.0);
    s.d_up[0] = 3.0;
    CHECK(spread_at(p, s, 0.0).zeta_t == doctest::Approx(6.0));
    CHECK_THROWS_AS(spread_at(p, s, 1.5), ValidationError);
    CHECK_THROWS_AS(spread_at(p, s, -0.1), ValidationError);
}

TEST_CASE("spread matches a direct summation on random strategies") {
    const MarketParams p = make_params(1.3, 0.7, 5.0, 1.0, 1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        GridStrategy s = testing::random_grid_strategy(rng, 50, 3.0, 1.0, 2.0);
        for (int q = 0; q < 20; ++q) {
            const double t = 3.0 * u(rng);
            double acc = s.zeta0;
            for (std::size_t i = 0; i < s.nodes() && s.grid[i] <= t; ++i)
                acc += p.eta * std::exp(p.kappa * s.grid[i]) * (s.d_up[i] + s.d_down[i]);
            const SpreadState st = spread_at(p, s, t);
            CHECK(st.zeta_t == doctest::Approx(std::exp(-p.kappa * t) * acc).epsilon(1e-12));
            CHECK(st.zeta_t >= st.decayed_initial);
        }
    }
}

TEST_CASE("liquidity cost of simple strategies") {
    const MarketParams p = default_params();
    GridStrategy s = GridStrategy::zero(1.0, 5, 0.0, 0.0);
    for (double t : {0.0, 0.3, 1.0}) CHECK(liquidity_cost(p, s, t) == doctest::Approx(0.0));
    s = GridStrategy::zero(1.0, 5, 2.0, 1.0);
    CHECK(liquidity_cost(p, s, 0.0) == doctest::Approx(5.0));
    CHECK(liquidity_cost_initial(p, 2.0, 1.0) == doctest::Approx(5.0));
    s = GridStrategy::zero(1.0, 5, 0.0, 0.0);
    s.d_up[0] = 3.0;
    const double L0 = liquidity_cost(p, s, 0.0);
    CHECK(L0 == doctest::Approx(18.0));
    // alternative representation: half spread times position, book depth, spread paid on the way, quadratic variation
    const double phi = 3.0, zeta_after = 6.0, zeta_before = 0.0;
    const double alt = 0.5 * phi * zeta_after + 0.25 * p.eta * phi * phi + 0.5 * zeta_before * phi + 0.25 * p.eta * phi * phi;
    CHECK(L0 == doctest::Approx(alt));
}

TEST_CASE("liquidity cost equals the cash lost against a flat price") {
    std::mt19937_64 rng(5);
    for (const MarketParams& p : {default_params(), make_params(0.4, 3.0, 1.0, 2.0, 0.5)}) {
        for (int rep = 0; rep < 30; ++rep) {
            GridStrategy s = testing::random_grid_strategy(rng, 30, 2.5, -3.0 + 0.2 * rep, 0.1 * rep);
            const double lost = -testing::flat_price_wealth(p, s);
            CHECK(liquidity_cost(p, s, s.horizon()) == doctest::Approx(lost).epsilon(1e-11));
            CHECK(liquidity_cost(p, s, s.horizon()) >= 0.0);
        }
    }
}

TEST_CASE("tracking cost on benchmark strategies") {
    const MarketParams p = default_params();
    GridStrategy s = GridStrategy::zero(1.0, 20, 10.0, 0.0);
    CHECK(tracking_cost(p, s) == doctest::Approx(100.0));
    s = GridStrategy::zero(1.0, 20, 0.0, 0.0);
    CHECK(tracking_cost(p, s) == doctest::Approx(50.0));
}

TEST_CASE("tracking cost matches cash accounting plus a quadrature of the deviation") {
    const MarketParams p = default_params();
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        GridStrategy s = testing::random_grid_strategy(rng, 25, 1.7, 4.0, 3.0);
        const auto h = s.holdings();
        double dev = 0.0;
        for (std::size_t i = 0; i + 1 < s.nodes(); ++i) {
            const double x = h[i] - p.merton;
            dev += testing::simpson([&](double) { return x * x; }, s.grid[i], s.grid[i + 1], 400);
        }
        const double oracle = -testing::flat_price_wealth(p, s) + 0.5 * p.lambda2() * dev;
        CHECK(tracking_cost(p, s) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("cost lower bound and spread positivity hold at every node") {
    const MarketParams p = default_params();
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        GridStrategy s = testing::random_grid_strategy(rng, 20, 3.0, 2.0 - 0.1 * rep, 0.5);
        double cum = 0.0;
        for (std::size_t i = 0; i < s.nodes(); ++i) {
            CHECK(liquidity_cost(p, s, s.grid[i]) >= liquidity_lower_bound(p, s, i) - 1e-10);
            cum += s.d_up[i] + s.d_down[i];
            const SpreadState st = spread_at(p, s, s.grid[i]);
            CHECK(st.zeta_t - st.decayed_initial >= p.eta * std::exp(-p.kappa * s.grid[i]) * cum - 1e-12);
        }
    }
}

TEST_CASE("tracking cost is convex along random segments") {
    const MarketParams p = default_params();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        GridStrategy x = testing::random_grid_strategy(rng, 15, 2.0, 1.5, 2.0);
        GridStrategy y = testing::random_grid_strategy(rng, 15, 2.0, 1.5, 2.0);
        y.grid = x.grid;
        const double w = u(rng);
        GridStrategy m = x;
        for (std::size_t i = 0; i < x.nodes(); ++i) {
            m.d_up[i] = w * x.d_up[i] + (1 - w) * y.d_up[i];
            m.d_down[i] = w * x.d_down[i] + (1 - w) * y.d_down[i];
        }
        CHECK(tracking_cost(p, m) <= w * tracking_cost(p, x) + (1 - w) * tracking_cost(p, y) + 1e-10);
    }
}

TEST_CASE("tracking gradient matches finite differences") {
    const MarketParams p = default_params();
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 5; ++rep) {
        GridStrategy s = testing::random_grid_strategy(rng, 12, 1.5, 3.0 + rep, 1.0, 0.9);
        const CostGradient g = tracking_gradient(p, s);
        REQUIRE(std::abs(s.holdings().back()) > 0.1);
        for (std::size_t j = 0; j < s.nodes(); ++j) {
            for (int side = 0; side < 2; ++side) {
                auto& v = side == 0 ? s.d_up : s.d_down;
                const double h = 1e-5, keep = v[j];
                v[j] = keep + h;
                const double fp = tracking_cost(p, s);
                v[j] = keep + 2 * h;
                const double fpp = tracking_cost(p, s);
                v[j] = keep;
                const double f0 = tracking_cost(p, s);
                const double fd = (-3 * f0 + 4 * fp - fpp) / (2 * h);
                CHECK((side == 0 ? g.up[j] : g.down[j]) == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("liquidation wealth: trivial cases and the two computations agree") {
    const MarketParams p = default_params();
    GridStrategy s = GridStrategy::zero(1.0, 10, 0.0, 0.0);
    std::vector<double> path(11);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0.0, 1.0);
    path[0] = 50.0;
    for (std::size_t i = 1; i < path.size(); ++i) path[i] = path[i - 1] + 1.0 + z(rng) * 0.3;
    CHECK(liquidation_wealth(p, s, path, 7.0).direct == doctest::Approx(7.0));

    s.d_up[0] = 2.0;
    s.d_down[0] = 2.0;
    const std::vector<double> flat(11, 50.0);
    const WealthResult rt = liquidation_wealth(p, s, flat, 7.0);
    CHECK(rt.direct < 7.0);

    for (int rep = 0; rep < 50; ++rep) {
        GridStrategy r = testing::random_grid_strategy(rng, 40, 2.0, 3.0 - 0.1 * rep, 1.0);
        std::vector<double> pr(r.nodes());
        pr[0] = 100.0;
        for (std::size_t i = 1; i < pr.size(); ++i) {
            const double h = r.grid[i] - r.grid[i - 1];
            pr[i] = pr[i - 1] + p.mu * h + p.sigma * std::sqrt(h) * z(rng);
        }
        const WealthResult w = liquidation_wealth(p, r, pr, 12.0);
        CHECK(w.direct == doctest::Approx(w.decomposition).epsilon(1e-8));
    }
    CHECK_THROWS_AS(liquidation_wealth(p, s, std::vector<double>(3, 0.0), 0.0), ValidationError);
}

TEST_CASE("mean-variance value identity") {
    const MarketParams p = default_params();
    GridStrategy s = GridStrategy::zero(1.0, 10, 0.0, 0.0);
    CHECK(mean_variance_value(p, s, 3.0) == doctest::Approx(3.0));
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        GridStrategy r = testing::random_grid_strategy(rng, 20, 1.2, 1.0, 0.5);
        const double T = r.horizon();
        const double lhs = mean_variance_value(p, r, 2.5) + tracking_cost(p, r) - p.mu * p.mu * T / (2 * p.lambda2());
        CHECK(lhs == doctest::Approx(2.5).epsilon(1e-10));
    }
    const MarketParams q = make_params(1.0, 1e-6, 10.0, 1.0, 1.0);
    GridStrategy m = GridStrategy::zero(1.0, 10, 0.0, 0.0);
    m.d_up[0] = q.merton;
    CHECK(std::abs(mean_variance_value(q, m, 0.0) - q.mu * q.mu / (2 * q.lambda2())) < 1e-3);
}
