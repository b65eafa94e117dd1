#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "tpi/serialize.hpp"

using namespace tpi;

TEST_CASE("doubles are written losslessly") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, i % 20 - 10);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(5.0) == "5");
}

TEST_CASE("grid strategies round trip through JSON and CSV") {
    std::mt19937_64 rng(2);
    const GridStrategy s = testing::random_grid_strategy(rng, 30, 1.3, -2.5, 0.7);
    CHECK(grid_strategy_from_json(to_json(s)) == s);
    std::stringstream csv;
    write_grid_csv(csv, s);
    CHECK(csv.str().rfind("t,d_up,d_down\n", 0) == 0);
    CHECK(grid_strategy_from_csv(csv, s.phi0, s.zeta0) == s);
    CHECK_THROWS_AS(grid_strategy_from_json("{\"grid\": [0, 1]}"), ValidationError);
    CHECK_THROWS_AS(grid_strategy_from_json("not json"), ValidationError);
}

TEST_CASE("piecewise strategies round trip through JSON") {
    const Policy pol(default_params());
    for (const ProblemData d : {ProblemData{5.0, 20.0, 5.0}, ProblemData{2.0, 0.5, 20.0}, ProblemData{0.4, 1.0, -8.0},
                                ProblemData{1.0, 60.0, pol.boundary().phi_buy(1.0, 60.0)}, ProblemData{0.0, 1.0, 2.0}}) {
        const PiecewiseStrategy s = pol.build(d);
        const std::string text = to_json(s);
        const PiecewiseStrategy back = piecewise_strategy_from_json(text);
        CHECK(back == s);
        CHECK(to_json(back) == text);
    }
}

TEST_CASE("first-order reports round trip through JSON") {
    const Policy pol(default_params());
    const FocReport r = check_foc(pol.build({3.0, 20.0, 12.0}), 50);
    const FocReport back = foc_report_from_json(to_json(r));
    CHECK(back.times == r.times);
    CHECK(back.up == r.up);
    CHECK(back.down == r.down);
    CHECK(back.buy_active == r.buy_active);
    CHECK(back.sell_active == r.sell_active);
    CHECK(back.pass == r.pass);
    CHECK(back.exclusive == r.exclusive);
    CHECK(back.min_value == r.min_value);
}

TEST_CASE("boundary and trajectory tables") {
    const FreeBoundary fb(default_params());
    std::stringstream out;
    write_boundary_csv(out, fb, 5.0, 25.0, 4, 5);
    std::string line;
    std::getline(out, line);
    CHECK(line == "tau,zeta,phi_buy,phi_sell,piece");
    int rows = 0;
    while (std::getline(out, line)) {
        ++rows;
        std::stringstream ls(line);
        std::string f[5];
        for (auto& x : f) std::getline(ls, x, ',');
        const double tau = std::stod(f[0]), zeta = std::stod(f[1]);
        CHECK(std::stod(f[2]) == fb.phi_buy(tau, zeta));
        CHECK(std::stod(f[3]) == fb.phi_sell(tau, zeta));
        CHECK(f[4] == piece_label(fb.phi_buy_detail(tau, zeta).piece));
    }
    CHECK(rows == 20);
    CHECK_THROWS_AS(write_boundary_csv(out, fb, 5.0, 25.0, 1, 5), ValidationError);

    const Policy pol(default_params());
    std::stringstream traj;
    write_trajectory_csv(traj, sample_trajectory(pol, pol.build({2.0, 0.5, 20.0}), 5));
    std::getline(traj, line);
    CHECK(line == "t,phi,zeta,region");
    CHECK_THROWS_AS(write_file("/nonexistent/dir/file.txt", "x"), IoError);
}
