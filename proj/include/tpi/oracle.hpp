#pragma once
#include <cstdint>
#include <optional>
#include <vector>

#include "tpi/model.hpp"
#include "tpi/policy.hpp"

namespace tpi {

struct OracleConfig {
    std::size_t n_steps = 400;
    std::size_t max_iters = 200000;
    double tol = 1e-13;  // relative cost decrease over a window of iterations
    std::size_t window = 200;
};

struct OracleResult {
    GridStrategy strategy;
    double cost = 0.0;
    std::size_t iters = 0;
    bool converged = false;
};

// Minimizes tracking_cost over nonnegative increments at nodes 0..N-1 of a uniform grid.
OracleResult minimize_tracking(const MarketParams& p, const ProblemData& d, const OracleConfig& cfg = {},
                               const GridStrategy* start = nullptr);

struct McConfig {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 42;
    std::size_t n_time_steps = 0;  // Gaussian increments per path; 0 = one per grid cell, else a multiple of the cells
    std::size_t threads = 0;   // 0 = hardware concurrency
    double xi0 = 0.0;
    double price0 = 0.0;
};

struct McResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
    double log_neg_estimate = 0.0;  // log(-estimate), finite even when estimate under/overflows
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
};

McResult mc_expected_utility(const MarketParams& p, const GridStrategy& s, const McConfig& cfg);
// -exp(-alpha * mean_variance_value), the exact expectation for deterministic holdings
double gaussian_expected_utility(const MarketParams& p, const GridStrategy& s, double book0);

// Mass-preserving random perturbation of the increments: (1-s) x + s * sum(x) * Dirichlet weights
GridStrategy perturb_increments(const GridStrategy& s, double strength, std::uint64_t seed);

// Holdings sampled over time; duplicated times encode jumps (value after the last duplicate holds).
struct SampledPath {
    std::vector<double> t;
    std::vector<double> phi;
};

SampledPath sampled(const GridStrategy& s);
SampledPath sampled(const PiecewiseStrategy& s, std::size_t n);
double trajectory_distance(const SampledPath& a, const SampledPath& b);

}
