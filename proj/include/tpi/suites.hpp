#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "tpi/params.hpp"

namespace tpi {

struct VerifyOptions {
    std::vector<std::string> suites;  // empty = all
    std::uint64_t seed = 42;
    double tol = 1e-6;
    double tau_max = 5.0;
    double zeta_max = 25.0;
    double phi_min = -15.0;
    double phi_max = 25.0;
    std::size_t foc_states = 200;
    std::size_t foc_samples = 1000;
    std::size_t ordering_grid = 200;
    std::size_t crossing_paths = 1000;
    std::size_t ode_states = 100;
    std::size_t dpp_states = 100;
    std::size_t dpp_times = 20;
    std::size_t wealth_strategies = 100;
    std::size_t oracle_states = 30;
    std::size_t oracle_steps = 400;
    std::size_t mc_paths = 100000;
    std::size_t mc_perturbations = 20;
    std::size_t mc_cells = 50;
    double mc_tau = 0.2;
    double mc_zeta = 0.0;
    double mc_phi = 0.0;
    bool inject_perturbation = false;
};

struct SuiteResult {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string message;
    std::string details;  // JSON object text
};

struct VerifyReport {
    std::vector<SuiteResult> suites;
    bool pass = false;
};

const std::vector<std::string>& suite_names();
SuiteResult run_suite(const MarketParams& p, const std::string& name, const VerifyOptions& opt);
VerifyReport run_verify(const MarketParams& p, const VerifyOptions& opt);
std::string to_json(const MarketParams& p, const VerifyOptions& opt, const VerifyReport& r);
VerifyOptions verify_options_from_json(const std::string& text);

}
