#include "tpi/tpi.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tpi/errors.hpp"
#include "tpi/oracle.hpp"
#include "tpi/policy.hpp"
#include "tpi/serialize.hpp"
#include "tpi/subgradients.hpp"
#include "tpi/suites.hpp"

struct tpi_params {
    tpi::MarketParams params;
    tpi::Policy policy;
    explicit tpi_params(const tpi::MarketParams& p) : params(p), policy(p) {}
};

struct tpi_strategy {
    tpi::PiecewiseStrategy strategy;
    tpi::Policy policy;
    explicit tpi_strategy(tpi::PiecewiseStrategy s) : strategy(std::move(s)), policy(strategy.params) {}
};

namespace {

thread_local std::string last_error;

template <class F>
tpi_status guard(F&& f) {
    try {
        f();
        last_error.clear();
        return TPI_OK;
    } catch (const tpi::ValidationError& e) {
        last_error = e.what();
        return TPI_ERR_VALIDATION;
    } catch (const tpi::IoError& e) {
        last_error = e.what();
        return TPI_ERR_IO;
    } catch (const tpi::NumericalError& e) {
        last_error = e.what();
        return TPI_ERR_NUMERICAL;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return TPI_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return TPI_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return TPI_ERR_INTERNAL;
    }
}

void need(const void* ptr, const char* what) {
    if (!ptr) throw tpi::ValidationError(std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

tpi::ProblemData state(double tau, double zeta, double phi) {
    tpi::ProblemData d{tau, zeta, phi};
    tpi::validate(d);
    return d;
}

}

extern "C" {

const char* tpi_last_error(void) { return last_error.c_str(); }

void tpi_string_free(char* s) { std::free(s); }

tpi_status tpi_params_create(double kappa, double eta, double mu, double sigma, double alpha, tpi_params** out) {
    return guard([&] {
        need(out, "out");
        *out = new tpi_params(tpi::make_params(kappa, eta, mu, sigma, alpha));
    });
}

tpi_status tpi_params_default(tpi_params** out) {
    return guard([&] {
        need(out, "out");
        *out = new tpi_params(tpi::default_params());
    });
}

void tpi_params_destroy(tpi_params* p) { delete p; }

tpi_status tpi_params_derived(const tpi_params* p, double* lambda, double* beta, double* merton) {
    return guard([&] {
        need(p, "params");
        if (lambda) *lambda = p->params.lambda;
        if (beta) *beta = p->params.beta;
        if (merton) *merton = p->params.merton;
    });
}

tpi_status tpi_theta_bounds(const tpi_params* p, double* theta_bar, double* theta_under) {
    return guard([&] {
        need(p, "params");
        const auto& fb = p->policy.boundary();
        if (theta_bar) *theta_bar = fb.theta_bar();
        if (theta_under) *theta_under = fb.theta_under();
    });
}

tpi_status tpi_phi_sell(const tpi_params* p, double tau, double zeta, double* out) {
    return guard([&] {
        need(p, "params");
        need(out, "out");
        if (!(tau >= 0.0) || !std::isfinite(zeta)) throw tpi::ValidationError("need tau >= 0 and finite zeta");
        *out = p->policy.boundary().phi_sell(tau, zeta);
    });
}

tpi_status tpi_phi_buy(const tpi_params* p, double tau, double zeta, double* out, const char** piece) {
    return guard([&] {
        need(p, "params");
        need(out, "out");
        state(tau, zeta, 0.0);
        const tpi::BuyPoint b = p->policy.boundary().phi_buy_detail(tau, zeta);
        *out = b.phi;
        if (piece) *piece = tpi::piece_label(b.piece);
    });
}

tpi_status tpi_classify(const tpi_params* p, double tau, double zeta, double phi, const char** region) {
    return guard([&] {
        need(p, "params");
        need(region, "region");
        *region = tpi::region_label(p->policy.classify(state(tau, zeta, phi)));
    });
}

tpi_status tpi_strategy_build(const tpi_params* p, double tau, double zeta, double phi, tpi_strategy** out) {
    return guard([&] {
        need(p, "params");
        need(out, "out");
        *out = new tpi_strategy(p->policy.build(state(tau, zeta, phi)));
    });
}

tpi_status tpi_strategy_from_json(const char* json, tpi_strategy** out) {
    return guard([&] {
        need(json, "json");
        need(out, "out");
        *out = new tpi_strategy(tpi::piecewise_strategy_from_json(json));
    });
}

void tpi_strategy_destroy(tpi_strategy* s) { delete s; }

tpi_status tpi_strategy_to_json(const tpi_strategy* s, char** out) {
    return guard([&] {
        need(s, "strategy");
        need(out, "out");
        *out = dup(tpi::to_json(s->strategy));
    });
}

tpi_status tpi_strategy_trajectory_csv(const tpi_strategy* s, size_t n_samples, char** out) {
    return guard([&] {
        need(s, "strategy");
        need(out, "out");
        if (n_samples < 2) throw tpi::ValidationError("need at least 2 samples");
        std::ostringstream os;
        tpi::write_trajectory_csv(os, tpi::sample_trajectory(s->policy, s->strategy, n_samples));
        *out = dup(os.str());
    });
}

tpi_status tpi_strategy_cost(const tpi_strategy* s, double* out) {
    return guard([&] {
        need(s, "strategy");
        need(out, "out");
        *out = tpi::strategy_cost(s->strategy);
    });
}

tpi_status tpi_strategy_foc(const tpi_strategy* s, size_t n_samples, double tol, char** report_json, int* passed) {
    return guard([&] {
        need(s, "strategy");
        need(report_json, "report_json");
        if (n_samples < 2 || !(tol > 0.0)) throw tpi::ValidationError("need n_samples >= 2 and tol > 0");
        const tpi::FocReport r = tpi::check_foc(s->strategy, n_samples, tol);
        *report_json = dup(tpi::to_json(r));
        if (passed) *passed = r.pass && r.exclusive;
    });
}

tpi_status tpi_boundary_csv(const tpi_params* p, double tau_max, double zeta_max, size_t n_tau, size_t n_zeta,
                            char** out) {
    return guard([&] {
        need(p, "params");
        need(out, "out");
        std::ostringstream os;
        tpi::write_boundary_csv(os, p->policy.boundary(), tau_max, zeta_max, n_tau, n_zeta);
        *out = dup(os.str());
    });
}

tpi_status tpi_oracle_report(const tpi_params* p, double tau, double zeta, double phi, size_t n_steps,
                             char** report_json) {
    return guard([&] {
        need(p, "params");
        need(report_json, "report_json");
        const tpi::ProblemData d = state(tau, zeta, phi);
        const tpi::PiecewiseStrategy s = p->policy.build(d);
        tpi::OracleConfig cfg;
        cfg.n_steps = n_steps;
        const tpi::OracleResult r = tpi::minimize_tracking(p->params, d, cfg);
        const double closed = tpi::strategy_cost(s);
        nlohmann::json j = {
            {"state", {{"tau", tau}, {"zeta", zeta}, {"phi", phi}}},
            {"closed_form_cost", closed},
            {"oracle_cost", r.cost},
            {"gap", (r.cost - closed) / std::max(1e-12, std::abs(closed))},
            {"l2_distance", tpi::trajectory_distance(tpi::sampled(r.strategy), tpi::sampled(s, 4000))},
            {"n_steps", n_steps},
            {"iterations", r.iters},
            {"converged", r.converged}};
        *report_json = dup(j.dump(2));
    });
}

tpi_status tpi_mc_report(const tpi_params* p, double tau, double zeta, double phi, size_t n_cells, size_t n_paths,
                         unsigned long long seed, char** report_json) {
    return guard([&] {
        need(p, "params");
        need(report_json, "report_json");
        const tpi::ProblemData d = state(tau, zeta, phi);
        if (!(tau > 0.0)) throw tpi::ValidationError("Monte Carlo needs tau > 0");
        if (n_cells < 1) throw tpi::ValidationError("need at least one grid cell");
        const tpi::GridStrategy g = tpi::to_grid(p->policy.build(d), n_cells);
        tpi::McConfig cfg;
        cfg.n_paths = n_paths;
        cfg.seed = seed;
        const tpi::McResult r = tpi::mc_expected_utility(p->params, g, cfg);
        nlohmann::json j = nlohmann::json::parse(tpi::to_json(r));
        j["state"] = {{"tau", tau}, {"zeta", zeta}, {"phi", phi}};
        j["gaussian_closed_form"] = tpi::gaussian_expected_utility(p->params, g, 0.0);
        *report_json = dup(j.dump(2));
    });
}

tpi_status tpi_verify(const tpi_params* p, const char* options_json, char** report_json, int* passed) {
    return guard([&] {
        need(p, "params");
        need(report_json, "report_json");
        const tpi::VerifyOptions opt = tpi::verify_options_from_json(options_json ? options_json : "");
        const tpi::VerifyReport r = tpi::run_verify(p->params, opt);
        *report_json = dup(tpi::to_json(p->params, opt, r));
        if (passed) *passed = r.pass ? 1 : 0;
    });
}

}
