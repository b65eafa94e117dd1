#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tpi/tpi.h"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct Failure {
    int code;
    std::string message;
};

void check(tpi_status st, const std::string& context) {
    if (st == TPI_OK) return;
    const int code = st == TPI_ERR_VALIDATION ? kExitValidation : st == TPI_ERR_IO ? kExitIo : kExitNumerical;
    throw Failure{code, context + ": " + tpi_last_error()};
}

// owns a string returned by the library
struct Text {
    char* ptr = nullptr;
    ~Text() { tpi_string_free(ptr); }
    std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

struct Params {
    tpi_params* ptr = nullptr;
    ~Params() { tpi_params_destroy(ptr); }
};

struct Strategy {
    tpi_strategy* ptr = nullptr;
    ~Strategy() { tpi_strategy_destroy(ptr); }
};

struct RunConfig {
    double kappa = 1.0, eta = 2.0, mu = 10.0, sigma = 1.0, alpha = 1.0;
    std::optional<double> tau, zeta, phi;
    std::string grid;
    double tau_max = 5.0, zeta_max = 25.0;
    std::string format;
    std::string out;
    unsigned long long seed = 42;
    std::vector<std::string> suites;
    double tol = 1e-6;
    bool oracle = false, mc = false, inject = false;
    std::size_t paths = 100000;
};

void write_output(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Failure{kExitIo, "cannot open " + path + " for writing"};
    f << content;
    f.flush();
    if (!f) throw Failure{kExitIo, "failed writing " + path};
}

// explicit --out wins, then the environment default directory, then stdout (empty result)
std::string target(const RunConfig& c, const std::string& default_name) {
    if (!c.out.empty()) return c.out;
    if (const char* dir = std::getenv("TPI_OUT_DIR"); dir && *dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Failure{kExitIo, std::string("cannot create ") + dir + ": " + ec.message()};
        return (std::filesystem::path(dir) / default_name).string();
    }
    return {};
}

void emit(const RunConfig& c, const std::string& default_name, const std::string& content) {
    const std::string path = target(c, default_name);
    if (path.empty()) std::cout << content;
    else write_output(path, content);
}

std::size_t parse_count(const std::string& s, const char* what) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty()) throw Failure{kExitValidation, std::string("bad ") + what + ": " + s};
    return v;
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s, std::size_t fallback) {
    if (s.empty()) return {fallback, fallback};
    const auto x = s.find('x');
    if (x == std::string::npos) {
        const std::size_t n = parse_count(s, "grid");
        return {n, n};
    }
    return {parse_count(s.substr(0, x), "grid"), parse_count(s.substr(x + 1), "grid")};
}

void need_state(const RunConfig& c) {
    if (!c.tau || !c.zeta || !c.phi) throw Failure{kExitValidation, "--tau, --zeta and --phi are required"};
}

int cmd_boundary(const RunConfig& c, const tpi_params* p) {
    if (!c.format.empty() && c.format != "csv") throw Failure{kExitValidation, "boundary output is csv only"};
    const auto [nt, nz] = parse_grid(c.grid, 100);
    Text csv;
    check(tpi_boundary_csv(p, c.tau_max, c.zeta_max, nt, nz, &csv.ptr), "boundary");
    emit(c, "boundary.csv", csv.str());
    return 0;
}

int cmd_solve(const RunConfig& c, const tpi_params* p) {
    need_state(c);
    if (!c.format.empty() && c.format != "csv" && c.format != "json")
        throw Failure{kExitValidation, "format must be csv or json"};
    const std::size_t samples = c.grid.empty() ? 1000 : parse_count(c.grid, "grid");
    std::ostringstream echo;
    echo << "state (tau=" << *c.tau << ", zeta=" << *c.zeta << ", phi=" << *c.phi << ")";
    Strategy s;
    check(tpi_strategy_build(p, *c.tau, *c.zeta, *c.phi, &s.ptr), "solve " + echo.str());
    Text json, csv;
    check(tpi_strategy_to_json(s.ptr, &json.ptr), "solve " + echo.str());
    check(tpi_strategy_trajectory_csv(s.ptr, samples, &csv.ptr), "solve " + echo.str());

    const auto doc = nlohmann::json::parse(json.str());
    std::string seq;
    for (const auto& t : doc.at("sequence")) seq += (seq.empty() ? "" : " -> ") + t.get<std::string>();
    std::cerr << echo.str() << ": region " << doc.at("region").get<std::string>() << ", " << seq
              << ", cost " << doc.at("cost").get<double>() << "\n";

    std::string dir = c.out;
    if (dir.empty())
        if (const char* env = std::getenv("TPI_OUT_DIR"); env && *env) dir = env;
    if (dir.empty()) {
        std::cout << (c.format == "csv" ? csv.str() : json.str() + "\n");
        return 0;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Failure{kExitIo, "cannot create " + dir + ": " + ec.message()};
    if (c.format != "csv") write_output((std::filesystem::path(dir) / "strategy.json").string(), json.str() + "\n");
    if (c.format != "json") write_output((std::filesystem::path(dir) / "trajectory.csv").string(), csv.str());
    return 0;
}

std::string join_suites(const std::vector<std::string>& in, nlohmann::json& list) {
    std::string shown;
    for (const auto& item : in) {
        std::stringstream ss(item);
        std::string name;
        while (std::getline(ss, name, ',')) {
            if (name.empty()) continue;
            list.push_back(name);
            shown += (shown.empty() ? "" : ",") + name;
        }
    }
    return shown;
}

int cmd_verify(const RunConfig& c, const tpi_params* p) {
    const bool have_state = c.tau && c.zeta && c.phi;
    if ((c.oracle || c.mc) && have_state) {
        nlohmann::json out = nlohmann::json::object();
        bool ok = true;
        if (c.oracle) {
            Text r;
            const std::size_t n = c.grid.empty() ? 400 : parse_count(c.grid, "grid");
            check(tpi_oracle_report(p, *c.tau, *c.zeta, *c.phi, n, &r.ptr), "oracle");
            auto j = nlohmann::json::parse(r.str());
            const double closed = j.at("closed_form_cost"), cost = j.at("oracle_cost"), gap = j.at("gap");
            ok = ok && cost >= closed - 1e-8 && gap <= 0.01;
            std::cerr << "oracle: closed form " << closed << ", grid " << cost << ", gap " << gap << "\n";
            out["oracle"] = j;
        }
        if (c.mc) {
            Text r;
            const std::size_t n = c.grid.empty() ? 50 : parse_count(c.grid, "grid");
            check(tpi_mc_report(p, *c.tau, *c.zeta, *c.phi, n, c.paths, c.seed, &r.ptr), "mc");
            auto j = nlohmann::json::parse(r.str());
            const double est = j.at("estimate"), se = j.at("stderr"), gauss = j.at("gaussian_closed_form");
            ok = ok && std::abs(est - gauss) <= 3.0 * se;
            std::cerr << "mc: estimate " << est << " +- " << se << ", Gaussian closed form " << gauss << "\n";
            out["mc"] = j;
        }
        emit(c, "verify_report.json", out.dump(2) + "\n");
        return ok ? 0 : kExitNumerical;
    }

    nlohmann::json opts = {{"seed", c.seed}, {"tol", c.tol}, {"tau_max", c.tau_max}, {"zeta_max", c.zeta_max},
                           {"inject_perturbation", c.inject}};
    nlohmann::json suites = nlohmann::json::array();
    join_suites(c.suites, suites);
    if (c.oracle) suites.push_back("oracle");
    if (c.mc) suites.push_back("mc");
    if (!suites.empty()) opts["suites"] = suites;
    if (c.mc) opts["mc_paths"] = c.paths;

    Text report;
    int passed = 0;
    check(tpi_verify(p, opts.dump().c_str(), &report.ptr, &passed), "verify");
    const auto doc = nlohmann::json::parse(report.str());
    std::fprintf(stderr, "%-10s %-6s %9s  %s\n", "suite", "result", "seconds", "summary");
    for (const auto& s : doc.at("suites"))
        std::fprintf(stderr, "%-10s %-6s %9.2f  %s\n", s.at("name").get<std::string>().c_str(),
                     s.at("pass").get<bool>() ? "PASS" : "FAIL", s.at("seconds").get<double>(),
                     s.at("message").get<std::string>().c_str());
    emit(c, "verify_report.json", report.str() + "\n");
    return passed ? 0 : kExitNumerical;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Optimal trading under transient price impact: free boundaries, strategies, verification"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value file; command-line flags take precedence");

    RunConfig c;
    app.add_option("--kappa", c.kappa, "resilience rate")->capture_default_str();
    app.add_option("--eta", c.eta, "per-share impact")->capture_default_str();
    app.add_option("--mu", c.mu, "price drift")->capture_default_str();
    app.add_option("--sigma", c.sigma, "price volatility")->capture_default_str();
    app.add_option("--alpha", c.alpha, "absolute risk aversion")->capture_default_str();
    app.add_option("--tau", c.tau, "time to maturity");
    app.add_option("--zeta", c.zeta, "current spread");
    app.add_option("--phi", c.phi, "current holdings");
    app.add_option("--grid", c.grid,
                   "boundary: N or NxM points; solve: trajectory samples; verify --oracle/--mc: grid cells");
    app.add_option("--tau-max", c.tau_max, "largest time to maturity on grids and in sampled states")
        ->capture_default_str();
    app.add_option("--zeta-max", c.zeta_max, "largest spread on grids and in sampled states")->capture_default_str();
    app.add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", c.out, "output file (boundary, verify) or directory (solve)");
    app.add_option("--seed", c.seed, "random seed")->capture_default_str();
    app.add_option("--suite", c.suites, "suites to run (comma separated): foc ordering ode dpp wealth oracle mc");
    app.add_option("--tol", c.tol, "first-order condition tolerance")->capture_default_str();
    app.add_option("--paths", c.paths, "Monte Carlo paths")->capture_default_str();
    app.add_flag("--oracle", c.oracle, "grid oracle comparison");
    app.add_flag("--mc", c.mc, "Monte Carlo utility check");
    app.add_flag("--inject-perturbation", c.inject, "perturb every strategy before the FOC suite (must fail)");

    auto* boundary = app.add_subcommand("boundary", "grid of buy and sell boundaries as CSV");
    auto* solve = app.add_subcommand("solve", "optimal strategy of one state as JSON and trajectory CSV");
    auto* verify = app.add_subcommand("verify", "run verification suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        Params p;
        check(tpi_params_create(c.kappa, c.eta, c.mu, c.sigma, c.alpha, &p.ptr), "parameters");
        if (boundary->parsed()) return cmd_boundary(c, p.ptr);
        if (solve->parsed()) return cmd_solve(c, p.ptr);
        if (verify->parsed()) return cmd_verify(c, p.ptr);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: unexpected library output: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitValidation;
}
