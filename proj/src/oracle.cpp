#include "tpi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "tpi/errors.hpp"

namespace tpi {

namespace {

struct Problem {
    const MarketParams& p;
    GridStrategy shape;  // grid + endowment, increments overwritten
    std::size_t n;       // tradable nodes

    double cost(const std::vector<double>& x) {
        load(x);
        return tracking_cost(p, shape);
    }
    void load(const std::vector<double>& x) {
        for (std::size_t j = 0; j < n; ++j) {
            shape.d_up[j] = x[j];
            shape.d_down[j] = x[n + j];
        }
    }
    void gradient(const std::vector<double>& x, double side, std::vector<double>& g) {
        load(x);
        CostGradient cg = tracking_gradient(p, shape, side);
        // rounding can leave phi_T a hair on the other side; keep this side's branch of the sign term
        const double phiT = shape.holdings().back();
        const double fix = phiT * side < 0.0 ? side * shape.spreads(p).back() : 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            g[j] = cg.up[j] + fix;
            g[n + j] = cg.down[j] - fix;
        }
    }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Euclidean projection onto {x >= 0, side * (phi0 + sum(up) - sum(down)) >= 0}
void project(std::vector<double>& x, std::size_t n, double side, double phi0) {
    auto coef = [&](std::size_t i) { return i < n ? side : -side; };
    auto level = [&](double nu) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += coef(i) * std::max(0.0, x[i] + nu * coef(i));
        return acc;
    };
    const double target = -side * phi0;
    if (level(0.0) >= target) {
        for (auto& v : x) v = std::max(0.0, v);
        return;
    }
    double ymax = 0.0;
    for (double v : x) ymax = std::max(ymax, std::abs(v));
    double lo = 0.0, hi = std::abs(target) + 2.0 * ymax + 1.0;
    for (int it = 0; it < 80 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (level(mid) < target ? lo : hi) = mid;
    }
    // exact multiplier on the final linear piece
    const double mid = 0.5 * (lo + hi);
    double fixed = 0.0, active = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] + mid * coef(i) > 0.0) {
            fixed += coef(i) * x[i];
            active += 1.0;
        }
    double nu = active > 0.0 ? (target - fixed) / active : hi;
    if (!(nu >= lo && nu <= hi)) nu = hi;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(0.0, x[i] + nu * coef(i));
}

// largest curvature of the cost restricted to one side of the terminal kink
double curvature_bound(Problem& pr, std::size_t dim, double side) {
    const std::size_t n = dim / 2;
    const double shift = 2.0 + (std::abs(pr.shape.phi0) + 10.0) / double(n);
    // base far enough into that side that unit probes stay on it and stay feasible
    std::vector<double> x(dim), v(dim, 1.0), g0(dim), g1(dim), xv(dim);
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = side > 0 ? shift : 1.0;
        x[n + j] = side > 0 ? 1.0 : shift;
    }
    pr.gradient(x, side, g0);
    double L = 1e-12;
    for (int it = 0; it < 60; ++it) {
        const double nv = std::sqrt(dot(v, v));
        if (nv == 0.0) break;
        for (auto& e : v) e /= nv;
        for (std::size_t i = 0; i < dim; ++i) xv[i] = x[i] + v[i];
        pr.gradient(xv, side, g1);
        for (std::size_t i = 0; i < dim; ++i) v[i] = g1[i] - g0[i];
        L = std::max(1e-12, std::sqrt(dot(v, v)));
    }
    return L;
}

struct SideResult {
    std::vector<double> x;
    double cost = 0.0;
    std::size_t iters = 0;
    bool converged = false;
};

// Projected monotone FISTA on one side of the kink, where the cost is a smooth quadratic.
SideResult descend(Problem& pr, const OracleConfig& cfg, double side, std::vector<double> x) {
    const std::size_t dim = 2 * pr.n;
    project(x, pr.n, side, pr.shape.phi0);
    const double L0 = curvature_bound(pr, dim, side);
    double L = L0;
    std::vector<double> y = x, z(dim), g(dim), best = x;
    double fx = pr.cost(x), fbest = fx, tk = 1.0;
    std::vector<double> history;
    SideResult res;
    std::size_t it = 0;
    for (; it < cfg.max_iters; ++it) {
        const double fy = pr.cost(y);
        pr.gradient(y, side, g);
        double fz = 0.0;
        L = std::max(L0, 0.5 * L);
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < dim; ++i) z[i] = y[i] - g[i] / L;
            project(z, pr.n, side, pr.shape.phi0);
            double lin = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double dz = z[i] - y[i];
                lin += g[i] * dz;
                sq += dz * dz;
            }
            fz = pr.cost(z);
            if (fz <= fy + lin + 0.5 * L * sq + 1e-14 * std::abs(fy)) break;
            L *= 2.0;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        std::vector<double> xn = fz <= fx ? z : x;
        const double fn = std::min(fz, fx);
        if (fz > fx) {
            // momentum restart
            y = x;
            tk = 1.0;
        } else {
            for (std::size_t i = 0; i < dim; ++i)
                y[i] = xn[i] + (tk / tn) * (z[i] - xn[i]) + ((tk - 1.0) / tn) * (xn[i] - x[i]);
            project(y, pr.n, side, pr.shape.phi0);
            tk = tn;
        }
        x.swap(xn);
        fx = fn;
        if (fx < fbest) {
            fbest = fx;
            best = x;
        }
        history.push_back(fbest);
        if (history.size() > cfg.window) {
            const double old = history[history.size() - 1 - cfg.window];
            if (old - fbest <= cfg.tol * std::max(1.0, std::abs(fbest))) {
                res.converged = true;
                ++it;
                break;
            }
        }
    }
    res.x = best;
    res.cost = fbest;
    res.iters = it;
    return res;
}

}

OracleResult minimize_tracking(const MarketParams& p, const ProblemData& d, const OracleConfig& cfg,
                               const GridStrategy* start) {
    validate(d);
    if (cfg.n_steps < 10) throw ValidationError("oracle needs at least 10 steps");
    if (!(d.tau > 0.0)) throw ValidationError("oracle needs tau > 0");
    if (!(cfg.tol > 0.0)) throw ValidationError("oracle tolerance must be > 0");
    Problem pr{p, GridStrategy::zero(d.tau, cfg.n_steps, d.phi, d.zeta), cfg.n_steps};
    const std::size_t dim = 2 * pr.n;

    std::vector<double> x(dim, 0.0);
    if (start) {
        if (start->nodes() != cfg.n_steps + 1) throw ValidationError("oracle start has the wrong grid size");
        for (std::size_t j = 0; j < pr.n; ++j) {
            x[j] = std::max(0.0, start->d_up[j]);
            x[pr.n + j] = std::max(0.0, start->d_down[j]);
        }
    }
    // the terminal liquidation term is |phi_T|-shaped; solve each side separately
    SideResult up = descend(pr, cfg, 1.0, x);
    SideResult down = descend(pr, cfg, -1.0, x);
    const SideResult& win = up.cost <= down.cost ? up : down;
    OracleResult res;
    pr.load(win.x);
    res.strategy = pr.shape;
    res.cost = tracking_cost(p, res.strategy);
    res.iters = up.iters + down.iters;
    res.converged = up.converged && down.converged;
    return res;
}

McResult mc_expected_utility(const MarketParams& p, const GridStrategy& s, const McConfig& cfg) {
    s.validate();
    if (cfg.n_paths < 1) throw ValidationError("n_paths must be >= 1");
    const std::size_t cells = s.nodes() - 1;
    if (cfg.n_time_steps % cells != 0) throw ValidationError("n_time_steps must be a multiple of the grid cells");
    const std::size_t substeps = cfg.n_time_steps ? cfg.n_time_steps / cells : 1;
    const std::size_t n = cfg.n_paths;
    std::vector<double> w(n);
    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);

    auto worker = [&](std::size_t begin, std::size_t end) {
        std::vector<double> price(s.nodes());
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t path = begin; path < end; ++path) {
            std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32), std::uint32_t(path),
                              std::uint32_t(std::uint64_t(path) >> 32)};
            std::mt19937_64 rng(seq);
            price[0] = cfg.price0;
            for (std::size_t i = 1; i < s.nodes(); ++i) {
                const double h = (s.grid[i] - s.grid[i - 1]) / double(substeps);
                double inc = 0.0;
                for (std::size_t k = 0; k < substeps; ++k) inc += p.mu * h + p.sigma * std::sqrt(h) * normal(rng);
                price[i] = price[i - 1] + inc;
            }
            w[path] = -p.alpha * liquidation_wealth(p, s, price, cfg.xi0).direct;
        }
    };
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t b = t * chunk, e = std::min(n, b + chunk);
        if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();

    const double M = *std::max_element(w.begin(), w.end());
    double s1 = 0.0, s2 = 0.0;
    for (double v : w) {
        const double e = std::exp(v - M);
        s1 += e;
        s2 += e * e;
    }
    const double mean = s1 / double(n);
    const double var = n > 1 ? std::max(0.0, (s2 / double(n) - mean * mean) * double(n) / double(n - 1)) : 0.0;
    McResult r;
    r.n_paths = n;
    r.seed = cfg.seed;
    r.log_neg_estimate = M + std::log(mean);
    r.estimate = -std::exp(r.log_neg_estimate);
    r.stderr_ = std::exp(M) * std::sqrt(var / double(n));
    return r;
}

double gaussian_expected_utility(const MarketParams& p, const GridStrategy& s, double book0) {
    return -std::exp(-p.alpha * mean_variance_value(p, s, book0));
}

GridStrategy perturb_increments(const GridStrategy& s, double strength, std::uint64_t seed) {
    s.validate();
    if (strength < 0.0 || strength > 1.0) throw ValidationError("perturbation strength must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    GridStrategy out = s;
    auto mix = [&](std::vector<double>& x) {
        const double mass = std::accumulate(x.begin(), x.end(), 0.0);
        std::vector<double> wts(x.size());
        double tot = 0.0;
        for (auto& v : wts) tot += (v = gamma(rng));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - strength) * x[i] + strength * mass * wts[i] / tot;
    };
    mix(out.d_up);
    mix(out.d_down);
    return out;
}

SampledPath sampled(const GridStrategy& s) {
    s.validate();
    SampledPath out;
    auto h = s.holdings();
    double prev = s.phi0;
    for (std::size_t i = 0; i < s.nodes(); ++i) {
        out.t.push_back(s.grid[i]);
        out.phi.push_back(prev);
        if (h[i] != prev) {
            out.t.push_back(s.grid[i]);
            out.phi.push_back(h[i]);
        }
        prev = h[i];
    }
    return out;
}

SampledPath sampled(const PiecewiseStrategy& s, std::size_t n) {
    if (n < 2) throw ValidationError("need at least two samples");
    std::vector<double> times = s.breakpoints();
    const double T = s.horizon();
    for (std::size_t k = 0; k < n; ++k) times.push_back(T * double(k) / double(n - 1));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    SampledPath out;
    out.t.push_back(0.0);
    out.phi.push_back(s.data.phi);
    for (double t : times) {
        out.t.push_back(t);
        out.phi.push_back(s.at(t).phi);
    }
    return out;
}

namespace {

// left and right limits of a sampled path at t (t assumed to be inside the horizon)
std::pair<double, double> limits(const SampledPath& a, double t) {
    auto lo = std::lower_bound(a.t.begin(), a.t.end(), t);
    auto hi = std::upper_bound(a.t.begin(), a.t.end(), t);
    const std::size_t i = lo - a.t.begin(), j = hi - a.t.begin();
    if (i < j) return {a.phi[i], a.phi[j - 1]};
    // strictly between samples i-1 and i
    const double w = (t - a.t[i - 1]) / (a.t[i] - a.t[i - 1]);
    const double v = a.phi[i - 1] + w * (a.phi[i] - a.phi[i - 1]);
    return {v, v};
}

}

double trajectory_distance(const SampledPath& a, const SampledPath& b) {
    for (const SampledPath* s : {&a, &b}) {
        if (s->t.size() < 2 || s->t.size() != s->phi.size()) throw ValidationError("sampled path is malformed");
        for (std::size_t i = 1; i < s->t.size(); ++i)
            if (s->t[i] < s->t[i - 1]) throw ValidationError("sampled path times must be nondecreasing");
    }
    if (std::abs(a.t.front() - b.t.front()) > 1e-12 || std::abs(a.t.back() - b.t.back()) > 1e-12)
        throw ValidationError("sampled paths cover different horizons");
    std::vector<double> u = a.t;
    u.insert(u.end(), b.t.begin(), b.t.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < u.size(); ++k) {
        const double left = u[k], right = u[k + 1];
        const double da = limits(a, left).second - limits(b, left).second;
        const double db = limits(a, right).first - limits(b, right).first;
        acc += 0.5 * (right - left) * (da * da + db * db);
    }
    return std::sqrt(acc);
}

}
