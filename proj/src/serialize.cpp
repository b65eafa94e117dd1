#include "tpi/serialize.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tpi/errors.hpp"

namespace tpi {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what());
    }
}

template <class F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed document: ") + e.what());
    }
}

json params_json(const MarketParams& p) {
    return {{"kappa", p.kappa}, {"eta", p.eta}, {"mu", p.mu}, {"sigma", p.sigma}, {"alpha", p.alpha}};
}

MarketParams params_from(const json& j) {
    return make_params(j.at("kappa").get<double>(), j.at("eta").get<double>(), j.at("mu").get<double>(),
                       j.at("sigma").get<double>(), j.at("alpha").get<double>());
}

json segment_json(const Segment& g) {
    return {{"type", segment_label(g.type)},
            {"t_start", g.t_start},
            {"t_end", g.t_end},
            {"form", form_label(g.form)},
            {"ttm_start", g.ttm_start},
            {"anchor", {{"tau", g.anchor_tau}, {"zeta", g.anchor_zeta}, {"phi", g.anchor_phi}}},
            {"coefficients",
             {{"tau", g.coef.tau}, {"c_plus_scaled", g.coef.c_plus_scaled}, {"c_minus", g.coef.c_minus}}},
            {"phi_start", g.phi_start},
            {"zeta_start", g.zeta_start},
            {"side", g.side},
            {"size", g.size}};
}

Segment segment_from(const json& j) {
    Segment g;
    g.type = segment_from_label(j.at("type").get<std::string>());
    g.t_start = j.at("t_start").get<double>();
    g.t_end = j.at("t_end").get<double>();
    g.form = form_from_label(j.at("form").get<std::string>());
    g.ttm_start = j.at("ttm_start").get<double>();
    const json& a = j.at("anchor");
    g.anchor_tau = a.at("tau").get<double>();
    g.anchor_zeta = a.at("zeta").get<double>();
    g.anchor_phi = a.at("phi").get<double>();
    const json& c = j.at("coefficients");
    g.coef.tau = c.at("tau").get<double>();
    g.coef.c_plus_scaled = c.at("c_plus_scaled").get<double>();
    g.coef.c_minus = c.at("c_minus").get<double>();
    g.phi_start = j.at("phi_start").get<double>();
    g.zeta_start = j.at("zeta_start").get<double>();
    g.side = j.at("side").get<int>();
    g.size = j.at("size").get<double>();
    return g;
}

}

std::string to_json(const GridStrategy& s) {
    json j = {{"grid", s.grid}, {"d_up", s.d_up}, {"d_down", s.d_down}, {"phi0", s.phi0}, {"zeta0", s.zeta0}};
    return j.dump(2);
}

GridStrategy grid_strategy_from_json(const std::string& text) {
    json j = parse(text);
    GridStrategy s = guarded([&] {
        GridStrategy g;
        g.grid = j.at("grid").get<std::vector<double>>();
        g.d_up = j.at("d_up").get<std::vector<double>>();
        g.d_down = j.at("d_down").get<std::vector<double>>();
        g.phi0 = j.at("phi0").get<double>();
        g.zeta0 = j.at("zeta0").get<double>();
        return g;
    });
    s.validate();
    return s;
}

std::string to_json(const PiecewiseStrategy& s) {
    json segs = json::array();
    for (const auto& g : s.segments) segs.push_back(segment_json(g));
    json seq = json::array();
    for (auto t : s.sequence()) seq.push_back(segment_label(t));
    double initial = 0.0, terminal = 0.0;
    for (const auto& g : s.segments) {
        if (g.type == SegmentType::InitialBlock) initial = g.side * g.size;
        if (g.type == SegmentType::TerminalBlock) terminal = g.side * g.size;
    }
    json j = {{"params", params_json(s.params)},
              {"state", {{"tau", s.data.tau}, {"zeta", s.data.zeta}, {"phi", s.data.phi}}},
              {"region", region_label(s.region)},
              {"piece", s.piece ? json(piece_label(*s.piece)) : json(nullptr)},
              {"durations",
               {{"tau_buy", s.durations.tau_buy},
                {"tau_wait", s.durations.tau_wait},
                {"tau_sell", s.durations.tau_sell}}},
              {"rho", s.rho},
              {"rho_used", s.rho_used},
              {"terminal_position", s.terminal_position},
              {"extra_block", s.extra_block},
              {"sequence", seq},
              {"initial_block", initial},
              {"terminal_block", terminal},
              {"cost", strategy_cost(s)},
              {"segments", segs}};
    return j.dump(2);
}

PiecewiseStrategy piecewise_strategy_from_json(const std::string& text) {
    json j = parse(text);
    return guarded([&] {
        PiecewiseStrategy s;
        s.params = params_from(j.at("params"));
        const json& st = j.at("state");
        s.data = {st.at("tau").get<double>(), st.at("zeta").get<double>(), st.at("phi").get<double>()};
        validate(s.data);
        s.region = region_from_label(j.at("region").get<std::string>());
        if (!j.at("piece").is_null()) s.piece = piece_from_label(j.at("piece").get<std::string>());
        const json& d = j.at("durations");
        s.durations = {d.at("tau_buy").get<double>(), d.at("tau_wait").get<double>(), d.at("tau_sell").get<double>()};
        s.rho = j.at("rho").get<double>();
        s.rho_used = j.at("rho_used").get<bool>();
        s.terminal_position = j.at("terminal_position").get<double>();
        s.extra_block = j.at("extra_block").get<double>();
        for (const auto& g : j.at("segments")) s.segments.push_back(segment_from(g));
        return s;
    });
}

std::string to_json(const FocReport& r) {
    json j = {{"pass", r.pass},
              {"exclusive", r.exclusive},
              {"tol", r.tol},
              {"min_value", r.min_value},
              {"active_max", r.active_max},
              {"times", r.times},
              {"up", r.up},
              {"down", r.down},
              {"buy_active", r.buy_active},
              {"sell_active", r.sell_active}};
    return j.dump(2);
}

FocReport foc_report_from_json(const std::string& text) {
    json j = parse(text);
    return guarded([&] {
        FocReport r;
        r.pass = j.at("pass").get<bool>();
        r.exclusive = j.at("exclusive").get<bool>();
        r.tol = j.at("tol").get<double>();
        r.min_value = j.at("min_value").get<double>();
        r.active_max = j.at("active_max").get<double>();
        r.times = j.at("times").get<std::vector<double>>();
        r.up = j.at("up").get<std::vector<double>>();
        r.down = j.at("down").get<std::vector<double>>();
        r.buy_active = j.at("buy_active").get<std::vector<bool>>();
        r.sell_active = j.at("sell_active").get<std::vector<bool>>();
        return r;
    });
}

std::string to_json(const McResult& r) {
    json j = {{"estimate", r.estimate},
              {"stderr", r.stderr_},
              {"log_neg_estimate", r.log_neg_estimate},
              {"n_paths", r.n_paths},
              {"seed", r.seed}};
    return j.dump(2);
}

void write_boundary_csv(std::ostream& out, const FreeBoundary& fb, double tau_max, double zeta_max,
                        std::size_t n_tau, std::size_t n_zeta) {
    if (n_tau < 2 || n_zeta < 2) throw ValidationError("boundary grid needs at least 2 points per axis");
    if (!(tau_max > 0.0) || !(zeta_max >= 0.0)) throw ValidationError("boundary grid extents must be positive");
    out << "tau,zeta,phi_buy,phi_sell,piece\n";
    for (std::size_t i = 0; i < n_tau; ++i) {
        const double tau = tau_max * double(i) / double(n_tau - 1);
        for (std::size_t k = 0; k < n_zeta; ++k) {
            const double zeta = zeta_max * double(k) / double(n_zeta - 1);
            const BuyPoint b = fb.phi_buy_detail(tau, zeta);
            out << format_double(tau) << ',' << format_double(zeta) << ',' << format_double(b.phi) << ','
                << format_double(fb.phi_sell(tau, zeta)) << ',' << piece_label(b.piece) << '\n';
        }
    }
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
    out << "t,phi,zeta,region\n";
    for (const auto& r : rows)
        out << format_double(r.t) << ',' << format_double(r.phi) << ',' << format_double(r.zeta) << ','
            << region_label(r.region) << '\n';
}

void write_grid_csv(std::ostream& out, const GridStrategy& s) {
    s.validate();
    out << "t,d_up,d_down\n";
    for (std::size_t i = 0; i < s.nodes(); ++i)
        out << format_double(s.grid[i]) << ',' << format_double(s.d_up[i]) << ',' << format_double(s.d_down[i])
            << '\n';
}

GridStrategy grid_strategy_from_csv(std::istream& in, double phi0, double zeta0) {
    std::string line;
    if (!std::getline(in, line) || line != "t,d_up,d_down") throw ValidationError("grid CSV header missing");
    GridStrategy s;
    s.phi0 = phi0;
    s.zeta0 = zeta0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double v[3];
        const char* p = line.data();
        const char* end = p + line.size();
        for (int c = 0; c < 3; ++c) {
            auto res = std::from_chars(p, end, v[c]);
            if (res.ec != std::errc()) throw ValidationError("bad number in grid CSV: " + line);
            p = res.ptr;
            if (c < 2) {
                if (p == end || *p != ',') throw ValidationError("bad grid CSV row: " + line);
                ++p;
            }
        }
        if (p != end) throw ValidationError("bad grid CSV row: " + line);
        s.grid.push_back(v[0]);
        s.d_up.push_back(v[1]);
        s.d_down.push_back(v[2]);
    }
    s.validate();
    return s;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << content;
    f.flush();
    if (!f) throw IoError("failed writing " + path);
}

}
