#pragma once
#include <optional>
#include <string>
#include <vector>

#include "tpi/boundary.hpp"
#include "tpi/model.hpp"

namespace tpi {

enum class Region { Buy, BuyBoundary, Wait, SellBoundary, Sell };
const char* region_label(Region r);
Region region_from_label(const std::string& s);

enum class SegmentType { InitialBlock, BuyFlow, Wait, SellFlow, TerminalBlock };
const char* segment_label(SegmentType t);
SegmentType segment_from_label(const std::string& s);

// How holdings and spread evolve inside a segment.
//   HatBuy: buy-flow maps evaluated at the remaining time, anchored at (anchor_tau, anchor_zeta, anchor_phi)
//   HatSell: sell-flow maps with coefficients of the anchor state
//   MirroredSell: sell-flow maps of the mirrored state (negative spread), used by piece I
//   Hold: constant holdings, spread decays
enum class FlowForm { None, HatBuy, HatSell, MirroredSell, Hold };
const char* form_label(FlowForm f);
FlowForm form_from_label(const std::string& s);

struct Segment {
    SegmentType type = SegmentType::Wait;
    double t_start = 0.0;
    double t_end = 0.0;
    FlowForm form = FlowForm::None;
    double ttm_start = 0.0;  // time to maturity at t_start
    double anchor_tau = 0.0;
    double anchor_zeta = 0.0;
    double anchor_phi = 0.0;
    FlowCoefficients coef;
    double phi_start = 0.0;   // holdings at t_start (after any block at t_start)
    double zeta_start = 0.0;  // spread at t_start
    int side = 0;             // +1 buy, -1 sell, blocks and flows
    double size = 0.0;        // block size

    bool operator==(const Segment&) const = default;
};

struct StatePoint {
    double phi = 0.0;
    double zeta = 0.0;
};

struct PiecewiseStrategy {
    MarketParams params;
    ProblemData data;
    Region region = Region::Wait;
    std::optional<Piece> piece;  // buy-boundary piece the strategy starts on, if any
    Durations durations;
    double rho = 0.0;
    bool rho_used = false;
    double terminal_position = 0.0;  // holdings just before maturity
    double extra_block = 0.0;        // deliberate additional purchase at t = 0 (negative controls)
    std::vector<Segment> segments;

    StatePoint segment_state(const Segment& g, double t) const;

    double horizon() const { return data.tau; }
    // right-continuous state; at the horizon this is the pre-liquidation state
    StatePoint at(double t) const;
    StatePoint before(double t) const;
    // cumulative purchases / sales on [0, t]
    double bought(double t) const;
    double sold(double t) const;
    bool buy_active(double t) const;
    bool sell_active(double t) const;
    std::vector<double> breakpoints() const;
    std::vector<SegmentType> sequence(bool skip_empty_blocks = true) const;
};

bool operator==(const PiecewiseStrategy& a, const PiecewiseStrategy& b);

class Policy {
public:
    explicit Policy(const MarketParams& p);

    const FreeBoundary& boundary() const { return fb_; }
    const MarketParams& params() const { return fb_.params(); }

    static double tolerance(double phi) { return 1e-9 * (1.0 + std::abs(phi)); }
    Region classify(const ProblemData& d) const;

    struct Impulse {
        double size = 0.0;
        ProblemData post;
        double residual = 0.0;
        std::optional<double> closed_form;  // piece-I cross-check for buys
    };
    Impulse impulse_sell(const ProblemData& d) const;
    Impulse impulse_buy(const ProblemData& d) const;

    struct Hit {
        double t = 0.0;
        Region side = Region::SellBoundary;
    };
    std::optional<Hit> first_hit(const ProblemData& d) const;

    PiecewiseStrategy build(const ProblemData& d) const;
    // rebuild from the state reached just before t and compare with the tail of s
    PiecewiseStrategy restart(const PiecewiseStrategy& s, double t, double tol = 1e-7) const;

private:
    void append_sell_boundary(PiecewiseStrategy& s, double t0, double tau, double zeta, double phi) const;
    void append_buy_boundary(PiecewiseStrategy& s, double t0, double tau, double zeta, double phi) const;
    void append_hold(PiecewiseStrategy& s, double t0, double t1, double zeta, double phi) const;
    void finish(PiecewiseStrategy& s) const;

    FreeBoundary fb_;
};

struct TrajectoryRow {
    double t = 0.0;
    double phi = 0.0;
    double zeta = 0.0;
    Region region = Region::Wait;
};

std::vector<TrajectoryRow> sample_trajectory(const Policy& pol, const PiecewiseStrategy& s, std::size_t n);

// Copy of s with an additional purchase of `delta` shares at t = 0 and a refreshed terminal block.
PiecewiseStrategy with_extra_block(const PiecewiseStrategy& s, double delta);

// Strategy for (tau + theta, zeta e^{kappa theta}, phi) that idles for theta and then follows s.
PiecewiseStrategy delayed(const PiecewiseStrategy& s, double theta);

// Tracking cost of the exact strategy (same functional as tracking_cost on grids).
double strategy_cost(const PiecewiseStrategy& s);

// Piecewise strategy projected onto grid node increments.
GridStrategy to_grid(const PiecewiseStrategy& s, std::size_t n_cells);

}
