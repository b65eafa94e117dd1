#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "tpi/boundary.hpp"
#include "tpi/model.hpp"
#include "tpi/oracle.hpp"
#include "tpi/policy.hpp"
#include "tpi/subgradients.hpp"

namespace tpi {

// 17 significant digits, always '.' as decimal separator
std::string format_double(double v);

std::string to_json(const GridStrategy& s);
GridStrategy grid_strategy_from_json(const std::string& text);

std::string to_json(const PiecewiseStrategy& s);
PiecewiseStrategy piecewise_strategy_from_json(const std::string& text);

std::string to_json(const FocReport& r);
FocReport foc_report_from_json(const std::string& text);

std::string to_json(const McResult& r);

// rows: tau, zeta, phi_buy, phi_sell, piece of the buy boundary
void write_boundary_csv(std::ostream& out, const FreeBoundary& fb, double tau_max, double zeta_max,
                        std::size_t n_tau, std::size_t n_zeta);
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);
void write_grid_csv(std::ostream& out, const GridStrategy& s);
GridStrategy grid_strategy_from_csv(std::istream& in, double phi0, double zeta0);

void write_file(const std::string& path, const std::string& content);

}
