#pragma once
#include <cmath>
#include <functional>

namespace tpi::roots {

// Sign-change bisection on [lo, hi]. f(lo) and f(hi) must not share a strict sign.
double bisect(const std::function<double(double)>& f, double lo, double hi, double width = 1e-14,
              int maxit = 200);

// bisection followed by at most `newton_steps` Newton updates that stay inside the bracket
double bisect_newton(const std::function<double(double)>& f, const std::function<double(double)>& df,
                     double lo, double hi, double width = 1e-14, int newton_steps = 3);

}
