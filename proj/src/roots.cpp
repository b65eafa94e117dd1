#include "tpi/roots.hpp"

#include "tpi/errors.hpp"

namespace tpi::roots {

double bisect(const std::function<double(double)>& f, double lo, double hi, double width, int maxit) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw NumericalError("bisect: root not bracketed");
    for (int i = 0; i < maxit && hi - lo > width; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double bisect_newton(const std::function<double(double)>& f, const std::function<double(double)>& df,
                     double lo, double hi, double width, int newton_steps) {
    double x = bisect(f, lo, hi, width);
    double fx = f(x);
    for (int i = 0; i < newton_steps; ++i) {
        double d = df(x);
        if (d == 0.0 || !std::isfinite(d)) break;
        double next = x - fx / d;
        if (!(next >= lo && next <= hi)) break;
        double fn = f(next);
        if (std::abs(fn) >= std::abs(fx)) break;
        x = next;
        fx = fn;
    }
    return x;
}

}
