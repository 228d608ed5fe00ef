#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tipflow {

/// Thrown when an adaptive integration cannot proceed (step underflow).
struct IntegratorFailure : std::runtime_error {
    double abscissa;
    IntegratorFailure(const std::string& what, double x)
        : std::runtime_error(what + " at x = " + std::to_string(x)), abscissa(x) {}
};

/// Dormand-Prince 5(4) step on a 2-component system.
/// Returns the 5th-order solution and an embedded error estimate.
template <class Rhs>
inline std::array<double, 2> dp45_step(const Rhs& f, double x, const std::array<double, 2>& y,
                                       double h, double& err_estimate) {
    using V = std::array<double, 2>;
    auto axpy = [](const V& y0, std::initializer_list<std::pair<double, const V*>> terms, double h_) {
        V r = y0;
        for (const auto& [c, k] : terms) {
            r[0] += h_ * c * (*k)[0];
            r[1] += h_ * c * (*k)[1];
        }
        return r;
    };
    V k1 = f(x, y);
    V k2 = f(x + h / 5.0, axpy(y, {{1.0 / 5.0, &k1}}, h));
    V k3 = f(x + 3.0 * h / 10.0, axpy(y, {{3.0 / 40.0, &k1}, {9.0 / 40.0, &k2}}, h));
    V k4 = f(x + 4.0 * h / 5.0, axpy(y, {{44.0 / 45.0, &k1}, {-56.0 / 15.0, &k2}, {32.0 / 9.0, &k3}}, h));
    V k5 = f(x + 8.0 * h / 9.0,
             axpy(y, {{19372.0 / 6561.0, &k1}, {-25360.0 / 2187.0, &k2}, {64448.0 / 6561.0, &k3},
                      {-212.0 / 729.0, &k4}}, h));
    V k6 = f(x + h, axpy(y, {{9017.0 / 3168.0, &k1}, {-355.0 / 33.0, &k2}, {46732.0 / 5247.0, &k3},
                             {49.0 / 176.0, &k4}, {-5103.0 / 18656.0, &k5}}, h));
    V y5 = axpy(y, {{35.0 / 384.0, &k1}, {500.0 / 1113.0, &k3}, {125.0 / 192.0, &k4},
                    {-2187.0 / 6784.0, &k5}, {11.0 / 84.0, &k6}}, h);
    V k7 = f(x + h, y5);
    V y4 = axpy(y, {{5179.0 / 57600.0, &k1}, {7571.0 / 16695.0, &k3}, {393.0 / 640.0, &k4},
                    {-92097.0 / 339200.0, &k5}, {187.0 / 2100.0, &k6}, {1.0 / 40.0, &k7}}, h);
    err_estimate = std::max(std::abs(y5[0] - y4[0]), std::abs(y5[1] - y4[1]));
    return y5;
}

/// One classical RK4 step on a 2-component system.
template <class Rhs>
inline std::array<double, 2> rk4_step(const Rhs& f, double x, const std::array<double, 2>& y, double h) {
    using V = std::array<double, 2>;
    V k1 = f(x, y);
    V k2 = f(x + h / 2, {y[0] + h / 2 * k1[0], y[1] + h / 2 * k1[1]});
    V k3 = f(x + h / 2, {y[0] + h / 2 * k2[0], y[1] + h / 2 * k2[1]});
    V k4 = f(x + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
    return {y[0] + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y[1] + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

struct OdeTable {
    std::vector<double> x;
    std::vector<double> value;
    std::vector<double> deriv;
    double max_step_error = 0.0;  // largest accepted embedded error estimate
};

/// Integrate y'' implicitly given as a first-order pair via `f`, from (x0, y0) to x_end,
/// recording every accepted node.  Node spacing is kept below `max_ratio` times the
/// previous spacing, and each stored interval is checked against a re-integrated midpoint
/// so that cubic Hermite interpolation of the table stays within ~interp_tol.
template <class Rhs>
inline OdeTable integrate_dp45(const Rhs& f, double x0, std::array<double, 2> y0, double x_end,
                               double tol, double interp_tol, double max_ratio = 1.05) {
    OdeTable tab;
    tab.x.push_back(x0);
    tab.value.push_back(y0[0]);
    tab.deriv.push_back(y0[1]);

    double x = x0;
    std::array<double, 2> y = y0;
    double h = std::min(1e-3, (x_end - x0) / 10);
    const double hmin = 1e-14 * std::max(1.0, std::abs(x_end));

    while (x < x_end) {
        if (h < hmin) throw IntegratorFailure("step size underflow", x);
        h = std::min(h, x_end - x);
        double err = 0.0;
        auto ynew = dp45_step(f, x, y, h, err);
        double sc = tol * std::max({1.0, std::abs(y[0]), std::abs(y[1])});
        if (err > sc || !std::isfinite(ynew[0]) || !std::isfinite(ynew[1])) {
            h *= 0.5;
            continue;
        }
        x += h;
        y = ynew;
        tab.x.push_back(x);
        tab.value.push_back(y[0]);
        tab.deriv.push_back(y[1]);
        tab.max_step_error = std::max(tab.max_step_error, err);
        double grow = (err > 0) ? 0.9 * std::pow(sc / err, 0.2) : 2.0;
        h *= std::min(2.0, std::max(0.2, grow));
        double prev = tab.x.size() > 2 ? tab.x[tab.x.size() - 2] - tab.x[tab.x.size() - 3] : h;
        h = std::min(h, max_ratio * prev + 1e-30);
    }

    // Refine intervals until the cubic Hermite midpoint matches a re-integrated value.
    for (std::size_t i = 0; i + 1 < tab.x.size();) {
        double xa = tab.x[i], xb = tab.x[i + 1];
        double hh = xb - xa;
        if (hh < 64 * hmin) {
            ++i;
            continue;
        }
        std::array<double, 2> ya = {tab.value[i], tab.deriv[i]};
        auto ym = rk4_step(f, xa + hh / 4, rk4_step(f, xa, ya, hh / 4), hh / 4);  // two quarter steps
        // Hermite midpoint of the stored interval
        double hv = 0.5 * (tab.value[i] + tab.value[i + 1]) + hh / 8 * (tab.deriv[i] - tab.deriv[i + 1]);
        if (std::abs(hv - ym[0]) > interp_tol * std::max(1.0, std::abs(ym[0]))) {
            tab.x.insert(tab.x.begin() + i + 1, xa + hh / 2);
            tab.value.insert(tab.value.begin() + i + 1, ym[0]);
            tab.deriv.insert(tab.deriv.begin() + i + 1, ym[1]);
        } else {
            ++i;
        }
    }
    return tab;
}

}  // namespace tipflow
