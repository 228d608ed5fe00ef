#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tipflow/ode.hpp"

namespace tipflow {

/// Tabulated solution of a profile ODE on [0, z_max].  Values below
/// `series_cutoff` come from the two-term series at the regular singular
/// origin; queries between nodes use cubic Hermite interpolation of
/// (value, deriv); queries beyond the last node fall back to the far-field
/// asymptote when one is installed, and throw otherwise.
class ProfileSolution {
public:
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> deriv;
    int n_dim = 0;
    double series_cutoff = 0.0;
    double series_coeff = 0.0;       // value ~ series_coeff * z^2 below the cutoff
    double max_step_error = 0.0;
    bool has_asymptote = false;
    double asym_quad = 0.0, asym_log = 0.0;  // value ~ asym_quad z^2 + asym_log log z beyond z_max

    double z_max() const { return grid.empty() ? 0.0 : grid.back(); }

    double eval(double z) const { return eval_impl(z, false); }
    double eval_deriv(double z) const { return eval_impl(z, true); }

private:
    double eval_impl(double z, bool want_deriv) const {
        if (z < 0.0) z = -z;  // all profiles are even
        if (z < series_cutoff) return want_deriv ? 2.0 * series_coeff * z : series_coeff * z * z;
        if (z > grid.back()) {
            if (!has_asymptote) throw std::domain_error("profile query beyond tabulated range");
            return want_deriv ? 2.0 * asym_quad * z + asym_log / z
                              : asym_quad * z * z + asym_log * std::log(z);
        }
        auto it = std::upper_bound(grid.begin(), grid.end(), z);
        std::size_t i = (it == grid.begin()) ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
        if (i + 1 >= grid.size()) i = grid.size() - 2;
        double h = grid[i + 1] - grid[i];
        double t = (z - grid[i]) / h;
        double v0 = values[i], v1 = values[i + 1], d0 = deriv[i], d1 = deriv[i + 1];
        double t2 = t * t, t3 = t2 * t;
        if (!want_deriv) {
            return (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * d0 +
                   (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * d1;
        }
        return ((6 * t2 - 6 * t) * v0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * v1 +
                (3 * t2 - 2 * t) * h * d1) / h;
    }
};

/// Walks the table and re-integrates each interval with RK4 micro-steps;
/// returns the largest mismatch against the stored nodes.  This is the
/// meaningful pointwise defect of the table against the ODE flow.
template <class Rhs>
inline double ode_defect(const ProfileSolution& p, const Rhs& f) {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < p.grid.size(); ++i) {
        std::array<double, 2> y = {p.values[i], p.deriv[i]};
        double h = (p.grid[i + 1] - p.grid[i]) / 8;
        double x = p.grid[i];
        for (int k = 0; k < 8; ++k, x += h) y = rk4_step(f, x, y, h);
        worst = std::max(worst, std::abs(y[0] - p.values[i + 1]));
        worst = std::max(worst, std::abs(y[1] - p.deriv[i + 1]));
    }
    return worst;
}

/// Solves P''/(1+P'^2) + (n-1)P'/z = 1, P(0) = P'(0) = 0 on [0, z_max].
/// Near-origin series P = z^2/(2n) + O(z^4); far field P = z^2/(2(n-1)) - log z + c_n + O(z^-2)
/// for n >= 2 (the asymptote used beyond z_max drops the additive constant).
inline ProfileSolution solve_grim_reaper_profile(int n, double z_max, double tol) {
    if (n < 1) throw std::invalid_argument("profile dimension must be >= 1");
    if (z_max < 1.0) throw std::invalid_argument("z_max must be >= 1");
    if (tol <= 1e-14 || tol >= 1e-4) throw std::invalid_argument("tol outside (1e-14, 1e-4)");

    auto rhs = [n](double z, const std::array<double, 2>& y) -> std::array<double, 2> {
        return {y[1], (1.0 + y[1] * y[1]) * (1.0 - (n - 1) * y[1] / z)};
    };
    const double z0 = 1e-4;
    std::array<double, 2> y0 = {z0 * z0 / (2.0 * n), z0 / n};
    OdeTable tab = integrate_dp45(rhs, z0, y0, z_max, tol, 0.25 * std::max(tol, 1e-11));

    ProfileSolution p;
    p.grid = std::move(tab.x);
    p.values = std::move(tab.value);
    p.deriv = std::move(tab.deriv);
    p.n_dim = n;
    p.series_cutoff = z0;
    p.series_coeff = 1.0 / (2.0 * n);
    p.max_step_error = tab.max_step_error;
    p.grid.insert(p.grid.begin(), 0.0);
    p.values.insert(p.values.begin(), 0.0);
    p.deriv.insert(p.deriv.begin(), 0.0);
    if (n >= 2) {
        p.has_asymptote = true;
        p.asym_quad = 1.0 / (2.0 * n - 2.0);
        p.asym_log = -1.0;
    }
    return p;
}

/// Second derivative of P recovered from the ODE itself (exact given value/deriv).
inline double grim_reaper_second_deriv(const ProfileSolution& p, double z) {
    if (std::abs(z) < 1e-12) return 1.0 / p.n_dim;
    double d = p.eval_deriv(z);
    return (1.0 + d * d) * (1.0 - (p.n_dim - 1) * d / z);
}

/// Additive constant c_n of the far-field expansion of P, extracted by
/// Richardson elimination of the z^-2 and z^-4 tails.  Needs z_max >= 4*z_ref.
inline double far_field_constant(const ProfileSolution& p, double z_ref = 20.0) {
    auto d = [&](double z) {
        return p.eval(z) - z * z / (2.0 * p.n_dim - 2.0) + std::log(z);
    };
    if (p.z_max() < 4 * z_ref - 1e-9) throw std::domain_error("far_field_constant needs z_max >= 4 z_ref");
    double c12 = (4 * d(2 * z_ref) - d(z_ref)) / 3;
    double c23 = (4 * d(4 * z_ref) - d(2 * z_ref)) / 3;
    return (16 * c23 - c12) / 15;
}

/// F(z) = A^3/(gamma-1/2) P(zbar), zbar = z (gamma-1/2)/A, and its z-derivatives.
/// F'' comes from the profile ODE, not from differencing.
struct ScaledTipProfile {
    const ProfileSolution* P = nullptr;
    double A = 1.0;
    double gamma = 1.0;

    double zbar(double z) const { return z * (gamma - 0.5) / A; }
    double value(double z) const { return A * A * A / (gamma - 0.5) * P->eval(zbar(z)); }
    double deriv(double z) const { return A * A * P->eval_deriv(zbar(z)); }
    double second(double z) const {
        double Fz = deriv(z);
        if (std::abs(z) < 1e-12) return (gamma - 0.5) * A / P->n_dim;
        double A4 = A * A * A * A;
        return (1.0 + Fz * Fz / A4) * ((gamma - 0.5) * A - (P->n_dim - 1) * Fz / z);
    }
};

inline double eval_F(double A, double gamma, const ProfileSolution& P, double z) {
    return ScaledTipProfile{&P, A, gamma}.value(z);
}
inline double eval_F_deriv(double A, double gamma, const ProfileSolution& P, double z) {
    return ScaledTipProfile{&P, A, gamma}.deriv(z);
}

/// Solves -A^-2 [Q'/(1+F_z^2/A^4)]' - (n-1)Q'/z = 1, Q(0) = Q'(0) = 0.
/// Series start Q = -z^2/(2(A^-2 + n - 1)).
inline ProfileSolution solve_Q(double A, int n, const ScaledTipProfile& F, double z_max, double tol) {
    const double A2 = A * A, A4 = A2 * A2;
    auto rhs = [&, n](double z, const std::array<double, 2>& y) -> std::array<double, 2> {
        double Fz = F.deriv(z), Fzz = F.second(z);
        double den = 1.0 + Fz * Fz / A4;
        double Qpp = den * (-A2 * (1.0 + (n - 1) * y[1] / z) + y[1] * 2.0 * Fz * Fzz / A4 / den);
        return {y[1], Qpp};
    };
    const double z0 = 1e-4;
    const double a = 1.0 / (2.0 * (1.0 / A2 + n - 1));
    std::array<double, 2> y0 = {-a * z0 * z0, -2.0 * a * z0};
    OdeTable tab = integrate_dp45(rhs, z0, y0, z_max, tol, 0.25 * std::max(tol, 1e-11));

    ProfileSolution q;
    q.grid = std::move(tab.x);
    q.values = std::move(tab.value);
    q.deriv = std::move(tab.deriv);
    q.n_dim = n;
    q.series_cutoff = z0;
    q.series_coeff = -a;
    q.max_step_error = tab.max_step_error;
    q.grid.insert(q.grid.begin(), 0.0);
    q.values.insert(q.values.begin(), 0.0);
    q.deriv.insert(q.deriv.begin(), 0.0);
    return q;
}

/// Q'' recovered from the Q-ODE (needs the same F the solve used).
inline double q_second_deriv(const ProfileSolution& q, double A, const ScaledTipProfile& F, double z) {
    const double A2 = A * A, A4 = A2 * A2;
    if (std::abs(z) < 1e-12) return -A2 / (1.0 + (q.n_dim - 1) * A2);
    double Fz = F.deriv(z), Fzz = F.second(z);
    double den = 1.0 + Fz * Fz / A4;
    double Qp = q.eval_deriv(z);
    return den * (-A2 * (1.0 + (q.n_dim - 1) * Qp / z) + Qp * 2.0 * Fz * Fzz / A4 / den);
}

// ---------------------------------------------------------------------------
// Closed forms of the exterior region: lambda_bar, Lambda, psi.
// ---------------------------------------------------------------------------

inline double cylinder_radius(int n) { return std::sqrt(2.0 * (n - 1)); }

namespace detail {
inline void require_inside_cylinder(int n, double phi, bool allow_zero) {
    double r2 = 2.0 * n - 2.0;
    if (phi * phi >= r2) throw std::domain_error("phi at or beyond the cylinder radius");
    if (!allow_zero && phi == 0.0) throw std::domain_error("phi = 0 is a pole here");
}
}  // namespace detail

inline double eval_lambda_bar(int n, double gamma, double phi) {
    detail::require_inside_cylinder(n, phi, true);
    return std::pow(2.0 * n - 2.0 - phi * phi, gamma - 0.5);
}
inline double eval_lambda_bar_d1(int n, double gamma, double phi) {
    detail::require_inside_cylinder(n, phi, true);
    return -(2.0 * gamma - 1.0) * phi * std::pow(2.0 * n - 2.0 - phi * phi, gamma - 1.5);
}
inline double eval_lambda_bar_d2(int n, double gamma, double phi) {
    detail::require_inside_cylinder(n, phi, true);
    double s = 2.0 * n - 2.0 - phi * phi;
    return -(2.0 * gamma - 1.0) * std::pow(s, gamma - 2.5) * (2.0 * n - 2.0 + 2.0 * (1.0 - gamma) * phi * phi);
}

/// Lambda(phi) = -2/(2 gamma - 1) (n-1+gamma phi^2)/phi^2 (2n-2-phi^2)^{3(gamma-1/2)}.
/// Equals -[(-lb'') - 2(-lb')^2/(-lb)] [(-lb)^4/(-lb')^2] identically; always < 0
/// on the open punctured interval.
inline double eval_Lambda(int n, double gamma, double phi) {
    detail::require_inside_cylinder(n, phi, false);
    double s = 2.0 * n - 2.0 - phi * phi;
    return -2.0 / (2.0 * gamma - 1.0) * (n - 1.0 + gamma * phi * phi) / (phi * phi) *
           std::pow(s, 3.0 * (gamma - 0.5));
}

/// psi and its derivatives; solves (1/2-3 gamma) psi - ((n-1)/phi - phi/2) psi' = Lambda.
struct PsiParts {
    double value, d1, d2;
};
inline PsiParts eval_psi_parts(int n, double gamma, double C1, double phi) {
    detail::require_inside_cylinder(n, phi, false);
    const double s = 2.0 * n - 2.0 - phi * phi;
    const double sp = -2.0 * phi;
    const double a1 = (2.0 * gamma + 1.0) / (2.0 * gamma - 1.0);
    const double pw = 3.0 * gamma - 1.5;
    const double q = 3.0 * gamma - 0.5;
    const double beta = 1.0 / (2.0 * (n - 1.0) * (2.0 * gamma - 1.0));
    const double L = C1 + std::log(phi * phi) - std::log(s);
    const double Lp = 2.0 / phi + 2.0 * phi / s;
    const double Lpp = -2.0 / (phi * phi) + 2.0 / s + 4.0 * phi * phi / (s * s);

    PsiParts r;
    r.value = a1 * std::pow(s, pw) + beta * std::pow(s, q) * L;
    r.d1 = a1 * pw * std::pow(s, pw - 1) * sp +
           beta * (q * std::pow(s, q - 1) * sp * L + std::pow(s, q) * Lp);
    r.d2 = a1 * pw * ((pw - 1) * std::pow(s, pw - 2) * sp * sp - 2.0 * std::pow(s, pw - 1)) +
           beta * (q * (q - 1) * std::pow(s, q - 2) * sp * sp * L - 2.0 * q * std::pow(s, q - 1) * L +
                   2.0 * q * std::pow(s, q - 1) * sp * Lp + std::pow(s, q) * Lpp);
    return r;
}
inline double eval_psi(int n, double gamma, double C1, double phi) {
    return eval_psi_parts(n, gamma, C1, phi).value;
}

}  // namespace tipflow
