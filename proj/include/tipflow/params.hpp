#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tipflow/profiles.hpp"

namespace tipflow {

/// Fixed problem data.  Defaults give the reproducible baseline: n = 2,
/// gamma = 1, A_tilde = 1, with c_mid chosen so the mid amplitude
/// A = c_mid (2n-2)^{gamma-1/2} equals 1/A_tilde, and c+- = c_mid (1 -+ 0.2).
struct FlowParams {
    int n = 2;
    double gamma = 1.0;
    double A_tilde = 1.0;
    double c_plus = 0.0, c_minus = 0.0;  // 0 => derive from c_mid
    double c_mid = 0.0;                  // 0 => (2n-2)^{1/2-gamma} / A_tilde
    double E_plus = 0.0, E_minus = 0.0;  // adjusted by the patch-radius search
    double b_plus = 0.0, b_minus = 0.0;  // 0 => -2.5 c+^3 and +0.4 c-^3
    double R1 = 0.0, R2 = 0.0;           // region radii in z units; 0 => scaled from the
                                         // derivative-cancellation radius of the exterior piece
    double tau0 = -1.0;                  // < 0 => determined by the certification scans
    std::vector<double> C_of_tau = {0.0};  // polynomial coefficients of the free function C(tau)

    void apply_defaults() {
        if (c_mid == 0.0) c_mid = std::pow(2.0 * n - 2.0, 0.5 - gamma) / A_tilde;
        if (c_plus == 0.0) c_plus = c_mid * 0.8;
        if (c_minus == 0.0) c_minus = c_mid * 1.2;
        if (b_plus == 0.0) b_plus = -2.5 * c_plus * c_plus * c_plus;
        if (b_minus == 0.0) b_minus = 0.4 * c_minus * c_minus * c_minus;
        if (R1 == 0.0 || R2 == 0.0) {
            // z_c: where the exterior piece's phi-derivative contributions cancel
            // (scaled out of e^{-g tau}); the region must enclose it.
            double zc2 = (-b_plus / c_plus) * std::pow(2.0 * n - 2.0, 2.0 * gamma + 1.0) /
                         ((n - 1) * (2.0 * gamma - 1.0) * (2.0 * gamma - 1.0));
            double zc = std::sqrt(zc2);
            if (R2 == 0.0) R2 = 1.75 * zc;
            if (R1 == 0.0) R1 = 2.25 * zc;
        }
    }

    double C_tau(double tau) const {
        double v = 0.0, p = 1.0;
        for (double c : C_of_tau) {
            v += c * p;
            p *= tau;
        }
        return v;
    }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

inline ValidationReport validate(const FlowParams& p) {
    ValidationReport r;
    auto bad = [&](const std::string& m) { r.violations.push_back(m); };
    if (p.n < 2) bad("dimension n must be >= 2 for flow operations");
    if (p.gamma <= 0.5) bad("gamma must exceed 1/2");
    if (p.A_tilde <= 0.0) bad("A_tilde must be positive");
    if (p.c_plus <= 0.0) bad("c_plus must be positive");
    if (p.c_minus <= 0.0) bad("c_minus must be positive");
    if (p.c_plus >= p.c_minus) bad("amplitude ordering violated: need c_plus < c_minus");
    if (p.c_mid <= p.c_plus || p.c_mid >= p.c_minus) bad("c_mid must lie in (c_plus, c_minus)");
    if (p.b_plus >= 0.0) bad("b_plus must be negative");
    if (p.b_minus <= 0.0) bad("b_minus must be positive");
    if (p.R2 <= 0.0 || p.R2 >= p.R1) bad("region radii must satisfy 0 < R2 < R1");
    return r;
}

/// Constants derived from FlowParams by closed-form relations plus the
/// computed interior bounds.  The slope bound (on |2 A^-1 F_zz/(1+F_z^2/A^4)|)
/// sets D with a 1.5x margin; the value bound (on |F|) only enters the
/// tau scans.  D- uses the sign-robust form D- = 1.5 [(3g-1/2) B- - C |B-|],
/// which is what the subsolution inequality actually needs when B- < 0.
struct DerivedConstants {
    double beta_tilde = 0.0;
    double A_plus = 0.0, A_minus = 0.0, A_mid = 0.0;
    double B_plus = 0.0, B_minus = 0.0;
    double D_plus = 0.0, D_minus = 0.0;
    double C_slope_plus = 0.0, C_slope_minus = 0.0;  // interior slope bounds on [0, R1]
    double C_value_plus = 0.0, C_value_minus = 0.0;  // interior |F| bounds on [0, R1]
    double cylinder_radius = 0.0;
};

inline double interior_slope_bound(const ScaledTipProfile& F, double R1) {
    double worst = 0.0;
    const double A4 = F.A * F.A * F.A * F.A;
    for (int i = 0; i <= 800; ++i) {
        double z = R1 * i / 800.0;
        double Fz = F.deriv(z), Fzz = F.second(z);
        worst = std::max(worst, std::abs(2.0 * Fzz / F.A / (1.0 + Fz * Fz / A4)));
    }
    return worst;
}

inline double interior_value_bound(const ScaledTipProfile& F, double R1) {
    double worst = 0.0;
    for (int i = 0; i <= 800; ++i) worst = std::max(worst, std::abs(F.value(R1 * i / 800.0)));
    return worst;
}

inline DerivedConstants derive_constants(const FlowParams& p, const ProfileSolution& P) {
    auto rep = validate(p);
    if (!rep.ok()) throw std::invalid_argument("invalid parameters: " + rep.violations.front());
    DerivedConstants d;
    const double g = p.gamma;
    d.beta_tilde = std::pow(2.0 * (p.n - 1), 3.0 * (g - 0.5)) / (2.0 * g - 1.0);
    const double amp = std::pow(2.0 * p.n - 2.0, g - 0.5);
    d.A_plus = p.c_plus * amp;
    d.A_minus = p.c_minus * amp;
    d.A_mid = p.c_mid * amp;
    d.B_plus = -2.0 * g * p.b_plus * d.beta_tilde;
    d.B_minus = -2.0 * g * p.b_minus * d.beta_tilde;
    d.cylinder_radius = cylinder_radius(p.n);

    ScaledTipProfile Fp{&P, d.A_plus, g}, Fm{&P, d.A_minus, g};
    d.C_slope_plus = interior_slope_bound(Fp, p.R1);
    d.C_slope_minus = interior_slope_bound(Fm, p.R1);
    d.C_value_plus = interior_value_bound(Fp, p.R1);
    d.C_value_minus = interior_value_bound(Fm, p.R1);
    d.D_plus = 1.5 * ((3.0 * g - 0.5) + d.C_slope_plus) * d.B_plus;
    d.D_minus = 1.5 * ((3.0 * g - 0.5) * d.B_minus - d.C_slope_minus * std::abs(d.B_minus));
    return d;
}

/// Convenience overload that solves the needed profile internally.
inline DerivedConstants derive_constants(const FlowParams& p) {
    auto rep = validate(p);
    if (!rep.ok()) throw std::invalid_argument("invalid parameters: " + rep.violations.front());
    double amp = std::pow(2.0 * p.n - 2.0, p.gamma - 0.5);
    double zbar_needed = (p.gamma - 0.5) * p.R1 / (p.c_plus * amp);
    ProfileSolution P = solve_grim_reaper_profile(p.n, std::max(8.0, 1.5 * zbar_needed), 1e-10);
    return derive_constants(p, P);
}

}  // namespace tipflow
