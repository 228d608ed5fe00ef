#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tipflow {

enum class Coord { X, PHI, Z };

/// A function of one spatial variable on a grid at a fixed time.
struct SampledFunction {
    Coord coord = Coord::PHI;
    std::vector<double> grid;
    std::vector<double> values;
    double time = 0.0;

    std::size_t size() const { return grid.size(); }
};

struct OperatorResidual {
    std::vector<double> grid;
    std::vector<double> values;
    std::string op;
    double time = 0.0;
};

namespace fd {
/// Centered first/second derivatives on a (possibly nonuniform) grid,
/// one-sided at the ends.
inline void derivatives(const std::vector<double>& x, const std::vector<double>& f,
                        std::vector<double>& d1, std::vector<double>& d2) {
    std::size_t N = x.size();
    d1.assign(N, 0.0);
    d2.assign(N, 0.0);
    for (std::size_t j = 1; j + 1 < N; ++j) {
        double hm = x[j] - x[j - 1], hp = x[j + 1] - x[j];
        double den = hm * hp * (hm + hp);
        d1[j] = (hm * hm * f[j + 1] - hp * hp * f[j - 1] + (hp * hp - hm * hm) * f[j]) / den;
        d2[j] = 2.0 * (hm * f[j + 1] + hp * f[j - 1] - (hm + hp) * f[j]) / den;
    }
    if (N >= 3) {
        d1[0] = (f[1] - f[0]) / (x[1] - x[0]);
        d1[N - 1] = (f[N - 1] - f[N - 2]) / (x[N - 1] - x[N - 2]);
        d2[0] = d2[1];
        d2[N - 1] = d2[N - 2];
    }
}
}  // namespace fd

/// Right-hand side of the physical graph flow u_t = u_xx/(1+u_x^2) - (n-1)/u.
inline SampledFunction rhs_u(const SampledFunction& f, int n) {
    if (f.coord != Coord::X) throw std::invalid_argument("rhs_u expects an x-grid function");
    SampledFunction out = f;
    std::vector<double> d1, d2;
    fd::derivatives(f.grid, f.values, d1, d2);
    for (std::size_t j = 0; j < f.size(); ++j) {
        double u = f.values[j];
        if (u <= 0.0) throw std::domain_error("rhs_u: nonpositive radius at grid point");
        out.values[j] = d2[j] / (1.0 + d1[j] * d1[j]) - (n - 1) / u;
    }
    return out;
}

/// Right-hand side of the rescaled radius equation
/// phi_tau = e^{-2 g tau} phi_yy/(1+e^{-2 g tau} phi_y^2) - (1/2-g) y phi_y - (n-1)/phi + phi/2.
inline SampledFunction rhs_phi(const SampledFunction& f, double tau, double gamma, int n) {
    SampledFunction out = f;
    std::vector<double> d1, d2;
    fd::derivatives(f.grid, f.values, d1, d2);
    double e2 = std::exp(-2.0 * gamma * tau);
    for (std::size_t j = 0; j < f.size(); ++j) {
        double phi = f.values[j], y = f.grid[j];
        if (phi <= 0.0) throw std::domain_error("rhs_phi: nonpositive phi at grid point");
        out.values[j] = e2 * d2[j] / (1.0 + e2 * d1[j] * d1[j]) - (0.5 - gamma) * y * d1[j] -
                        (n - 1) / phi + phi / 2.0;
    }
    return out;
}

/// Pointwise right-hand side of the y(phi, tau) equation, for the
/// coordinate-change consistency checks.
inline double rhs_y_phi(double y, double yp, double ypp, double phi, double tau, double gamma, int n) {
    double e2 = std::exp(2.0 * gamma * tau);
    return ypp / (1.0 + e2 * yp * yp) + ((n - 1) / phi - phi / 2.0) * yp + (0.5 - gamma) * y;
}

/// Pointwise right-hand side of the y(z, tau) equation.
inline double rhs_y_z(double y, double yz, double yzz, double z, double tau, double gamma, int n) {
    double e2 = std::exp(2.0 * gamma * tau);
    return yzz / (1.0 / e2 + e2 * yz * yz) + (e2 * (n - 1) / z - (gamma + 0.5) * z) * yz +
           (0.5 - gamma) * y;
}

/// Candidate with analytic derivatives, the form barrier pieces provide.
struct CandidateDerivs {
    double value, d1, d2, dtau;
};

/// T_z[lam] = lam_tau - e^{2gt}(lam_zz - 2 lam_z^2/lam)/(1+e^{4gt} lam_z^2/lam^4)
///            - e^{2gt}(n-1) lam_z/z + (g+1/2) z lam_z + (1/2-g) lam,
/// with the axis limit (n-1) lam_zz(0) for the singular quotient.
inline double residual_T_z_point(const CandidateDerivs& c, double z, double tau, double gamma, int n) {
    if (c.value == 0.0) throw std::domain_error("T_z: candidate vanishes (lambda in denominators)");
    double e2 = std::exp(2.0 * gamma * tau), e4 = e2 * e2;
    double l = c.value, lz = c.d1, lzz = c.d2;
    double curv = e2 * (lzz - 2.0 * lz * lz / l) / (1.0 + e4 * lz * lz / (l * l * l * l));
    double sing = (std::abs(z) < 1e-12) ? e2 * (n - 1) * lzz : e2 * (n - 1) * lz / z;
    return c.dtau - curv - sing + (gamma + 0.5) * z * lz + (0.5 - gamma) * l;
}

/// F_phi[lam] = lam_tau - (lam_pp - 2 lam_p^2/lam)/(1+e^{2gt} lam_p^2/lam^4)
///              - ((n-1)/phi - phi/2) lam_p + (1/2-g) lam.
inline double residual_F_phi_point(const CandidateDerivs& c, double phi, double tau, double gamma,
                                   int n) {
    if (c.value == 0.0) throw std::domain_error("F_phi: candidate vanishes (lambda in denominators)");
    if (phi == 0.0) throw std::domain_error("F_phi: phi = 0 pole");
    double e2 = std::exp(2.0 * gamma * tau);
    double l = c.value, lp = c.d1, lpp = c.d2;
    double curv = (lpp - 2.0 * lp * lp / l) / (1.0 + e2 * lp * lp / (l * l * l * l));
    return c.dtau - curv - ((n - 1) / phi - phi / 2.0) * lp + (0.5 - gamma) * l;
}

/// Evaluates T_z on a grid of abscissas for any candidate supplying
/// CandidateDerivs at (z, tau).
template <class Candidate>
inline OperatorResidual residual_T_z(const Candidate& cand, const std::vector<double>& zs,
                                     double tau, double gamma, int n) {
    OperatorResidual r;
    r.grid = zs;
    r.op = "T_z";
    r.time = tau;
    r.values.reserve(zs.size());
    for (double z : zs) r.values.push_back(residual_T_z_point(cand(z, tau), z, tau, gamma, n));
    return r;
}

template <class Candidate>
inline OperatorResidual residual_F_phi(const Candidate& cand, const std::vector<double>& phis,
                                       double tau, double gamma, int n) {
    OperatorResidual r;
    r.grid = phis;
    r.op = "F_phi";
    r.time = tau;
    r.values.reserve(phis.size());
    for (double p : phis) r.values.push_back(residual_F_phi_point(cand(p, tau), p, tau, gamma, n));
    return r;
}

}  // namespace tipflow
