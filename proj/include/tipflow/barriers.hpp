#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tipflow/operators.hpp"
#include "tipflow/params.hpp"
#include "tipflow/profiles.hpp"

namespace tipflow {

enum class BarrierSide { PLUS, MINUS };

/// Interior piece -A + e^{-2gt}(F(z) + B t + E) + t e^{-4gt} D Q(z),
/// with analytic z- and tau-derivatives (second derivatives come from the
/// profile ODEs, so the leading cancellations in the residual are exact).
struct InteriorPiece {
    BarrierSide side = BarrierSide::PLUS;
    int n = 2;
    double gamma = 1.0;
    double A = 0.0, B = 0.0, E = 0.0, D = 0.0;
    ScaledTipProfile F;
    const ProfileSolution* Q = nullptr;

    CandidateDerivs at(double z, double tau) const {
        z = std::abs(z);
        const double g = gamma;
        const double e2 = std::exp(-2.0 * g * tau), e4 = e2 * e2;
        const double Fv = F.value(z), Fz = F.deriv(z), Fzz = F.second(z);
        const double Qv = Q->eval(z), Qz = Q->eval_deriv(z), Qzz = q_second_deriv(*Q, A, F, z);
        CandidateDerivs c;
        c.value = -A + e2 * (Fv + B * tau + E) + tau * e4 * D * Qv;
        c.d1 = e2 * Fz + tau * e4 * D * Qz;
        c.d2 = e2 * Fzz + tau * e4 * D * Qzz;
        c.dtau = -2.0 * g * e2 * (Fv + B * tau + E) + B * e2 + D * Qv * (e4 - 4.0 * g * tau * e4);
        return c;
    }
    /// e^{2 g tau} (value + A): the deviation from the limit constant, with no
    /// cancellation at large tau.
    double scaled_deviation(double z, double tau) const {
        const double e2 = std::exp(-2.0 * gamma * tau);
        return F.value(std::abs(z)) + B * tau + E + tau * e2 * D * Q->eval(std::abs(z));
    }
};

/// Exterior piece -c lb(phi) + b e^{-2gt} psi(phi).
struct ExteriorPiece {
    BarrierSide side = BarrierSide::PLUS;
    int n = 2;
    double gamma = 1.0;
    double c = 0.0, b = 0.0, C1_psi = 0.0;

    CandidateDerivs at(double phi, double tau) const {
        phi = std::abs(phi);
        const double e2 = std::exp(-2.0 * gamma * tau);
        const PsiParts ps = eval_psi_parts(n, gamma, C1_psi, phi);
        CandidateDerivs r;
        r.value = -c * eval_lambda_bar(n, gamma, phi) + b * e2 * ps.value;
        r.d1 = -c * eval_lambda_bar_d1(n, gamma, phi) + b * e2 * ps.d1;
        r.d2 = -c * eval_lambda_bar_d2(n, gamma, phi) + b * e2 * ps.d2;
        r.dtau = -2.0 * gamma * b * e2 * ps.value;
        return r;
    }
    /// e^{2 g tau} (value + c lb(0)), cancellation-free: the lb part enters as
    /// an exact expm1 of the log1p-power.
    double scaled_deviation_at_z(double z, double tau) const {
        const double g = gamma;
        const double phi = z * std::exp(-g * tau);
        const double s0 = 2.0 * n - 2.0;
        const double lb0 = std::pow(s0, g - 0.5);
        // e^{2gt} c [lb(0) - lb(phi)] = -c lb0 e^{2gt} expm1((g-1/2) log1p(-phi^2/s0))
        const double dev = std::expm1((g - 0.5) * std::log1p(-phi * phi / s0));
        return -c * lb0 * std::exp(2.0 * g * tau) * dev - (-b) * eval_psi(n, gamma, C1_psi, phi);
    }
};

struct PieceCertificate {
    double tau_certified = -1.0;  // smallest scanned tau with the sign condition on [tau, tau+5]
    double worst_margin = 0.0;    // signed; >= 0 means certified
    double worst_abscissa = 0.0, worst_tau = 0.0;
};

namespace detail {

inline std::vector<double> linspace(double a, double b, int m) {
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) v[i] = a + (b - a) * i / (m - 1);
    return v;
}
inline std::vector<double> geomspace(double a, double b, int m) {
    std::vector<double> v(m);
    double la = std::log(a), lb = std::log(b);
    for (int i = 0; i < m; ++i) v[i] = std::exp(la + (lb - la) * i / (m - 1));
    return v;
}

/// Smallest tau in a geometric scan such that `margin(tau')` >= 0 for all
/// tau' in [tau, tau+5] (21 samples) plus spot checks beyond the window.
template <class MarginFn>
inline PieceCertificate scan_tau(const MarginFn& margin, double tau_lo, double tau_hi) {
    PieceCertificate cert;
    for (double t1 = tau_lo; t1 <= tau_hi; t1 *= 1.25) {
        bool ok = true;
        PieceCertificate trial;
        trial.worst_margin = 1e300;
        auto probe = [&](double t) {
            auto [m, x] = margin(t);
            if (m < trial.worst_margin) {
                trial.worst_margin = m;
                trial.worst_abscissa = x;
                trial.worst_tau = t;
            }
            if (m < 0.0) ok = false;
        };
        for (int k = 0; k <= 20 && ok; ++k) probe(t1 + 5.0 * k / 20.0);
        for (double t : {t1 + 7.0, t1 + 10.0}) {
            if (ok) probe(t);
        }
        if (ok) {
            trial.tau_certified = t1;
            return trial;
        }
        cert = trial;  // keep the failing diagnostics from the last attempt
    }
    cert.tau_certified = -1.0;
    return cert;
}

}  // namespace detail

/// Builds the interior super/subsolution piece for one side and certifies its
/// residual sign on [0, R1] x [tau1, tau1+5].
inline InteriorPiece make_interior_piece(const FlowParams& p, const DerivedConstants& d,
                                         BarrierSide side, const ProfileSolution& P,
                                         const ProfileSolution& Q, PieceCertificate* cert = nullptr) {
    InteriorPiece piece;
    piece.side = side;
    piece.n = p.n;
    piece.gamma = p.gamma;
    piece.A = (side == BarrierSide::PLUS) ? d.A_plus : d.A_minus;
    piece.B = (side == BarrierSide::PLUS) ? d.B_plus : d.B_minus;
    piece.E = (side == BarrierSide::PLUS) ? p.E_plus : p.E_minus;
    piece.D = (side == BarrierSide::PLUS) ? d.D_plus : d.D_minus;
    piece.F = ScaledTipProfile{&P, piece.A, p.gamma};
    piece.Q = &Q;

    if (cert) {
        const double sign = (side == BarrierSide::PLUS) ? 1.0 : -1.0;
        auto zs = detail::linspace(0.0, p.R1, 400);
        auto margin = [&](double t) -> std::pair<double, double> {
            double worst = 1e300, at = 0.0;
            for (double z : zs) {
                double r = sign * residual_T_z_point(piece.at(z, t), z, t, p.gamma, p.n);
                if (r < worst) {
                    worst = r;
                    at = z;
                }
            }
            return {worst, at};
        };
        *cert = detail::scan_tau(margin, 1.0, 64.0);
        if (cert->tau_certified < 0.0)
            throw std::runtime_error("interior piece sign condition unachievable; worst at z = " +
                                     std::to_string(cert->worst_abscissa) +
                                     ", tau = " + std::to_string(cert->worst_tau));
    }
    return piece;
}

/// Builds the exterior piece; if the sign condition fails on the scanned tau
/// range, tightens b (factor 2 toward safety) for up to 10 rounds.
inline ExteriorPiece make_exterior_piece(const FlowParams& p, const DerivedConstants& d,
                                         BarrierSide side, PieceCertificate* cert = nullptr,
                                         double inner_edge_z = -1.0) {
    ExteriorPiece piece;
    piece.side = side;
    piece.n = p.n;
    piece.gamma = p.gamma;
    piece.c = (side == BarrierSide::PLUS) ? p.c_plus : p.c_minus;
    piece.b = (side == BarrierSide::PLUS) ? p.b_plus : p.b_minus;
    piece.C1_psi = 0.0;
    if (!cert) return piece;

    const double sign = (side == BarrierSide::PLUS) ? 1.0 : -1.0;
    const double edge = (inner_edge_z > 0.0) ? inner_edge_z : p.R2;
    const double phi_max = cylinder_radius(p.n) - 1e-3;
    for (int round = 0; round < 10; ++round) {
        auto margin = [&](double t) -> std::pair<double, double> {
            auto phis = detail::geomspace(edge * std::exp(-p.gamma * t), phi_max, 1200);
            double worst = 1e300, at = 0.0;
            for (double phi : phis) {
                double r = sign * residual_F_phi_point(piece.at(phi, t), phi, t, p.gamma, p.n);
                if (r < worst) {
                    worst = r;
                    at = phi;
                }
            }
            return {worst, at};
        };
        *cert = detail::scan_tau(margin, 1.0, 64.0);
        if (cert->tau_certified >= 0.0) return piece;
        piece.b = (side == BarrierSide::PLUS) ? 2.0 * piece.b : 0.5 * piece.b;
    }
    throw std::runtime_error("exterior piece sign condition unachievable; worst at phi = " +
                             std::to_string(cert->worst_abscissa) +
                             ", tau = " + std::to_string(cert->worst_tau));
}

struct PatchRadii {
    double R_star = 0.0, R_star_upper = 0.0;  // R_* and R^*
    double E_plus = 0.0, E_minus = 0.0;
    double tau5 = -1.0;     // from which the four patch inequalities hold on the scan
    double crossing_plus = 0.0, crossing_minus = 0.0;  // late-time crossings z0, z1
};

/// e^{2gt}(interior - exterior at phi = z e^{-gt}), computed cancellation-free
/// (the limit constants -A and -c lb(0) cancel exactly by the amplitude relation).
inline double patch_gap(const InteriorPiece& ip, const ExteriorPiece& ep, double z, double tau) {
    return ip.scaled_deviation(z, tau) - ep.scaled_deviation_at_z(z, tau);
}

/// Finds patch radii and E+- such that the four sign conditions hold at R_*
/// and R^* for all scanned tau.  E slides the late-time crossing to the
/// geometric center of the band; the scan then locates tau5.
inline PatchRadii find_patch_radii(const FlowParams& p, const DerivedConstants& d,
                                   InteriorPiece& int_plus, InteriorPiece& int_minus,
                                   const ExteriorPiece& ext_plus, const ExteriorPiece& ext_minus) {
    PatchRadii out;
    out.R_star = p.R2 * 1.035;
    out.R_star_upper = p.R1 * 0.94;
    const double z_target = std::sqrt(out.R_star * out.R_star_upper);
    const double tau_ref = 11.5 / p.gamma;

    // Increasing E raises the gap for both sides, so one bisection form serves.
    auto tune = [&](InteriorPiece& ip, const ExteriorPiece& ep) {
        double lo = -80.0, hi = 80.0;
        for (int it = 0; it < 100; ++it) {
            ip.E = 0.5 * (lo + hi);
            (patch_gap(ip, ep, z_target, tau_ref) > 0.0 ? hi : lo) = ip.E;
        }
        ip.E = 0.5 * (lo + hi);
    };
    tune(int_plus, ext_plus);
    tune(int_minus, ext_minus);
    out.E_plus = int_plus.E;
    out.E_minus = int_minus.E;

    auto crossing = [&](const InteriorPiece& ip, const ExteriorPiece& ep, double t) {
        double zlo = out.R_star * 0.5, zhi = out.R_star_upper * 1.5;
        double glo = patch_gap(ip, ep, zlo, t);
        for (int it = 0; it < 80; ++it) {
            double zm = 0.5 * (zlo + zhi);
            double gm = patch_gap(ip, ep, zm, t);
            if ((gm > 0.0) == (glo > 0.0)) {
                zlo = zm;
                glo = gm;
            } else {
                zhi = zm;
            }
        }
        return 0.5 * (zlo + zhi);
    };
    out.crossing_plus = crossing(int_plus, ext_plus, tau_ref);
    out.crossing_minus = crossing(int_minus, ext_minus, tau_ref);

    auto all_four = [&](double t) -> std::pair<double, double> {
        double m1 = -patch_gap(int_plus, ext_plus, out.R_star, t);
        double m2 = patch_gap(int_plus, ext_plus, out.R_star_upper, t);
        double m3 = patch_gap(int_minus, ext_minus, out.R_star, t);
        double m4 = -patch_gap(int_minus, ext_minus, out.R_star_upper, t);
        double worst = std::min(std::min(m1, m2), std::min(m3, m4));
        return {worst, worst == m1 || worst == m3 ? out.R_star : out.R_star_upper};
    };
    PieceCertificate cert = detail::scan_tau(all_four, 1.0, 64.0);
    if (cert.tau_certified < 0.0)
        throw std::runtime_error("no admissible patch radii: inequalities fail near z = " +
                                 std::to_string(cert.worst_abscissa) +
                                 " at tau = " + std::to_string(cert.worst_tau));
    out.tau5 = cert.tau_certified;
    return out;
}

/// Piecewise barrier: interior for |z| <= R_*, inf (+) / sup (-) of both
/// pieces on the overlap, exterior beyond R^*.
struct PatchedBarrier {
    BarrierSide side = BarrierSide::PLUS;
    InteriorPiece interior;
    ExteriorPiece exterior;
    double R_star = 0.0, R_star_upper = 0.0;
    double tau0 = 0.0;

    double eval(double phi, double tau) const {
        phi = std::abs(phi);
        const double z = phi * std::exp(interior.gamma * tau);
        if (z <= R_star) return interior.at(z, tau).value;
        if (z >= R_star_upper) return exterior.at(phi, tau).value;
        const double iv = interior.at(z, tau).value;
        const double ev = exterior.at(phi, tau).value;
        return (side == BarrierSide::PLUS) ? std::min(iv, ev) : std::max(iv, ev);
    }
};

struct BarrierSet {
    PatchedBarrier plus, minus;
    PatchRadii radii;
    PieceCertificate cert_int_plus, cert_int_minus, cert_ext_plus, cert_ext_minus;
    double tau1 = 0.0, tau2 = 0.0, tau_order = 0.0, tau5 = 0.0;
    double tau0 = 0.0;  // start of the certified trapping era
};

/// Builds both patched barriers, running every certification scan.
/// Exterior pieces come first: if their amplitude b tightens, the forced
/// relations B = -2 g b beta and the D margins are recomputed before the
/// interior pieces are built.  tau0 is max(tau1, tau2, tau_order) + 1; the
/// patch inequalities certify from tau5, which is reported separately (the
/// inf/sup barriers trap and stay ordered before their corners settle into
/// the overlap band).
inline BarrierSet build_barriers(const FlowParams& p, const DerivedConstants& d,
                                 const ProfileSolution& P, const ProfileSolution& Q_plus,
                                 const ProfileSolution& Q_minus) {
    BarrierSet bs;
    ExteriorPiece ep = make_exterior_piece(p, d, BarrierSide::PLUS, &bs.cert_ext_plus, p.R2);
    ExteriorPiece em = make_exterior_piece(p, d, BarrierSide::MINUS, &bs.cert_ext_minus, p.R2);

    DerivedConstants d2 = d;
    if (ep.b != p.b_plus || em.b != p.b_minus) {
        const double g = p.gamma;
        d2.B_plus = -2.0 * g * ep.b * d.beta_tilde;
        d2.B_minus = -2.0 * g * em.b * d.beta_tilde;
        d2.D_plus = 1.5 * ((3.0 * g - 0.5) + d.C_slope_plus) * d2.B_plus;
        d2.D_minus = 1.5 * ((3.0 * g - 0.5) * d2.B_minus - d.C_slope_minus * std::abs(d2.B_minus));
    }
    InteriorPiece ip = make_interior_piece(p, d2, BarrierSide::PLUS, P, Q_plus, &bs.cert_int_plus);
    InteriorPiece im = make_interior_piece(p, d2, BarrierSide::MINUS, P, Q_minus, &bs.cert_int_minus);
    bs.radii = find_patch_radii(p, d2, ip, im, ep, em);
    bs.tau1 = std::max(bs.cert_int_plus.tau_certified, bs.cert_int_minus.tau_certified);
    bs.tau2 = std::max(bs.cert_ext_plus.tau_certified, bs.cert_ext_minus.tau_certified);
    bs.tau5 = bs.radii.tau5;

    // ordering scan: patched minus < patched plus on a phi grid
    PatchedBarrier plus{BarrierSide::PLUS, ip, ep, bs.radii.R_star, bs.radii.R_star_upper, 0.0};
    PatchedBarrier minus{BarrierSide::MINUS, im, em, bs.radii.R_star, bs.radii.R_star_upper, 0.0};
    const double phi_max = cylinder_radius(p.n) - 1e-6;
    auto order_margin = [&](double t) -> std::pair<double, double> {
        double worst = 1e300, at = 0.0;
        for (int i = 0; i < 800; ++i) {
            double phi = phi_max * (i + 0.5) / 800.0;
            double m = plus.eval(phi, t) - minus.eval(phi, t);
            if (m < worst) {
                worst = m;
                at = phi;
            }
        }
        return {worst, at};
    };
    PieceCertificate oc = detail::scan_tau(order_margin, 1.0, 64.0);
    if (oc.tau_certified < 0.0)
        throw std::runtime_error("barrier ordering fails near phi = " + std::to_string(oc.worst_abscissa));
    bs.tau_order = oc.tau_certified;

    bs.tau0 = std::max({bs.tau1, bs.tau2, bs.tau_order}) + 1.0;
    if (p.tau0 > 0.0) bs.tau0 = std::max(bs.tau0, p.tau0);
    plus.tau0 = minus.tau0 = bs.tau0;
    bs.plus = plus;
    bs.minus = minus;
    return bs;
}

inline double eval_patched(const PatchedBarrier& b, double phi, double tau) { return b.eval(phi, tau); }

struct CertificateReport {
    bool b1 = false, b2 = false, b3 = true, b4 = false;
    double b1_margin_int_plus = 0.0, b1_margin_int_minus = 0.0;
    double b1_margin_ext_plus = 0.0, b1_margin_ext_minus = 0.0;
    double b2_margin = 0.0;
    double b4_value_plus = 0.0, b4_value_minus = 0.0, b4_bound_plus = 0.0, b4_bound_minus = 0.0;
    bool all() const { return b1 && b2 && b3 && b4; }
};

/// Certifies (B1), (B2), (B4) on sampled grids over [tau_lo, tau_hi]; (B3)
/// holds by construction of the piecewise rule.
inline CertificateReport certify_barriers(const FlowParams& p, const BarrierSet& bs, int phi_points,
                                          double tau_lo, double tau_hi, int tau_points = 6) {
    CertificateReport rep;
    const double g = p.gamma;
    const double rad = cylinder_radius(p.n);
    auto taus = detail::linspace(tau_lo, tau_hi, tau_points);

    double m_ip = 1e300, m_im = 1e300, m_ep = 1e300, m_em = 1e300;
    auto zs = detail::linspace(0.0, p.R1, 400);
    for (double t : taus) {
        for (double z : zs) {
            m_ip = std::min(m_ip, residual_T_z_point(bs.plus.interior.at(z, t), z, t, g, p.n));
            m_im = std::min(m_im, -residual_T_z_point(bs.minus.interior.at(z, t), z, t, g, p.n));
        }
        auto phis = detail::geomspace(p.R2 * std::exp(-g * t), rad - 1e-3, 1500);
        for (double phi : phis) {
            m_ep = std::min(m_ep, residual_F_phi_point(bs.plus.exterior.at(phi, t), phi, t, g, p.n));
            m_em = std::min(m_em, -residual_F_phi_point(bs.minus.exterior.at(phi, t), phi, t, g, p.n));
        }
    }
    rep.b1_margin_int_plus = m_ip;
    rep.b1_margin_int_minus = m_im;
    rep.b1_margin_ext_plus = m_ep;
    rep.b1_margin_ext_minus = m_em;
    rep.b1 = m_ip >= 0.0 && m_im >= 0.0 && m_ep >= 0.0 && m_em >= 0.0;

    double m2 = 1e300;
    for (double t : taus)
        for (int i = 0; i < phi_points; ++i) {
            double phi = (rad - 1e-6) * (i + 0.5) / phi_points;
            m2 = std::min(m2, bs.plus.eval(phi, t) - bs.minus.eval(phi, t));
        }
    rep.b2_margin = m2;
    rep.b2 = m2 > 0.0;

    // (B4): boundary values from the closed forms, against the closed-form bound.
    const double delta = 1e-6;
    const double phi_b4 = rad - delta;
    const double s = rad * rad - phi_b4 * phi_b4;
    double vplus = 0.0, vminus = 0.0;
    for (double t : taus) {
        vplus = std::max(vplus, std::abs(bs.plus.exterior.at(phi_b4, t).value));
        vminus = std::max(vminus, std::abs(bs.minus.exterior.at(phi_b4, t).value));
    }
    auto bound = [&](double c, double b, double t0) {
        double psi_scale = std::abs(eval_psi(p.n, g, 0.0, phi_b4));
        return 1.05 * (c * std::pow(s, g - 0.5) + std::abs(b) * std::exp(-2.0 * g * t0) * psi_scale);
    };
    rep.b4_value_plus = vplus;
    rep.b4_value_minus = vminus;
    rep.b4_bound_plus = bound(p.c_plus, bs.plus.exterior.b, tau_lo);
    rep.b4_bound_minus = bound(p.c_minus, bs.minus.exterior.b, tau_lo);
    rep.b4 = vplus <= rep.b4_bound_plus && vminus <= rep.b4_bound_minus;
    return rep;
}

}  // namespace tipflow
