#pragma once

#include <cmath>
#include <stdexcept>

#include "tipflow/params.hpp"
#include "tipflow/profiles.hpp"

namespace tipflow {

enum class Picture { Y, LAMBDA };
enum class Region { INTERIOR, EXTERIOR };

/// Matched approximate solutions in both pictures.  The matching constant
/// is fixed exactly: C1 = A_tilde [2(n-1)]^{gamma-1/2}, so the interior and
/// exterior leading terms agree in the limit.
struct FormalSolution {
    const FlowParams* params = nullptr;
    const DerivedConstants* consts = nullptr;
    const ProfileSolution* profile = nullptr;  // interior evaluations only

    double matching_C1() const {
        return params->A_tilde * std::pow(2.0 * (params->n - 1), params->gamma - 0.5);
    }

    /// Interior formal solution at (z, tau).  Y picture:
    /// A_tilde + e^{-2 g tau} C(tau) + e^{-2 g tau} P((g-1/2) A_tilde z)/((g-1/2) A_tilde).
    /// Lambda picture: -A_mid + e^{-2 g tau} F(z) with F scaled by A_mid.
    double interior(Picture pic, double z, double tau) const {
        const double g = params->gamma;
        const double e2 = std::exp(-2.0 * g * tau);
        z = std::abs(z);
        if (pic == Picture::Y) {
            const double k = (g - 0.5) * params->A_tilde;
            return params->A_tilde + e2 * params->C_tau(tau) + e2 * profile->eval(k * z) / k;
        }
        ScaledTipProfile F{profile, consts->A_mid, g};
        return -consts->A_mid + e2 * F.value(z);
    }

    /// Exterior formal solution at phi (tau-independent).
    /// Y picture diverges at the cylinder radius; the Lambda picture extends
    /// continuously by zero there.
    double exterior(Picture pic, double phi) const {
        const double g = params->gamma;
        const double s = 2.0 * (params->n - 1) - phi * phi;
        if (pic == Picture::Y) {
            if (s <= 0.0) throw std::domain_error("exterior Y formal solution: at/beyond cylinder radius");
            return matching_C1() * std::pow(s, 0.5 - g);
        }
        if (s < 0.0) throw std::domain_error("exterior formal solution: beyond cylinder radius");
        return -params->c_mid * std::pow(s, g - 0.5);
    }
};

/// |interior(z=R) - exterior(phi = R e^{-g tau})| in the chosen picture;
/// tends to 0 as tau grows.
inline double matching_residual(const FormalSolution& f, Picture pic, double R, double tau) {
    double phi = R * std::exp(-f.params->gamma * tau);
    return std::abs(f.interior(pic, R, tau) - f.exterior(pic, phi));
}

}  // namespace tipflow
