#pragma once

#include "pwmbif/converter.hpp"

#include <optional>

namespace pwmbif {

/// State-space averaged operating point: duty-weighted stage average, its
/// equilibrium, and the ramp-corrected continuous-time linearization.
struct AveragedOperatingPoint {
    double D_c = 0.0;        // switch-ON duty
    Vector X_ave;
    Matrix jacobian;
    std::vector<Complex> eigenvalues;  // continuous-time
    bool hopf_proximate = false;
};

/// X_ave = -A_ave^{-1} B_ave u with the ON/OFF stages weighted by the
/// switch-ON duty D_c. The ON stage is the one carrying the source column.
Vector averaged_equilibrium(const ConverterSpec& spec, double D_c);

/// Steady-state switch-ON duty from the PWM consistency condition
/// C X_ave(D_c) + D u = h(d) with d the stage-1 fraction of the period.
/// Ramp mode only; falls back to `fallback_on_duty` (typically a located
/// orbit's duty) when no root exists in (0, 1).
double consistent_duty(const ConverterSpec& spec,
                       std::optional<double> fallback_on_duty = {});

/// Averaged linearization: A_ave plus the ramp correction
/// ((A1 - A2) X_ave + (B1 - B2) u) C / (V_h - V_l). For discrete-duty
/// control there is no ramp and the correction is absent.
AveragedOperatingPoint averaged_jacobian(const ConverterSpec& spec, double D_c,
                                         double hopf_band = 1e-3);

} // namespace pwmbif
