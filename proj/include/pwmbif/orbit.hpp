#pragma once

#include "pwmbif/cycle_sim.hpp"

#include <optional>

namespace pwmbif {

/// A located m*T-periodic solution, anchored at a clock instant.
struct PeriodicOrbit {
    int m = 1;
    Vector x0;                         // state at the anchor clock instant
    std::vector<Vector> cycle_states;  // m cycle-start states, [0] == x0
    std::vector<double> d;             // m first-stage durations, seconds
    std::vector<double> duty;          // d_k / T
    std::vector<double> on_duty;       // switch-ON fraction per cycle
    double residual = 0.0;             // infinity norm at the solution
    double resim_error = 0.0;          // |map^m(x0) - x0| from re-simulation
    bool near_fold = false;            // Newton Jacobian condition above 1e10
};

enum class StabilityClass { Stable, Unstable, NearPd, NearSn, NearNs };

std::string to_string(StabilityClass c);

struct StabilityReport {
    std::vector<Complex> eigenvalues;
    double spectral_radius = 0.0;
    StabilityClass classification = StabilityClass::Stable;
    Complex critical;                  // eigenvalue of maximum modulus
    bool stable() const { return spectral_radius < 1.0; }
};

struct OrbitGuess {
    std::optional<Vector> x0;
    std::optional<double> on_duty;     // switch-ON fraction
};

/// Boundary-value residual. Ramp mode: z stacks, per cycle, the cycle-start
/// state and the stage-1 duration (m*(N+1) unknowns); each cycle contributes
/// the chained continuity mismatch and the switching condition. Discrete
/// mode: z stacks the m cycle-start states; durations come from the control
/// law.
Vector orbit_residual(const ConverterSpec& spec, const Vector& z, int m);

struct OrbitSolveOptions {
    double tol = 1e-10;
    int max_iter = 60;
};

/// Damped Newton on orbit_residual from the guess chain (user guess, else
/// averaged-model equilibrium with the consistent duty). Locates stable and
/// unstable orbits alike; throws NumericError on non-convergence.
PeriodicOrbit find_orbit(const ConverterSpec& spec, int m, const OrbitGuess& guess = {},
                         const OrbitSolveOptions& opts = {});

/// Orbit Jacobian from the closed-form sampled-data expression
///   Phi = e^{A2 (T-d)} (I - (dF x0(d) + dB u) C / (C (A1 x0(d) + B1 u) - hdot)) e^{A1 d}
/// with dF = A1 - A2, dB = B1 - B2. Ramp mode, m = 1, unsaturated orbits
/// only; throws NumericError when the trajectory grazes the ramp.
Matrix phi_closed_form(const ConverterSpec& spec, const PeriodicOrbit& orbit);

/// Chain-rule Jacobian of the discrete-duty map. Interior orbits pick up the
/// -(f1 - f2) K duty-sensitivity term; saturated orbits reduce to the open
/// product of stage exponentials.
Matrix phi_discrete_duty(const ConverterSpec& spec, const PeriodicOrbit& orbit);

/// Central-difference Jacobian of the m-cycle stroboscopic map around x0,
/// step 1e-6 * (1 + |x0_i|). The oracle for both closed forms, and the only
/// Jacobian for m = 2 orbits.
Matrix phi_finite_difference(const ConverterSpec& spec, const PeriodicOrbit& orbit);

/// Dispatches to the appropriate Jacobian for this orbit.
Matrix orbit_jacobian(const ConverterSpec& spec, const PeriodicOrbit& orbit);

/// Three-way proximity classification: a real multiplier within `band` of -1
/// flags period doubling, of +1 a saddle-node, a complex pair near the unit
/// circle a Neimark bifurcation.
StabilityReport classify(const std::vector<Complex>& eigenvalues, double band = 1e-3);

/// Modulation frequency f_s |arg(lambda)| / (2 pi) of a complex multiplier.
double neimark_frequency(const Complex& critical, double f_s);

} // namespace pwmbif
