#include "pwmbif/orbit.hpp"
#include "pwmbif/averaged.hpp"
#include "pwmbif/errors.hpp"

#include <cmath>

namespace pwmbif {

namespace {

// Cycle-local ramp, no wraparound.
double cycle_ramp(const ConverterSpec& spec, double t) {
    const Ramp& r = spec.ramp_control().ramp;
    return r.v_low + r.slope() * t;
}

double stage1_duration(const ConverterSpec& spec, const Vector& x) {
    const DiscreteDutyControl& dc = spec.duty_control();
    return Limiter{spec.T}.apply(dc.base_duty * spec.T - dc.K.dot(x - dc.x_ref));
}

Vector ramp_residual(const ConverterSpec& spec, const Vector& f1, const Vector& f2,
                     const Vector& z, int m) {
    const int n = spec.N;
    Vector r(m * (n + 1));
    for (int k = 0; k < m; ++k) {
        const Vector x_k = z.segment(k * (n + 1), n);
        const double d_k = z(k * (n + 1) + n);
        const Vector x_d = affine_flow(spec.A1, f1, x_k, d_k);
        const Vector x_T = affine_flow(spec.A2, f2, x_d, spec.T - d_k);
        const Vector x_next = z.segment(((k + 1) % m) * (n + 1), n);
        r.segment(k * (n + 1), n) = x_T - x_next;
        r(k * (n + 1) + n) = spec.feedback(x_d) - cycle_ramp(spec, d_k);
    }
    return r;
}

Vector discrete_residual(const ConverterSpec& spec, const Vector& f1, const Vector& f2,
                         const Vector& z, int m) {
    const int n = spec.N;
    Vector r(m * n);
    for (int k = 0; k < m; ++k) {
        const Vector x_k = z.segment(k * n, n);
        const double d_k = stage1_duration(spec, x_k);
        const Vector x_d = affine_flow(spec.A1, f1, x_k, d_k);
        const Vector x_T = affine_flow(spec.A2, f2, x_d, spec.T - d_k);
        r.segment(k * n, n) = x_T - z.segment(((k + 1) % m) * n, n);
    }
    return r;
}

// Open-loop periodic fixed point for a fixed stage-1 duration d: the map is
// affine, x -> M x + w, so the fixed point is one linear solve.
Vector open_loop_fixed_point(const ConverterSpec& spec, const Vector& f1, const Vector& f2,
                             double d) {
    const Matrix M = mat_exp(spec.A2, spec.T - d) * mat_exp(spec.A1, d);
    const Vector zero = Vector::Zero(spec.N);
    const Vector w = affine_flow(spec.A2, f2, affine_flow(spec.A1, f1, zero, d), spec.T - d);
    Eigen::FullPivLU<Matrix> lu(Matrix::Identity(spec.N, spec.N) - M);
    if (!lu.isInvertible())
        throw NumericError("open-loop fixed point: I - M singular");
    return lu.solve(w);
}

double on_duty_to_stage1(const ConverterSpec& spec, double on_duty) {
    return (spec.on_stage() == 1 ? on_duty : 1.0 - on_duty) * spec.T;
}

} // namespace

std::string to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::Stable:   return "stable";
        case StabilityClass::Unstable: return "unstable";
        case StabilityClass::NearPd:   return "near_pd";
        case StabilityClass::NearSn:   return "near_sn";
        case StabilityClass::NearNs:   return "near_ns";
    }
    return "?";
}

Vector orbit_residual(const ConverterSpec& spec, const Vector& z, int m) {
    if (m < 1 || m > 2)
        throw InvalidArgument("orbit_residual: m must be 1 or 2");
    const Vector f1 = spec.B1 * spec.u;
    const Vector f2 = spec.B2 * spec.u;
    if (spec.is_ramp()) {
        const int n = spec.N;
        if (z.size() != m * (n + 1))
            throw InvalidArgument("orbit_residual: z must have m*(N+1) entries");
        for (int k = 0; k < m; ++k) {
            const double d_k = z(k * (n + 1) + n);
            if (!(d_k > 0.0 && d_k < spec.T))
                throw InvalidArgument("orbit_residual: d outside (0, T); use the saturated branch");
        }
        return ramp_residual(spec, f1, f2, z, m);
    }
    if (z.size() != m * spec.N)
        throw InvalidArgument("orbit_residual: z must have m*N entries");
    return discrete_residual(spec, f1, f2, z, m);
}

PeriodicOrbit find_orbit(const ConverterSpec& spec, int m, const OrbitGuess& guess,
                         const OrbitSolveOptions& opts) {
    if (m < 1 || m > 2)
        throw InvalidArgument("find_orbit: m must be 1 or 2");
    spec.validate();
    const int n = spec.N;
    const Vector f1 = spec.B1 * spec.u;
    const Vector f2 = spec.B2 * spec.u;
    const StroboscopicMap map(spec);

    NewtonOptions newton;
    newton.tol = opts.tol;
    newton.max_iter = opts.max_iter;

    PeriodicOrbit orbit;
    orbit.m = m;

    if (spec.is_ramp()) {
        // One-cycle guess: user-supplied, else averaged equilibrium at the
        // consistent duty.
        Vector x_g;
        double d_g;
        if (guess.x0) {
            x_g = *guess.x0;
            d_g = guess.on_duty ? on_duty_to_stage1(spec, *guess.on_duty)
                                : map.find_switching_instant(x_g).value_or(0.5 * spec.T);
        } else {
            double d_on = 0.5;
            try {
                d_on = consistent_duty(spec, guess.on_duty);
            } catch (const NumericError&) {
            }
            if (guess.on_duty) d_on = *guess.on_duty;
            x_g = averaged_equilibrium(spec, d_on);
            d_g = on_duty_to_stage1(spec, d_on);
        }
        d_g = std::clamp(d_g, 0.01 * spec.T, 0.99 * spec.T);

        Vector z0(m * (n + 1));
        z0.segment(0, n) = x_g;
        z0(n) = d_g;
        if (m == 2) {
            // Second-cycle guess by simulation: nudge off the T-orbit and let
            // the flow settle toward the 2T attractor when there is one.
            Vector xa = x_g, xb;
            double da = d_g, db = d_g;
            try {
                const PeriodicOrbit base = find_orbit(spec, 1, guess, opts);
                Vector x = base.x0 * (1.0 + 1e-4);
                for (int i = 0; i < 600; ++i) x = map.step(x).x_next;
                const CycleResult ca = map.step(x);
                const CycleResult cb = map.step(ca.x_next);
                xa = x;
                da = std::clamp(ca.d, 0.01 * spec.T, 0.99 * spec.T);
                xb = ca.x_next;
                db = std::clamp(cb.d, 0.01 * spec.T, 0.99 * spec.T);
            } catch (const NumericError&) {
                xb = xa;
            }
            z0.segment(0, n) = xa;
            z0(n) = da;
            z0.segment(n + 1, n) = xb;
            z0(2 * n + 1) = db;
        }

        auto F = [&](const Vector& z) { return ramp_residual(spec, f1, f2, z, m); };
        const NewtonResult sol = newton_solve(F, nullptr, z0, newton);

        orbit.residual = sol.residual_norm;
        orbit.near_fold = sol.near_fold;
        for (int k = 0; k < m; ++k) {
            orbit.cycle_states.push_back(sol.z.segment(k * (n + 1), n));
            const double d_k = sol.z(k * (n + 1) + n);
            if (!(d_k >= 0.0 && d_k <= spec.T))
                throw NumericError("find_orbit: converged to a duration outside [0, T]");
            orbit.d.push_back(d_k);
        }
    } else {
        Vector x_g;
        if (guess.x0) {
            x_g = *guess.x0;
        } else {
            double d_g = spec.duty_control().base_duty * spec.T;
            if (guess.on_duty) {
                d_g = on_duty_to_stage1(spec, *guess.on_duty);
            } else {
                // Consistency condition for the duty-update law at the
                // open-loop fixed point; scan for a sign change.
                auto gap = [&](double d) {
                    const Vector x = open_loop_fixed_point(spec, f1, f2, d);
                    const DiscreteDutyControl& dc = spec.duty_control();
                    return dc.base_duty * spec.T - dc.K.dot(x - dc.x_ref) - d;
                };
                // Several consistency roots can coexist (the fold pairs a
                // stable and an unstable orbit); default to the one nearest
                // the nominal duty.
                const double nominal = d_g;
                const int scan = 64;
                std::optional<double> best;
                double prev_d = 0.0, prev_g = gap(0.0);
                for (int k = 1; k <= scan; ++k) {
                    const double cur_d = spec.T * k / scan;
                    const double cur_g = gap(cur_d);
                    if (prev_g == 0.0 || prev_g * cur_g < 0.0) {
                        RootOptions ropts;
                        ropts.tol = 1e-12 * spec.T;
                        const double root = prev_g == 0.0
                                                ? prev_d
                                                : bracketed_root(gap, prev_d, cur_d, ropts);
                        if (!best || std::abs(root - nominal) < std::abs(*best - nominal))
                            best = root;
                    }
                    prev_d = cur_d;
                    prev_g = cur_g;
                }
                if (best) d_g = *best;
            }
            x_g = open_loop_fixed_point(spec, f1, f2, std::clamp(d_g, 0.0, spec.T));
        }

        Vector z0(m * n);
        for (int k = 0; k < m; ++k) z0.segment(k * n, n) = x_g;

        auto F = [&](const Vector& z) { return discrete_residual(spec, f1, f2, z, m); };
        const NewtonResult sol = newton_solve(F, nullptr, z0, newton);

        orbit.residual = sol.residual_norm;
        orbit.near_fold = sol.near_fold;
        for (int k = 0; k < m; ++k) {
            const Vector x_k = sol.z.segment(k * n, n);
            orbit.cycle_states.push_back(x_k);
            orbit.d.push_back(stage1_duration(spec, x_k));
        }
    }

    orbit.x0 = orbit.cycle_states[0];
    for (double d_k : orbit.d) {
        const double duty = d_k / spec.T;
        orbit.duty.push_back(duty);
        orbit.on_duty.push_back(spec.on_stage() == 1 ? duty : 1.0 - duty);
    }

    // The residual formulation treats the duration as free; make sure the
    // located orbit is what the comparator actually produces.
    Vector x = orbit.x0;
    for (int k = 0; k < m; ++k) {
        const CycleResult cycle = map.step(x);
        if (std::abs(cycle.d - orbit.d[static_cast<size_t>(k)]) > 1e-6 * spec.T)
            throw NumericError("find_orbit: solution does not match the first switching instant");
        x = cycle.x_next;
    }
    orbit.resim_error = (x - orbit.x0).lpNorm<Eigen::Infinity>();
    if (orbit.resim_error > 10.0 * std::max(opts.tol, orbit.residual) + 1e-12)
        throw NumericError("find_orbit: re-simulation does not close the orbit");
    return orbit;
}

Matrix phi_closed_form(const ConverterSpec& spec, const PeriodicOrbit& orbit) {
    if (!spec.is_ramp())
        throw InvalidArgument("phi_closed_form: ramp control required");
    if (orbit.m != 1)
        throw InvalidArgument("phi_closed_form: one-cycle orbits only");
    const double d = orbit.d[0];
    if (!(d > 0.0 && d < spec.T))
        throw InvalidArgument("phi_closed_form: saturated orbit");

    const Vector f1 = spec.B1 * spec.u;
    const RampControl& rc = spec.ramp_control();
    const Vector x_d = affine_flow(spec.A1, f1, orbit.x0, d);
    const double hdot = rc.ramp.slope();
    const double den = rc.C.dot(spec.A1 * x_d + f1) - hdot;
    if (std::abs(den) < 1e-9 * std::abs(hdot))
        throw NumericError("phi_closed_form: trajectory grazes the ramp");

    const Vector num = (spec.A1 - spec.A2) * x_d + (spec.B1 - spec.B2) * spec.u;
    const Matrix correction = Matrix::Identity(spec.N, spec.N) - num * rc.C / den;
    return mat_exp(spec.A2, spec.T - d) * correction * mat_exp(spec.A1, d);
}

Matrix phi_discrete_duty(const ConverterSpec& spec, const PeriodicOrbit& orbit) {
    if (spec.is_ramp())
        throw InvalidArgument("phi_discrete_duty: discrete-duty control required");
    if (orbit.m != 1)
        throw InvalidArgument("phi_discrete_duty: one-cycle orbits only");

    const DiscreteDutyControl& dc = spec.duty_control();
    const double raw = dc.base_duty * spec.T - dc.K.dot(orbit.x0 - dc.x_ref);
    const double eps = 1e-12 * spec.T;
    if (std::abs(raw) <= eps || std::abs(raw - spec.T) <= eps)
        throw NumericError("phi_discrete_duty: duty at a limiter kink");

    const double d = Limiter{spec.T}.apply(raw);
    if (raw <= 0.0 || raw >= spec.T) {
        // Saturated: the duty no longer responds to the state.
        return mat_exp(spec.A2, spec.T - d) * mat_exp(spec.A1, d);
    }
    const Vector f1 = spec.B1 * spec.u;
    const Vector x_d = affine_flow(spec.A1, f1, orbit.x0, d);
    const Vector jump = (spec.A1 - spec.A2) * x_d + (spec.B1 - spec.B2) * spec.u;
    return mat_exp(spec.A2, spec.T - d) * (mat_exp(spec.A1, d) - jump * dc.K);
}

Matrix phi_finite_difference(const ConverterSpec& spec, const PeriodicOrbit& orbit) {
    const StroboscopicMap map(spec);
    auto cycle_map = [&](const Vector& x) {
        Vector y = x;
        for (int k = 0; k < orbit.m; ++k) y = map.step(y).x_next;
        return y;
    };
    const int n = spec.N;
    Matrix J(n, n);
    for (int i = 0; i < n; ++i) {
        const double step = 1e-6 * (1.0 + std::abs(orbit.x0(i)));
        Vector xp = orbit.x0, xm = orbit.x0;
        xp(i) += step;
        xm(i) -= step;
        J.col(i) = (cycle_map(xp) - cycle_map(xm)) / (2.0 * step);
    }
    return J;
}

Matrix orbit_jacobian(const ConverterSpec& spec, const PeriodicOrbit& orbit) {
    if (orbit.m == 1) {
        if (!spec.is_ramp())
            return phi_discrete_duty(spec, orbit);
        if (orbit.d[0] > 0.0 && orbit.d[0] < spec.T)
            return phi_closed_form(spec, orbit);
    }
    return phi_finite_difference(spec, orbit);
}

StabilityReport classify(const std::vector<Complex>& eigenvalues, double band) {
    if (eigenvalues.empty())
        throw InvalidArgument("classify: empty spectrum");
    StabilityReport report;
    report.eigenvalues = eigenvalues;
    report.spectral_radius = spectral_radius(eigenvalues);

    report.critical = eigenvalues[0];
    for (const Complex& e : eigenvalues) {
        const double m = std::abs(e), mc = std::abs(report.critical);
        if (m > mc || (m == mc && e.imag() > report.critical.imag()))
            report.critical = e;
    }

    report.classification = report.spectral_radius < 1.0 ? StabilityClass::Stable
                                                         : StabilityClass::Unstable;
    for (const Complex& e : eigenvalues) {
        if (std::abs(std::abs(e) - 1.0) > band) continue;
        if (std::abs(e.imag()) <= band) {
            if (std::abs(e.real() + 1.0) <= band) report.classification = StabilityClass::NearPd;
            else if (std::abs(e.real() - 1.0) <= band) report.classification = StabilityClass::NearSn;
        } else {
            report.classification = StabilityClass::NearNs;
        }
    }
    return report;
}

double neimark_frequency(const Complex& critical, double f_s) {
    if (critical.imag() == 0.0)
        throw InvalidArgument("neimark_frequency: real eigenvalue has no rotation");
    return f_s * std::abs(std::atan2(critical.imag(), critical.real())) / (2.0 * M_PI);
}

} // namespace pwmbif
