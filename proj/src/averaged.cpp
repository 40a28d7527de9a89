#include "pwmbif/averaged.hpp"
#include "pwmbif/errors.hpp"

#include <cmath>

namespace pwmbif {

namespace {

// ON/OFF stage matrices in the Eq.-style averaging convention, mapped from
// the cycle's stage-1/stage-2 roles.
struct StagePair {
    const Matrix& A_on;
    const Matrix& A_off;
    const Matrix& B_on;
    const Matrix& B_off;
};

StagePair on_off(const ConverterSpec& spec) {
    if (spec.on_stage() == 1)
        return {spec.A1, spec.A2, spec.B1, spec.B2};
    return {spec.A2, spec.A1, spec.B2, spec.B1};
}

} // namespace

Vector averaged_equilibrium(const ConverterSpec& spec, double D_c) {
    const StagePair s = on_off(spec);
    const Matrix A_ave = s.A_on * D_c + s.A_off * (1.0 - D_c);
    const Matrix B_ave = s.B_on * D_c + s.B_off * (1.0 - D_c);
    Eigen::FullPivLU<Matrix> lu(A_ave);
    if (!lu.isInvertible())
        throw NumericError("averaged_equilibrium: singular A_ave");
    return -lu.solve(B_ave * spec.u);
}

double consistent_duty(const ConverterSpec& spec, std::optional<double> fallback_on_duty) {
    if (!spec.is_ramp()) {
        if (fallback_on_duty) return *fallback_on_duty;
        throw InvalidArgument("consistent_duty: ramp control required");
    }
    const RampControl& rc = spec.ramp_control();
    const bool stage1_on = spec.on_stage() == 1;
    auto mismatch = [&](double D_on) {
        const Vector X = averaged_equilibrium(spec, D_on);
        const double s1frac = stage1_on ? D_on : 1.0 - D_on;
        const double h = rc.ramp.v_low + (rc.ramp.v_high - rc.ramp.v_low) * s1frac;
        return rc.C.dot(X) + rc.D.dot(spec.u) - h;
    };

    const double lo = 1e-9, hi = 1.0 - 1e-9;
    const int scan = 64;
    double prev_d = lo, prev_g = mismatch(lo);
    for (int k = 1; k <= scan; ++k) {
        const double cur_d = lo + (hi - lo) * k / scan;
        const double cur_g = mismatch(cur_d);
        if (prev_g == 0.0) return prev_d;
        if (prev_g * cur_g < 0.0) {
            RootOptions opts;
            opts.tol = 1e-12;
            return bracketed_root(mismatch, prev_d, cur_d, opts);
        }
        prev_d = cur_d;
        prev_g = cur_g;
    }
    if (fallback_on_duty) return *fallback_on_duty;
    throw NumericError("consistent_duty: no consistent duty in (0, 1) and no fallback");
}

AveragedOperatingPoint averaged_jacobian(const ConverterSpec& spec, double D_c,
                                         double hopf_band) {
    AveragedOperatingPoint op;
    op.D_c = D_c;
    op.X_ave = averaged_equilibrium(spec, D_c);

    const StagePair s = on_off(spec);
    op.jacobian = s.A_on * D_c + s.A_off * (1.0 - D_c);
    if (spec.is_ramp()) {
        const RampControl& rc = spec.ramp_control();
        const Vector num = (spec.A1 - spec.A2) * op.X_ave + (spec.B1 - spec.B2) * spec.u;
        op.jacobian += num * rc.C / (rc.ramp.v_high - rc.ramp.v_low);
    }
    op.eigenvalues = eigenvalues(op.jacobian);
    for (const Complex& e : op.eigenvalues) {
        if (std::abs(e.imag()) > 0.0 && std::abs(e.real()) <= hopf_band * std::abs(e.imag()))
            op.hopf_proximate = true;
    }
    return op;
}

} // namespace pwmbif
