#include "pwmbif/averaged.hpp"
#include "pwmbif/errors.hpp"
#include "pwmbif/orbit.hpp"

#include <doctest.h>

#include <cmath>

using namespace pwmbif;

TEST_CASE("averaged_equilibrium: ideal buck gives v_o = D_c v_s") {
    const ConverterSpec spec = make_preset(PresetName::PdBuck, {{"vs", 24.0}});
    const Vector X = averaged_equilibrium(spec, 0.5);
    CHECK(X(1) == doctest::Approx(12.0).epsilon(1e-9 / 12.0));
    CHECK(X(0) == doctest::Approx(12.0 / 22.0).epsilon(1e-9));
}

TEST_CASE("averaged_equilibrium: D_c = 1 is the ON-stage equilibrium alone") {
    const ConverterSpec spec = make_preset(PresetName::SnBuck, {{"vs", 19.0}});
    const Vector X = averaged_equilibrium(spec, 1.0);
    Eigen::FullPivLU<Matrix> lu(spec.A2);   // stage 2 carries the source
    const Vector expect = -lu.solve(spec.B2 * spec.u);
    CHECK((X - expect).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(X(1) == doctest::Approx(19.0).epsilon(1e-9));
}

TEST_CASE("averaged_equilibrium: sn_buck nominal operating point near 14 V") {
    const ConverterSpec spec = make_preset(PresetName::SnBuck, {{"vs", 20.0}});
    const Vector X = averaged_equilibrium(spec, 0.7);
    CHECK(X(1) == doctest::Approx(14.0).epsilon(0.5 / 14.0));
}

TEST_CASE("consistent_duty: agrees with the sampled-data orbit duty") {
    {
        const ConverterSpec spec = make_preset(PresetName::PdBuck, {{"vs", 24.0}});
        const double D = consistent_duty(spec);
        const PeriodicOrbit orbit = find_orbit(spec, 1);
        CHECK(std::abs(D - orbit.on_duty[0]) < 0.02);
    }
    {
        const ConverterSpec spec = make_preset(PresetName::NsBuck, {{"vs", 30.0}});
        const double D = consistent_duty(spec);
        CHECK(D == doctest::Approx(1.0 / 3.0).epsilon(0.03 / (1.0 / 3.0)));
    }
}

TEST_CASE("consistent_duty: no root falls back or reports") {
    ConverterSpec spec = make_preset(PresetName::PdBuck, {{"vs", 20.0}});
    RampControl rc = spec.ramp_control();
    rc.C.setZero();
    rc.D.setZero();
    rc.D(1) = 1.0;
    spec.control = rc;
    spec.u(1) = 20.0;   // y = 20, far above the ramp for every duty
    CHECK_THROWS_AS(consistent_duty(spec), NumericError);
    CHECK(consistent_duty(spec, 0.42) == doctest::Approx(0.42));
}

TEST_CASE("averaged_jacobian: identical stages collapse to A_ave = A1") {
    ConverterSpec spec = make_preset(PresetName::PdBuck, {{"vs", 20.0}});
    spec.B1 = spec.B2;
    const AveragedOperatingPoint op = averaged_jacobian(spec, 0.4);
    CHECK((op.jacobian - spec.A1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("averaged_jacobian: pd_buck stable across the whole paper range") {
    for (int i = 0; i < 26; ++i) {
        const double vs = 15.0 + i;
        CAPTURE(vs);
        const ConverterSpec spec = make_preset(PresetName::PdBuck, {{"vs", vs}});
        const AveragedOperatingPoint op = averaged_jacobian(spec, consistent_duty(spec));
        for (const Complex& e : op.eigenvalues) CHECK(e.real() < 0.0);
    }
}

TEST_CASE("averaged_jacobian: ns_buck Hopf pair near 36.9 with |imag| ~ 7113.5") {
    auto real_part = [](double vs) {
        const ConverterSpec spec = make_preset(PresetName::NsBuck, {{"vs", vs}});
        const AveragedOperatingPoint op = averaged_jacobian(spec, consistent_duty(spec));
        double re = -1e300, im = 0.0;
        for (const Complex& e : op.eigenvalues)
            if (e.imag() > 0.0 && e.real() > re) {
                re = e.real();
                im = e.imag();
            }
        return std::pair<double, double>(re, im);
    };
    const auto below = real_part(35.9);
    const auto above = real_part(37.9);
    CHECK(below.first < 0.0);
    CHECK(above.first > 0.0);

    // Bisect the crossing.
    double lo = 35.9, hi = 37.9;
    for (int i = 0; i < 50; ++i) {
        const double mid = 0.5 * (lo + hi);
        (real_part(mid).first < 0.0 ? lo : hi) = mid;
    }
    const double vs_hopf = 0.5 * (lo + hi);
    CHECK(vs_hopf == doctest::Approx(36.9).epsilon(1.0 / 36.9));
    const double imag = real_part(vs_hopf).second;
    CHECK(imag == doctest::Approx(7113.5).epsilon(0.02));
    CHECK(imag / (2.0 * M_PI) == doctest::Approx(1132.0).epsilon(25.0 / 1132.0));
}

TEST_CASE("averaged blind spot: stable at 24.5 while the exact multiplier is at -1") {
    const ConverterSpec spec = make_preset(PresetName::PdBuck, {{"vs", 24.5}});
    const AveragedOperatingPoint op = averaged_jacobian(spec, consistent_duty(spec));
    for (const Complex& e : op.eigenvalues) CHECK(e.real() < 0.0);

    const PeriodicOrbit orbit = find_orbit(spec, 1);
    const auto eigs = eigenvalues(phi_closed_form(spec, orbit));
    double closest = 1e300;
    for (const Complex& e : eigs) closest = std::min(closest, std::abs(e + 1.0));
    CHECK(closest < 5e-3);   // the sampled-data model sees the flip point
}
