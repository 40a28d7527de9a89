#include "pwmbif/bifurcation.hpp"
#include "pwmbif/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pwmbif {

BifKind bif_kind_from_string(const std::string& s) {
    if (s == "pd") return BifKind::PeriodDoubling;
    if (s == "sn") return BifKind::SaddleNode;
    if (s == "ns") return BifKind::Neimark;
    throw InvalidArgument("unknown bifurcation kind: " + s + " (expected pd, sn, or ns)");
}

std::string to_string(BifKind kind) {
    switch (kind) {
        case BifKind::PeriodDoubling: return "period_doubling";
        case BifKind::SaddleNode:     return "saddle_node";
        case BifKind::Neimark:        return "neimark";
    }
    return "?";
}

std::vector<SweepRecord> sweep(const SpecFamily& family, double from, double to, int steps,
                               const SweepOptions& opts) {
    if (steps < 2)
        throw InvalidArgument("sweep: steps must be >= 2");

    std::vector<SweepRecord> records;
    records.reserve(static_cast<size_t>(steps));
    OrbitGuess guess;
    for (int i = 0; i < steps; ++i) {
        SweepRecord rec;
        rec.param = from + (to - from) * i / (steps - 1);
        try {
            const ConverterSpec spec = family(rec.param);
            const PeriodicOrbit orbit = find_orbit(spec, opts.m, guess);
            const StabilityReport report =
                classify(eigenvalues(orbit_jacobian(spec, orbit)), opts.band);
            rec.eigenvalues = report.eigenvalues;
            rec.spectral_radius = report.spectral_radius;
            rec.classification = report.classification;
            const bool saturated = orbit.d[0] == 0.0 || orbit.d[0] == spec.T;
            rec.status = saturated ? "saturated" : "ok";
            guess.x0 = orbit.x0;              // continuation
            guess.on_duty = orbit.on_duty[0];
            rec.orbit = orbit;
        } catch (const NumericError& e) {
            rec.status = e.what();
        }
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

struct TestPoint {
    double value = 0.0;                  // kind-specific test function
    std::optional<PeriodicOrbit> orbit;
    std::vector<Complex> eigenvalues;
};

TestPoint evaluate(const SpecFamily& family, BifKind kind, double param, int m,
                   OrbitGuess& guess) {
    TestPoint point;
    try {
        const ConverterSpec spec = family(param);
        const PeriodicOrbit orbit = find_orbit(spec, m, guess);
        point.eigenvalues = eigenvalues(orbit_jacobian(spec, orbit));
        guess.x0 = orbit.x0;
        guess.on_duty = orbit.on_duty[0];
        point.orbit = orbit;
    } catch (const NumericError&) {
        // Orbit lost: for a fold that is the far side of the bifurcation.
        point.value = -1.0;
        return point;
    }

    std::vector<double> reals;
    double pair_modulus = 0.0;
    for (const Complex& e : point.eigenvalues) {
        if (std::abs(e.imag()) < 1e-9)
            reals.push_back(e.real());
        else
            pair_modulus = std::max(pair_modulus, std::abs(e));
    }
    switch (kind) {
        case BifKind::PeriodDoubling:
            // Before the flip all multipliers are inside the circle; after it
            // a real one sits below -1. If the branch is still a complex
            // pair, the crossing has not happened yet.
            point.value = reals.empty() ? 1.0 - spectral_radius(point.eigenvalues)
                                        : *std::min_element(reals.begin(), reals.end()) + 1.0;
            break;
        case BifKind::SaddleNode:
            point.value = reals.empty() ? 1.0
                                        : 1.0 - *std::max_element(reals.begin(), reals.end());
            break;
        case BifKind::Neimark:
            point.value = 1.0 - pair_modulus;
            break;
    }
    return point;
}

} // namespace

BifurcationPoint locate_bifurcation(const SpecFamily& family, BifKind kind, double lo,
                                    double hi, const LocateOptions& opts) {
    OrbitGuess guess_lo, guess_hi;
    TestPoint plo = evaluate(family, kind, lo, opts.m, guess_lo);
    TestPoint phi = evaluate(family, kind, hi, opts.m, guess_hi);
    if (plo.value * phi.value > 0.0)
        throw NumericError("locate_bifurcation: test function has no sign change over bracket");

    // Keep the pre-crossing endpoint (positive test value) for reporting.
    TestPoint before = plo.value > 0.0 ? plo : phi;
    double before_param = plo.value > 0.0 ? lo : hi;

    for (int i = 0; i < opts.max_bisections; ++i) {
        if (std::abs(hi - lo) <= opts.param_tol * std::max({1.0, std::abs(lo), std::abs(hi)}))
            break;
        const double mid = 0.5 * (lo + hi);
        OrbitGuess guess = plo.orbit ? guess_lo : guess_hi;
        TestPoint pm = evaluate(family, kind, mid, opts.m, guess);
        if (pm.value > 0.0 && pm.orbit) {
            before = pm;
            before_param = mid;
        }
        if ((pm.value > 0.0) == (plo.value > 0.0)) {
            lo = mid;
            plo = pm;
            guess_lo = guess;
        } else {
            hi = mid;
            phi = pm;
            guess_hi = guess;
        }
    }

    if (!before.orbit)
        throw NumericError("locate_bifurcation: orbit continuation lost inside the bracket");

    BifurcationPoint point;
    point.kind = kind;
    point.param = 0.5 * (lo + hi);
    point.orbit = *before.orbit;

    // Critical eigenvalue at the last pre-crossing evaluation.
    Complex critical = before.eigenvalues.front();
    auto closer = [&](const Complex& a, const Complex& b) {
        switch (kind) {
            case BifKind::PeriodDoubling: return std::abs(a + 1.0) < std::abs(b + 1.0);
            case BifKind::SaddleNode:     return std::abs(a - 1.0) < std::abs(b - 1.0);
            case BifKind::Neimark:
                return std::abs(std::abs(a) - 1.0) < std::abs(std::abs(b) - 1.0) ||
                       (std::abs(std::abs(a) - 1.0) == std::abs(std::abs(b) - 1.0) &&
                        a.imag() > b.imag());
        }
        return false;
    };
    for (const Complex& e : before.eigenvalues)
        if (closer(e, critical)) critical = e;
    point.critical = critical;

    if (kind == BifKind::Neimark) {
        const ConverterSpec spec = family(point.param);
        point.modulation_frequency = neimark_frequency(critical, 1.0 / spec.T);
    }
    return point;
}

std::vector<AttractorSample> brute_force_diagram(const SpecFamily& family, double from,
                                                 double to, int steps,
                                                 const DiagramOptions& opts) {
    if (steps < 1 || opts.burn_in < 0 || opts.record < 1)
        throw InvalidArgument("brute_force_diagram: bad step/burn-in/record counts");

    std::vector<double> params(static_cast<size_t>(steps));
    for (int i = 0; i < steps; ++i)
        params[static_cast<size_t>(i)] =
            steps == 1 ? from : from + (to - from) * i / (steps - 1);
    const bool descending = opts.inherit == InheritMode::Down;
    std::sort(params.begin(), params.end());
    if (descending) std::reverse(params.begin(), params.end());

    std::vector<AttractorSample> samples;
    samples.reserve(params.size());
    std::optional<Vector> carried;
    for (double param : params) {
        const ConverterSpec spec = family(param);
        const StroboscopicMap map(spec);
        Vector x = (opts.inherit != InheritMode::None && carried)
                       ? *carried
                       : Vector::Zero(spec.N);
        AttractorSample sample;
        sample.param = param;
        for (int n = 0; n < opts.burn_in; ++n) x = map.step(x).x_next;
        for (int n = 0; n < opts.record; ++n) {
            const CycleResult cycle = map.step(x);
            sample.v_o.push_back(spec.output_voltage(x, cycle.d > 0.0 ? 1 : 2));
            x = cycle.x_next;
        }
        carried = x;
        samples.push_back(std::move(sample));
    }
    return samples;
}

std::optional<double> estimate_modulation_frequency(const std::vector<double>& samples,
                                                    double f_s) {
    const size_t n = samples.size();
    if (n < 512)
        throw InvalidArgument("estimate_modulation_frequency: need >= 512 samples");

    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> centered(n);
    double rms = 0.0;
    for (size_t i = 0; i < n; ++i) {
        centered[i] = samples[i] - mean;
        rms += centered[i] * centered[i];
    }
    rms = std::sqrt(rms / static_cast<double>(n));
    if (rms <= 1e-9 * std::max(1.0, std::abs(mean)))
        return std::nullopt;   // flat: no modulation

    const size_t half = n / 2;
    std::vector<double> mag(half + 1, 0.0);
    for (size_t k = 1; k <= half; ++k) {
        double re = 0.0, im = 0.0;
        const double w = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            re += centered[i] * std::cos(w * static_cast<double>(i));
            im -= centered[i] * std::sin(w * static_cast<double>(i));
        }
        mag[k] = std::hypot(re, im);
    }
    size_t peak = 1;
    for (size_t k = 2; k < half; ++k)
        if (mag[k] > mag[peak]) peak = k;

    double bin = static_cast<double>(peak);
    if (peak > 1 && peak + 1 <= half) {
        const double a = mag[peak - 1], b = mag[peak], c = mag[peak + 1];
        const double denom = a - 2.0 * b + c;
        if (denom != 0.0) bin += 0.5 * (a - c) / denom;
    }
    return bin * f_s / static_cast<double>(n);
}

} // namespace pwmbif
