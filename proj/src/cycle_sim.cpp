#include "pwmbif/cycle_sim.hpp"
#include "pwmbif/errors.hpp"

#include <cmath>

namespace pwmbif {

StroboscopicMap::StroboscopicMap(ConverterSpec spec, int grid)
    : spec_(std::move(spec)), grid_(grid) {
    spec_.validate();
    if (grid_ < 2)
        throw InvalidArgument("StroboscopicMap: grid resolution must be >= 2");
    f1_ = spec_.B1 * spec_.u;
    f2_ = spec_.B2 * spec_.u;
    if (spec_.is_ramp()) {
        const int n = spec_.N;
        Matrix aug = Matrix::Zero(n + 1, n + 1);
        aug.topLeftCorner(n, n) = spec_.A1;
        aug.topRightCorner(n, 1) = f1_;
        grid_step_ = mat_exp(aug, spec_.T / grid_);
    }
}

double StroboscopicMap::cycle_ramp(double t) const {
    const Ramp& r = spec_.ramp_control().ramp;
    return r.v_low + r.slope() * t;
}

std::optional<double> StroboscopicMap::find_switching_instant(const Vector& x0) const {
    if (!spec_.is_ramp())
        throw InvalidArgument("find_switching_instant: ramp control required");
    const double T = spec_.T;
    auto g = [&](double t) {
        return spec_.feedback(affine_flow(spec_.A1, f1_, x0, t)) - cycle_ramp(t);
    };

    double g_prev = spec_.feedback(x0) - cycle_ramp(0.0);
    if (g_prev <= 0.0)
        return 0.0;

    const int n = spec_.N;
    Vector z(n + 1);
    z.head(n) = x0;
    z(n) = 1.0;
    for (int k = 0; k < grid_; ++k) {
        z = grid_step_ * z;
        const double t_hi = (k + 1) * T / grid_;
        const double g_cur = spec_.feedback(z.head(n)) - cycle_ramp(t_hi);
        if (g_cur == 0.0)
            return t_hi < T ? std::optional<double>(t_hi) : std::nullopt;
        if (g_prev * g_cur < 0.0) {
            RootOptions opts;
            opts.tol = 1e-12 * T;
            return bracketed_root(g, k * T / grid_, t_hi, opts);
        }
        g_prev = g_cur;
    }
    return std::nullopt;
}

CycleResult StroboscopicMap::step(const Vector& x_n) const {
    if (x_n.size() != spec_.N || !x_n.allFinite())
        throw InvalidArgument("stroboscopic map: bad state vector");
    const double T = spec_.T;
    CycleResult result;
    if (spec_.is_ramp()) {
        result.d = find_switching_instant(x_n).value_or(T);
    } else {
        const DiscreteDutyControl& dc = spec_.duty_control();
        result.d = Limiter{T}.apply(dc.base_duty * T - dc.K.dot(x_n - dc.x_ref));
    }
    result.saturated = result.d == 0.0  ? Saturation::FullStage2
                     : result.d == T    ? Saturation::FullStage1
                                        : Saturation::None;
    const Vector x_d = affine_flow(spec_.A1, f1_, x_n, result.d);
    result.x_next = affine_flow(spec_.A2, f2_, x_d, T - result.d);
    if (!result.x_next.allFinite())
        throw NumericError("stroboscopic map: non-finite state");
    return result;
}

std::vector<TrajectorySample> StroboscopicMap::simulate(const Vector& x0, int n_cycles,
                                                        int samples_per_cycle) const {
    if (n_cycles < 1)
        throw InvalidArgument("simulate: n_cycles must be >= 1");
    if (samples_per_cycle < 2)
        throw InvalidArgument("simulate: samples_per_cycle must be >= 2");

    const double T = spec_.T;
    const double guard = 1e6 * std::max(1.0, x0.lpNorm<Eigen::Infinity>());
    std::vector<TrajectorySample> samples;
    samples.reserve(static_cast<size_t>(n_cycles) * samples_per_cycle);

    Vector x = x0;
    for (int n = 0; n < n_cycles; ++n) {
        const CycleResult cycle = step(x);
        const Vector x_d = affine_flow(spec_.A1, f1_, x, cycle.d);
        for (int j = 0; j < samples_per_cycle; ++j) {
            const double tau = j * T / samples_per_cycle;
            TrajectorySample s;
            s.t = n * T + tau;
            if (tau < cycle.d) {
                s.stage = 1;
                s.x = affine_flow(spec_.A1, f1_, x, tau);
            } else {
                s.stage = 2;
                s.x = affine_flow(spec_.A2, f2_, x_d, tau - cycle.d);
            }
            s.v_o = spec_.output_voltage(s.x, s.stage);
            samples.push_back(std::move(s));
        }
        x = cycle.x_next;
        if (x.lpNorm<Eigen::Infinity>() > guard)
            throw NumericError("simulate: state diverged past 1e6 x initial scale");
    }
    return samples;
}

} // namespace pwmbif
