#pragma once

#include "pwmbif/converter.hpp"

#include <optional>
#include <vector>

namespace pwmbif {

enum class Saturation { None, FullStage1, FullStage2 };

struct CycleResult {
    Vector x_next;
    double d = 0.0;   // first-stage duration this cycle
    Saturation saturated = Saturation::None;
};

struct TrajectorySample {
    double t = 0.0;
    Vector x;
    double v_o = 0.0;
    int stage = 1;
};

/// The stroboscopic map x(nT) -> x((n+1)T), built on exact affine stage
/// flows. Caches the stage-1 grid propagator used for crossing detection,
/// so construct once per (spec, source) and iterate.
class StroboscopicMap {
public:
    explicit StroboscopicMap(ConverterSpec spec, int grid = 64);

    const ConverterSpec& spec() const { return spec_; }

    /// Ramp mode: smallest t in [0, T) with y(t) = h(t) along the stage-1
    /// flow. The comparator holds stage 1 while y is above the ramp, so
    /// y(0) <= h(0) switches immediately (t = 0). No crossing means the
    /// cycle stays in stage 1; that is a value, not an error.
    std::optional<double> find_switching_instant(const Vector& x0) const;

    /// One full clock period from x_n. Ramp mode uses the comparator
    /// crossing; discrete-duty mode applies the limited duty-update law.
    CycleResult step(const Vector& x_n) const;

    /// Iterates the map for n_cycles, emitting samples_per_cycle uniformly
    /// spaced in-cycle samples, each computed by an exact flow from the
    /// cycle-start state. Aborts via NumericError if the state blows past
    /// 1e6 x its initial scale.
    std::vector<TrajectorySample> simulate(const Vector& x0, int n_cycles,
                                           int samples_per_cycle) const;

private:
    double cycle_ramp(double t) const;  // ramp without wraparound, t in [0, T]

    ConverterSpec spec_;
    int grid_;
    Vector f1_, f2_;     // stage forcings B_i u
    Matrix grid_step_;   // augmented stage-1 propagator over T/grid
};

} // namespace pwmbif
