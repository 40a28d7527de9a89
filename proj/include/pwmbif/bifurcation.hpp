#pragma once

#include "pwmbif/orbit.hpp"

#include <functional>
#include <optional>

namespace pwmbif {

/// Rebuilds a converter for a given value of the sweep parameter.
using SpecFamily = std::function<ConverterSpec(double)>;

struct SweepRecord {
    double param = 0.0;
    std::optional<PeriodicOrbit> orbit;
    std::vector<Complex> eigenvalues;
    double spectral_radius = 0.0;
    StabilityClass classification = StabilityClass::Stable;
    std::string status;   // "ok", "saturated", or the failure reason
};

enum class BifKind { PeriodDoubling, SaddleNode, Neimark };

BifKind bif_kind_from_string(const std::string& s);
std::string to_string(BifKind kind);

struct BifurcationPoint {
    BifKind kind = BifKind::PeriodDoubling;
    double param = 0.0;
    Complex critical;
    PeriodicOrbit orbit;
    std::optional<double> modulation_frequency;   // Neimark only
};

struct SweepOptions {
    int m = 1;
    double band = 1e-3;
};

/// Marches the parameter uniformly, continuing the orbit from point to point.
/// Per-point failures land in the record's status; the sweep never aborts.
std::vector<SweepRecord> sweep(const SpecFamily& family, double from, double to, int steps,
                               const SweepOptions& opts = {});

struct LocateOptions {
    int m = 1;
    double param_tol = 1e-10;   // relative bracket width
    int max_bisections = 90;
};

/// Bisection on the kind-specific test function: pd tracks the most negative
/// real multiplier against -1, sn the largest real multiplier against +1
/// (orbit loss past the fold counts as crossed), ns the largest complex-pair
/// modulus against 1.
BifurcationPoint locate_bifurcation(const SpecFamily& family, BifKind kind, double lo,
                                    double hi, const LocateOptions& opts = {});

struct AttractorSample {
    double param = 0.0;
    std::vector<double> v_o;   // stroboscopic output samples after burn-in
};

enum class InheritMode { None, Up, Down };

struct DiagramOptions {
    int burn_in = 500;
    int record = 64;
    InheritMode inherit = InheritMode::None;
};

/// Brute-force bifurcation diagram: iterates the full nonlinear map at each
/// parameter value, discards burn_in cycles, and records v_o at the clock
/// instants. Inherit modes emulate a slow upward or downward sweep.
std::vector<AttractorSample> brute_force_diagram(const SpecFamily& family, double from,
                                                 double to, int steps,
                                                 const DiagramOptions& opts = {});

/// Spectral peak of a stroboscopic series by DFT with quadratic bin
/// interpolation. Needs >= 512 samples; a flat spectrum yields nullopt.
std::optional<double> estimate_modulation_frequency(const std::vector<double>& samples,
                                                    double f_s);

} // namespace pwmbif
