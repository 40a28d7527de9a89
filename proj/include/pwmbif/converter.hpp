#pragma once

#include "pwmbif/linalg.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pwmbif {

using RowVector = Eigen::RowVectorXd;

/// T-periodic sawtooth h(t) = v_low + (v_high - v_low) * ((t/T) mod 1).
struct Ramp {
    double v_low = 0.0;
    double v_high = 1.0;
    double period = 1.0;

    double value(double t) const;
    double slope() const { return (v_high - v_low) / period; }
};

/// PWM comparator: stage 1 runs from the clock edge until the feedback
/// signal y(t) = C x(t) + D u meets the ramp.
struct RampControl {
    RowVector C;   // 1 x N
    RowVector D;   // 1 x 2
    Ramp ramp;
};

/// Per-cycle duty update d_n = limit(base_duty * T - K (x_n - x_ref)).
struct DiscreteDutyControl {
    double base_duty = 0.0;
    RowVector K;   // 1 x N
    Vector x_ref;  // N
};

/// Duty limiter: clamps a first-stage duration into [0, T].
struct Limiter {
    double period = 1.0;
    double apply(double t) const;
};

/// Two-stage switched-linear converter over one clock period: stage 1 on
/// [0, d), stage 2 on [d, T). Immutable after construction.
struct ConverterSpec {
    int N = 0;
    Matrix A1, A2;       // N x N
    Matrix B1, B2;       // N x 2
    RowVector E1, E2;    // 1 x N output-voltage rows
    Vector u;            // (v_s, v_r)
    double T = 0.0;
    std::variant<RampControl, DiscreteDutyControl> control;

    bool is_ramp() const { return std::holds_alternative<RampControl>(control); }
    const RampControl& ramp_control() const { return std::get<RampControl>(control); }
    const DiscreteDutyControl& duty_control() const { return std::get<DiscreteDutyControl>(control); }

    double source_voltage() const { return u(0); }
    double switching_frequency() const { return 1.0 / T; }

    /// Stage whose input map carries the source voltage (first column of B
    /// nonzero). The switch-ON duty reported everywhere is the fraction of
    /// the period spent in this stage.
    int on_stage() const;

    /// Feedback signal y = C x + D u (ramp mode only).
    double feedback(const Vector& x) const;

    /// Output voltage through the stage-dependent row.
    double output_voltage(const Vector& x, int stage) const;

    /// Throws InvalidArgument on inconsistent dimensions.
    void validate() const;
};

enum class PresetName { PdBuck, SnBuck, NsBuck };

PresetName preset_from_string(const std::string& name);
std::string to_string(PresetName name);
std::vector<std::string> preset_names();

/// Physical parameters of a preset in a fixed order, defaults applied.
std::vector<std::pair<std::string, double>> preset_parameters(
    PresetName name, const std::map<std::string, double>& overrides = {});

/// Builds the converter matrices from physical parameters at load time.
/// Unknown override keys are rejected.
ConverterSpec make_preset(PresetName name, const std::map<std::string, double>& overrides = {});

struct AlwaysOnCheck {
    bool feasible = false;
    Vector x_eq;   // stage-2 (switch-ON) equilibrium
};

/// Whether the discrete-duty control law admits the always-on (d_n = 0)
/// static solution at the current source voltage.
AlwaysOnCheck saturated_always_on_check(const ConverterSpec& spec);

} // namespace pwmbif
