#include "pwmbif/converter.hpp"
#include "pwmbif/errors.hpp"

#include <cmath>

namespace pwmbif {

double Ramp::value(double t) const {
    double phase = std::fmod(t / period, 1.0);
    if (phase < 0.0) phase += 1.0;
    return v_low + (v_high - v_low) * phase;
}

double Limiter::apply(double t) const {
    if (t <= 0.0) return 0.0;
    if (t > period) return period;
    return t;
}

int ConverterSpec::on_stage() const {
    const double s1 = B1.col(0).lpNorm<Eigen::Infinity>();
    const double s2 = B2.col(0).lpNorm<Eigen::Infinity>();
    return s1 > s2 ? 1 : 2;
}

double ConverterSpec::feedback(const Vector& x) const {
    const RampControl& rc = ramp_control();
    return rc.C.dot(x) + rc.D.dot(u);
}

double ConverterSpec::output_voltage(const Vector& x, int stage) const {
    return (stage == 1 ? E1 : E2).dot(x);
}

void ConverterSpec::validate() const {
    if (N < 1) throw InvalidArgument("spec: state dimension must be >= 1");
    auto check = [&](const Matrix& M, Eigen::Index r, Eigen::Index c, const char* what) {
        if (M.rows() != r || M.cols() != c)
            throw InvalidArgument(std::string("spec: bad dimensions for ") + what);
        if (!M.allFinite())
            throw InvalidArgument(std::string("spec: non-finite entries in ") + what);
    };
    check(A1, N, N, "A1");
    check(A2, N, N, "A2");
    check(B1, N, 2, "B1");
    check(B2, N, 2, "B2");
    check(E1, 1, N, "E1");
    check(E2, 1, N, "E2");
    if (u.size() != 2) throw InvalidArgument("spec: u must be (v_s, v_r)");
    if (!(T > 0.0)) throw InvalidArgument("spec: period must be positive");
    if (is_ramp()) {
        const RampControl& rc = ramp_control();
        check(rc.C, 1, N, "C");
        check(rc.D, 1, 2, "D");
        if (!(rc.ramp.v_high > rc.ramp.v_low))
            throw InvalidArgument("spec: ramp requires v_high > v_low");
        if (rc.ramp.period != T)
            throw InvalidArgument("spec: ramp period must equal the clock period");
    } else {
        const DiscreteDutyControl& dc = duty_control();
        check(dc.K, 1, N, "K");
        if (dc.x_ref.size() != N) throw InvalidArgument("spec: bad dimensions for x_ref");
    }
}

PresetName preset_from_string(const std::string& name) {
    if (name == "pd_buck") return PresetName::PdBuck;
    if (name == "sn_buck") return PresetName::SnBuck;
    if (name == "ns_buck") return PresetName::NsBuck;
    throw InvalidArgument("unknown preset: " + name);
}

std::string to_string(PresetName name) {
    switch (name) {
        case PresetName::PdBuck: return "pd_buck";
        case PresetName::SnBuck: return "sn_buck";
        case PresetName::NsBuck: return "ns_buck";
    }
    throw InvalidArgument("unknown preset enum value");
}

std::vector<std::string> preset_names() { return {"pd_buck", "sn_buck", "ns_buck"}; }

namespace {

std::vector<std::pair<std::string, double>> preset_defaults(PresetName name) {
    switch (name) {
        case PresetName::PdBuck:
            return {{"vs", 20.0},   {"vr", 11.3}, {"T", 400e-6}, {"L", 20e-3},
                    {"C", 47e-6},   {"R", 22.0},  {"g1", 8.4},   {"Vl", 3.8},
                    {"Vh", 8.2}};
        case PresetName::SnBuck:
            return {{"vs", 19.0},   {"T", 400e-6},      {"L", 20e-3},  {"C", 47e-6},
                    {"R", 22.0},    {"base_duty", 0.3}, {"ki", -8.574e-4},
                    {"kv", 5.53e-5}, {"Ip", 0.6785},    {"Vp", 14.0263}};
        case PresetName::NsBuck:
            return {{"vs", 30.0},  {"vr", 5.0},   {"fs", 15e3},  {"L", 0.9e-3},
                    {"C", 22e-6},  {"R", 20.0},   {"R1", 7.5e3}, {"R2", 7.5e3},
                    {"R3", 60e3},  {"C2", 0.4e-6}, {"Vl", 2.8},  {"Vh", 8.2}};
    }
    throw InvalidArgument("unknown preset enum value");
}

} // namespace

std::vector<std::pair<std::string, double>> preset_parameters(
    PresetName name, const std::map<std::string, double>& overrides) {
    auto params = preset_defaults(name);
    std::map<std::string, double> remaining = overrides;
    for (auto& [key, value] : params) {
        auto it = remaining.find(key);
        if (it != remaining.end()) {
            value = it->second;
            remaining.erase(it);
        }
    }
    if (!remaining.empty())
        throw InvalidArgument("unknown parameter for preset " + to_string(name) + ": " +
                              remaining.begin()->first);
    return params;
}

ConverterSpec make_preset(PresetName name, const std::map<std::string, double>& overrides) {
    auto list = preset_parameters(name, overrides);
    std::map<std::string, double> p(list.begin(), list.end());
    ConverterSpec spec;

    switch (name) {
        case PresetName::PdBuck: {
            spec.N = 2;
            const double L = p["L"], C = p["C"], R = p["R"];
            spec.T = p["T"];
            spec.A1.resize(2, 2);
            spec.A1 << 0.0, -1.0 / L, 1.0 / C, -1.0 / (R * C);
            spec.A2 = spec.A1;
            spec.B1 = Matrix::Zero(2, 2);
            spec.B2 = Matrix::Zero(2, 2);
            spec.B2(0, 0) = 1.0 / L;
            spec.E1.resize(2);
            spec.E1 << 0.0, 1.0;
            spec.E2 = spec.E1;
            spec.u.resize(2);
            spec.u << p["vs"], p["vr"];
            RampControl rc;
            rc.C.resize(2);
            rc.C << 0.0, p["g1"];
            rc.D.resize(2);
            rc.D << 0.0, -p["g1"];
            rc.ramp = Ramp{p["Vl"], p["Vh"], spec.T};
            spec.control = rc;
            break;
        }
        case PresetName::SnBuck: {
            spec.N = 2;
            const double L = p["L"], C = p["C"], R = p["R"];
            spec.T = p["T"];
            spec.A1.resize(2, 2);
            spec.A1 << 0.0, -1.0 / L, 1.0 / C, -1.0 / (R * C);
            spec.A2 = spec.A1;
            // Stage 1 is the OFF stage (leading-edge scheme: off first, then on).
            spec.B1 = Matrix::Zero(2, 2);
            spec.B2 = Matrix::Zero(2, 2);
            spec.B2(0, 0) = 1.0 / L;
            spec.E1.resize(2);
            spec.E1 << 0.0, 1.0;
            spec.E2 = spec.E1;
            spec.u.resize(2);
            spec.u << p["vs"], 0.0;
            DiscreteDutyControl dc;
            dc.base_duty = p["base_duty"];
            dc.K.resize(2);
            dc.K << p["ki"], p["kv"];
            dc.x_ref.resize(2);
            dc.x_ref << p["Ip"], p["Vp"];
            spec.control = dc;
            break;
        }
        case PresetName::NsBuck: {
            spec.N = 3;
            const double L = p["L"], C = p["C"], R = p["R"];
            const double R1 = p["R1"], R2 = p["R2"], R3 = p["R3"], C2 = p["C2"];
            spec.T = 1.0 / p["fs"];
            spec.A1.resize(3, 3);
            spec.A1 << 0.0, -1.0 / L, 0.0,
                       1.0 / C, -1.0 / (R * C), 0.0,
                       0.0, 1.0 / (R1 * C2), -1.0 / (R3 * C2);
            spec.A2 = spec.A1;
            spec.B1 = Matrix::Zero(3, 2);
            spec.B1(0, 0) = 1.0 / L;
            spec.B1(2, 1) = -(1.0 / C2) * (1.0 / R1 + 1.0 / R2);
            spec.B2 = Matrix::Zero(3, 2);
            spec.B2(2, 1) = spec.B1(2, 1);
            spec.E1.resize(3);
            spec.E1 << 0.0, 1.0, 0.0;
            spec.E2 = spec.E1;
            spec.u.resize(2);
            spec.u << p["vs"], p["vr"];
            RampControl rc;
            rc.C.resize(3);
            rc.C << 0.0, 0.0, -1.0;
            rc.D.resize(2);
            rc.D << 0.0, 1.0;
            rc.ramp = Ramp{p["Vl"], p["Vh"], spec.T};
            spec.control = rc;
            break;
        }
    }
    spec.validate();
    return spec;
}

AlwaysOnCheck saturated_always_on_check(const ConverterSpec& spec) {
    if (spec.is_ramp())
        throw InvalidArgument("saturated_always_on_check: discrete-duty control required");
    const DiscreteDutyControl& dc = spec.duty_control();

    Eigen::FullPivLU<Matrix> lu(spec.A2);
    if (!lu.isInvertible())
        throw NumericError("saturated_always_on_check: singular A2");
    AlwaysOnCheck result;
    result.x_eq = -lu.solve(spec.B2 * spec.u);
    const double margin = dc.base_duty * spec.T - dc.K.dot(result.x_eq - dc.x_ref);
    result.feasible = margin <= 0.0;
    return result;
}

} // namespace pwmbif
