#include "pwmbif/pwmbif.h"

#include "pwmbif/averaged.hpp"
#include "pwmbif/bifurcation.hpp"
#include "pwmbif/errors.hpp"
#include "pwmbif/io.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

using namespace pwmbif;

struct pwmbif_spec {
    ConverterDocument doc;
    ConverterSpec spec;
};

namespace {

thread_local std::string g_last_error;

pwmbif_status fail(pwmbif_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

/// Runs a command body, translating exceptions into status codes.
template <typename Fn>
pwmbif_status guarded(Fn&& body) {
    try {
        return body();
    } catch (const InvalidArgument& e) {
        return fail(PWMBIF_ERR_INVALID, e.what());
    } catch (const IoError& e) {
        return fail(PWMBIF_ERR_IO, e.what());
    } catch (const NumericError& e) {
        return fail(PWMBIF_ERR_NUMERIC, e.what());
    } catch (const std::exception& e) {
        return fail(PWMBIF_ERR_NUMERIC, e.what());
    }
}

std::map<std::string, double> override_map(const char* const* keys, const double* values,
                                           size_t n) {
    if (n > 0 && (keys == nullptr || values == nullptr))
        throw InvalidArgument("override arrays must be non-null when n_overrides > 0");
    std::map<std::string, double> out;
    for (size_t i = 0; i < n; ++i) {
        if (keys[i] == nullptr)
            throw InvalidArgument("null override key");
        if (!out.emplace(keys[i], values[i]).second)
            throw InvalidArgument(std::string("duplicate override key \"") + keys[i] + "\"");
    }
    return out;
}

Report base_report(const pwmbif_spec* spec, const char* echo) {
    Report report;
    report.add("command", echo ? echo : "");
    report.add("spec_digest", document_digest(spec->doc));
    return report;
}

void add_orbit_fields(Report& report, const PeriodicOrbit& orbit) {
    report.add("m", static_cast<double>(orbit.m));
    report.add("x0", format_vector(orbit.x0));
    for (int k = 0; k < orbit.m; ++k) {
        const std::string suffix = "_" + std::to_string(k + 1);
        report.add("d_seconds" + suffix, orbit.d[static_cast<size_t>(k)]);
        report.add("on_duty" + suffix, orbit.on_duty[static_cast<size_t>(k)]);
    }
    report.add("residual", orbit.residual);
    report.add("resim_error", orbit.resim_error);
    if (orbit.near_fold)
        report.warn("Newton Jacobian nearly singular: the orbit sits close to a fold");
}

void add_stability_fields(Report& report, const StabilityReport& stab) {
    for (size_t i = 0; i < stab.eigenvalues.size(); ++i)
        report.add("eigenvalue_" + std::to_string(i + 1), format_complex(stab.eigenvalues[i]));
    report.add("spectral_radius", stab.spectral_radius);
    report.add("classification", to_string(stab.classification));
}

double closed_vs_fd_metric(const ConverterSpec& spec, const PeriodicOrbit& orbit,
                           const Matrix& closed) {
    const Matrix fd = phi_finite_difference(spec, orbit);
    return (closed - fd).cwiseAbs().maxCoeff() /
           std::max(1.0, closed.cwiseAbs().maxCoeff());
}

/// sn_buck past the fold: no interior orbit, but the duty law saturates at
/// d = 0 and the always-on equilibrium takes over. Reported as a result,
/// not an error.
bool report_always_on(const pwmbif_spec* handle, Report& report) {
    if (handle->spec.is_ramp()) return false;
    const AlwaysOnCheck check = saturated_always_on_check(handle->spec);
    if (!check.feasible) return false;
    report.add("interior_orbit", "none");
    report.add("always_on_fixed_point", format_vector(check.x_eq));
    const Matrix phi = mat_exp(handle->spec.A2, handle->spec.T);
    add_stability_fields(report, classify(eigenvalues(phi)));
    report.warn("no interior periodic orbit at this source voltage; "
                "the converter latches onto the saturated always-on solution");
    return true;
}

Vector resolve_x0(const pwmbif_spec* handle, const std::string& source, const double* x0,
                  int m) {
    const ConverterSpec& spec = handle->spec;
    if (source == "zero")
        return Vector::Zero(spec.N);
    if (source == "explicit") {
        if (x0 == nullptr)
            throw InvalidArgument("explicit x0 source requires an x0 array");
        Vector out(spec.N);
        for (int i = 0; i < spec.N; ++i) out(i) = x0[i];
        return out;
    }
    if (source == "orbit")
        return find_orbit(spec, m).x0;
    if (source == "averaged")
        return averaged_equilibrium(
            spec, consistent_duty(spec, spec.is_ramp()
                                            ? std::nullopt
                                            : std::optional<double>(
                                                  spec.duty_control().base_duty)));
    throw InvalidArgument("x0 source must be zero, orbit, averaged, or explicit");
}

pwmbif_status emit(char** out_report, const Report& report) {
    if (out_report) {
        *out_report = dup_string(report.render());
        if (*out_report == nullptr)
            return fail(PWMBIF_ERR_IO, "out of memory");
    }
    return PWMBIF_OK;
}

} // namespace

extern "C" {

const char* pwmbif_last_error(void) { return g_last_error.c_str(); }

void pwmbif_string_free(char* s) { std::free(s); }

pwmbif_status pwmbif_spec_from_preset(const char* name, const char* const* override_keys,
                                      const double* override_values, size_t n_overrides,
                                      pwmbif_spec** out) {
    return guarded([&]() -> pwmbif_status {
        if (name == nullptr || out == nullptr)
            throw InvalidArgument("preset name and out handle must be non-null");
        auto handle = std::make_unique<pwmbif_spec>();
        handle->doc = document_for_preset(
            name, override_map(override_keys, override_values, n_overrides));
        handle->spec = build_spec(handle->doc);
        *out = handle.release();
        return PWMBIF_OK;
    });
}

pwmbif_status pwmbif_spec_from_file(const char* path, const char* const* override_keys,
                                    const double* override_values, size_t n_overrides,
                                    pwmbif_spec** out) {
    return guarded([&]() -> pwmbif_status {
        if (path == nullptr || out == nullptr)
            throw InvalidArgument("path and out handle must be non-null");
        auto handle = std::make_unique<pwmbif_spec>();
        handle->doc = load_document(path);
        const auto overrides = override_map(override_keys, override_values, n_overrides);
        if (!overrides.empty()) {
            if (!handle->doc.preset)
                throw InvalidArgument(
                    "--set overrides require a preset document; explicit-matrix "
                    "documents carry their values inline");
            for (const auto& [key, value] : overrides)
                handle->doc.overrides[key] = value;
        }
        handle->spec = build_spec(handle->doc);
        *out = handle.release();
        return PWMBIF_OK;
    });
}

void pwmbif_spec_free(pwmbif_spec* spec) { delete spec; }

pwmbif_status pwmbif_spec_dim(const pwmbif_spec* spec, int* out) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr || out == nullptr)
            throw InvalidArgument("null argument");
        *out = spec->spec.N;
        return PWMBIF_OK;
    });
}

pwmbif_status pwmbif_spec_digest(const pwmbif_spec* spec, char** out) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr || out == nullptr)
            throw InvalidArgument("null argument");
        *out = dup_string(document_digest(spec->doc));
        return *out ? PWMBIF_OK : fail(PWMBIF_ERR_IO, "out of memory");
    });
}

pwmbif_status pwmbif_spec_serialize(const pwmbif_spec* spec, char** out) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr || out == nullptr)
            throw InvalidArgument("null argument");
        *out = dup_string(serialize_document(spec->doc));
        return *out ? PWMBIF_OK : fail(PWMBIF_ERR_IO, "out of memory");
    });
}

pwmbif_status pwmbif_cmd_presets(const char* name, char** out_report) {
    return guarded([&]() -> pwmbif_status {
        std::string text;
        if (name == nullptr) {
            for (const std::string& preset : preset_names()) text += preset + "\n";
        } else {
            text = render_preset(name);
        }
        if (out_report) {
            *out_report = dup_string(text);
            if (*out_report == nullptr) return fail(PWMBIF_ERR_IO, "out of memory");
        }
        return PWMBIF_OK;
    });
}

pwmbif_status pwmbif_cmd_simulate(const pwmbif_spec* spec, const char* echo,
                                  const char* x0_source, const double* x0, int m,
                                  int cycles, int samples_per_cycle, const char* out_csv,
                                  char** out_report) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr || x0_source == nullptr || out_csv == nullptr)
            throw InvalidArgument("null argument");
        if (cycles < 1)
            throw InvalidArgument("simulate: cycles must be >= 1");
        if (samples_per_cycle < 2)
            throw InvalidArgument("simulate: samples-per-cycle must be >= 2");
        const Vector start = resolve_x0(spec, x0_source, x0, m);
        const StroboscopicMap map(spec->spec);
        const auto samples = map.simulate(start, cycles, samples_per_cycle);
        write_trajectory_csv(out_csv, samples, spec->spec.N);

        Report report = base_report(spec, echo);
        report.add("x0_source", x0_source);
        report.add("x0", format_vector(start));
        report.add("cycles", static_cast<double>(cycles));
        report.add("samples_per_cycle", static_cast<double>(samples_per_cycle));
        report.add("rows", static_cast<double>(samples.size()));
        report.add("out", out_csv);
        return emit(out_report, report);
    });
}

pwmbif_status pwmbif_cmd_orbit(const pwmbif_spec* spec, const char* echo, int m,
                               const double* guess_x0, const double* guess_duty,
                               char** out_report) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr)
            throw InvalidArgument("null spec");
        OrbitGuess guess;
        if (guess_x0) {
            Vector v(spec->spec.N);
            for (int i = 0; i < spec->spec.N; ++i) v(i) = guess_x0[i];
            guess.x0 = v;
        }
        if (guess_duty) guess.on_duty = *guess_duty;

        Report report = base_report(spec, echo);
        try {
            const PeriodicOrbit orbit = find_orbit(spec->spec, m, guess);
            add_orbit_fields(report, orbit);
            const Matrix phi = orbit_jacobian(spec->spec, orbit);
            add_stability_fields(report, classify(eigenvalues(phi)));
            if (spec->spec.is_ramp() && m == 1)
                report.add("closed_vs_fd_max_rel",
                           closed_vs_fd_metric(spec->spec, orbit, phi));
        } catch (const NumericError&) {
            if (!report_always_on(spec, report)) throw;
        }
        return emit(out_report, report);
    });
}

pwmbif_status pwmbif_cmd_eigs(const pwmbif_spec* spec, const char* echo, int m,
                              const char* method, char** out_report) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr || method == nullptr)
            throw InvalidArgument("null argument");
        const std::string mode = method;
        const PeriodicOrbit orbit = find_orbit(spec->spec, m);
        Matrix phi;
        if (mode == "auto") {
            phi = orbit_jacobian(spec->spec, orbit);
        } else if (mode == "closed") {
            if (m != 1)
                throw InvalidArgument("closed-form Jacobian is defined for m = 1 only");
            phi = spec->spec.is_ramp() ? phi_closed_form(spec->spec, orbit)
                                       : phi_discrete_duty(spec->spec, orbit);
        } else if (mode == "fd") {
            phi = phi_finite_difference(spec->spec, orbit);
        } else {
            throw InvalidArgument("eigs method must be auto, closed, or fd");
        }

        Report report = base_report(spec, echo);
        report.add("method", mode);
        add_orbit_fields(report, orbit);
        add_stability_fields(report, classify(eigenvalues(phi)));
        return emit(out_report, report);
    });
}

pwmbif_status pwmbif_cmd_sweep(const pwmbif_spec* spec, const char* echo,
                               const char* param, double from, double to, int steps,
                               int m, const char* out_csv, char** out_report) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr || param == nullptr || out_csv == nullptr)
            throw InvalidArgument("null argument");
        const SpecFamily family = build_family(spec->doc, param);
        SweepOptions opts;
        opts.m = m;
        const auto records = sweep(family, from, to, steps, opts);
        write_sweep_csv(out_csv, records, spec->spec.N);

        int ok = 0, saturated = 0, failed = 0;
        double max_sr = 0.0;
        for (const SweepRecord& rec : records) {
            if (rec.status == "ok") ++ok;
            else if (rec.status == "saturated") ++saturated;
            else ++failed;
            if (rec.orbit) max_sr = std::max(max_sr, rec.spectral_radius);
        }
        Report report = base_report(spec, echo);
        report.add("param", param);
        report.add("from", from);
        report.add("to", to);
        report.add("steps", static_cast<double>(steps));
        report.add("ok", static_cast<double>(ok));
        report.add("saturated", static_cast<double>(saturated));
        report.add("failed", static_cast<double>(failed));
        report.add("max_spectral_radius", max_sr);
        report.add("out", out_csv);
        if (failed > 0)
            report.warn("orbit continuation failed at " + std::to_string(failed) +
                        " sweep points; see the status column");
        return emit(out_report, report);
    });
}

pwmbif_status pwmbif_cmd_locate(const pwmbif_spec* spec, const char* echo,
                                const char* param, const char* kind, double lo, double hi,
                                int m, char** out_report) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr || param == nullptr || kind == nullptr)
            throw InvalidArgument("null argument");
        const SpecFamily family = build_family(spec->doc, param);
        LocateOptions opts;
        opts.m = m;
        const BifurcationPoint point =
            locate_bifurcation(family, bif_kind_from_string(kind), lo, hi, opts);

        Report report = base_report(spec, echo);
        report.add("kind", to_string(point.kind));
        report.add("param", param);
        report.add("value", point.param);
        report.add("critical_eigenvalue", format_complex(point.critical));
        report.add("x0", format_vector(point.orbit.x0));
        report.add("on_duty", point.orbit.on_duty.front());
        if (point.modulation_frequency)
            report.add("modulation_frequency_hz", *point.modulation_frequency);
        return emit(out_report, report);
    });
}

pwmbif_status pwmbif_cmd_bifdiag(const pwmbif_spec* spec, const char* echo,
                                 const char* param, double from, double to, int steps,
                                 int burn_in, int record, const char* inherit,
                                 const char* out_csv, char** out_report) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr || param == nullptr || inherit == nullptr ||
            out_csv == nullptr)
            throw InvalidArgument("null argument");
        const std::string mode = inherit;
        DiagramOptions opts;
        opts.burn_in = burn_in;
        opts.record = record;
        if (mode == "none") opts.inherit = InheritMode::None;
        else if (mode == "up") opts.inherit = InheritMode::Up;
        else if (mode == "down") opts.inherit = InheritMode::Down;
        else throw InvalidArgument("inherit must be none, up, or down");

        const SpecFamily family = build_family(spec->doc, param);
        const auto samples = brute_force_diagram(family, from, to, steps, opts);
        write_bifdiag_csv(out_csv, samples);

        Report report = base_report(spec, echo);
        report.add("param", param);
        report.add("from", from);
        report.add("to", to);
        report.add("steps", static_cast<double>(steps));
        report.add("burn_in", static_cast<double>(burn_in));
        report.add("record", static_cast<double>(record));
        report.add("inherit", mode);
        report.add("out", out_csv);
        return emit(out_report, report);
    });
}

pwmbif_status pwmbif_cmd_averaged(const pwmbif_spec* spec, const char* echo, double duty,
                                  char** out_report) {
    return guarded([&]() -> pwmbif_status {
        if (spec == nullptr)
            throw InvalidArgument("null spec");
        const ConverterSpec& cs = spec->spec;
        double D_c = duty;
        if (D_c < 0.0)
            D_c = consistent_duty(
                cs, cs.is_ramp() ? std::nullopt
                                 : std::optional<double>(cs.duty_control().base_duty));
        if (D_c <= 0.0 || D_c >= 1.0)
            throw InvalidArgument("averaged: duty must lie in (0, 1)");
        const AveragedOperatingPoint op = averaged_jacobian(cs, D_c);

        Report report = base_report(spec, echo);
        report.add("D_c", op.D_c);
        report.add("X_ave", format_vector(op.X_ave));
        for (size_t i = 0; i < op.eigenvalues.size(); ++i)
            report.add("eigenvalue_" + std::to_string(i + 1),
                       format_complex(op.eigenvalues[i]));
        bool averaged_stable = true;
        for (const Complex& e : op.eigenvalues)
            if (e.real() >= 0.0) averaged_stable = false;
        report.add("averaged_verdict", averaged_stable ? "stable" : "unstable");
        if (op.hopf_proximate)
            report.warn("averaged eigenvalue pair sits on the imaginary axis: "
                        "Hopf bifurcation of the averaged model");

        // The blind-spot check: the exact sampled-data verdict alongside.
        try {
            const PeriodicOrbit orbit = find_orbit(cs, 1);
            const StabilityReport stab = classify(eigenvalues(orbit_jacobian(cs, orbit)));
            report.add("sampled_spectral_radius", stab.spectral_radius);
            report.add("sampled_verdict", stab.stable() ? "stable" : "unstable");
            report.add("agreement", averaged_stable == stab.stable() ? "agree" : "disagree");
            if (averaged_stable != stab.stable())
                report.warn("sampled-data analysis disagrees with the averaged model "
                            "at this operating point");
            else if (averaged_stable && stab.spectral_radius >= 0.99)
                report.warn("sampled-data analysis disagrees with the averaged "
                            "stability margin: the exact multipliers sit at modulus " +
                            format_number(stab.spectral_radius) +
                            " while the averaged eigenvalues stay well damped");
        } catch (const NumericError& e) {
            report.add("sampled_verdict", "unavailable");
            report.warn(std::string("sampled-data comparison unavailable: ") + e.what());
        }
        return emit(out_report, report);
    });
}

} // extern "C"
